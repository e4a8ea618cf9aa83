import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_correlation(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random well-conditioned correlation matrix."""
    a = rng.standard_normal((n, 2 * n))
    cov = a @ a.T / (2 * n) + 0.05 * np.eye(n)
    d = np.sqrt(np.diag(cov))
    corr = cov / np.outer(d, d)
    np.fill_diagonal(corr, 1.0)
    return 0.5 * (corr + corr.T)
