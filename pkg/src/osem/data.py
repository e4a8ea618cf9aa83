"""Ordinal datasets: an N x n matrix of integer level codes plus level counts."""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class OrdinalDataset:
    codes: np.ndarray                 # (N, n) integer level codes, 0-based
    levels: tuple[int, ...]           # declared level count L_i per variable
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        codes = np.asarray(self.codes)
        if codes.ndim != 2:
            raise InputError("codes must be a 2-D array")
        if not np.issubdtype(codes.dtype, np.integer):
            if not np.all(codes == codes.astype(int)):
                raise InputError("level codes must be integers")
            codes = codes.astype(np.int64)
        codes = np.ascontiguousarray(codes, dtype=np.int64)
        n = codes.shape[1]
        if len(self.levels) != n or len(self.names) != n:
            raise InputError("levels/names length must match column count")
        for i, li in enumerate(self.levels):
            if li < 2:
                raise InputError(f"variable {self.names[i]!r}: needs >= 2 levels")
            col = codes[:, i]
            if col.size and (col.min() < 0 or col.max() >= li):
                raise InputError(f"variable {self.names[i]!r}: code outside [0, {li})")
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "levels", tuple(int(x) for x in self.levels))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_vars(self) -> int:
        return self.codes.shape[1]

    @classmethod
    def from_codes(cls, codes: np.ndarray,
                   levels: tuple[int, ...] | None = None,
                   names: tuple[str, ...] | None = None) -> "OrdinalDataset":
        codes = np.asarray(codes)
        n = codes.shape[1]
        if levels is None:
            levels = tuple(int(codes[:, i].max()) + 1 if codes.size else 2
                           for i in range(n))
        if names is None:
            names = tuple(f"x{i}" for i in range(n))
        return cls(codes, tuple(levels), names)

    def compressed(self) -> "OrdinalDataset":
        """Re-code each column onto its observed values, dropping empty levels.

        Ordering is preserved.  Typically this merges declared-but-unobserved
        top levels into the highest observed one; interior gaps are closed
        the same way.  Emits a warning when any column changes.
        """
        cols = []
        levels = []
        changed = []
        for i in range(self.n_vars):
            col = self.codes[:, i]
            observed = np.unique(col)
            if len(observed) == self.levels[i] and observed[0] == 0:
                cols.append(col)
                levels.append(self.levels[i])
            else:
                remap = {int(v): r for r, v in enumerate(observed)}
                cols.append(np.array([remap[int(v)] for v in col], dtype=np.int64))
                levels.append(len(observed))
                changed.append(self.names[i])
        if changed:
            warnings.warn(
                f"merged unobserved levels for variables: {', '.join(changed)}",
                stacklevel=2)
        return OrdinalDataset(np.column_stack(cols), tuple(levels), self.names)

    def take_rows(self, idx: np.ndarray) -> "OrdinalDataset":
        return OrdinalDataset(self.codes[np.asarray(idx)], self.levels, self.names)


def split_rows(data: OrdinalDataset, train_fraction: float,
               rng: np.random.Generator) -> tuple[OrdinalDataset, OrdinalDataset]:
    """Random train/test split by rows."""
    if not 0 < train_fraction < 1:
        raise InputError("train_fraction must lie in (0, 1)")
    perm = rng.permutation(data.n_rows)
    cut = int(round(train_fraction * data.n_rows))
    if cut == 0 or cut == data.n_rows:
        raise InputError("split leaves an empty part")
    return data.take_rows(perm[:cut]), data.take_rows(perm[cut:])


def save_dataset_csv(data: OrdinalDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.names)
        writer.writerows(data.codes.tolist())


def load_dataset_csv(path: str | Path,
                     levels: tuple[int, ...] | None = None) -> OrdinalDataset:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise InputError(f"cannot read dataset {path}: {exc}") from exc
    if len(rows) < 2:
        raise InputError(f"dataset {path}: need a header and at least one row")
    names = tuple(rows[0])
    try:
        codes = np.array([[int(v) for v in row] for row in rows[1:]], dtype=np.int64)
    except ValueError as exc:
        raise InputError(f"dataset {path}: non-integer level code: {exc}") from exc
    if codes.shape[1] != len(names):
        raise InputError(f"dataset {path}: ragged rows")
    return OrdinalDataset.from_codes(codes, levels, names)


def save_sidecar_json(path: str | Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_sidecar_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read sidecar {path}: {exc}") from exc
