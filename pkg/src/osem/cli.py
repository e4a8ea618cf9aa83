"""Command-line front end: simulate | learn | evaluate | predict | bootstrap.

Every command is a pure function of its input files, flags, and seed;
repeated invocations produce byte-identical outputs.  Timings therefore
never go into output files.  Exit codes: 0 success, 2 input error,
3 numeric/structural error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (OrdinalDataset, load_dataset_csv, load_sidecar_json,
                   save_dataset_csv, save_sidecar_json)
from .em import OsemConfig, osem_fit, recover_node_params
from .errors import InputError, OsemError
from .graph import (cpdag_to_json, dag_to_cpdag, dag_to_json, full_dag,
                    graph_from_json)
from .latent import LatentModel, Thresholds
from .metrics import pattern_confusion, shd_pattern, to_pattern, tpr_fprp
from .predict import bootstrap_edges, test_log_loss
from .rng import SEED_SCHEME
from .simulate import make_benchmark

_VERSION_TEXT = f"osem {__version__} (seed scheme {SEED_SCHEME})"


def _threads() -> int:
    raw = os.environ.get("OSEM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"OSEM_THREADS must be an integer, got {raw!r}")


def _expand_config(argv: list[str]) -> list[str]:
    """Inline `--config FILE` key=value pairs as flags before the user's flags."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise InputError("--config requires a file path")
    path = argv[idx + 1]
    tokens: list[str] = []
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for ln, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{ln}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("\"'")
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
        else:
            tokens.extend([flag, value])
    # config expands in place, so flags written after --config win
    return argv[:idx] + tokens + argv[idx + 2:]


def _load_data(path: str, sidecar: str | None) -> OrdinalDataset:
    levels = None
    if sidecar:
        meta = load_sidecar_json(sidecar)
        if "levels" in meta:
            levels = tuple(int(x) for x in meta["levels"])
    return load_dataset_csv(path, levels)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_simulate(args: argparse.Namespace) -> int:
    bench = make_benchmark(args.n, args.d, args.N, args.levels, args.nu, args.seed)
    out = str(args.out)
    save_dataset_csv(bench.data, out + ".csv")
    save_sidecar_json(out + ".json", {
        "levels": list(bench.data.levels),
        "names": list(bench.data.names),
        "true_dag": dag_to_json(bench.dag),
        "true_cpdag": cpdag_to_json(dag_to_cpdag(bench.dag)),
        "true_sigma": bench.sigma.tolist(),
        "thresholds": bench.thresholds.interior(),
        "seed": args.seed,
    })
    return 0


def cmd_learn(args: argparse.Namespace) -> int:
    data = _load_data(args.data, args.sidecar)
    config = OsemConfig(k=args.K, lam=args.lam, max_iter=args.max_iter,
                        tol=args.tol, burn_in=args.burn_in, thin=args.thin,
                        restarts=args.restarts, max_parents=args.max_parents,
                        subset_limit=args.subset_limit, seed=args.seed)
    result = osem_fit(data, config)
    out = str(args.out)
    trace_rows = [{
        "iteration": rec.iteration,
        "score": None if rec.score is None else float(rec.score),
        "n_edges": len(rec.dag.edges),
        "sigma_change": None if rec.sigma_change is None else float(rec.sigma_change),
    } for rec in result.trace]
    report = {
        "config": {
            "K": config.k, "lambda": config.lam, "max_iter": config.max_iter,
            "tol": config.tol, "burn_in": config.burn_in, "thin": config.thin,
            "restarts": config.restarts, "max_parents": config.max_parents,
            "subset_limit": config.subset_limit,
        },
        "seed": config.seed,
        "seed_scheme": SEED_SCHEME,
        "trace": trace_rows,
        "dag": dag_to_json(result.dag),
        "cpdag": cpdag_to_json(result.cpdag),
        "sigma": result.model.sigma.tolist(),
        "thresholds": result.model.thresholds.interior(),
        "names": list(data.names),
    }
    _write_json(Path(out + ".report.json"), report)
    _write_json(Path(out + ".cpdag.json"), cpdag_to_json(result.cpdag))
    with open(out + ".trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "score", "n_edges", "sigma_change"])
        for row in trace_rows:
            writer.writerow([row["iteration"],
                             "" if row["score"] is None else repr(row["score"]),
                             row["n_edges"],
                             "" if row["sigma_change"] is None
                             else repr(row["sigma_change"])])
    return 0


def _load_pattern(path: str):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read graph {path}: {exc}") from exc
    return to_pattern(graph_from_json(obj))


def cmd_evaluate(args: argparse.Namespace) -> int:
    if len(args.estimated) != len(args.truth):
        raise InputError("need one --truth per --estimated")
    rows = []
    for run_id, (est_path, truth_path) in enumerate(zip(args.estimated, args.truth)):
        est = _load_pattern(est_path)
        truth = _load_pattern(truth_path)
        tp, fp, p = pattern_confusion(est, truth, skeleton_only=args.skeleton_only)
        tpr, fprp = tpr_fprp(tp, fp, p)
        shd = shd_pattern(est, truth,
                          include_v_structures=not args.skeleton_only)
        rows.append([args.run_id or str(run_id), args.method, repr(args.lam),
                     repr(tpr), repr(fprp), str(shd), args.seconds])
    writer_target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(writer_target, lineterminator="\n")
        writer.writerow(["run_id", "method", "lambda", "tpr", "fprp", "shd",
                         "seconds"])
        writer.writerows(rows)
    finally:
        if args.out:
            writer_target.close()
    return 0


def _load_model(path: str) -> LatentModel:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    if "sigma" not in obj or "thresholds" not in obj:
        raise InputError(f"model {path}: needs 'sigma' and 'thresholds'")
    sigma = np.asarray(obj["sigma"], dtype=float)
    thresholds = Thresholds.from_interior(obj["thresholds"])
    dag = full_dag(sigma.shape[0])
    return LatentModel(dag, thresholds, sigma, recover_node_params(sigma, dag))


def cmd_predict(args: argparse.Namespace) -> int:
    model = _load_model(args.model)
    test = _load_data(args.test, args.sidecar)
    report = test_log_loss(model, test, draws=args.draws, seed=args.seed)
    writer_target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(writer_target, lineterminator="\n")
        writer.writerow(["split_id", "method", "total", "per_instance"])
        writer.writerow([args.split_id, args.method,
                         repr(report.total), repr(report.per_instance)])
    finally:
        if args.out:
            writer_target.close()
    return 0


def cmd_bootstrap(args: argparse.Namespace) -> int:
    data = _load_data(args.data, args.sidecar)
    config = OsemConfig(k=args.K, lam=args.lam, max_iter=args.max_iter,
                        tol=args.tol, burn_in=args.burn_in, thin=args.thin,
                        restarts=args.restarts, max_parents=args.max_parents,
                        subset_limit=args.subset_limit, seed=args.seed)
    result = bootstrap_edges(data, config, args.B, threads=_threads())
    payload = {
        "B": result.replicates,
        "failures": result.failures,
        "frequencies": result.frequencies.tolist(),
        "names": list(data.names),
        "seed": args.seed,
    }
    if args.out:
        _write_json(Path(args.out), payload)
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return 0


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, default=5, help="Monte Carlo sample size")
    p.add_argument("--lambda", dest="lam", type=float, default=6.0,
                   help="BIC penalty multiplier")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--burn-in", type=int, default=50)
    p.add_argument("--thin", type=int, default=5)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--subset-limit", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sidecar", default=None,
                   help="optional dataset sidecar JSON with level counts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osem",
        description="Bayesian network structure learning from ordinal data "
                    "under a latent Gaussian DAG model.")
    parser.add_argument("--version", action="version", version=_VERSION_TEXT)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic benchmark")
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--d", type=float, required=True,
                   help="expected neighbours per node")
    p.add_argument("--N", type=int, required=True, help="number of rows")
    p.add_argument("--levels", type=int, default=3, help="expected level count")
    p.add_argument("--nu", type=float, default=2.0,
                   help="Dirichlet concentration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="fit the model to an ordinal dataset")
    p.add_argument("--data", required=True, help="dataset CSV")
    _add_fit_flags(p)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("evaluate", help="structure recovery metrics")
    p.add_argument("--estimated", nargs="+", required=True)
    p.add_argument("--truth", nargs="+", required=True)
    p.add_argument("--skeleton-only", action="store_true")
    p.add_argument("--run-id", default="")
    p.add_argument("--method", default="osem")
    p.add_argument("--lambda", dest="lam", type=float, default=6.0)
    p.add_argument("--seconds", default="",
                   help="optional wall time to echo into the CSV")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="held-out log loss of a model")
    p.add_argument("--model", required=True,
                   help="JSON with 'sigma' and 'thresholds' (learn report works)")
    p.add_argument("--test", required=True, help="test dataset CSV")
    p.add_argument("--draws", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-id", default="")
    p.add_argument("--method", default="osem")
    p.add_argument("--sidecar", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bootstrap", help="bootstrapped CPDAG edge frequencies")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--B", type=int, required=True, help="bootstrap replicates")
    _add_fit_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bootstrap)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OsemError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
