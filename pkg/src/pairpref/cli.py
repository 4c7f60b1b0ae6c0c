"""Command-line interface.

Exit codes: 0 success, 2 argument error, 3 data or format error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .baselines import lil_ucb, naive_uniform, pairwise_se
from .errors import DataFormatError, DimensionError, SingularMatrixError
from .linalg import write_matrix_csv
from .model import deterministic_oracle, load_loss_matrix, optimal_pair, save_model, stochastic_oracle
from .plans import DEFAULT_SIGMA_THRESH, run_plans
from .rng import make_rng
from .rplans import DEFAULT_ROUND_CAP, run_rplans, run_rplans_budget

EXIT_OK, EXIT_ARGS, EXIT_DATA = 0, 2, 3
DEFAULT_MAX_SAMPLES = 100_000


class ArgumentError(ValueError):
    pass


def _csv_ints(text: str) -> list:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_names(text: str) -> list:
    return [x.strip() for x in text.split(",") if x.strip()]


def _write_json(path, obj) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _pair_json(pair, queries, **extra) -> dict:
    i, j = int(pair[0]), int(pair[1])
    out = {"pair": [i, j], "queries": int(queries)}
    out.update(extra)
    return out


def cmd_gen(args):
    if args.format == "model":
        save_model(args.out, harness.gen_population_model(args.k, args.r, args.seed))
    else:
        write_matrix_csv(args.out, harness.gen_synthetic(args.k, args.r, args.seed))


def cmd_plans(args):
    l = load_loss_matrix(args.matrix)
    oracle = deterministic_oracle(l)
    res = run_plans(oracle, rank_cap=args.r, sigma_thresh=args.sigma_thresh)
    i, j, v = optimal_pair(res.l_hat)
    _write_json(args.out, {
        "pair": [i, j],
        "value_hat": v,
        "queries": res.queries,
        "selected": [int(c) for c in res.selected],
        "max_error": float(np.abs(res.l_hat - l).max()),
        "l_hat": res.l_hat.tolist(),
    })
    _write_json(args.stats, oracle.stats.to_dict())


def cmd_rplans(args):
    l = load_loss_matrix(args.matrix)
    K = l.shape[0]
    oracle = stochastic_oracle(l, make_rng(args.seed))
    if args.budget is not None:
        res = run_rplans_budget(oracle, K, args.r, args.budget, split=args.split, round_cap=args.round_cap)
    else:
        if args.eps is None or args.delta is None:
            raise ArgumentError("give both --eps and --delta, or --budget")
        res = run_rplans(oracle, K, args.r, args.eps, args.delta, round_cap=args.round_cap,
                         max_samples_per_entry=args.max_samples)
    out = res.to_dict()
    out["seed"] = args.seed
    out["error"] = harness.pair_error(l, res.pair)
    out["max_error"] = float(np.abs(res.l_hat - l).max())
    _write_json(args.out, out)


def cmd_baseline(args):
    l = load_loss_matrix(args.matrix)
    K = l.shape[0]
    oracle = stochastic_oracle(l, make_rng(args.seed))
    if args.algo == "naive":
        pair, q = naive_uniform(oracle, K, args.budget)
    elif args.algo == "lilucb":
        pair, q = lil_ucb(oracle, K, args.budget)
    else:
        pair, q = pairwise_se(oracle, K, harness.SE_EPS, harness.SE_DELTA, round_cap=args.budget, budget=args.budget)
    _write_json(args.out, _pair_json(pair, q, algo=args.algo, seed=args.seed,
                                     error=harness.pair_error(l, pair)))


def cmd_sweep(args):
    l = load_loss_matrix(args.matrix)
    cfg = harness.SweepConfig(
        l=l, algos=tuple(args.algos), budgets=tuple(args.budgets), reps=args.reps,
        seed=args.seed, r=args.r, workers=args.workers, split=args.split,
        record_timing=args.record_timing,
    )
    text = harness.sweep_csv(harness.run_sweep(cfg))
    with open(args.out, "w") as fh:
        fh.write(text)


def cmd_validate_bernstein(args):
    _write_json(args.out, harness.validate_bernstein(args.p, args.n, args.delta, args.trials, args.seed))


def cmd_validate_se(args):
    _write_json(args.out, harness.validate_se(args.delta, args.trials, args.seed))


def cmd_validate_nystrom(args):
    _write_json(args.out, harness.validate_nystrom_noise(args.k, args.r, args.m, args.trials, args.seed,
                                                         exact=args.exact))


def cmd_ingest(args):
    try:
        ratings = np.loadtxt(args.ratings, delimiter=",", ndmin=2)
        with open(args.groups) as fh:
            groups = [line.strip() for line in fh if line.strip()]
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"cannot read ratings or groups: {exc}") from exc
    save_model(args.out, harness.ingest_ratings(ratings, np.array(groups)))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pairpref", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic low-rank loss matrix or mixture model")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("model", "matrix"), default="matrix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("plans", help="exact completion from a deterministic oracle")
    p.add_argument("--matrix", required=True)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--sigma-thresh", type=float, default=DEFAULT_SIGMA_THRESH)
    p.add_argument("--out", required=True)
    p.add_argument("--stats", required=True)
    p.set_defaults(func=cmd_plans)

    p = sub.add_parser("rplans", help="completion and best pair from a stochastic oracle")
    p.add_argument("--matrix", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--budget", type=int)
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--round-cap", type=int, default=DEFAULT_ROUND_CAP)
    p.add_argument("--max-samples", type=int, default=DEFAULT_MAX_SAMPLES,
                   help="per-entry sample cap in --eps/--delta mode")
    p.set_defaults(func=cmd_rplans)

    p = sub.add_parser("baseline", help="run one pair-arm baseline")
    p.add_argument("--algo", choices=("naive", "lilucb", "se"), required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="error-vs-budget sweep, written as CSV")
    p.add_argument("--matrix", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--algos", type=_csv_names, required=True)
    p.add_argument("--budgets", type=_csv_ints, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--split", type=float, default=0.5)
    p.add_argument("--record-timing", action="store_true",
                   help="fill wall_ms (otherwise 0, keeping output reproducible)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-bernstein", help="coverage of the matrix Bernstein radius")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate_bernstein)

    p = sub.add_parser("validate-se", help="success rate of elimination on principal submatrices")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate_se)

    p = sub.add_parser("validate-nystrom", help="extension error vs per-entry samples")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--m", type=_csv_ints, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="use exact entries (noiseless check)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate_nystrom)

    p = sub.add_parser("ingest", help="mixture model from binary ratings and user groups")
    p.add_argument("--ratings", required=True, help="CSV, users x items, entries 0/1")
    p.add_argument("--groups", required=True, help="one group label per line, one line per user")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.func(args)
    except (DataFormatError, DimensionError, SingularMatrixError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
