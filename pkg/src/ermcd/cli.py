"""Command line surface.

Subcommands: run, faceoff, eso-check, bounds, gen-synthetic, compare.
Exit codes: 0 success, 1 validation error (including bad flags), 2
runtime failure. Machine-readable JSON goes to stdout after a short human
summary line on stderr.
"""

from __future__ import annotations

import argparse
import glob as globlib
import json
import sys

import numpy as np


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here is exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="ermcd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[], help="run an experiment config")
    run.add_argument("config", help="path to the JSON experiment config")

    face = sub.add_parser("faceoff", help="primal-vs-dual cost report for a dataset")
    face.add_argument("data", help="LIBSVM file")
    face.add_argument("--lambda", dest="lam", default="1/n")
    face.add_argument("--gamma", type=float, default=4.0)
    face.add_argument(
        "--sampling", choices=("uniform", "importance"), default="importance"
    )

    eso = sub.add_parser("eso-check", help="Monte-Carlo check of the step certificate")
    eso.add_argument("data", help="LIBSVM file")
    eso.add_argument(
        "--sampling", choices=("serial", "tau_nice", "bucket"), required=True
    )
    eso.add_argument("--tau", type=int, default=2)
    eso.add_argument("--trials", type=int, default=10000)
    eso.add_argument("--h-draws", type=int, default=50)
    eso.add_argument("--seed", type=int, default=0)
    eso.add_argument("--lambda", dest="lam", default="1/n")
    eso.add_argument("--gamma", type=float, default=1.0)

    b = sub.add_parser("bounds", help="binary extremal bounds L/U/R")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--alpha", type=int, required=True)

    gen = sub.add_parser("gen-synthetic", help="write a synthetic LIBSVM dataset")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--sparsity", type=float, required=True)
    gen.add_argument(
        "--norm-law",
        default="constant:1",
        help="uniform | constant:<c> | chisq:<k> | extreme:<big>",
    )
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)

    cmp_ = sub.add_parser("compare", help="speedup statistics between two trace sets")
    cmp_.add_argument("glob_a")
    cmp_.add_argument("glob_b")
    cmp_.add_argument("--target", type=float, required=True)
    cmp_.add_argument("--x", default="effective_passes")
    return p


def _emit(payload: dict, summary: str) -> None:
    print(summary, file=sys.stderr)
    json.dump(payload, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")


def _resolve_lambda(lam: str, n: int) -> float:
    if lam == "1/n":
        return 1.0 / n
    return float(lam)


def _cmd_run(args) -> int:
    from ermcd.harness import ConfigError, run_experiment

    with open(args.config) as f:
        config = json.load(f)
    try:
        traces = run_experiment(config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    payload = {
        "runs": [
            {
                "seed": t.meta.get("seed"),
                "rows": len(t.rows),
                "final_gap": t.final_gap,
            }
            for t in traces
        ]
    }
    _emit(payload, f"ran {len(traces)} seed(s)")
    return 0


def _cmd_faceoff(args) -> int:
    from ermcd.faceoff import total_complexities
    from ermcd.sparse_data import parse_libsvm

    with open(args.data) as f:
        ds = parse_libsvm(f)
    lam = _resolve_lambda(args.lam, ds.X.n)
    report = total_complexities(ds.X, lam, args.gamma, args.sampling)
    _emit(
        report.to_dict(),
        f"T_P/T_D = {report.ratio:.4g}; recommended side: {report.recommended}",
    )
    return 0


def _cmd_eso_check(args) -> int:
    from ermcd.eso import attach_eso, eso_mc_check
    from ermcd.rng import stream
    from ermcd.sampling import (
        bucket_probs_practical,
        bucket_sampling,
        random_buckets,
        tau_nice_sampling,
        uniform_serial_sampling,
    )
    from ermcd.sparse_data import parse_libsvm

    with open(args.data) as f:
        ds = parse_libsvm(f)
    X = ds.X
    lam = _resolve_lambda(args.lam, X.n)
    nlg = X.n * lam * args.gamma
    if args.sampling == "serial":
        s = uniform_serial_sampling(X.n)
    elif args.sampling == "tau_nice":
        s = tau_nice_sampling(X.n, args.tau)
    else:
        buckets = random_buckets(X.n, args.tau, stream(args.seed, "buckets"))
        p = np.empty(X.n)
        for g in buckets.groups:
            p[list(g)] = 1.0 / len(g)
        from ermcd.eso import v_bucket

        p = bucket_probs_practical(v_bucket(X, buckets, p), nlg, buckets)
        s = bucket_sampling(buckets, p)
    attach_eso(X, s)
    report = eso_mc_check(
        X, s, s.v, trials=args.trials, h_draws=args.h_draws,
        rng=stream(args.seed, "eso"),
    )
    _emit(
        {
            "max_violation_z": report.max_violation_z,
            "passed": report.passed,
            "trials": report.trials,
            "h_draws": report.h_draws,
        },
        f"max z = {report.max_violation_z:.3f} ({'pass' if report.passed else 'FAIL'})",
    )
    return 0 if report.passed else 2


def _cmd_bounds(args) -> int:
    from ermcd.faceoff import binary_bounds

    b = binary_bounds(args.alpha, args.d, args.n)
    payload = {
        "L_alpha_n": b.min_c_d,
        "L_alpha_d": b.min_c_p,
        "U_alpha_n_d": b.max_c_d,
        "U_alpha_d_n": b.max_c_p,
        "R_alpha_d_n": b.r_p,
        "R_alpha_n_d": b.r_d,
    }
    _emit(payload, f"C_D in [{b.min_c_d}, {b.max_c_d}], C_P in [{b.min_c_p}, {b.max_c_p}]")
    return 0


def _cmd_gen_synthetic(args) -> int:
    from ermcd.sparse_data import SyntheticSpec, generate_synthetic, serialize_libsvm

    law, _, param = args.norm_law.partition(":")
    spec = SyntheticSpec(
        n=args.n,
        d=args.d,
        sparsity=args.sparsity,
        norm_law=law,
        law_param=float(param) if param else 1.0,
        seed=args.seed,
    )
    ds = generate_synthetic(spec)
    with open(args.output, "w") as f:
        f.write(serialize_libsvm(ds))
    _emit(
        {"n": ds.X.n, "d": ds.X.d, "nnz": ds.X.nnz, "path": args.output},
        f"wrote {args.output} ({ds.X.nnz} nonzeros)",
    )
    return 0


def _cmd_compare(args) -> int:
    from ermcd.harness import compare_runs
    from ermcd.trace import Trace

    files_a = sorted(globlib.glob(args.glob_a))
    files_b = sorted(globlib.glob(args.glob_b))
    if not files_a or not files_b:
        print("empty glob", file=sys.stderr)
        return 1
    traces_a = [Trace.read(f) for f in files_a]
    traces_b = [Trace.read(f) for f in files_b]
    result = compare_runs(traces_a, traces_b, args.target, x=args.x)
    mean = result.mean_ratio
    _emit(
        result.to_dict(),
        f"mean speedup ratio: {mean:.3g}" if mean is not None else "all censored",
    )
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "faceoff": _cmd_faceoff,
    "eso-check": _cmd_eso_check,
    "bounds": _cmd_bounds,
    "gen-synthetic": _cmd_gen_synthetic,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1 if isinstance(e, (ValueError, KeyError)) else 2
    except Exception as e:  # runtime failure
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
