"""Command line entry point: ``batchinf <subcommand>``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import BatchInfError
from ..simulator import dump_header, dump_lines
from ..stochastics import seeded_stream
from .. import twobatch
from .config import load_config
from .replicate import check_failures, read_records, replicate, run_rep, write_outputs
from .summary import bins_to_csv, conditional_bins, summarize, summary_to_csv

TWOBATCH_COLUMNS = [
    "pi", "a", "b", "c", "sigma", "printed_a", "printed_b", "printed_c", "printed_sigma",
    "mse_T0", "mse_Tstar", "mse_diff_se", "noise_term", "p_A", "cover_given_A", "coverage",
]


def _cmd_replicate(args) -> int:
    config = load_config(args.config).with_overrides(
        reps=args.reps, seed=args.seed, parallel=args.parallel, out_dir=args.out
    )

    def progress(done):
        print(f"\r{done}/{config.reps} reps", end="", file=sys.stderr, flush=True)

    records, dump = replicate(config, progress=None if args.quiet else progress)
    if not args.quiet:
        print(file=sys.stderr)
    out = write_outputs(config, records, dump, config.out_dir)
    print(summary_to_csv(summarize(records)), end="")
    print(f"wrote {out / 'records.csv'} and {out / 'summary.csv'}", file=sys.stderr)
    check_failures(records)
    return 0


def _cmd_summarize(args) -> int:
    print(summary_to_csv(summarize(read_records(args.inp))), end="")
    return 0


def _cmd_bins(args) -> int:
    print(bins_to_csv(conditional_bins(read_records(args.inp), args.arm, args.alpha)), end="")
    return 0


def _twobatch_row(pi: float, mu, reps: int, seed: int, alpha: float) -> list[str]:
    d = twobatch.zjm_decompose(pi)
    p = twobatch.printed_coeffs(pi)
    key = int(np.float64(pi).view(np.uint64))
    mse = twobatch.rao_blackwell_mse_sim(mu, pi, reps, seeded_stream(seed, key, 0))
    sub = twobatch.recognizable_subset_sim(mu, alpha, pi, reps, seeded_stream(seed, key, 1))
    vals = [pi, d.a, d.b, d.c, d.sigma, p.a, p.b, p.c, p.sigma,
            mse.mse_T0, mse.mse_Tstar, mse.se_diff, mse.noise_term,
            sub.p_A, sub.p_cover_given_A, sub.coverage]
    return [repr(float(v)) for v in vals]


def _cmd_twobatch(args) -> int:
    pis = [args.pi] if args.pi is not None else [round(0.05 * i, 2) for i in range(1, 20)]
    mu = [float(v) for v in args.mu.split(",")]
    print(",".join(TWOBATCH_COLUMNS))
    for pi in pis:
        print(",".join(_twobatch_row(pi, mu, args.reps, args.seed, args.alpha)))
    return 0


def _cmd_simulate(args) -> int:
    config = load_config(args.config).with_overrides(reps=args.reps, seed=args.seed)
    K = config.params.K
    if args.dump:
        print(dump_header(K))
    else:
        print("rep_id,T,eta_arm,status")
    for rep in range(config.reps):
        records, traj = run_rep(config.with_overrides(procedures=("last_only",)), rep)
        if args.dump:
            if traj is not None:
                print("\n".join(dump_lines(traj, rep)))
        else:
            r = records[0]
            print(f"{rep},{r.T},{r.eta_arm},{'ok' if traj is not None else r.status}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="batchinf", description="Inference after batched adaptive experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replicate", help="run a Monte Carlo study and write records.csv and summary.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--parallel", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_replicate)

    p = sub.add_parser("summarize", help="rejection rates and lengths from records.csv")
    p.add_argument("--in", dest="inp", required=True)
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("bins", help="coverage by winner count of one arm")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--arm", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_bins)

    p = sub.add_parser("twobatch", help="two-batch decomposition coefficients and simulations")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--pi", type=float)
    g.add_argument("--grid", action="store_true")
    p.add_argument("--mu", default="0,0")
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=_cmd_twobatch)

    p = sub.add_parser("simulate", help="generate trajectories only")
    p.add_argument("--config", required=True)
    p.add_argument("--dump", action="store_true", help="print per-batch rows")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BatchInfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
