"""Monte Carlo replication: one trajectory per rep, every requested procedure on it.

Rep ``r`` draws its trajectory from ``seeded_stream(seed, r, 0)`` and the
polyhedral sampler from ``seeded_stream(seed, r, 1)``, so records do not
depend on scheduling, on which procedures run, or on the degree of
parallelism.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import BatchInfError, RunFailed, ZeroProbability
from ..inference import last_only_ci, leftover_ci, polyhedral_inference, zjm_ci
from ..model import Trajectory, cumulative_stats
from ..simulator import dump_header, dump_lines, run_experiment_finite, run_experiment_gaussian
from ..stochastics import seeded_stream
from .config import RunConfig

SIM_STREAM = 0
SAMPLER_STREAM = 1
MAX_FAILURE_FRACTION = 1e-3


def record_columns(K: int) -> list[str]:
    return (
        ["rep_id", "procedure", "T", "eta_arm", "true_tau", "estimate", "ci_lo", "ci_hi", "length", "covered"]
        + [f"winner_count_arm{k}" for k in range(1, K + 1)]
        + ["status"]
    )


@dataclass(frozen=True)
class Record:
    rep_id: int
    procedure: str
    T: int
    eta_arm: int
    true_tau: float
    estimate: float
    ci_lo: float
    ci_hi: float
    covered: bool | None
    winner_counts: tuple[int, ...]
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def length(self) -> float:
        return self.ci_hi - self.ci_lo

    def row(self) -> list[str]:
        def num(v):
            return repr(float(v))

        covered = "" if self.covered is None else str(int(self.covered))
        return (
            [str(self.rep_id), self.procedure, str(self.T), str(self.eta_arm), num(self.true_tau),
             num(self.estimate), num(self.ci_lo), num(self.ci_hi), num(self.length), covered]
            + [str(c) for c in self.winner_counts]
            + [self.status]
        )


def winner_sequence(traj: Trajectory) -> tuple[int, ...]:
    """Leading arm (0-based) after each batch before the last.

    Epsilon-greedy trajectories carry their own sequence; otherwise the
    argmax of the cumulative means is used.
    """
    if traj.winners is not None:
        return tuple(traj.winners)
    out = []
    for t in range(1, traj.T):
        W, _ = cumulative_stats(traj.batches[:t], traj.sigma2_hat, traj.params.batch_sizes, traj.mode)
        out.append(int(np.argmax(W)))
    return tuple(out)


def _simulate(config: RunConfig, rep: int) -> Trajectory:
    rng = seeded_stream(config.seed, rep, SIM_STREAM)
    if config.mode == "exact":
        return run_experiment_gaussian(config.params, config.policy, config.stopping, config.target, rng)
    return run_experiment_finite(
        config.params, config.outcome, config.policy, config.stopping, config.target, rng
    )


def _procedure(config: RunConfig, name: str, traj: Trajectory, rep: int):
    eta = traj.eta
    if name == "last_only":
        return last_only_ci(traj, eta, config.alpha)
    if name == "leftover":
        return leftover_ci(traj, eta, config.alpha)
    if name == "zjm":
        return zjm_ci(traj, eta, config.alpha)
    rng = seeded_stream(config.seed, rep, SAMPLER_STREAM)
    return polyhedral_inference(traj, config.alpha, config.gibbs, rng)


def _status(exc: BatchInfError) -> str:
    """``undefined`` when the procedure cannot see the target arm at all, else ``error``."""
    kind = "undefined" if isinstance(exc, ZeroProbability) else "error"
    return f"{kind}:{type(exc).__name__}"


def run_rep(config: RunConfig, rep: int) -> tuple[list[Record], Trajectory | None]:
    K = config.params.K
    nan = float("nan")
    try:
        traj = _simulate(config, rep)
    except BatchInfError as exc:
        status = _status(exc)
        return [Record(rep, p, 0, 0, nan, nan, nan, nan, None, (0,) * K, status) for p in config.procedures], None
    counts = np.bincount(np.asarray(winner_sequence(traj), dtype=int), minlength=K)
    wins = tuple(int(c) for c in counts)
    tau = float(traj.eta @ config.params.mu)
    arm = int(np.argmax(traj.eta)) + 1
    records = []
    for name in config.procedures:
        try:
            ci = _procedure(config, name, traj, rep).score(tau)
            records.append(Record(rep, name, traj.T, arm, tau, ci.estimate, ci.lo, ci.hi, ci.covered, wins))
        except BatchInfError as exc:
            records.append(Record(rep, name, traj.T, arm, tau, nan, nan, nan, None, wins,
                                  _status(exc)))
    return records, traj


def _run_block(args):
    config, start, stop = args
    out = []
    for rep in range(start, stop):
        records, traj = run_rep(config, rep)
        dump = dump_lines(traj, rep) if (config.dump and traj is not None) else []
        out.append((records, dump))
    return out


def replicate(config: RunConfig, progress=None) -> tuple[list[Record], list[str]]:
    """Run all reps; returns records sorted by ``(rep_id, procedure order)`` and dump lines."""
    n_blocks = max(1, min(config.reps, 16 * config.parallel))
    edges = np.linspace(0, config.reps, n_blocks + 1).astype(int)
    tasks = [(config, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if config.parallel == 1:
        results = map(_run_block, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=config.parallel)
        results = pool.map(_run_block, tasks)
    records: list[Record] = []
    dump: list[str] = []
    try:
        for block in results:
            for recs, lines in block:
                records.extend(recs)
                dump.extend(lines)
            if progress is not None:
                progress(len(records) // len(config.procedures))
    finally:
        if config.parallel > 1:
            pool.shutdown()
    order = {p: i for i, p in enumerate(config.procedures)}
    records.sort(key=lambda r: (r.rep_id, order[r.procedure]))
    return records, dump


def records_to_csv(records: list[Record], K: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(record_columns(K))
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def read_records(path: str | Path) -> list[Record]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        K = sum(1 for h in header if h.startswith("winner_count_arm"))
        if header != record_columns(K):
            raise ValueError("unexpected records.csv header")
        out = []
        for row in reader:
            covered = None if row[9] == "" else bool(int(row[9]))
            out.append(Record(
                int(row[0]), row[1], int(row[2]), int(row[3]), float(row[4]), float(row[5]),
                float(row[6]), float(row[7]), covered, tuple(int(v) for v in row[10:10 + K]), row[10 + K],
            ))
    return out


def check_failures(records: list[Record]) -> None:
    """Raise when more than 0.1% of procedure runs hit a genuine error.

    ``undefined`` rows (target arm absent from the data a procedure uses)
    are excluded from rates but are not failures.
    """
    n_fail = sum(r.status.startswith("error:") for r in records)
    if records and n_fail / len(records) > MAX_FAILURE_FRACTION:
        raise RunFailed(f"{n_fail} of {len(records)} procedure runs failed")


def write_outputs(config: RunConfig, records: list[Record], dump: list[str], out_dir: str | Path) -> Path:
    from .summary import summary_to_csv, summarize

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    K = config.params.K
    (out / "records.csv").write_text(records_to_csv(records, K))
    (out / "summary.csv").write_text(summary_to_csv(summarize(records)))
    if config.dump:
        (out / "trajectories.csv").write_text("\n".join([dump_header(K), *dump]) + "\n")
    return out
