"""Table-style summaries and winner-count conditional coverage."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .replicate import Record

SUMMARY_COLUMNS = ["procedure", "rejection_rate", "mc_se", "median_length", "median_rel_length_vs_last", "reps_used"]
BIN_COLUMNS = ["procedure", "bin", "reps", "coverage", "band_lo", "band_hi", "consistent"]


@dataclass(frozen=True)
class SummaryRow:
    procedure: str
    rejection_rate: float
    mc_se: float
    median_length: float
    median_rel_length_vs_last: float | None
    reps_used: int
    failures: int = 0


def _procedures(records: list[Record]) -> list[str]:
    return list(dict.fromkeys(r.procedure for r in records))


def summarize(records: list[Record]) -> list[SummaryRow]:
    """One row per procedure over its successful reps.

    The relative length is the median of per-rep ratios to the last-batch
    interval, over reps where both succeeded.
    """
    last = {r.rep_id: r.length for r in records if r.procedure == "last_only" and r.ok}
    rows = []
    for proc in _procedures(records):
        mine = [r for r in records if r.procedure == proc]
        ok = [r for r in mine if r.ok]
        n = len(ok)
        if n == 0:
            rows.append(SummaryRow(proc, float("nan"), float("nan"), float("nan"), None, 0, len(mine)))
            continue
        reject = 1.0 - np.mean([r.covered for r in ok])
        ratios = [r.length / last[r.rep_id] for r in ok if r.rep_id in last]
        rows.append(SummaryRow(
            proc,
            float(reject),
            float(np.sqrt(reject * (1 - reject) / n)),
            float(np.median([r.length for r in ok])),
            float(np.median(ratios)) if last and ratios else None,
            n,
            len(mine) - n,
        ))
    return rows


def summary_to_csv(rows: list[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        rel = "" if r.median_rel_length_vs_last is None else repr(r.median_rel_length_vs_last)
        w.writerow([r.procedure, repr(r.rejection_rate), repr(r.mc_se), repr(r.median_length), rel, r.reps_used])
    return buf.getvalue()


def wilson_interval(successes: int, n: int, level: float) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + level / 2))
    p = successes / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return float(max(0.0, mid - half)), float(min(1.0, mid + half))


@dataclass(frozen=True)
class BinRow:
    procedure: str
    bin: int
    reps: int
    coverage: float
    band_lo: float
    band_hi: float
    consistent: bool  # nominal coverage lies inside the band


def conditional_bins(records: list[Record], arm: int, alpha: float = 0.05, level: float = 0.95) -> list[BinRow]:
    """Coverage by the number of batches before the last in which ``arm`` (1-based) led.

    Bands are Wilson intervals made simultaneous over a procedure's
    populated bins by Bonferroni; a bin is consistent when ``1 - alpha``
    falls inside its band. Empty bins are reported and count as consistent.
    """
    ok = [r for r in records if r.ok]
    T = max((r.T for r in ok), default=1)
    rows = []
    for proc in _procedures(records):
        mine = [r for r in ok if r.procedure == proc]
        by_bin = {b: [r for r in mine if r.winner_counts[arm - 1] == b] for b in range(T)}
        populated = sum(1 for v in by_bin.values() if v) or 1
        bin_level = 1 - (1 - level) / populated
        for b in range(T):
            cell = by_bin[b]
            n = len(cell)
            hits = sum(bool(r.covered) for r in cell)
            lo, hi = wilson_interval(hits, n, bin_level)
            cov = hits / n if n else float("nan")
            rows.append(BinRow(proc, b, n, cov, lo, hi, bool(lo <= 1 - alpha <= hi)))
    return rows


def bins_to_csv(rows: list[BinRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BIN_COLUMNS)
    for r in rows:
        w.writerow([r.procedure, r.bin, r.reps, repr(r.coverage), repr(r.band_lo), repr(r.band_hi), int(r.consistent)])
    return buf.getvalue()
