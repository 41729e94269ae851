"""Domain types and deterministic statistics of the batched Gaussian model.

Arrays are indexed batch-first then arm. Batch indices ``t`` in public
signatures are 1-based to match the usual batch numbering; arm indices are
0-based everywhere except in user-facing target specs and CSV output.

Two weight sources share one code path. In ``"exact"`` mode the design
probabilities ``pi`` and the true variances are used; in ``"finite"`` mode
the realized frequencies ``pi_hat`` and the estimated variances are used.
Either way a cell (t, k) carries the precision ``n_t p_tk / sigma2_k``, and
a zero-probability cell simply has zero precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyArm, NotUnit, ZeroProbability

MODES = ("exact", "finite")


@dataclass(frozen=True)
class ModelParams:
    """Ground truth of a simulated experiment."""

    mu: np.ndarray
    sigma2: np.ndarray
    batch_sizes: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        sigma2 = np.asarray(self.sigma2, dtype=float).ravel()
        sizes = np.asarray(self.batch_sizes).ravel()
        if mu.size < 2:
            raise ValueError("need at least two arms")
        if sigma2.shape != mu.shape:
            raise ValueError("mu and sigma2 must have the same length")
        if np.any(sigma2 <= 0):
            raise ValueError("arm variances must be positive")
        if sizes.size == 0 or np.any(sizes < 1) or np.any(sizes != np.round(sizes)):
            raise ValueError("batch sizes must be positive integers")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "batch_sizes", sizes.astype(np.int64))

    @property
    def K(self) -> int:
        return self.mu.size

    @property
    def T0(self) -> int:
        return self.batch_sizes.size

    @property
    def n(self) -> int:
        return int(self.batch_sizes.sum())

    @property
    def c(self) -> np.ndarray:
        return self.batch_sizes / self.n


@dataclass(frozen=True)
class BatchRecord:
    """What was assigned and observed in one batch.

    ``counts`` are realized arm counts in finite-sample mode and the
    expected counts ``n_t * pi`` in exact mode. ``sumsq`` holds per-arm sums
    of squared outcomes and is only populated in finite-sample mode.
    """

    t: int
    pi: np.ndarray
    pi_hat: np.ndarray
    counts: np.ndarray
    x: np.ndarray
    sumsq: np.ndarray | None = None

    @property
    def n_t(self) -> float:
        return float(np.sum(self.counts))


@dataclass(frozen=True)
class Trajectory:
    params: ModelParams
    batches: tuple[BatchRecord, ...]
    eta: np.ndarray
    sigma2_hat: np.ndarray
    mode: str = "exact"
    winners: tuple[int, ...] | None = None  # 0-based arm index, batches 1..T-1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "batches", tuple(self.batches))
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float))
        object.__setattr__(self, "sigma2_hat", np.asarray(self.sigma2_hat, dtype=float))

    @property
    def T(self) -> int:
        return len(self.batches)

    @property
    def K(self) -> int:
        return self.params.K

    def probs(self) -> np.ndarray:
        """(T, K) probabilities from the mode's weight source."""
        key = "pi" if self.mode == "exact" else "pi_hat"
        return np.array([getattr(b, key) for b in self.batches])

    def means(self) -> np.ndarray:
        return np.array([b.x for b in self.batches])

    def sizes(self) -> np.ndarray:
        return self.params.batch_sizes[: self.T].astype(float)

    def precisions(self) -> np.ndarray:
        """(T, K) cell precisions n_t p_tk / sigma2_k, i.e. the diagonal of n V_t^{-1}."""
        return self.sizes()[:, None] * self.probs() / self.sigma2_hat[None, :]

    def with_means(self, x: np.ndarray) -> "Trajectory":
        """Copy with batch-arm means replaced by the rows of ``x``."""
        batches = tuple(
            BatchRecord(b.t, b.pi, b.pi_hat, b.counts, np.asarray(row, dtype=float), b.sumsq)
            for b, row in zip(self.batches, x)
        )
        return Trajectory(self.params, batches, self.eta, self.sigma2_hat, self.mode, self.winners)


@dataclass(frozen=True)
class SuffStats:
    S: np.ndarray
    L: float
    lam: np.ndarray
    W: np.ndarray = field(repr=False)
    Omega: np.ndarray = field(repr=False)


def batch_variance(params: ModelParams, t: int, pi) -> np.ndarray:
    """Diagonal of V_t, ``sigma2_k / (c_t pi_k)``."""
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0):
        raise ZeroProbability("V_t is undefined for a zero assignment probability")
    return params.sigma2 / (params.c[t - 1] * pi)


def cumulative_stats(
    batches: Sequence[BatchRecord],
    sigma2,
    batch_sizes,
    mode: str = "exact",
) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-variance weighted cumulative means and their posterior variances.

    Returns ``(W, Omega)`` for the prefix ``batches``; ``Omega`` is the
    diagonal of ``(sum_s n V_s^{-1})^{-1}``. Within an arm the weights are
    proportional to ``n_s p_sk``, so the variances only enter ``Omega``.
    """
    key = "pi" if mode == "exact" else "pi_hat"
    sizes = np.asarray(batch_sizes, dtype=float)[: len(batches)]
    p = np.array([getattr(b, key) for b in batches])
    x = np.array([b.x for b in batches])
    weight = sizes[:, None] * p
    total = weight.sum(axis=0)
    if np.any(total <= 0):
        raise EmptyArm("an arm has no cumulative weight")
    W = (weight * x).sum(axis=0) / total
    Omega = np.asarray(sigma2, dtype=float) / total
    return W, Omega


def prefix_stats(traj: Trajectory, t: int) -> tuple[np.ndarray, np.ndarray]:
    """``cumulative_stats`` over batches 1..t of a trajectory."""
    return cumulative_stats(traj.batches[:t], traj.sigma2_hat, traj.params.batch_sizes, traj.mode)


def leftover_stats(traj: Trajectory, scaled: bool = False) -> tuple[float, np.ndarray]:
    """Leftover statistic ``L`` and its loading vector ``lambda``.

    ``lambda_k = sum_{t<T} c_t p_tk / sigma2_k`` and ``L = sum_k sum_{t<T}
    c_t p_tk X_tk / sigma2_k``. With ``scaled`` both are multiplied by
    sqrt(n), giving the finite-sample parametrization.
    """
    n = traj.params.n
    prec = traj.precisions()[:-1] / n
    lam = prec.sum(axis=0)
    L = float((prec * traj.means()[:-1]).sum())
    if scaled:
        return np.sqrt(n) * L, np.sqrt(n) * lam
    return L, lam


def sufficient_stat(traj: Trajectory) -> np.ndarray:
    """``S = n sum_t V_t^{-1} X_t``, coordinatewise ``sum_t n_t p_tk X_tk / sigma2_k``."""
    return (traj.precisions() * traj.means()).sum(axis=0)


def suff_stats(traj: Trajectory) -> SuffStats:
    L, lam = leftover_stats(traj)
    W, Om = [], []
    for t in range(1, traj.T + 1):
        w, om = prefix_stats(traj, t)
        W.append(w)
        Om.append(om)
    return SuffStats(sufficient_stat(traj), L, lam, np.array(W), np.array(Om))


def complete_basis(eta, tol: float = 1e-10) -> np.ndarray:
    """Rows completing the unit vector ``eta`` to an orthonormal basis.

    Gram-Schmidt against the canonical basis in index order, so the result
    is deterministic. Returns a ``(K-1, K)`` array.
    """
    eta = np.asarray(eta, dtype=float)
    if abs(np.linalg.norm(eta) - 1.0) > tol:
        raise NotUnit(f"|eta| = {np.linalg.norm(eta)!r}")
    K = eta.size
    basis = [eta]
    for j in range(K):
        v = np.zeros(K)
        v[j] = 1.0
        # two passes keep the rows orthogonal to machine precision
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
        if len(basis) == K:
            break
    return np.array(basis[1:]).reshape(K - 1, K)


def efficiency_gain(traj: Trajectory, eta) -> float:
    """Variance of the leftover estimator relative to the last batch alone.

    Uses ``r_c = V_T lambda`` (prior-to-last sample size ratio per arm),
    ``r_t = r_c + 1`` and the cumulative sample sizes ``q``.
    """
    eta = np.asarray(eta, dtype=float)
    p = traj.probs()
    sizes = traj.sizes()
    if np.any(p[-1] <= 0):
        raise ZeroProbability("last-batch probabilities must be positive")
    q = (sizes[:-1, None] * p[:-1]).sum(axis=0)
    r_c = q / (sizes[-1] * p[-1])
    r_t = r_c + 1.0
    sinv_q = q / traj.sigma2_hat
    denom = sinv_q @ r_t
    if denom == 0:
        return 1.0
    v_last = traj.sigma2_hat / (sizes[-1] * p[-1])  # diagonal of V_T / n
    reduction = np.outer(sinv_q, r_c) / denom
    cov = v_last[:, None] * (np.eye(traj.K) - reduction)
    return float(eta @ cov @ eta / (eta @ (v_last * eta)))
