"""Random streams and sampling primitives."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import EmptyInterval, InfeasibleStart, NegativeVariance

RngStream = np.random.Generator

FEAS_TOL = 1e-8


def seeded_stream(master_seed: int, stream_id: int, *sub: int) -> RngStream:
    """Independent PCG64 stream keyed by ``(master_seed, stream_id, *sub)``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream_id), *map(int, sub)))
    return np.random.Generator(np.random.PCG64(seq))


def draw_mvn_diag(rng: RngStream, mean, var) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(var < 0):
        raise NegativeVariance("variances must be non-negative")
    return mean + np.sqrt(var) * rng.standard_normal(mean.shape)


def orthant_probability(nu, Lambda, n_draws: int = 8192, rng: RngStream | None = None) -> np.ndarray:
    """Monte Carlo estimate of ``P(X_k >= max_l X_l)`` for ``X ~ N(nu, diag(Lambda))``.

    Argmax ties go to the lowest index. The same generator state yields the
    same standard normal draws, so shifting ``nu`` by a constant leaves the
    estimate unchanged.
    """
    nu = np.asarray(nu, dtype=float)
    Lambda = np.asarray(Lambda, dtype=float)
    if np.any(Lambda <= 0):
        raise ValueError("Lambda must be positive")
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    if rng is None:
        rng = np.random.default_rng()
    z = rng.standard_normal((n_draws, nu.size))
    winners = np.argmax(nu + np.sqrt(Lambda) * z, axis=1)
    p = np.bincount(winners, minlength=nu.size) / n_draws
    top = int(np.argmax(p))
    p[top] = 1.0 - (p.sum() - p[top])
    return p


def draw_truncated_normal(rng: RngStream, mean: float, sd: float, lo: float, hi: float) -> float:
    """Exact draw from N(mean, sd^2) restricted to [lo, hi].

    Deep tails (more than 5 sd out) use exponential or uniform rejection
    rather than the inverse CDF.
    """
    if not lo < hi:
        raise EmptyInterval(f"[{lo}, {hi}] is empty")
    if sd <= 0:
        raise ValueError("sd must be positive")
    return mean + sd * _kernels.trunc_std_normal(rng, (lo - mean) / sd, (hi - mean) / sd)


@dataclass(frozen=True)
class ConstrainedGaussianProblem:
    """Law of ``Z = (Z1, Z2)`` restricted to ``M Z <= m``.

    ``Z1 ~ N(tau + offset, 1/c)`` independent of ``Z2 ~ N(0, cov_z2)``.
    ``z2_factor`` optionally supplies ``B`` with ``cov_z2 = B B'`` and ``B``
    of full column rank; without it a factor is taken from the spectrum of
    ``cov_z2`` and null directions of ``Z2`` are held at their observed
    values.
    """

    c: float
    offset: float
    cov_z2: np.ndarray
    M: np.ndarray
    m: np.ndarray
    z1_obs: float
    z2_obs: np.ndarray
    tau: float = 0.0
    z2_factor: np.ndarray | None = None

    def at(self, tau: float) -> "ConstrainedGaussianProblem":
        return replace(self, tau=float(tau))

    @property
    def sd1(self) -> float:
        return 1.0 / np.sqrt(self.c)

    def observed(self) -> np.ndarray:
        return np.concatenate([[self.z1_obs], self.z2_obs])

    def check(self):
        cov = np.atleast_2d(self.cov_z2)
        if cov.size and not np.allclose(cov, cov.T, atol=1e-10 * max(1.0, np.abs(cov).max())):
            raise ValueError("cov_z2 is not symmetric")
        if cov.size:
            ev = np.linalg.eigvalsh(cov)
            if ev.min() < -1e-8 * max(1.0, ev.max()):
                raise ValueError("cov_z2 is not positive semidefinite")
        viol = self.M @ self.observed() - self.m
        if viol.size and viol.max() > FEAS_TOL * max(1.0, np.abs(self.m).max()):
            raise InfeasibleStart(f"observed point violates constraints by {viol.max():.3g}")


@dataclass(frozen=True)
class GibbsConfig:
    n_draws: int = 4000
    burn_in: int = 500
    thin: int = 1
    ess_min: float = 200.0


def _z2_factor(problem: ConstrainedGaussianProblem) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(B, z2_fixed)`` with ``Z2 = z2_fixed + B w``."""
    d2 = problem.z2_obs.size
    if d2 == 0:
        return np.zeros((0, 0)), np.zeros(0)
    if problem.z2_factor is not None:
        B = np.asarray(problem.z2_factor, dtype=float)
        coef, *_ = np.linalg.lstsq(B, problem.z2_obs, rcond=None)
        return B, problem.z2_obs - B @ coef
    ev, vec = np.linalg.eigh(problem.cov_z2)
    keep = ev > 1e-12 * max(ev.max(), 1e-300)
    B = vec[:, keep] * np.sqrt(ev[keep])
    null = vec[:, ~keep]
    return B, null @ (null.T @ problem.z2_obs)


def whitened_system(problem: ConstrainedGaussianProblem):
    """Express the problem as ``w ~ N(0, I)`` subject to ``A w <= b``.

    Returns ``(A, b, w_obs, to_z)`` where ``to_z`` maps whitened states back to Z.
    """
    B, z2_fixed = _z2_factor(problem)
    sd1 = problem.sd1
    mean1 = problem.tau + problem.offset
    M = np.atleast_2d(problem.M).reshape(-1, 1 + problem.z2_obs.size)
    M1, M2 = M[:, 0], M[:, 1:]
    A = np.column_stack([M1 * sd1, M2 @ B]) if M.shape[0] else np.zeros((0, 1 + B.shape[1]))
    b = problem.m - M1 * mean1 - M2 @ z2_fixed
    w1 = (problem.z1_obs - mean1) / sd1
    if B.shape[1]:
        w2, *_ = np.linalg.lstsq(B, problem.z2_obs - z2_fixed, rcond=None)
    else:
        w2 = np.zeros(0)
    w_obs = np.concatenate([[w1], w2])

    def to_z(w):
        w = np.atleast_2d(w)
        z1 = mean1 + sd1 * w[:, 0]
        z2 = z2_fixed + w[:, 1:] @ B.T
        return np.column_stack([z1, z2])

    return np.ascontiguousarray(A), np.ascontiguousarray(b, dtype=float), w_obs, to_z


def gibbs_constrained_gaussian(
    problem: ConstrainedGaussianProblem,
    n_draws: int = 4000,
    burn_in: int = 500,
    thin: int = 1,
    rng: RngStream | None = None,
    full: bool = False,
) -> np.ndarray:
    """Draws of ``Z1`` (or of the full ``Z`` with ``full``) given ``M Z <= m``.

    The chain starts from the observed point. ``Z2`` is sampled in whitened
    coordinates, so each coordinate update is a truncated standard normal.
    """
    if rng is None:
        rng = np.random.default_rng()
    viol = problem.M @ problem.observed() - problem.m if np.size(problem.M) else np.zeros(0)
    if viol.size and viol.max() > FEAS_TOL * max(1.0, np.abs(problem.m).max()):
        raise InfeasibleStart(f"observed point violates constraints by {viol.max():.3g}")
    A, b, w_obs, to_z = whitened_system(problem)
    # the kernel needs a feasible start; clear rounding-level violations
    b = np.maximum(b, A @ w_obs)
    w = _kernels.gibbs_whitened(rng, A, b, w_obs, int(n_draws), int(burn_in), int(thin))
    if full:
        return to_z(w)
    return problem.tau + problem.offset + problem.sd1 * w[:, 0]


def reweighted_cdf(draws, z1_obs: float, c: float, tau0: float, tau1: float) -> tuple[float, float]:
    """Self-normalized estimate of ``P_tau1(Z1 <= z1_obs)`` from draws at ``tau0``.

    Weights are ``exp(c (tau1 - tau0) Z1)``. Returns ``(prob, ess)``.
    """
    draws = np.asarray(draws, dtype=float)
    logw = c * (tau1 - tau0) * draws
    w = np.exp(logw - logw.max())
    total = w.sum()
    prob = float(w[draws <= z1_obs].sum() / total)
    ess = float(total**2 / (w @ w))
    return min(max(prob, 0.0), 1.0), ess
