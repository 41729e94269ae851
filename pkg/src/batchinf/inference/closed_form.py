"""Last-batch, leftover (GLS) and ZJM intervals.

All three read weights from the trajectory's own weight source, so a
finite-sample trajectory is handled with realized frequencies and
estimated variances.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from ..errors import DegenerateTarget, NonBasisTarget, ZeroProbability
from ..model import Trajectory

PINV_RTOL = 1e-10


@dataclass(frozen=True)
class CIResult:
    procedure: str
    estimate: float
    lo: float
    hi: float
    alpha: float
    covered: bool | None = None

    def __post_init__(self):
        for name in ("estimate", "lo", "hi", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def score(self, tau: float) -> "CIResult":
        """Copy with ``covered`` set against the true target value."""
        return replace(self, covered=bool(self.lo <= tau <= self.hi))


def _z(alpha: float) -> float:
    return float(norm.ppf(1 - alpha / 2))


def last_only_ci(traj: Trajectory, eta, alpha: float = 0.05) -> CIResult:
    """z-interval from the last batch alone."""
    eta = np.asarray(eta, dtype=float)
    prec = traj.precisions()[-1]
    support = eta != 0
    if np.any(prec[support] <= 0):
        raise ZeroProbability("target loads on an arm absent from the last batch")
    est = float(eta @ traj.batches[-1].x)
    se = float(np.sqrt(np.sum(eta[support] ** 2 / prec[support])))
    half = _z(alpha) * se
    return CIResult("last_only", est, est - half, est + half, alpha)


def _leftover_system(traj: Trajectory):
    """Information matrix and score vector of the stacked (L, X_T) model."""
    n = traj.params.n
    P = traj.precisions()
    X = traj.means()
    lam = P[:-1].sum(axis=0) / n
    L = float((P[:-1] * X[:-1]).sum()) / n
    info = np.diag(P[-1])
    rhs = P[-1] * X[-1]
    s = lam.sum()
    if traj.T > 1 and s > 0:
        info = info + n * np.outer(lam, lam) / s
        rhs = rhs + n * lam * L / s
    return info, rhs, lam, L


def leftover_estimate(traj: Trajectory, mode: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """GLS combination of the last batch with the leftover statistic.

    ``mode="exact"`` uses the closed form
    ``S* = X_T + V_T lam (L - lam'X_T) / (lam'1 + lam'V_T lam)`` and needs
    positive last-batch probabilities; ``mode="finite"`` solves the normal
    equations with a pseudoinverse. By default the closed form is used
    whenever it applies. Returns ``(S_star, cov)`` with ``cov`` already
    divided by n.
    """
    P_T = traj.precisions()[-1]
    if mode is None:
        mode = "exact" if traj.mode == "exact" and np.all(P_T > 0) else "finite"
    info, rhs, lam, L = _leftover_system(traj)
    if mode == "finite":
        cov = np.linalg.pinv(info, rcond=PINV_RTOL, hermitian=True)
        return cov @ rhs, cov
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if np.any(P_T <= 0):
        raise ZeroProbability("closed form needs positive last-batch probabilities")
    n = traj.params.n
    x_T = traj.batches[-1].x
    V_T = n / P_T  # diagonal of V_T
    v_lam = V_T * lam
    denom = lam.sum() + lam @ v_lam
    if traj.T == 1 or denom == 0:
        return x_T.copy(), np.diag(V_T) / n
    S = x_T + v_lam * (L - lam @ x_T) / denom
    cov = (np.diag(V_T) - np.outer(v_lam, v_lam) / denom) / n
    return S, cov


def leftover_ci(traj: Trajectory, eta, alpha: float = 0.05, mode: str | None = None) -> CIResult:
    eta = np.asarray(eta, dtype=float)
    info, *_ = _leftover_system(traj)
    proj = info @ np.linalg.pinv(info, rcond=PINV_RTOL, hermitian=True) @ eta
    if np.linalg.norm(proj - eta) > 1e-8 * max(1.0, np.linalg.norm(eta)):
        raise DegenerateTarget("eta'mu is not estimable from (L, X_T)")
    S, cov = leftover_estimate(traj, mode)
    est = float(eta @ S)
    half = _z(alpha) * float(np.sqrt(eta @ cov @ eta))
    return CIResult("leftover", est, est - half, est + half, alpha)


def zjm_ci(traj: Trajectory, eta, alpha: float = 0.05) -> CIResult:
    """Per-arm inversion of the studentized batch-sum pivot.

    ``sum_t w_t (X_tk - mu_k)`` with ``w_t = sqrt(n_t p_tk / sigma2_k)`` is
    standard normal times the square root of the number of contributing
    batches.
    """
    eta = np.asarray(eta, dtype=float)
    nz = np.flatnonzero(eta)
    if nz.size != 1 or eta[nz[0]] != 1.0:
        raise NonBasisTarget("ZJM is defined for a single arm")
    k = int(nz[0])
    w = np.sqrt(traj.precisions()[:, k])
    if w[-1] <= 0:
        raise ZeroProbability(f"arm {k + 1} is absent from the last batch")
    used = int(np.count_nonzero(w))
    x = traj.means()[:, k]
    est = float(w @ x / w.sum())
    half = np.sqrt(used) * _z(alpha) / w.sum()
    return CIResult("zjm", est, est - half, est + half, alpha)
