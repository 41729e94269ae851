"""Optimal conditional inference when the design is a polyhedral event.

The sufficient statistic ``S`` is split along ``eta``; conditionally on the
orthogonal part and on ``A X <= b`` the scaled statistic ``U / c`` has the
law of ``Z1`` in a linearly constrained Gaussian problem whose only
unknown is ``tau = eta'mu``. Tests draw that law by Gibbs sampling and
intervals invert the equal-tailed test by bisection, reusing chains
through exponential tilting.
"""

from __future__ import annotations

import numpy as np

from ..errors import BracketFailure, SingularStack, ZeroProbability
from ..model import Trajectory, complete_basis
from ..policies import Polyhedron, egreedy_polyhedron
from ..stochastics import (
    ConstrainedGaussianProblem,
    GibbsConfig,
    RngStream,
    gibbs_constrained_gaussian,
    reweighted_cdf,
    seeded_stream,
)
from .closed_form import CIResult

MAX_COND = 1e12
MAX_DOUBLINGS = 60


def helmert_rows(T: int) -> np.ndarray:
    """Orthonormal ``(T-1, T)`` contrasts, each orthogonal to the ones vector."""
    H = np.zeros((T - 1, T))
    for j in range(1, T):
        H[j - 1, :j] = 1.0
        H[j - 1, j] = -j
        H[j - 1] /= np.sqrt(j * (j + 1))
    return H


def polyhedral_transform(
    traj: Trajectory,
    eta,
    polyhedron: Polyhedron,
    eta_perp: np.ndarray | None = None,
    g_perp: np.ndarray | None = None,
) -> ConstrainedGaussianProblem:
    """Map ``(U/c | U_perp, A X <= b)`` onto a constrained Gaussian problem.

    ``eta_perp`` and ``g_perp`` default to deterministic completions; any
    valid choice gives the same law. The ``Z2`` factor passed to the sampler
    comes from the batch deviations ``X_t - R^{-1} S`` of batches 1..T-1,
    which do not depend on ``g_perp``.
    """
    eta = np.asarray(eta, dtype=float)
    T, K = traj.T, traj.K
    P = traj.precisions()
    if np.any(P <= 0):
        raise ZeroProbability("polyhedral inference needs every batch-arm cell observed")
    A = np.atleast_2d(np.asarray(polyhedron.A, dtype=float)).reshape(-1, T * K)
    b = np.asarray(polyhedron.b, dtype=float).ravel()

    p_flat = P.ravel()  # diagonal of the stacked precision (bold V)^{-1}
    G = np.kron(np.ones((1, T)), np.eye(K))
    if g_perp is None:
        g_perp = np.kron(helmert_rows(T), np.eye(K))
    stack = np.vstack([G * p_flat, g_perp])
    if np.linalg.cond(stack) > MAX_COND:
        raise SingularStack("stacked basis is numerically singular")
    inv = np.linalg.inv(stack)
    G_t, G_pt = inv[:, :K], inv[:, K:]

    R = P.sum(axis=0)  # diagonal of n sum_t V_t^{-1}
    c = 1.0 / float(eta @ (eta / R))
    if eta_perp is None:
        eta_perp = complete_basis(eta)
    x = traj.means().ravel()
    S = G @ (p_flat * x)
    if K > 1:
        R_perp = (eta_perp * R) @ eta_perp.T
        k = np.linalg.solve(R_perp, eta_perp @ (R * eta)) / c
        offset = float(k @ (eta_perp @ S))
    else:
        offset = 0.0

    M = np.column_stack([c * (A @ (G_t @ eta)), A @ G_pt])
    m = b - A @ (G_t @ (S - eta * (eta @ S)))
    z2_obs = g_perp @ x
    cov_z2 = (g_perp / p_flat) @ g_perp.T

    factor = None
    if T > 1:
        d = (T - 1) * K
        v_head = 1.0 / p_flat[:d]
        C = np.diag(v_head) - np.kron(np.ones((T - 1, T - 1)), np.diag(1.0 / R))
        chol = np.linalg.cholesky(C)
        # deviations satisfy sum_t P_t Y_t = 0, which pins the last batch
        E = np.vstack([np.eye(d), np.hstack([np.diag(-P[t] / P[-1]) for t in range(T - 1)])])
        factor = g_perp @ E @ chol

    return ConstrainedGaussianProblem(
        c=c,
        offset=offset,
        cov_z2=cov_z2,
        M=M,
        m=m,
        z1_obs=float(eta @ S) / c,
        z2_obs=z2_obs,
        z2_factor=factor,
    )


def reconstruct(traj: Trajectory, g_perp: np.ndarray | None = None) -> np.ndarray:
    """``G~ S + G~_perp G_perp X``; equals the stacked batch means when the transform is sound."""
    T, K = traj.T, traj.K
    p_flat = traj.precisions().ravel()
    G = np.kron(np.ones((1, T)), np.eye(K))
    if g_perp is None:
        g_perp = np.kron(helmert_rows(T), np.eye(K))
    inv = np.linalg.inv(np.vstack([G * p_flat, g_perp]))
    x = traj.means().ravel()
    return inv[:, :K] @ (G @ (p_flat * x)) + inv[:, K:] @ (g_perp @ x)


def polyhedral_test(
    problem: ConstrainedGaussianProblem,
    tau0: float,
    alpha: float = 0.05,
    gibbs: GibbsConfig = GibbsConfig(),
    rng: RngStream | None = None,
) -> tuple[bool, float, float]:
    """Equal-tailed test of ``tau = tau0``.

    Returns ``(reject, lower, upper)`` where ``lower = P(Z1 <= z1_obs)`` and
    ``upper = P(Z1 >= z1_obs)`` under the null.
    """
    z = gibbs_constrained_gaussian(problem.at(tau0), gibbs.n_draws, gibbs.burn_in, gibbs.thin, rng)
    lower = float(np.mean(z <= problem.z1_obs))
    upper = float(np.mean(z >= problem.z1_obs))
    return (lower < alpha / 2 or lower > 1 - alpha / 2), lower, upper


class TailCurve:
    """``tau -> P_tau(Z1 <= z1_obs | M Z <= m)`` estimated from cached chains.

    Chains live on a grid of spacing ``1/sqrt(c)`` anchored at the
    unconstrained median-unbiased value, each with its own stream, so the
    curve does not depend on the order of queries. A query is answered by
    tilting the nearest chain; if the effective sample size falls below the
    guard a fresh chain is drawn at the query point.
    """

    def __init__(self, problem: ConstrainedGaussianProblem, gibbs: GibbsConfig, seed: int):
        self.problem = problem
        self.gibbs = gibbs
        self.seed = int(seed)
        self.h = problem.sd1
        self.pilot = problem.z1_obs - problem.offset
        self._chains: dict = {}
        self.n_chains = 0

    def _draws(self, key, tau: float) -> np.ndarray:
        if key not in self._chains:
            if key[0] == "grid":
                rng = seeded_stream(self.seed, 0, abs(key[1]), int(key[1] < 0))
            else:
                bits = int(np.float64(tau).view(np.uint64))
                rng = seeded_stream(self.seed, 1, bits)
            g = self.gibbs
            self._chains[key] = gibbs_constrained_gaussian(
                self.problem.at(tau), g.n_draws, g.burn_in, g.thin, rng
            )
            self.n_chains += 1
        return self._chains[key]

    def __call__(self, tau: float) -> float:
        j = int(np.round((tau - self.pilot) / self.h))
        base = self.pilot + j * self.h
        draws = self._draws(("grid", j), base)
        prob, ess = reweighted_cdf(draws, self.problem.z1_obs, self.problem.c, base, tau)
        if ess < self.gibbs.ess_min:
            draws = self._draws(("point", tau), tau)
            prob = float(np.mean(draws <= self.problem.z1_obs))
        return prob

    def solve(self, level: float) -> float:
        """Bisect for ``tau`` with ``P_tau(Z1 <= z1_obs) = level``."""
        lo = self.pilot - 6 * self.h
        hi = self.pilot + 6 * self.h
        width = 6 * self.h
        for _ in range(MAX_DOUBLINGS):
            if self(lo) >= level:
                break
            width *= 2
            lo = self.pilot - width
        else:
            raise BracketFailure(f"no lower bracket for level {level}")
        width = 6 * self.h
        for _ in range(MAX_DOUBLINGS):
            if self(hi) <= level:
                break
            width *= 2
            hi = self.pilot + width
        else:
            raise BracketFailure(f"no upper bracket for level {level}")
        tol = 1e-3 * self.h
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self(mid) > level:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def polyhedral_ci(
    problem: ConstrainedGaussianProblem,
    alpha: float = 0.05,
    gibbs: GibbsConfig = GibbsConfig(),
    rng: RngStream | None = None,
) -> CIResult:
    """Equal-tailed interval and median-unbiased estimate by test inversion.

    The lower endpoint makes ``Z1 >= z1_obs`` an ``alpha/2`` event, the
    upper endpoint makes ``Z1 <= z1_obs`` one.
    """
    if rng is None:
        rng = np.random.default_rng()
    curve = TailCurve(problem, gibbs, int(rng.integers(2**63)))
    lo = curve.solve(1 - alpha / 2)
    est = curve.solve(0.5)
    hi = curve.solve(alpha / 2)
    return CIResult("polyhedral", est, lo, hi, alpha)


def polyhedral_inference(
    traj: Trajectory,
    alpha: float = 0.05,
    gibbs: GibbsConfig = GibbsConfig(),
    rng: RngStream | None = None,
) -> CIResult:
    """Polyhedral interval for an epsilon-greedy trajectory's own target."""
    poly = egreedy_polyhedron(traj)
    problem = polyhedral_transform(traj, traj.eta, poly)
    return polyhedral_ci(problem, alpha, gibbs, rng)
