"""Assignment rules, stopping rules, target selection and epsilon-greedy constraints.

Every argmax in this module breaks ties toward the lowest arm index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllPruned, BadEpsilon, MissingWinners
from .model import Trajectory
from .stochastics import RngStream, orthant_probability


@dataclass(frozen=True)
class PolicySpec:
    kind: str = "thompson"
    prune_eps: float = 0.01
    greedy_eps: float = 0.1
    pi1: tuple[float, ...] | None = None  # uniform when None
    orthant_draws: int = 8192

    def __post_init__(self):
        if self.kind not in ("thompson", "egreedy"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.orthant_draws < 1:
            raise ValueError("orthant_draws must be positive")

    def first_batch(self, K: int) -> np.ndarray:
        if self.pi1 is None:
            return np.full(K, 1.0 / K)
        pi = np.asarray(self.pi1, dtype=float)
        if pi.size != K or np.any(pi < 0) or abs(pi.sum() - 1) > 1e-12:
            raise ValueError("pi1 must be a probability vector over the arms")
        if self.kind == "thompson" and np.any(pi < self.prune_eps):
            raise ValueError("pi1 entries must be at least prune_eps")
        return pi


@dataclass(frozen=True)
class StoppingSpec:
    kind: str = "fixed_horizon"
    horizon: int = 4

    def __post_init__(self):
        if self.kind != "fixed_horizon":
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


@dataclass(frozen=True)
class TargetSpec:
    kind: str = "fixed_arm"
    arm: int = 1  # 1-based

    def __post_init__(self):
        if self.kind not in ("fixed_arm", "best_arm"):
            raise ValueError(f"unknown target kind {self.kind!r}")


@dataclass(frozen=True)
class Polyhedron:
    """Constraint set ``A x <= b`` over stacked batch-arm means (batch-major)."""

    A: np.ndarray
    b: np.ndarray
    rows: tuple[tuple[int, int, int], ...]  # (t, winner, loser), 1-based t, 0-based arms


def prune(pi, eps: float) -> np.ndarray:
    """Zero out entries below ``eps`` and renormalize the survivors."""
    pi = np.asarray(pi, dtype=float)
    keep = pi >= eps
    if not keep.any():
        raise AllPruned(f"every probability is below {eps}")
    out = np.where(keep, pi, 0.0)
    return out / out.sum()


def thompson_next(W, Omega, spec: PolicySpec, is_last_batch: bool, rng: RngStream) -> np.ndarray:
    pi = orthant_probability(W, Omega, spec.orthant_draws, rng)
    if is_last_batch and spec.prune_eps > 0:
        pi = prune(pi, spec.prune_eps)
    return pi


def egreedy_next(W, eps: float) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    K = W.size
    if not 0 < eps < 1.0 / K:
        raise BadEpsilon(f"epsilon must lie in (0, 1/{K}), got {eps}")
    pi = np.full(K, eps)
    pi[int(np.argmax(W))] = 1.0 - (K - 1) * eps
    return pi


def stop_decision(spec: StoppingSpec, t: int, history=None) -> bool:
    """Whether batch ``t`` is the last one. Only the fixed horizon is shipped."""
    return t == spec.horizon


def select_target(spec: TargetSpec, K: int, W_prev=None) -> np.ndarray:
    """Unit target vector; ``best_arm`` uses the cumulative means through T-1."""
    eta = np.zeros(K)
    if spec.kind == "fixed_arm":
        if not 1 <= spec.arm <= K:
            raise ValueError(f"arm must be in [1, {K}]")
        eta[spec.arm - 1] = 1.0
        return eta
    if W_prev is None:
        raise ValueError("best_arm target needs at least one batch before the last")
    eta[int(np.argmax(W_prev))] = 1.0
    return eta


def egreedy_polyhedron(traj: Trajectory, include_target_event: bool = True) -> Polyhedron:
    """Inequalities equivalent to the realized epsilon-greedy winner sequence.

    One row per batch ``t < T`` and losing arm ``l``: ``W_{t,l} - W_{t,k_t} <= 0``,
    expanded over the batch-arm means with the realized cumulative weights
    held fixed. A best-arm target is the winner at ``T-1`` and is already
    encoded by the last block of rows, so ``include_target_event`` adds nothing.
    """
    if traj.winners is None:
        raise MissingWinners("trajectory carries no winner sequence")
    T, K = traj.T, traj.K
    if len(traj.winners) != T - 1:
        raise MissingWinners(f"expected {T - 1} winners, got {len(traj.winners)}")
    weight = traj.sizes()[:, None] * traj.probs()
    rows, labels = [], []
    for t in range(1, T):
        cum = weight[:t].sum(axis=0)
        coef = weight[:t] / cum  # W_{t,k} = sum_s coef[s,k] X_{s,k}
        k = traj.winners[t - 1]
        for l in range(K):
            if l == k:
                continue
            row = np.zeros((T, K))
            row[:t, l] = coef[:, l]
            row[:t, k] = -coef[:, k]
            rows.append(row.ravel())
            labels.append((t, k, l))
    A = np.array(rows).reshape(len(rows), T * K)
    return Polyhedron(A, np.zeros(len(rows)), tuple(labels))
