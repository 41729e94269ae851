"""Trajectory generation under the Gaussian batch-mean model and the unit-level model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyArm
from .model import BatchRecord, ModelParams, Trajectory, cumulative_stats
from .policies import PolicySpec, StoppingSpec, TargetSpec, egreedy_next, select_target, stop_decision, thompson_next
from .stochastics import RngStream


@dataclass(frozen=True)
class OutcomeLaw:
    """Unit-level outcome distribution; arm means come from the model parameters.

    ``rademacher_shifted`` draws ``mu_k +/- 1`` with equal probability.
    """

    kind: str = "rademacher_shifted"
    sd: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("rademacher_shifted", "gaussian"):
            raise ValueError(f"unknown outcome law {self.kind!r}")

    def draw(self, rng: RngStream, arms: np.ndarray, params: ModelParams) -> np.ndarray:
        mu = params.mu[arms]
        if self.kind == "rademacher_shifted":
            return mu + (2.0 * rng.integers(0, 2, size=arms.size) - 1.0)
        sd = np.sqrt(params.sigma2) if self.sd is None else np.asarray(self.sd, dtype=float)
        return mu + sd[arms] * rng.standard_normal(arms.size)


def estimate_arm_variance(sumsq, counts, W) -> np.ndarray:
    """Pooled within-arm variance ``sum (x - W)^2 / N`` from running sums.

    Uses ``sum x^2 / N - W^2`` with ``W`` the arm mean, floored at zero
    against cancellation.
    """
    sumsq = np.asarray(sumsq, dtype=float)
    counts = np.asarray(counts, dtype=float)
    W = np.asarray(W, dtype=float)
    if np.any(counts <= 0):
        raise EmptyArm("cannot estimate the variance of an arm with no observations")
    return np.maximum(sumsq / counts - W**2, 0.0)


def _next_probs(policy: PolicySpec, W, Omega, is_last: bool, rng: RngStream) -> np.ndarray:
    if policy.kind == "thompson":
        return thompson_next(W, Omega, policy, is_last, rng)
    return egreedy_next(W, policy.greedy_eps)


def _check_horizon(params: ModelParams, stopping: StoppingSpec):
    if stopping.horizon > params.T0:
        raise ValueError(f"horizon {stopping.horizon} exceeds the {params.T0} planned batches")


def run_experiment_gaussian(
    params: ModelParams,
    policy: PolicySpec,
    stopping: StoppingSpec,
    target: TargetSpec,
    rng: RngStream,
) -> Trajectory:
    """Simulate batch-arm means directly: ``X_t ~ N(mu, V_t / n)`` given ``Pi_t``.

    Arms with zero probability (pruned) carry a zero mean and no weight.
    """
    _check_horizon(params, stopping)
    K, sizes = params.K, params.batch_sizes
    batches: list[BatchRecord] = []
    winners: list[int] = []
    W = None
    for t in range(1, params.T0 + 1):
        last = stop_decision(stopping, t)
        if t == 1:
            pi = policy.first_batch(K)
        else:
            W, Omega = cumulative_stats(batches, params.sigma2, sizes, "exact")
            if policy.kind == "egreedy":
                winners.append(int(np.argmax(W)))
            pi = _next_probs(policy, W, Omega, last, rng)
        n_t = sizes[t - 1]
        present = pi > 0
        var = np.where(present, params.sigma2 / np.where(present, n_t * pi, 1.0), 0.0)
        x = np.where(present, params.mu + np.sqrt(var) * rng.standard_normal(K), 0.0)
        batches.append(BatchRecord(t, pi, pi.copy(), n_t * pi, x))
        if last:
            break
    eta = select_target(target, K, W)
    return Trajectory(
        params, tuple(batches), eta, params.sigma2.copy(), "exact",
        tuple(winners) if policy.kind == "egreedy" else None,
    )


def run_experiment_finite(
    params: ModelParams,
    outcome_law: OutcomeLaw,
    policy: PolicySpec,
    stopping: StoppingSpec,
    target: TargetSpec,
    rng: RngStream,
) -> Trajectory:
    """Simulate individual assignments and outcomes batch by batch.

    Policies see count-weighted cumulative means and the running variance
    estimates; empty batch-arm means are zero.
    """
    _check_horizon(params, stopping)
    K, sizes = params.K, params.batch_sizes
    cum_n = np.zeros(K)
    cum_sum = np.zeros(K)
    cum_sq = np.zeros(K)
    batches: list[BatchRecord] = []
    winners: list[int] = []
    W = W_prev = sigma2_hat = None
    for t in range(1, params.T0 + 1):
        last = stop_decision(stopping, t)
        if t == 1:
            pi = policy.first_batch(K)
        else:
            Omega = sigma2_hat / cum_n
            if policy.kind == "egreedy":
                winners.append(int(np.argmax(W)))
            pi = _next_probs(policy, W, Omega, last, rng)
            W_prev = W
        n_t = int(sizes[t - 1])
        arms = rng.choice(K, size=n_t, p=pi)
        y = outcome_law.draw(rng, arms, params)
        counts = np.bincount(arms, minlength=K).astype(float)
        sums = np.bincount(arms, weights=y, minlength=K)
        sumsq = np.bincount(arms, weights=y * y, minlength=K)
        x = sums / np.maximum(counts, 1.0)
        batches.append(BatchRecord(t, pi, counts / n_t, counts, x, sumsq))
        cum_n += counts
        cum_sum += sums
        cum_sq += sumsq
        if np.any(cum_n == 0):
            raise EmptyArm(f"an arm has no observations after batch {t}")
        W = cum_sum / cum_n
        sigma2_hat = estimate_arm_variance(cum_sq, cum_n, W)
        if last:
            break
    eta = select_target(target, K, W_prev)
    return Trajectory(
        params, tuple(batches), eta, sigma2_hat, "finite",
        tuple(winners) if policy.kind == "egreedy" else None,
    )


def dump_lines(traj: Trajectory, rep_id: int) -> list[str]:
    """Per-batch CSV rows: rep_id, t, then K columns each of pi, pi_hat, counts, x."""
    lines = []
    for b in traj.batches:
        cols = [str(rep_id), str(b.t)]
        for arr in (b.pi, b.pi_hat, b.counts, b.x):
            cols.extend(repr(float(v)) for v in arr)
        lines.append(",".join(cols))
    return lines


def dump_header(K: int) -> str:
    cols = ["rep_id", "t"]
    for name in ("pi", "pi_hat", "counts", "x"):
        cols.extend(f"{name}{k}" for k in range(1, K + 1))
    return ",".join(cols)
