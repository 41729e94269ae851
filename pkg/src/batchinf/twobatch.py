"""Two-batch, two-arm model: decomposing the ZJM statistic into sufficient statistics plus noise.

Model: ``X_1 ~ N(mu, 2 I)``; the second-batch probability of arm 1 is
``Pi = pi(Delta)`` with ``Delta = X_11 - X_12``; ``X_21 ~ N(mu_1, 1/Pi)``
and ``X_22 ~ N(mu_2, 1/(1 - Pi))``. The ZJM statistic for arm 1 is
``Z = X_11 / sqrt(2) + sqrt(Pi) X_21`` and ``(U, V, Delta)`` with
``U = X_11/2 + Pi X_21``, ``V = X_12/2 + (1-Pi) X_22`` is sufficient.

Coefficients of ``E[Z | Delta, U, V]`` are obtained by Gaussian
conditioning on the joint law of the centred statistics given ``Delta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .errors import BadPi
from .stochastics import RngStream

A0 = 1.0 / (2.0 * np.sqrt(2.0))


@dataclass(frozen=True)
class TwoBatchCoeffs:
    """``Z = a Delta + b V + c U + sigma xi`` with ``xi`` independent noise."""

    a: float
    b: float
    c: float
    sigma: float


def conditional_covariance(pi: float) -> np.ndarray:
    """Covariance of ``(Z, U, V)`` minus their ``Delta`` parts, given ``Delta``.

    The three statistics load on ``(mean of X_1, X_21, X_22)``, which given
    ``Delta`` are independent with variances ``1, 1/pi, 1/(1-pi)``.
    """
    load = np.array([
        [1 / np.sqrt(2), np.sqrt(pi), 0.0],
        [0.5, pi, 0.0],
        [0.5, 0.0, 1 - pi],
    ])
    var = np.array([1.0, 1 / pi, 1 / (1 - pi)])
    return (load * var) @ load.T


def _coeffs(pi):
    """Vectorized conditioning over an array of probabilities."""
    pi = np.asarray(pi, dtype=float)
    czz = 1.5
    czu = A0 + np.sqrt(pi)
    czv = np.full_like(pi, A0)
    cuu = 0.25 + pi
    cvv = 1.25 - pi
    cuv = 0.25
    det = cuu * cvv - cuv**2
    c = (cvv * czu - cuv * czv) / det
    b = (cuu * czv - cuv * czu) / det
    sigma2 = np.maximum(czz - (c * czu + b * czv), 0.0)
    # centred U is U - Delta/4 and centred V is V + Delta/4
    a = A0 - c / 4 + b / 4
    return a, b, c, np.sqrt(sigma2)


def zjm_decompose(pi: float) -> TwoBatchCoeffs:
    if not 0 < pi < 1:
        raise BadPi(f"pi must lie in (0, 1), got {pi}")
    C = conditional_covariance(pi)
    beta = np.linalg.solve(C[1:, 1:], C[1:, 0])
    c, b = beta
    sigma2 = max(C[0, 0] - C[0, 1:] @ beta, 0.0)
    return TwoBatchCoeffs(float(A0 - c / 4 + b / 4), float(b), float(c), float(np.sqrt(sigma2)))


def printed_coeffs(pi: float) -> TwoBatchCoeffs:
    """Reference closed forms with a constant Delta coefficient and a variant noise denominator.

    Kept for comparison only; ``b`` and ``c`` agree with ``zjm_decompose``, ``a`` and ``sigma`` do not.
    """
    r = np.sqrt(pi)
    den = 1 + 4 * pi - 4 * pi**2
    b = (np.sqrt(2) * pi - r) / den
    c = (np.sqrt(2) + 5 * r - np.sqrt(2) * pi - 4 * pi**1.5) / den
    s2 = (1 + 2 * pi - 2 * np.sqrt(2 * pi)) * (1 - pi) / (1 + 4 * pi - pi**2)
    return TwoBatchCoeffs(A0, float(b), float(c), float(np.sqrt(max(s2, 0.0))))


PiPolicy = float | Callable[[np.ndarray], np.ndarray]


def _policy(pi_policy: PiPolicy, delta: np.ndarray) -> np.ndarray:
    if callable(pi_policy):
        pi = np.asarray(pi_policy(delta), dtype=float)
    else:
        pi = np.full_like(delta, float(pi_policy))
    if np.any((pi <= 0) | (pi >= 1)):
        raise BadPi("policy must return probabilities in (0, 1)")
    return pi


def threshold_policy(low: float, high: float) -> Callable[[np.ndarray], np.ndarray]:
    """Give arm 1 probability ``high`` when it leads after batch one, else ``low``."""
    return lambda delta: np.where(delta > 0, high, low)


def simulate(mu, pi_policy: PiPolicy, reps: int, rng: RngStream) -> dict[str, np.ndarray]:
    mu = np.asarray(mu, dtype=float)
    x1 = mu + np.sqrt(2.0) * rng.standard_normal((reps, 2))
    delta = x1[:, 0] - x1[:, 1]
    pi = _policy(pi_policy, delta)
    x21 = mu[0] + rng.standard_normal(reps) / np.sqrt(pi)
    x22 = mu[1] + rng.standard_normal(reps) / np.sqrt(1 - pi)
    return {
        "delta": delta,
        "pi": pi,
        "Z": x1[:, 0] / np.sqrt(2) + np.sqrt(pi) * x21,
        "U": x1[:, 0] / 2 + pi * x21,
        "V": x1[:, 1] / 2 + (1 - pi) * x22,
    }


@dataclass(frozen=True)
class MSEComparison:
    mse_T0: float
    mse_Tstar: float
    se_diff: float
    noise_term: float  # Monte Carlo mean of q(Pi)^2, the predicted gap


def rao_blackwell_mse_sim(mu, pi_policy: PiPolicy, reps: int, rng: RngStream) -> MSEComparison:
    """MSE of the ZJM point estimate against its conditional expectation given ``(U, V, Delta)``."""
    d = simulate(mu, pi_policy, reps, rng)
    a, b, c, sigma = _coeffs(d["pi"])
    scale = 1 / np.sqrt(2) + np.sqrt(d["pi"])
    t0 = d["Z"] / scale
    tstar = (a * d["delta"] + b * d["V"] + c * d["U"]) / scale
    mu1 = float(np.asarray(mu)[0])
    e0 = (t0 - mu1) ** 2
    e1 = (tstar - mu1) ** 2
    diff = e0 - e1
    return MSEComparison(
        float(e0.mean()),
        float(e1.mean()),
        float(diff.std(ddof=1) / np.sqrt(reps)),
        float(np.mean((sigma / scale) ** 2)),
    )


@dataclass(frozen=True)
class RecognizableSubset:
    p_cover_given_A: float
    se_cover_given_A: float
    p_A: float
    n_A: int
    coverage: float


def recognizable_subset_sim(mu, alpha: float, pi_policy: PiPolicy, reps: int, rng: RngStream) -> RecognizableSubset:
    """Coverage of the ZJM interval on the event where the injected noise is large.

    The event is ``|xi| > sqrt(2) z_{1-alpha/2} / sigma(Pi)`` with ``Pi != 1/2``,
    where ``xi`` is recovered from the decomposition.
    """
    d = simulate(mu, pi_policy, reps, rng)
    a, b, c, sigma = _coeffs(d["pi"])
    z = float(norm.ppf(1 - alpha / 2))
    scale = 1 / np.sqrt(2) + np.sqrt(d["pi"])
    covered = np.abs(d["Z"] - scale * float(np.asarray(mu)[0])) <= np.sqrt(2) * z
    active = (sigma > 0) & (d["pi"] != 0.5)
    xi = np.zeros(reps)
    xi[active] = (d["Z"] - a * d["delta"] - b * d["V"] - c * d["U"])[active] / sigma[active]
    event = np.zeros(reps, dtype=bool)
    event[active] = np.abs(xi[active]) > np.sqrt(2) * z / sigma[active]
    n_A = int(event.sum())
    p = float(covered[event].mean()) if n_A else float("nan")
    se = float(np.sqrt(p * (1 - p) / n_A)) if n_A else float("nan")
    return RecognizableSubset(p, se, n_A / reps, n_A, float(covered.mean()))
