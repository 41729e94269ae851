import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ks_2samp, norm, truncnorm

from batchinf.errors import EmptyInterval, InfeasibleStart, NegativeVariance
from batchinf.stochastics import (
    ConstrainedGaussianProblem,
    draw_mvn_diag,
    draw_truncated_normal,
    gibbs_constrained_gaussian,
    orthant_probability,
    reweighted_cdf,
    seeded_stream,
)

# Frozen once from the shipped PCG64 / SeedSequence construction.
GOLDEN_NORMALS = [-0.21172433835112828, -0.1716122325756144, 0.5981865434321469]
GOLDEN_UNIFORMS = [0.7869160152924622, 0.3501362215136481]


def test_stream_determinism():
    a = seeded_stream(11, 3).standard_normal(100)
    b = seeded_stream(11, 3).standard_normal(100)
    assert np.array_equal(a, b)


def test_stream_independence():
    a = seeded_stream(11, 1).standard_normal(100_000)
    b = seeded_stream(11, 2).standard_normal(100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.02


def test_stream_golden_values():
    assert seeded_stream(2024, 0).standard_normal(3).tolist() == GOLDEN_NORMALS
    assert seeded_stream(2024, 1, 2).random(2).tolist() == GOLDEN_UNIFORMS


def test_mvn_zero_variance_returns_mean():
    mean = np.array([1.5, -2.0])
    assert np.array_equal(draw_mvn_diag(np.random.default_rng(0), mean, [0, 0]), mean)


def test_mvn_moments_and_affine_law():
    rng = np.random.default_rng(1)
    x = np.array([draw_mvn_diag(rng, [0.0], [1.0])[0] for _ in range(20_000)])
    x = np.concatenate([x, draw_mvn_diag(rng, np.zeros(80_000), np.ones(80_000))])
    assert abs(x.mean()) < 0.02
    assert abs(x.var() - 1) < 0.03
    y = draw_mvn_diag(np.random.default_rng(2), np.full(100_000, 3.0), np.full(100_000, 4.0))
    assert abs(y.mean() - 3.0) < 0.03


def test_mvn_negative_variance():
    with pytest.raises(NegativeVariance):
        draw_mvn_diag(np.random.default_rng(0), [0, 0], [1, -1])


def test_orthant_symmetric():
    n = 60_000
    p = orthant_probability(np.zeros(3), np.ones(3), n, np.random.default_rng(0))
    se = np.sqrt((1 / 3) * (2 / 3) / n)
    assert np.all(np.abs(p - 1 / 3) < 3 * se)


def test_orthant_two_arm_reduction():
    n = 60_000
    p = orthant_probability(np.array([1.0, 0.0]), np.ones(2), n, np.random.default_rng(1))
    q = norm.cdf(1 / np.sqrt(2))
    assert q == pytest.approx(0.7602, abs=1e-4)
    assert abs(p[0] - q) < 3 * np.sqrt(q * (1 - q) / n)


@settings(max_examples=50, deadline=None)
@given(
    nu=st.lists(st.floats(-3, 3), min_size=2, max_size=5),
    h=st.floats(-100, 100),
    seed=st.integers(0, 2**32 - 1),
)
def test_orthant_location_invariance_and_simplex(nu, h, seed):
    nu = np.asarray(nu)
    lam = np.linspace(0.5, 1.5, nu.size)
    p0 = orthant_probability(nu, lam, 512, np.random.default_rng(seed))
    p1 = orthant_probability(nu + h, lam, 512, np.random.default_rng(seed))
    assert p0.sum() == 1.0
    assert np.all((p0 >= 0) & (p0 <= 1))
    # shifting can only flip near-ties by rounding
    assert np.abs(p0 - p1).max() <= 2 / 512


def test_truncnorm_untruncated_mean():
    rng = np.random.default_rng(3)
    x = np.array([draw_truncated_normal(rng, 0, 1, -np.inf, np.inf) for _ in range(100_000)])
    assert abs(x.mean()) < 0.02


def test_truncnorm_half_line_mean():
    rng = np.random.default_rng(4)
    x = np.array([draw_truncated_normal(rng, 0, 1, 0, np.inf) for _ in range(100_000)])
    assert abs(x.mean() - np.sqrt(2 / np.pi)) < 0.02


def test_truncnorm_deep_tail():
    rng = np.random.default_rng(5)
    x = np.array([draw_truncated_normal(rng, 0, 1, 8, np.inf) for _ in range(50_000)])
    assert np.all(np.isfinite(x)) and np.all(x >= 8)
    mean = truncnorm.mean(8, np.inf)
    sd = truncnorm.std(8, np.inf)
    assert mean == pytest.approx(8.1210, abs=5e-4)
    assert abs(x.mean() - mean) < 3 * sd / np.sqrt(x.size)


def test_truncnorm_empty_interval():
    with pytest.raises(EmptyInterval):
        draw_truncated_normal(np.random.default_rng(0), 0, 1, 1.0, 1.0)


def truncnorm_cdf_check(seed=20, configs=50, draws=4000):
    """Largest standardized CDF error over random configurations and five quantiles."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(configs):
        mean = rng.uniform(-3, 3)
        sd = rng.uniform(0.2, 3)
        kind = rng.integers(4)
        a, b = np.sort(rng.uniform(-4, 8, size=2))
        lo = -np.inf if kind == 1 else mean + sd * a
        hi = np.inf if kind == 2 else mean + sd * b
        if kind == 3:
            lo, hi = mean + sd * a, mean + sd * (a + 0.01 + 0.1 * rng.random())
        x = np.array([draw_truncated_normal(rng, mean, sd, lo, hi) for _ in range(draws)])
        law = truncnorm((lo - mean) / sd, (hi - mean) / sd, loc=mean, scale=sd)
        for q in (0.1, 0.3, 0.5, 0.7, 0.9):
            point = law.ppf(q)
            se = np.sqrt(q * (1 - q) / draws)
            worst = max(worst, abs(np.mean(x <= point) - q) / se)
    return worst


def test_truncnorm_cdf_random_configurations():
    assert truncnorm_cdf_check() < 3


def _toy_problem(tau=0.2):
    cov = np.array([[1.0, 0.5], [0.5, 2.0]])
    M = np.array([[1.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    m = np.array([1.0, 1.5, 1.0])
    return ConstrainedGaussianProblem(1.0, 0.0, cov, M, m, 0.0, np.zeros(2), tau=tau)


def gibbs_vs_rejection_ks(n_draws=20_000, seed=7):
    """KS distance per coordinate between Gibbs draws and accepted rejection draws."""
    pr = _toy_problem()
    g = gibbs_constrained_gaussian(pr, n_draws, 500, 1, seeded_stream(seed, 0), full=True)
    r = np.random.default_rng(seed + 1)
    chol = np.linalg.cholesky(pr.cov_z2)
    Z = np.column_stack([pr.tau + r.standard_normal(400_000), r.standard_normal((400_000, 2)) @ chol.T])
    keep = (Z @ pr.M.T <= pr.m).all(axis=1)
    return [ks_2samp(g[:, j], Z[keep, j]).statistic for j in range(3)], g


def test_gibbs_matches_rejection_oracle():
    ks, g = gibbs_vs_rejection_ks()
    assert max(ks) < 0.02
    pr = _toy_problem()
    assert np.all(g @ pr.M.T <= pr.m + 1e-8)


def test_gibbs_unconstrained_moments():
    pr = ConstrainedGaussianProblem(4.0, 0.3, np.eye(2), np.zeros((0, 3)), np.zeros(0), 1.0, np.zeros(2), tau=1.0)
    z = gibbs_constrained_gaussian(pr, 40_000, 100, 1, np.random.default_rng(9))
    assert abs(z.mean() - 1.3) < 0.01
    assert abs(z.var() - 0.25) < 0.01


def test_gibbs_half_line():
    pr = ConstrainedGaussianProblem(1.0, 0.0, np.zeros((0, 0)), np.array([[-1.0]]), np.zeros(1), 0.5, np.zeros(0))
    z = gibbs_constrained_gaussian(pr, 40_000, 100, 1, np.random.default_rng(10))
    assert np.all(z >= 0)
    assert abs(z.mean() - np.sqrt(2 / np.pi)) < 0.02


def test_gibbs_infeasible_start():
    pr = ConstrainedGaussianProblem(1.0, 0.0, np.zeros((0, 0)), np.array([[-1.0]]), np.zeros(1), -0.5, np.zeros(0))
    with pytest.raises(InfeasibleStart):
        gibbs_constrained_gaussian(pr, 10, 0, 1, np.random.default_rng(0))


def test_gibbs_deterministic_given_stream():
    pr = _toy_problem()
    a = gibbs_constrained_gaussian(pr, 500, 50, 1, seeded_stream(1, 2))
    b = gibbs_constrained_gaussian(pr, 500, 50, 1, seeded_stream(1, 2))
    assert np.array_equal(a, b)


def test_gibbs_degenerate_z2_direction_held_fixed():
    cov = np.array([[1.0, 1.0], [1.0, 1.0]])  # rank one
    z2_obs = np.array([0.3, 0.1])
    pr = ConstrainedGaussianProblem(1.0, 0.0, cov, np.zeros((0, 3)), np.zeros(0), 0.0, z2_obs)
    z = gibbs_constrained_gaussian(pr, 2000, 0, 1, np.random.default_rng(0), full=True)
    diff = z[:, 1] - z[:, 2]
    assert np.allclose(diff, 0.2, atol=1e-10)


def test_reweight_identity():
    draws = np.random.default_rng(0).normal(size=1000)
    p, ess = reweighted_cdf(draws, 0.3, 2.0, 0.5, 0.5)
    assert p == pytest.approx(np.mean(draws <= 0.3))
    assert ess == pytest.approx(1000)


def test_reweight_unconstrained_cdf():
    c, offset, tau0, tau1, z1 = 4.0, 0.1, 0.0, 0.3, 0.5
    n = 40_000
    draws = tau0 + offset + np.random.default_rng(1).normal(size=n) / np.sqrt(c)
    p, ess = reweighted_cdf(draws, z1, c, tau0, tau1)
    target = norm.cdf((z1 - tau1 - offset) * np.sqrt(c))
    assert abs(p - target) < 3 * np.sqrt(target * (1 - target) / ess)


def test_reweight_ess_collapse():
    draws = np.random.default_rng(2).normal(size=1000)
    _, ess = reweighted_cdf(draws, 0.0, 1.0, 0.0, 500.0)
    assert ess < 1.5


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), z1=st.floats(-2, 2))
def test_reweight_monotone_in_tau(seed, z1):
    draws = np.random.default_rng(seed).normal(size=300)
    taus = np.linspace(-3, 3, 25)
    probs = [reweighted_cdf(draws, z1, 1.5, 0.0, t)[0] for t in taus]
    assert all(a >= b - 1e-12 for a, b in zip(probs, probs[1:]))
