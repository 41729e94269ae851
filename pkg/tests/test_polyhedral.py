from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import norm, ortho_group

from batchinf.errors import SingularStack, ZeroProbability
from batchinf.inference.polyhedral import (
    helmert_rows,
    polyhedral_ci,
    polyhedral_inference,
    polyhedral_test,
    polyhedral_transform,
    reconstruct,
)
from batchinf.model import ModelParams, complete_basis
from batchinf.policies import Polyhedron, PolicySpec, StoppingSpec, TargetSpec, egreedy_polyhedron
from batchinf.simulator import run_experiment_gaussian
from batchinf.stochastics import GibbsConfig, seeded_stream

from conftest import make_traj, random_design

Z975 = norm.ppf(0.975)
FAST = GibbsConfig(n_draws=2000, burn_in=200)


def empty(T, K):
    return Polyhedron(np.zeros((0, T * K)), np.zeros(0), ())


def first_winner(K=2, T=2):
    # arm 1 beats arm 2 in batch 1
    A = np.zeros((1, T * K))
    A[0, :2] = [-1.0, 1.0]
    return Polyhedron(A, np.zeros(1), ((1, 0, 1),))


def egreedy_traj(seed):
    params = ModelParams([0.0, 0.1, -0.1], [1, 1, 1], [200] * 4)
    return run_experiment_gaussian(
        params, PolicySpec("egreedy"), StoppingSpec(horizon=4), TargetSpec(), seeded_stream(seed, 0)
    )


def test_helmert_rows_orthonormal():
    for T in range(2, 7):
        H = helmert_rows(T)
        assert np.allclose(H @ H.T, np.eye(T - 1))
        assert np.allclose(H.sum(axis=1), 0)


def test_scale_for_diagonal_information():
    # precisions n pi / sigma2 = (2, 3)
    tr = make_traj([[0.2, 0.8]], [[0.4, -0.1]], sigma2=[1.0, 8 / 3], sizes=[10])
    pr = polyhedral_transform(tr, [1, 0], empty(1, 2))
    assert pr.c == pytest.approx(2.0)
    assert pr.sd1 == pytest.approx(1 / np.sqrt(2))


def test_pilot_is_gls_projection():
    rng = np.random.default_rng(31)
    for _ in range(50):
        tr = random_design(rng)
        pr = polyhedral_transform(tr, tr.eta, empty(tr.T, tr.K))
        P = tr.precisions()
        S = (P * tr.means()).sum(axis=0)
        assert pr.z1_obs - pr.offset == pytest.approx(tr.eta @ (S / P.sum(axis=0)), abs=1e-8)


def test_reconstruction_identity():
    rng = np.random.default_rng(32)
    for _ in range(50):
        tr = random_design(rng)
        assert np.abs(reconstruct(tr) - tr.means().ravel()).max() < 1e-8


def test_constraints_are_an_affine_reparametrization():
    for seed in range(20):
        tr = egreedy_traj(seed)
        poly = egreedy_polyhedron(tr)
        pr = polyhedral_transform(tr, tr.eta, poly)
        lhs = pr.M @ pr.observed() - pr.m
        assert np.allclose(lhs, poly.A @ tr.means().ravel() - poly.b, atol=1e-8)
        assert np.all(lhs <= 1e-8)


def completion_gap(seed=3):
    """Largest endpoint change, in units of 1/sqrt(c), under a rotated choice of completions."""
    tr = egreedy_traj(seed)
    T, K = tr.T, tr.K
    poly = egreedy_polyhedron(tr)
    base = polyhedral_transform(tr, tr.eta, poly)
    Q = ortho_group.rvs((T - 1) * K, random_state=1)
    Q2 = ortho_group.rvs(K - 1, random_state=2)
    g_perp = Q @ np.kron(helmert_rows(T), np.eye(K))
    eta_perp = Q2 @ complete_basis(tr.eta)
    rot = polyhedral_transform(tr, tr.eta, poly, eta_perp=eta_perp, g_perp=g_perp)
    a = polyhedral_ci(base, 0.05, FAST, seeded_stream(4, 0))
    b = polyhedral_ci(rot, 0.05, FAST, seeded_stream(4, 0))
    return max(abs(a.lo - b.lo), abs(a.hi - b.hi), abs(a.estimate - b.estimate)) / base.sd1


def test_completion_invariance():
    assert completion_gap() < 1e-6


def _rejection_rate(constrained, shift=0.0, reps=2000, seed=40):
    pi = np.array([[0.5, 0.5], [0.3, 0.7]])
    sizes = np.array([100, 100])
    mu = np.array([0.0, 0.1])
    sd = np.sqrt(1.0 / (sizes[:, None] * pi))
    poly = first_winner() if constrained else empty(2, 2)
    rng = np.random.default_rng(seed)
    rejections = 0
    for r in range(reps):
        while True:
            x = mu + sd * rng.standard_normal(pi.shape)
            if np.all(poly.A @ x.ravel() <= poly.b):
                break
        tr = make_traj(pi, x, sizes=sizes, mu=mu)
        pr = polyhedral_transform(tr, [1, 0], poly)
        tau0 = mu[0] + shift * pr.sd1
        rejections += polyhedral_test(pr, tau0, 0.05, FAST, seeded_stream(seed, r))[0]
    return rejections / reps


@pytest.mark.parametrize("constrained", [False, True])
def test_rejection_rate_at_truth(constrained):
    assert abs(_rejection_rate(constrained) - 0.05) < 0.015


def test_power_far_from_truth():
    assert _rejection_rate(False, shift=10.0, reps=200) > 0.99


def test_unconstrained_interval_matches_gaussian():
    rng = np.random.default_rng(33)
    for r in range(5):
        tr = random_design(rng, T=2, K=2)
        pr = polyhedral_transform(tr, tr.eta, empty(2, 2))
        # 40k draws put the 2.5% quantile's Monte Carlo sd near 0.013 / sqrt(c)
        ci = polyhedral_ci(pr, 0.05, GibbsConfig(n_draws=40_000), seeded_stream(33, r))
        pilot = pr.z1_obs - pr.offset
        tol = 0.05 * pr.sd1
        assert abs(ci.lo - (pilot - Z975 * pr.sd1)) < tol
        assert abs(ci.hi - (pilot + Z975 * pr.sd1)) < tol
        assert abs(ci.estimate - pilot) < tol


def test_endpoints_increase_with_observation():
    tr = egreedy_traj(5)
    pr = polyhedral_transform(tr, tr.eta, egreedy_polyhedron(tr))
    # feasible range of z1 with z2 held at its observed value
    slack = pr.m - pr.M[:, 1:] @ pr.z2_obs
    col = pr.M[:, 0]
    hi = np.min(slack[col > 0] / col[col > 0], initial=np.inf)
    lo = np.max(slack[col < 0] / col[col < 0], initial=-np.inf)
    z1 = np.linspace(max(lo, pr.z1_obs - 2 * pr.sd1), min(hi, pr.z1_obs + 2 * pr.sd1), 7)[1:-1]
    cis = [polyhedral_ci(replace(pr, z1_obs=float(z)), 0.05, FAST, seeded_stream(6, 0)) for z in z1]
    for field in ("lo", "estimate", "hi"):
        vals = [getattr(c, field) for c in cis]
        assert vals == sorted(vals)


def test_interval_nesting_across_levels():
    tr = egreedy_traj(7)
    pr = polyhedral_transform(tr, tr.eta, egreedy_polyhedron(tr))
    wide = polyhedral_ci(pr, 0.05, FAST, seeded_stream(8, 0))
    narrow = polyhedral_ci(pr, 0.2, FAST, seeded_stream(8, 0))
    assert wide.lo <= narrow.lo <= narrow.estimate <= narrow.hi <= wide.hi


def test_inference_deterministic_given_stream():
    tr = egreedy_traj(9)
    a = polyhedral_inference(tr, 0.05, FAST, seeded_stream(1, 1))
    b = polyhedral_inference(tr, 0.05, FAST, seeded_stream(1, 1))
    assert (a.lo, a.estimate, a.hi) == (b.lo, b.estimate, b.hi)


def test_singular_stack():
    tr = random_design(np.random.default_rng(34), T=3, K=2)
    with pytest.raises(SingularStack):
        polyhedral_transform(tr, tr.eta, empty(3, 2), g_perp=np.zeros((4, 6)))


def test_zero_probability_cell():
    tr = make_traj([[0.5, 0.5], [1.0, 0.0]], [[0.1, 0.2], [0.3, 0.0]])
    with pytest.raises(ZeroProbability):
        polyhedral_transform(tr, [1, 0], empty(2, 2))
