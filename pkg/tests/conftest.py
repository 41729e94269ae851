import numpy as np
import pytest

from batchinf.model import BatchRecord, ModelParams, Trajectory


def make_traj(pi, x, sigma2=None, sizes=None, eta=None, mode="exact", winners=None, mu=None):
    """Trajectory built from explicit (T, K) probabilities and means.

    Counts are the expected ``n_t * pi`` so that exact and finite weights agree.
    """
    pi = np.atleast_2d(np.asarray(pi, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    T, K = pi.shape
    sigma2 = np.ones(K) if sigma2 is None else np.asarray(sigma2, dtype=float)
    sizes = np.full(T, 100) if sizes is None else np.asarray(sizes)
    mu = np.zeros(K) if mu is None else mu
    params = ModelParams(mu, sigma2, sizes)
    batches = tuple(
        BatchRecord(t + 1, pi[t], pi[t].copy(), sizes[t] * pi[t], x[t]) for t in range(T)
    )
    if eta is None:
        eta = np.eye(K)[0]
    return Trajectory(params, batches, eta, sigma2, mode, winners)


def random_design(rng, T=None, K=None, floor=0.05):
    """Random positive-probability exact-mode trajectory."""
    T = int(rng.integers(2, 6)) if T is None else T
    K = int(rng.integers(2, 5)) if K is None else K
    pi = rng.dirichlet(np.ones(K), size=T)
    pi = floor + (1 - K * floor) * pi
    sizes = rng.integers(50, 500, size=T)
    sigma2 = rng.uniform(0.5, 2.0, size=K)
    x = rng.normal(size=(T, K))
    eta = rng.normal(size=K)
    eta /= np.linalg.norm(eta)
    return make_traj(pi, x, sigma2, sizes, eta)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
