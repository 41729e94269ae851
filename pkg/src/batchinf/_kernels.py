"""Compiled inner loops: truncated standard normal draws and coordinate Gibbs.

All functions take a ``numpy.random.Generator`` so compiled and pure-Python
callers consume the same stream.
"""

import math

import numpy as np
from numba import njit

_SQRT2 = math.sqrt(2.0)
# beyond this many sd into a tail, inverse-CDF sampling loses accuracy
_TAIL = 5.0

# rational approximation to the normal quantile (P. J. Acklam), refined below
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


@njit(cache=True)
def norm_cdf(x):
    return 0.5 * math.erfc(-x / _SQRT2)


@njit(cache=True)
def norm_sf(x):
    return 0.5 * math.erfc(x / _SQRT2)


@njit(cache=True)
def norm_ppf(p):
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - plow:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # one Halley step brings the error to machine precision
    e = norm_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@njit(cache=True)
def _upper_tail(gen, a, b):
    """Draw from N(0,1) restricted to [a, b] with a >= _TAIL."""
    if b - a < 1.0 / a:
        # narrow slab: uniform proposal, acceptance >= exp(-1 - 1/(2a^2))
        while True:
            z = a + (b - a) * gen.random()
            if gen.random() <= math.exp(0.5 * (a * a - z * z)):
                return z
    rate = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a + gen.exponential() / rate
        if z > b:
            continue
        if gen.random() <= math.exp(-0.5 * (z - rate) ** 2):
            return z


@njit(cache=True)
def trunc_std_normal(gen, a, b):
    """One draw from N(0,1) restricted to [a, b]; infinities allowed."""
    if a >= _TAIL:
        return _upper_tail(gen, a, b)
    if b <= -_TAIL:
        return -_upper_tail(gen, -b, -a)
    u = gen.random()
    if a >= 0.0:
        pa = norm_sf(a)
        pb = norm_sf(b)
        z = -norm_ppf(pa - u * (pa - pb))
    elif b <= 0.0:
        pa = norm_cdf(a)
        pb = norm_cdf(b)
        z = norm_ppf(pa + u * (pb - pa))
    else:
        pa = norm_cdf(a)
        pb = norm_cdf(b)
        z = norm_ppf(pa + u * (pb - pa))
    if z < a:
        z = a
    elif z > b:
        z = b
    return z


@njit(cache=True)
def _slack(A, b, w):
    m, d = A.shape
    out = np.empty(m)
    for i in range(m):
        acc = b[i]
        for j in range(d):
            acc -= A[i, j] * w[j]
        out[i] = acc
    return out


@njit(cache=True)
def gibbs_whitened(gen, A, b, w0, n_draws, burn_in, thin):
    """Coordinate Gibbs for w ~ N(0, I) restricted to A w <= b.

    Each full conditional is a truncated standard normal whose bounds come
    from the rows with a nonzero coefficient on that coordinate. Returns an
    ``(n_draws, d)`` array of retained states.
    """
    m, d = A.shape
    w = w0.copy()
    out = np.empty((n_draws, d))
    slack = _slack(A, b, w)
    total = burn_in + n_draws * thin
    kept = 0
    for sweep in range(total):
        for j in range(d):
            lo = -np.inf
            hi = np.inf
            wj = w[j]
            for i in range(m):
                aij = A[i, j]
                if aij == 0.0:
                    continue
                bound = (slack[i] + aij * wj) / aij
                if aij > 0.0:
                    if bound < hi:
                        hi = bound
                else:
                    if bound > lo:
                        lo = bound
            if lo >= hi:
                # numerically pinned coordinate
                new = wj if lo - hi < 1e-12 else 0.5 * (lo + hi)
            else:
                new = trunc_std_normal(gen, lo, hi)
            delta = new - wj
            if delta != 0.0:
                for i in range(m):
                    slack[i] -= A[i, j] * delta
                w[j] = new
        # recompute to stop rounding drift in the slack
        slack = _slack(A, b, w)
        if sweep >= burn_in and (sweep - burn_in) % thin == thin - 1:
            out[kept] = w
            kept += 1
    return out
