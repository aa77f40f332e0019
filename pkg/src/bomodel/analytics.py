"""Closed-form coefficients and bounds for degree and edge statistics.

All Gamma and Beta ratios are evaluated in log space, so degrees up to
10^6 and beyond neither overflow nor underflow before the final ``exp``.

Notation: ``D = d - k + k*a`` is the shifted degree that appears in every
formula below.
"""

import threading
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class Coefficients:
    A: float
    B: float
    theta_lo: float
    theta_hi: float


# Stirling remainder ln G(x) - (x - 1/2) ln x + x - ln sqrt(2 pi) = sum_n B_2n / (2n (2n-1) x^(2n-1))
_STIRLING = np.array([1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156,
                      -3617 / 122400])
_LN_SQRT_2PI = 0.5 * np.log(2 * np.pi)


def _stirling_rest(x):
    # accurate to ~1e-17 for x >= 10
    z = 1 / (x * x)
    s = np.zeros_like(x)
    for c in _STIRLING[::-1]:
        s = s * z + c
    return s / x


def log_beta(x, y):
    """ln B(x, y) for positive ``x``, ``y`` (scalars or arrays).

    scipy's ``betaln`` loses up to ~1e-10 relative accuracy when one argument
    is large, so large arguments go through the Stirling remainder and
    ``log1p`` instead of differences of large log-gammas.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise ValueError("log_beta needs positive arguments")
    p, q = np.minimum(x, y), np.maximum(x, y)
    s = p + q
    with np.errstate(all="ignore"):
        qs = np.maximum(q, 10.0)
        ps = np.maximum(p, 10.0)
        ss = ps + qs
        both_small = gammaln(p) + gammaln(q) - gammaln(s)
        one_large = (gammaln(p) + _stirling_rest(qs) - _stirling_rest(qs + p) + p - p * np.log(s)
                     + (q - 0.5) * np.log1p(-p / s))
        both_large = (-0.5 * np.log(qs) + _LN_SQRT_2PI + _stirling_rest(ps) + _stirling_rest(qs)
                      - _stirling_rest(ss) + (ps - 0.5) * np.log(ps / ss) + qs * np.log1p(-ps / ss))
    out = np.where(q < 10, both_small, np.where(p < 10, one_large, both_large))
    return out.item() if out.ndim == 0 else out


def _ak(params):
    return float(params.a), params.k


def coefficients(params):
    a, k = _ak(params)
    ka = k * a
    log_A = np.log(a + 1) + gammaln(ka + a + 1) - gammaln(ka)
    log_B = np.log(a) + gammaln(ka + 1) + gammaln(2 * ka + a + 3) - gammaln(2 * ka + 2) - gammaln(ka + a + 2)
    B = float(np.exp(log_B))
    return Coefficients(A=float(np.exp(log_A)), B=B, theta_lo=-4 + 2 / (1 + ka), theta_hi=B)


def shifted(d, params):
    a, k = _ak(params)
    return np.asarray(d, dtype=float) - k + k * a


def _scalar(out):
    return np.asarray(out).item() if np.ndim(out) == 0 else out


def coeff_c(d, params):
    """Limit fraction of nodes of degree ``d``: B(d-k+ka, a+2) / B(ka, a+1), 0 below k."""
    a, k = _ak(params)
    d = np.asarray(d, dtype=float)
    D = np.maximum(d - k + k * a, k * a)
    out = np.exp(log_beta(D, a + 2) - log_beta(k * a, a + 1))
    return _scalar(np.where(d >= k, out, 0.0))


def coeff_c_asymptotic(d, params):
    """A * d^(-2-a), the large-d form of :func:`coeff_c`."""
    a, _ = _ak(params)
    d = np.asarray(d, dtype=float)
    return _scalar(coefficients(params).A * d ** (-2 - a))


def expected_R_main(d, t, params):
    """Main term c(d)*t of E R(d, t)."""
    return _scalar(coeff_c(d, params) * np.asarray(t, dtype=float))


def concentration_window(d, t, psi, params):
    """Half-width (sqrt(d^(-a-2) t) + 1/d) * psi of the degree-count concentration band."""
    a, _ = _ak(params)
    d = np.asarray(d, dtype=float)
    return _scalar((np.sqrt(d ** (-a - 2) * t) + 1 / d) * psi)


def cov_bound(d1, d2, t, params, scale=1.0):
    """scale * ((d1^(-2-a) + d2^(-2-a)) t + 1/(d1 d2)).

    The covariance of R(d1, t) and R(d2, t) is of this order; ``scale`` stands
    in for the unknown constant.
    """
    a, _ = _ak(params)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    return _scalar(scale * ((d1 ** (-2 - a) + d2 ** (-2 - a)) * t + 1 / (d1 * d2)))


def _check_degrees(params, *ds):
    for d in ds:
        if np.any(np.asarray(d) < params.k):
            raise ValueError(f"degrees must be >= k={params.k}")


def coeff_c2_c3(d1, d2, params):
    """The two gamma products bracketing c_X; both obey the interior c_X recurrence."""
    _check_degrees(params, d1, d2)
    a, _ = _ak(params)
    D1, D2 = shifted(d1, params), shifted(d2, params)
    common = gammaln(D1) + gammaln(D2) - gammaln(D1 + D2 + a + 2)
    c2 = np.exp(common + gammaln(D1 + D2 + 3) - gammaln(D1 + 2) - gammaln(D2 + 2))
    c3 = np.exp(common + gammaln(D1 + D2 + 1) - gammaln(D1 + 1) - gammaln(D2 + 1))
    return _scalar(c2), _scalar(c3)


def cX_bounds(d1, d2, params):
    """Lower and upper bounds on c_X(d1, d2) from the theta range."""
    co = coefficients(params)
    a, k = _ak(params)
    c2, c3 = coeff_c2_c3(d1, d2, params)
    scale = co.A * k * a
    return _scalar(scale * (c2 + co.theta_lo * c3)), _scalar(scale * (c2 + co.theta_hi * c3))


def cX_asymptotic(d1, d2, params):
    """A k a (d1+d2)^(1-a) / (d1^2 d2^2)."""
    _check_degrees(params, d1, d2)
    a, k = _ak(params)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    return _scalar(coefficients(params).A * k * a * (d1 + d2) ** (1 - a) / (d1 ** 2 * d2 ** 2))


@numba.njit(cache=True)
def _cx_fill(grid, c, D, a, ka, start):
    # grid[i, j] is c_X(k+i, k+j); rows below ``start`` are already filled
    n = grid.shape[0]
    for i in range(n):
        for j in range(n):
            if i < start and j < start:
                continue
            if i == 0 and j == 0:
                grid[i, j] = 0.0
            elif j == 0:
                grid[i, j] = (D[i] - 1) * (grid[i - 1, 0] + c[i - 1]) / (D[i] + ka + a + 1)
            elif i == 0:
                grid[i, j] = (D[j] - 1) * (grid[0, j - 1] + c[j - 1]) / (D[j] + ka + a + 1)
            else:
                grid[i, j] = ((D[i] - 1) * grid[i - 1, j] + (D[j] - 1) * grid[i, j - 1]) \
                    / (D[i] + D[j] + a + 1)


class CXTable:
    """Memoised c_X grid for one (a, k), grown on demand.

    Readers only ever see fully computed grids: a larger grid is built aside
    and swapped in under the lock.
    """

    def __init__(self, params, cap=4096):
        self.params = params
        self.cap = cap
        self._grid = np.zeros((0, 0))
        self._lock = threading.Lock()

    def grid(self, d_max):
        k = self.params.k
        n = int(d_max) - k + 1
        if n > self.cap:
            raise MemoryError(f"c_X grid of {n} rows exceeds the cap of {self.cap}")
        grid = self._grid
        if grid.shape[0] >= n:
            return grid
        with self._lock:
            if self._grid.shape[0] >= n:
                return self._grid
            old = self._grid
            size = max(n, 2 * old.shape[0])
            size = min(size, self.cap)
            a, _ = _ak(self.params)
            d = np.arange(k, k + size)
            new = np.zeros((size, size))
            new[:old.shape[0], :old.shape[0]] = old
            _cx_fill(new, np.asarray(coeff_c(d, self.params), dtype=float), shifted(d, self.params),
                     a, k * a, old.shape[0])
            self._grid = new
            return new

    def __call__(self, d1, d2):
        d1 = np.asarray(d1)
        d2 = np.asarray(d2)
        _check_degrees(self.params, d1, d2)
        grid = self.grid(max(np.max(d1), np.max(d2)))
        k = self.params.k
        return _scalar(grid[d1 - k, d2 - k])


_tables = {}
_tables_lock = threading.Lock()


def cx_table(params):
    key = (float(params.a), params.k)
    with _tables_lock:
        if key not in _tables:
            _tables[key] = CXTable(params)
        return _tables[key]


def coeff_cX(d1, d2, params):
    """Limit coefficient of E X(d1, d2, t) / t, from its defining recurrence."""
    return cx_table(params)(d1, d2)


def azuma_tail_bound(c):
    """2 exp(-c^2 / 8): tail bound on |X - EX| >= c (d1+d2) sqrt(kt)."""
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("c must be positive")
    return _scalar(2 * np.exp(-c ** 2 / 8))


def tail_mass(d0, params):
    """sum_{d >= d0} c(d) = B(d0-k+ka, a+1) / B(ka, a+1), by telescoping B(x, b+1) = B(x, b) - B(x+1, b)."""
    a, k = _ak(params)
    d0 = np.maximum(np.asarray(d0, dtype=float), k)
    return _scalar(np.exp(log_beta(d0 - k + k * a, a + 1) - log_beta(k * a, a + 1)))


def tail_sum_degree(params, tol=1e-8):
    """Smallest ``d`` with sum_{d' > d} c(d') <= ``tol``."""
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    k = params.k
    lo, hi = k, 2 * k
    while tail_mass(hi + 1, params) > tol:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_mass(mid + 1, params) > tol:
            lo = mid
        else:
            hi = mid
    return hi if tail_mass(lo + 1, params) > tol else lo
