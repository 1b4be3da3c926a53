"""Self-contained special functions: Gamma, Bessel J of real order, Y and H1 of integer order.

Every function here is pure and deterministic. NaN arguments are rejected rather
than propagated.

Algorithms
----------
gamma
    Lanczos approximation (g = 7, nine coefficients), relative error ~1e-15 on
    (0, 171].
bessel_j
    Ascending power series for ``z <= max(12, 4*sqrt(mu + 1))``, where the
    cancellation between terms costs at most ~5 digits. Beyond that, Miller's
    backward recurrence on the orders ``nu + j`` (``nu`` the fractional part of
    ``mu``), normalised by the Neumann sum
    ``(z/2)**nu = sum_k (nu + 2k) Gamma(nu + k) / k! * J_{nu+2k}(z)``.
bessel_y, hankel1
    Y0 from the Neumann series in the even-order J's, Y1 from its derivative,
    higher orders by the (stable) upward recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ExponentOverflowError

__all__ = [
    "SeriesPolicy",
    "DEFAULT_POLICY",
    "gamma",
    "log_gamma",
    "bessel_j",
    "bessel_j_deriv",
    "bessel_y",
    "hankel1",
    "hankel1_deriv",
    "jn_sequence",
]

EULER_GAMMA = 0.57721566490153286061

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_GAMMA_MAX_ARG = 171.62


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation control for power series.

    A series stops once a term falls below ``max(abs_tol, rel_tol * |partial sum|)``.
    Exhausting ``max_terms`` first raises :class:`ConvergenceError`.
    """

    max_terms: int = 500
    abs_tol: float = 0.0
    rel_tol: float = 1e-17

    def __post_init__(self):
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValueError("max_terms must be a positive integer")
        for name in ("abs_tol", "rel_tol"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be finite and non-negative")


DEFAULT_POLICY = SeriesPolicy()


def _check_real(x, name):
    if isinstance(x, complex):
        raise DomainError(f"{name} must be real")
    if math.isnan(x):
        raise DomainError(f"{name} is NaN")


def _lanczos_sum(x):
    # x here is the shifted argument z - 1
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    return acc


def gamma(x: float) -> float:
    """Gamma function for real ``x > 0``.

    Raises
    ------
    DomainError
        If ``x <= 0`` or NaN.
    ExponentOverflowError
        If the result exceeds the double-precision range (``x > 171.62``).
    """
    x = float(x)
    _check_real(x, "x")
    if x <= 0:
        raise DomainError("gamma is only defined here for x > 0")
    if x > _GAMMA_MAX_ARG:
        raise ExponentOverflowError(f"gamma({x}) overflows double precision")
    if x < 0.5:
        return gamma(x + 1.0) / x
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    half = t ** ((xm + 0.5) / 2.0)
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * _lanczos_sum(xm)


def log_gamma(x: float) -> float:
    """Natural logarithm of Gamma for ``x > 0``; never overflows."""
    x = float(x)
    _check_real(x, "x")
    if x <= 0:
        raise DomainError("log_gamma is only defined here for x > 0")
    if x < 0.5:
        return log_gamma(x + 1.0) - math.log(x)
    xm = x - 1.0
    t = xm + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (xm + 0.5) * math.log(t) - t + math.log(_lanczos_sum(xm))


# ---------------------------------------------------------------------------
# Bessel J
# ---------------------------------------------------------------------------


def _series_j(mu, z, policy):
    """Ascending series, vectorised over a float array ``z``."""
    half = 0.5 * z
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        if mu == 0:
            term = np.ones_like(z)
        else:
            term = np.where(z > 0, np.exp(mu * np.log(np.where(z > 0, half, 1.0)) - log_gamma(mu + 1.0)), 0.0)
    total = term.copy()
    q = -half * half
    for n in range(1, policy.max_terms + 1):
        term = term * q / (n * (n + mu))
        total = total + term
        thresh = np.maximum(policy.abs_tol, policy.rel_tol * np.abs(total))
        if np.all(np.abs(term) <= thresh):
            return total
    raise ConvergenceError(f"Bessel series for order {mu} did not converge in {policy.max_terms} terms")


def _miller_orders(nu, top, z):
    """Unnormalised backward recurrence values f_j ~ J_{nu+j}(z), j = 0..top."""
    f = np.zeros(top + 2)
    f[top + 1] = 0.0
    f[top] = 1e-30
    for j in range(top, 0, -1):
        f[j - 1] = 2.0 * (nu + j) / z * f[j] - f[j + 1]
        if abs(f[j - 1]) > 1e250:
            f *= 1e-250
    return f[: top + 1]


def _neumann_normalisation(nu, f, z):
    """Return the factor that turns ``f`` into J values, via the Neumann sum identity."""
    total = 0.0
    if nu == 0.0:
        total = f[0] + 2.0 * np.sum(f[2::2])
        return 1.0 / total
    coef = gamma(nu + 1.0)  # k = 0: nu * Gamma(nu) / 0!
    ratio = gamma(nu)  # Gamma(nu + k) / k!
    for k in range(0, (len(f) - 1) // 2 + 1):
        if k > 0:
            ratio *= (nu + k - 1.0) / k
            coef = (nu + 2.0 * k) * ratio
        total += coef * f[2 * k]
    return math.exp(nu * math.log(0.5 * z)) / total


def _miller_start(order, z):
    top = int(max(order, z) + 30 + 8 * math.sqrt(max(order, z)))
    return top + (top % 2)


def _miller_j(mu, z):
    n_int = int(math.floor(mu))
    nu = mu - n_int
    top = _miller_start(n_int, z)
    f = _miller_orders(nu, top, z)
    return f[n_int] * _neumann_normalisation(nu, f, z)


def bessel_j(mu, z, policy: SeriesPolicy = DEFAULT_POLICY):
    """Bessel function of the first kind J_mu(z) for real order ``mu > -1`` and ``z >= 0``.

    Negative orders need ``z > 0`` (J_mu is singular at the origin there).
    ``z`` may be a scalar or an array; the return type follows ``z``.
    """
    mu = float(mu)
    _check_real(mu, "mu")
    if mu <= -1:
        raise DomainError("order mu must exceed -1")
    scalar = np.ndim(z) == 0
    za = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(np.isnan(za)):
        raise DomainError("z contains NaN")
    if np.any(za < 0):
        raise DomainError("z must be non-negative")
    if mu < 0 and np.any(za == 0):
        raise DomainError("J_mu is singular at z = 0 for negative order")
    out = np.empty_like(za)
    cut = max(12.0, 4.0 * math.sqrt(mu + 1.0))
    small = za <= cut
    if np.any(small):
        out[small] = _series_j(mu, za[small], policy)
    for idx in np.flatnonzero(~small):
        x = float(za[idx])
        if mu < 0:
            # one downward step from non-negative orders; stable for z above the cut
            out[idx] = 2.0 * (mu + 1.0) / x * _miller_j(mu + 1.0, x) - _miller_j(mu + 2.0, x)
        else:
            out[idx] = _miller_j(mu, x)
    return float(out[0]) if scalar else out


def bessel_j_deriv(mu, z, policy: SeriesPolicy = DEFAULT_POLICY):
    """Derivative J'_mu(z) = (mu/z) J_mu(z) - J_{mu+1}(z)."""
    mu = float(mu)
    scalar = np.ndim(z) == 0
    za = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(za == 0) and mu < 1:
        raise DomainError("J'_mu is not evaluated at z = 0 for mu < 1")
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(za > 0, mu / np.where(za > 0, za, 1.0) * bessel_j(mu, za, policy), 0.0)
    val = val - bessel_j(mu + 1.0, za, policy)
    if mu == 1.0:
        val = np.where(za == 0, 0.5, val)
    return float(val[0]) if scalar else val


def jn_sequence(nmax: int, z: float) -> np.ndarray:
    """Return J_0(z), ..., J_nmax(z) from a single normalised Miller sweep."""
    z = float(z)
    _check_real(z, "z")
    if z <= 0:
        raise DomainError("jn_sequence needs z > 0")
    top = _miller_start(nmax, z)
    f = _miller_orders(0.0, top, z)
    return f[: nmax + 1] * _neumann_normalisation(0.0, f, z)


# ---------------------------------------------------------------------------
# Bessel Y and Hankel H1, integer order
# ---------------------------------------------------------------------------


def _y0_y1(z):
    seq_len = _miller_start(2, z)
    j = jn_sequence(seq_len, z)
    lg = math.log(0.5 * z) + EULER_GAMMA
    kmax = (len(j) - 2) // 2
    ks = np.arange(1, kmax + 1)
    signs = np.where(ks % 2 == 0, 1.0, -1.0)
    y0 = (2.0 / math.pi) * (lg * j[0] - 2.0 * np.sum(signs * j[2 * ks] / ks))
    y1 = (2.0 / math.pi) * (lg * j[1] - j[0] / z + np.sum(signs * (j[2 * ks - 1] - j[2 * ks + 1]) / ks))
    return y0, y1, j


def bessel_y(n: int, z: float) -> float:
    """Bessel function of the second kind Y_n(z) for integer ``n >= 0`` and ``z > 0``."""
    if int(n) != n or n < 0:
        raise DomainError("order must be a non-negative integer")
    z = float(z)
    _check_real(z, "z")
    if z <= 0:
        raise DomainError("Y_n has a logarithmic singularity at z = 0")
    y0, y1, _ = _y0_y1(z)
    if n == 0:
        return float(y0)
    prev, cur = y0, y1
    for m in range(1, int(n)):
        prev, cur = cur, 2.0 * m / z * cur - prev
    if not math.isfinite(cur):
        raise ExponentOverflowError(f"Y_{n}({z}) overflows")
    return float(cur)


def hankel1(n: int, z: float) -> complex:
    """Hankel function of the first kind H1_n(z) = J_n(z) + i Y_n(z)."""
    if int(n) != n or n < 0:
        raise DomainError("order must be a non-negative integer")
    z = float(z)
    _check_real(z, "z")
    if z <= 0:
        raise DomainError("H1_n is singular for z <= 0")
    return complex(bessel_j(int(n), z), bessel_y(int(n), z))


def hankel1_deriv(n: int, z: float) -> complex:
    """d/dz H1_n(z)."""
    if n == 0:
        return -hankel1(1, z)
    return hankel1(n - 1, z) - n / z * hankel1(n, z)
