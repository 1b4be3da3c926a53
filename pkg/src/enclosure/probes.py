"""Complex exponential probes ``v_tau(x) = exp(x . c_tau(omega))`` and their Herglotz approximations.

``c_tau(omega) = tau omega + i sqrt(tau^2 + k^2) omega_perp`` satisfies
``c . c = -k^2`` so every probe solves the Helmholtz equation. Probe values grow
like ``exp(tau x . omega)``; every evaluator therefore takes an ``anchor`` and
returns ``exp((x - anchor) . c)`` times the relevant prefactor, i.e. the true
value divided by ``exp(anchor . c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from .errors import DomainError, ExponentOverflowError
from .geometry import Direction
from .specfun import bessel_j, log_gamma

__all__ = [
    "ProbeParams",
    "v",
    "dnu_v",
    "dtau_v",
    "dnu_dtau_v",
    "g_N",
    "dtau_g_N",
    "herglotz_wave",
    "herglotz_q",
    "herglotz_bits",
    "herglotz_probe",
    "herglotz_tail",
    "log_tail_bound",
    "tail_bound",
]

SAFE_EXPONENT = 700.0


@dataclass(frozen=True)
class ProbeParams:
    """Probe direction, decay parameter ``tau``, wave number ``k`` and optional shift ``y``."""

    omega: Direction
    tau: float
    k: float
    shift: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega", Direction.coerce(self.omega))
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise DomainError("tau must be positive and finite")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError("k must be positive and finite")
        if self.shift is not None:
            y = np.asarray(self.shift, dtype=float).reshape(2)
            y.setflags(write=False)
            object.__setattr__(self, "shift", y)

    @property
    def root(self) -> float:
        """sqrt(tau^2 + k^2)."""
        return math.hypot(self.tau, self.k)

    @property
    def s(self) -> float:
        return self.root + self.tau

    @property
    def c_tau(self) -> np.ndarray:
        return self.tau * self.omega.omega + 1j * self.root * self.omega.omega_perp

    @property
    def c_tau_perp(self) -> np.ndarray:
        """c_tau(omega_perp) = tau omega_perp - i sqrt(tau^2 + k^2) omega."""
        return self.tau * self.omega.omega_perp - 1j * self.root * self.omega.omega

    @property
    def dtau_c(self) -> np.ndarray:
        """d c_tau / d tau = (i / sqrt(tau^2 + k^2)) c_tau(omega_perp)."""
        return self.omega.omega + 1j * (self.tau / self.root) * self.omega.omega_perp

    def with_tau(self, tau: float) -> "ProbeParams":
        return ProbeParams(self.omega, tau, self.k, self.shift)


def _rel(x, p: ProbeParams):
    x = np.asarray(x, dtype=float)
    return x if p.shift is None else x - p.shift


def _anchored_exp(x, p: ProbeParams, anchor):
    xr = _rel(x, p)
    a = np.zeros(2) if anchor is None else np.asarray(anchor, dtype=float)
    e = (xr - a) @ p.c_tau
    if np.any(e.real > SAFE_EXPONENT):
        raise ExponentOverflowError(
            f"probe exponent {float(np.max(e.real)):.1f} exceeds {SAFE_EXPONENT}; move the anchor closer"
        )
    return np.exp(e), xr


def v(x, p: ProbeParams, anchor=None):
    """``exp((x - y - anchor) . c_tau)``: the (shifted) probe divided by ``exp(anchor . c_tau)``."""
    return _anchored_exp(x, p, anchor)[0]


def dnu_v(x, nu, p: ProbeParams, anchor=None):
    """Normal derivative ``(c_tau . nu) v``."""
    val, _ = _anchored_exp(x, p, anchor)
    return (np.asarray(nu, dtype=float) @ p.c_tau) * val


def dtau_v(x, p: ProbeParams, anchor=None):
    """``d v / d tau = (i/sqrt(tau^2+k^2)) ((x - y) . c_tau(omega_perp)) v``."""
    val, xr = _anchored_exp(x, p, anchor)
    return (xr @ p.dtau_c) * val


def dnu_dtau_v(x, nu, p: ProbeParams, anchor=None):
    """``d/dnu d/dtau v = (i/sqrt){c_tau(omega_perp).nu + ((x-y).c_tau(omega_perp))(c_tau(omega).nu)} v``."""
    val, xr = _anchored_exp(x, p, anchor)
    nu = np.asarray(nu, dtype=float)
    return (nu @ p.dtau_c + (xr @ p.dtau_c) * (nu @ p.c_tau)) * val


# ---------------------------------------------------------------------------
# Herglotz densities
# ---------------------------------------------------------------------------


def _ratio(phi, p: ProbeParams):
    phi = np.asarray(phi)
    if not np.iscomplexobj(phi):
        phi = np.exp(1j * phi)
    return 1j * p.k * phi / (p.s * p.omega.complex)


def g_N(phi, p: ProbeParams, N: int):
    """``(1/2pi) sum_{|m|<=N} z^m`` with ``z = i k phi / (s omega)``.

    ``phi`` is a unit complex number (or an angle). Both one-sided geometric
    sums are accumulated by Horner's rule.
    """
    if N < 0:
        raise DomainError("N must be non-negative")
    z = _ratio(phi, p)
    w = 1.0 / z
    pos = np.ones_like(z)
    for _ in range(N):
        pos = 1.0 + z * pos
    neg = np.zeros_like(z)
    for _ in range(N):
        neg = w * (1.0 + neg)
    return (pos + neg) / (2 * math.pi)


def dtau_g_N(phi, p: ProbeParams, N: int):
    """``-(1/(2 pi sqrt(tau^2+k^2))) sum_{1<=|m|<=N} m z^m``."""
    if N < 0:
        raise DomainError("N must be non-negative")
    z = _ratio(phi, p)
    w = 1.0 / z
    if N == 0:
        return np.zeros_like(z)
    pos = np.full_like(z, float(N))
    neg = np.full_like(z, float(N))
    for m in range(N - 1, 0, -1):
        pos = m + z * pos
        neg = m + w * neg
    total = z * pos - w * neg
    return -total / (2 * math.pi * p.root)


def herglotz_wave(g, y, k: float, Q: int = 256):
    """``v_g(y) = int_{S^1} exp(i k y . phi) g(phi) dS(phi)`` by the trapezoid rule.

    ``g`` is a callable of the unit complex number ``phi`` or an array of samples
    at the ``Q`` angles ``2 pi j / Q``.
    """
    if callable(g):
        if Q < 1:
            raise DomainError("Q must be positive")
        ang = 2 * math.pi * np.arange(Q) / Q
        vals = np.asarray(g(np.exp(1j * ang)))
    else:
        vals = np.asarray(g)
        Q = len(vals)
        ang = 2 * math.pi * np.arange(Q) / Q
    y = np.atleast_2d(np.asarray(y, dtype=float))
    phase = np.exp(1j * k * (y[:, :1] * np.cos(ang) + y[:, 1:] * np.sin(ang)))
    out = (2 * math.pi / Q) * (phase @ vals)
    return out if out.shape[0] > 1 else out[0]


def herglotz_bits(p: ProbeParams, N: int) -> int:
    """Working precision that survives the ``(s/k)^N`` cancellation in the g_N pairing."""
    return int(N * math.log2(max(p.s / p.k, 1.0))) + 64


def herglotz_probe(y, p: ProbeParams, N: int, derivative: bool = False, precision_bits: int | None = None, Q: int | None = None):
    """``v_{g_N}(y)`` (or ``v_{dtau g_N}(y)``) by the trapezoid rule in extended precision.

    Both the density and the quadrature run at ``precision_bits`` (default from
    :func:`herglotz_bits`), since ``|g_N|`` reaches ``(s/k)^N / 2pi`` while the
    wave itself stays O(e^{R s / 2}).
    """
    Q = herglotz_q(N) if Q is None else Q
    if Q < 2 * N + 2:
        raise DomainError("Q must be at least 2N + 2")
    bits = herglotz_bits(p, N) if precision_bits is None else precision_bits
    y = np.asarray(y, dtype=float)
    with gmpy2.context(precision=bits):
        mpf = gmpy2.mpfr
        pi2 = 2 * gmpy2.const_pi()
        tau, k = mpf(p.tau), mpf(p.k)
        root = gmpy2.sqrt(tau * tau + k * k)
        s = tau + root
        om = gmpy2.mpc(mpf(float(p.omega.omega[0])), mpf(float(p.omega.omega[1])))
        base = gmpy2.mpc(0, 1) * k / (s * om)
        y0, y1 = mpf(float(y[0])), mpf(float(y[1]))
        acc = gmpy2.mpc(0)
        for q in range(Q):
            c, sn = gmpy2.cos(pi2 * q / Q), gmpy2.sin(pi2 * q / Q)
            z = base * gmpy2.mpc(c, sn)
            w = 1 / z
            if derivative:
                pos, neg = gmpy2.mpc(N), gmpy2.mpc(N)
                for m in range(N - 1, 0, -1):
                    pos = m + z * pos
                    neg = m + w * neg
                dens = -(z * pos - w * neg) / (root * pi2) if N > 0 else gmpy2.mpc(0)
            else:
                pos, neg = gmpy2.mpc(1), gmpy2.mpc(0)
                for _ in range(N):
                    pos = 1 + z * pos
                    neg = w * (1 + neg)
                dens = (pos + neg) / pi2
            arg = k * (y0 * c + y1 * sn)
            acc += gmpy2.mpc(gmpy2.cos(arg), gmpy2.sin(arg)) * dens
        return complex(acc * pi2 / Q)


def herglotz_q(N: int) -> int:
    """Node count for the Herglotz trapezoid rule."""
    return max(2 * N + 2, 256)


def herglotz_tail(y, p: ProbeParams, N: int, terms: int = 80, derivative: bool = False):
    """Series for ``v_{g_N}(y) - v_tau(y)`` (or the tau-derivative analogue).

    ``v_{g_N} - v = -sum_{m>N} (-k conj(omega)/s)^m J_m(kr) e^{i m theta}
                    - sum_{m>N} (s omega / k)^m J_m(kr) e^{-i m theta}``;
    with ``derivative=True`` returns ``v_{dtau g_N} - dtau v``.
    """
    y = np.asarray(y, dtype=float)
    r = math.hypot(y[0], y[1])
    th = math.atan2(y[1], y[0])
    om = p.omega.complex
    a = -p.k * om.conjugate() / p.s
    b = p.s * om / p.k
    acc = 0j
    for m in range(N + 1, N + 1 + terms):
        jm = bessel_j(m, p.k * r)
        if jm == 0.0:
            break
        t1 = a**m * jm * complex(math.cos(m * th), math.sin(m * th))
        t2 = b**m * jm * complex(math.cos(m * th), -math.sin(m * th))
        if derivative:
            acc += (m * t1 - m * t2) / p.root
        else:
            acc -= t1 + t2
    return acc


def log_tail_bound(tau: float, k: float, R: float, N: int) -> float:
    """log of ``E(tau; N) = (1/N!) (R s / 2)^N exp(R s / 2)``."""
    if N < 0:
        raise DomainError("N must be non-negative")
    half = 0.5 * R * (tau + math.hypot(tau, k))
    out = half
    if N > 0:
        out += N * math.log(half) - log_gamma(N + 1.0)
    return out


def tail_bound(tau: float, k: float, R: float, N: int) -> float:
    """``E(tau; N)``, computed in log space."""
    lg = log_tail_bound(tau, k, R, N)
    if lg > 709.0:
        raise ExponentOverflowError("tail bound exceeds double range; use log_tail_bound")
    return math.exp(lg)
