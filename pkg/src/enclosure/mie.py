"""Separation-of-variables solutions for a sound-hard disc centred at the origin.

Used as an independent oracle for the boundary integral solver. Only the
package's own special functions are used here.
"""

from __future__ import annotations

import math

import numpy as np

from .specfun import bessel_j, hankel1, hankel1_deriv, bessel_j_deriv

__all__ = ["hard_disc_coefficients", "plane_wave_traces", "point_source_traces", "plane_wave_far_field"]


def hard_disc_coefficients(k: float, a: float, nmax: int = 60) -> np.ndarray:
    """``b_n = -J_n'(ka) / H_n'(ka)`` for ``n = 0..nmax``."""
    ka = k * a
    return np.array([-bessel_j_deriv(n, ka) / hankel1_deriv(n, ka) for n in range(nmax + 1)])


def _radial(k, r, nmax):
    kr = k * r
    J = np.array([bessel_j(n, kr) for n in range(nmax + 2)])
    H = np.array([hankel1(n, kr) for n in range(nmax + 2)])
    n = np.arange(nmax + 1)
    dJ = n / kr * J[:-1] - J[1:]
    dH = n / kr * H[:-1] - H[1:]
    return J[:-1], dJ, H[:-1], dH


def plane_wave_traces(k, a, R, theta, d_angle=0.0, nmax=60):
    """Total field and its radial derivative on ``|x| = R`` for incidence direction angle ``d_angle``."""
    b = hard_disc_coefficients(k, a, nmax)
    J, dJ, H, dH = _radial(k, R, nmax)
    n = np.arange(nmax + 1)
    eps = np.where(n == 0, 1.0, 2.0)
    ang = np.cos(np.outer(np.asarray(theta) - d_angle, n))
    coef = eps * (1j**n)
    u = ang @ (coef * (J + b * H))
    du = k * (ang @ (coef * (dJ + b * dH)))
    return u, du


def point_source_traces(k, a, R, theta, y, nmax=60):
    """Total field ``Phi_D(., y)`` and radial derivative on ``|x| = R < |y|``."""
    y = np.asarray(y, dtype=float)
    ry = float(np.hypot(*y))
    ty = math.atan2(y[1], y[0])
    if ry <= R:
        raise ValueError("source must lie outside the measurement circle")
    b = hard_disc_coefficients(k, a, nmax)
    J, dJ, H, dH = _radial(k, R, nmax)
    Hy = np.array([hankel1(n, k * ry) for n in range(nmax + 1)])
    n = np.arange(nmax + 1)
    eps = np.where(n == 0, 1.0, 2.0)
    ang = np.cos(np.outer(np.asarray(theta) - ty, n))
    coef = 0.25j * eps * Hy
    u = ang @ (coef * (J + b * H))
    du = k * (ang @ (coef * (dJ + b * dH)))
    return u, du


def plane_wave_far_field(k, a, phi, d_angle=0.0, nmax=60):
    """Far-field pattern with ``w ~ e^{ikr} r^{-1/2} F``."""
    b = hard_disc_coefficients(k, a, nmax)
    n = np.arange(nmax + 1)
    eps = np.where(n == 0, 1.0, 2.0)
    ang = np.cos(np.outer(np.asarray(phi) - d_angle, n))
    return math.sqrt(2 / (math.pi * k)) * np.exp(-0.25j * math.pi) * (ang @ (eps * b))
