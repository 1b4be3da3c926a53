"""Numerical checks of the corner expansion machinery.

Model integrals ``I_mu``, ``K_mu`` by quadrature against their closed-form
large-``s`` values, the power-series coefficients of the half-line Laplace
integral, a Gamma-sum identity, a Bessel product identity, and a least-squares
fit of the corner expansion ``u = sum alpha_m J_{mu_m}(kr) cos(mu_m theta)`` to
a solved boundary trace.

Conventions: ``s = tau + sqrt(tau^2 + k^2)``, ``theta`` in ``(-pi, 0)`` and
``zeta = (k/s)^2 exp(2 i theta)``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError, EnclosureWarning, IllConditionedError
from .forward import BoundarySolution
from .geometry import CornerFrame, Direction
from .specfun import bessel_j, gamma

__all__ = [
    "ModelIntegralParams",
    "CornerModel",
    "model_integral_I",
    "model_integral_K",
    "asymptotic_I",
    "asymptotic_K",
    "zeta_factor",
    "lemma22_coeff",
    "laplace_power_integral",
    "lemma23_check",
    "lemma23_bruteforce",
    "bessel_product_check",
    "corner_fit",
    "leading_coefficient",
    "scaled_indicator",
]

QUAD_EPSREL = 1.2e-14
# exp(-DECAY_CUTOFF) is negligible next to double rounding, so the half line is cut there
DECAY_CUTOFF = 40.0


@dataclass(frozen=True)
class ModelIntegralParams:
    """Parameters of the model integrals. ``eta = inf`` integrates over the half line."""

    tau: float
    theta: float
    mu: float
    k: float = 1.0
    eta: float = math.inf

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if not (-math.pi < self.theta < 0):
            raise DomainError("theta must lie in (-pi, 0) so that sin(theta) < 0")
        if self.mu < 0 or self.k <= 0 or not self.eta > 0:
            raise DomainError("need mu >= 0, k > 0, eta > 0")

    @property
    def root(self) -> float:
        return math.hypot(self.tau, self.k)

    @property
    def s(self) -> float:
        return self.tau + self.root

    @property
    def zeta(self) -> complex:
        return (self.k / self.s) ** 2 * cmath.exp(2j * self.theta)

    @property
    def prefactor(self) -> complex:
        """``tau cos(theta) - i sqrt(tau^2 + k^2) sin(theta)``."""
        return complex(self.tau * math.cos(self.theta), -self.root * math.sin(self.theta))


def _quad(*args, **kw):
    # quadpack flags roundoff once the requested 1e-14 sits at the double floor; the result is still good
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(*args, **kw)


def _model_quad(p: ModelIntegralParams, weight_r: bool):
    st, ct = math.sin(p.theta), math.cos(p.theta)
    decay = p.tau * abs(st)
    upper = min(p.eta, DECAY_CUTOFF / decay)
    osc = p.root * abs(ct)
    scale = max(decay, osc)
    brk = list(np.arange(1, int(upper * scale) + 1) / scale)[:200]

    def f(r):
        val = bessel_j(p.mu, p.k * r) * cmath.exp(complex(p.tau * r * st, p.root * r * ct))
        return r * val if weight_r else val

    val, err = _quad(f, 0.0, upper, complex_func=True, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400, points=brk or None)
    if not math.isfinite(abs(val)):
        raise ConvergenceError("model integral quadrature failed")
    return complex(val)


def model_integral_I(p: ModelIntegralParams) -> complex:
    """``int_0^eta J_mu(kr) exp(tau r sin(theta)) exp(i sqrt(tau^2+k^2) r cos(theta)) dr``."""
    return _model_quad(p, False)


def model_integral_K(p: ModelIntegralParams) -> complex:
    """Same integrand as :func:`model_integral_I` weighted by ``r``."""
    return _model_quad(p, True)


def _leading(p: ModelIntegralParams) -> complex:
    return 1j * cmath.exp(1j * (p.theta + math.pi / 2) * p.mu) * (p.k / p.s) ** p.mu


def _check_zeta(p):
    if abs(p.zeta) >= 0.5:
        warnings.warn(f"|zeta| = {abs(p.zeta):.3g} >= 1/2: s is too small for the expansion", EnclosureWarning, stacklevel=3)


def asymptotic_I(p: ModelIntegralParams) -> complex:
    """Closed form ``i e^{i(theta+pi/2)mu} (k/s)^mu / (tau cos(theta) - i sqrt sin(theta))``."""
    _check_zeta(p)
    return _leading(p) / p.prefactor


def zeta_factor(zeta: complex, mu: float) -> complex:
    """``i (1-zeta)^2 {1 + zeta + mu (1 - zeta)} (1 - zeta)^{-3}``."""
    return 1j * (1 - zeta) ** 2 * (1 + zeta + mu * (1 - zeta)) / (1 - zeta) ** 3


def asymptotic_K(p: ModelIntegralParams, with_zeta: bool = True) -> complex:
    """Closed form for ``K_mu``; ``with_zeta=False`` keeps only the ``zeta = 0`` value of the factor."""
    _check_zeta(p)
    fac = zeta_factor(p.zeta if with_zeta else 0.0, p.mu)
    return fac * _leading(p) / p.prefactor**2


# ---------------------------------------------------------------------------
# half-line Laplace integrals of r^sigma
# ---------------------------------------------------------------------------


def lemma22_coeff(sigma: float, n: int, theta: float, k: float = 1.0) -> complex:
    """``L = i e^{i theta} e^{i(theta+pi/2) sigma} 2^{sigma+1} (-k^2 e^{2 i theta})^n Gamma(sigma+n+1)/n!``."""
    if sigma <= -1:
        raise DomainError("sigma must exceed -1")
    if n < 0:
        raise DomainError("n must be non-negative")
    head = 1j * cmath.exp(1j * theta) * cmath.exp(1j * (theta + math.pi / 2) * sigma) * 2 ** (sigma + 1)
    return head * (-(k**2) * cmath.exp(2j * theta)) ** n * gamma(sigma + n + 1) / math.factorial(n)


def laplace_power_integral(sigma: float, tau: float, theta: float, k: float = 1.0, method: str = "quad") -> complex:
    """``int_0^inf r^sigma exp(tau r sin(theta) + i sqrt(tau^2+k^2) r cos(theta)) dr``.

    ``method="quad"`` integrates with the algebraic endpoint weight;
    ``method="exact"`` evaluates ``Gamma(sigma+1) / a^{sigma+1}`` in mpmath.
    """
    root = math.hypot(tau, k)
    if method == "exact":
        with mpmath.workdps(40):
            a = -(mpmath.mpf(tau) * mpmath.sin(theta) + 1j * mpmath.sqrt(mpmath.mpf(tau) ** 2 + k**2) * mpmath.cos(theta))
            return complex(mpmath.gamma(sigma + 1) / a ** (sigma + 1))
    st, ct = math.sin(theta), math.cos(theta)
    upper = DECAY_CUTOFF / (tau * abs(st))
    re, _ = _quad(lambda r: math.exp(tau * r * st) * math.cos(root * r * ct), 0, upper, weight="alg", wvar=(sigma, 0), epsabs=0, epsrel=QUAD_EPSREL, limit=400)
    im, _ = _quad(lambda r: math.exp(tau * r * st) * math.sin(root * r * ct), 0, upper, weight="alg", wvar=(sigma, 0), epsabs=0, epsrel=QUAD_EPSREL, limit=400)
    return complex(re, im)


# ---------------------------------------------------------------------------
# Gamma sum identity
# ---------------------------------------------------------------------------


def lemma23_check(n: int, mu: float):
    """Return ``(lhs, rhs)`` for

    ``sum_{n1+n2=n} (-1)^{n2} Gamma(n+2+n2+mu) / (n1! n2! Gamma(1+n2+mu)) = (-1)^n (n+1)(n+1+mu)``.

    Gamma ratios are the products ``prod_{j=1}^{n+1} (j + n2 + mu)``; the
    alternating sum cancels heavily so it runs in mpmath at ``40 + 2n`` digits.
    """
    if n < 0 or n > 25:
        raise DomainError("n must lie in [0, 25]")
    if mu < 0:
        raise DomainError("mu must be non-negative")
    with mpmath.workdps(40 + 2 * n):
        m = mpmath.mpf(mu)
        total = mpmath.mpf(0)
        for n2 in range(n + 1):
            n1 = n - n2
            prod = mpmath.mpf(1)
            for j in range(1, n + 2):
                prod *= j + n2 + m
            term = prod / (mpmath.factorial(n1) * mpmath.factorial(n2))
            total += -term if n2 % 2 else term
        lhs = float(total)
    rhs = float((-1) ** n * (n + 1) * (n + 1 + mu))
    return lhs, rhs


def lemma23_bruteforce(n: int, mu: float) -> float:
    """Left-hand side by direct Gamma evaluation (high precision), for cross-checking."""
    with mpmath.workdps(60 + 2 * n):
        m = mpmath.mpf(mu)
        tot = mpmath.fsum(
            (-1) ** n2 * mpmath.gamma(n + 2 + n2 + m) / (mpmath.factorial(n - n2) * mpmath.factorial(n2) * mpmath.gamma(1 + n2 + m))
            for n2 in range(n + 1)
        )
        return float(tot)


# ---------------------------------------------------------------------------
# Bessel product identity
# ---------------------------------------------------------------------------


def bessel_product_check(x: float, mu: float, tol: float = 1e-17):
    """``(quad, series)`` for ``int_0^x J_mu J_{mu+1} dr = sum_{n>=0} J_{mu+n+1}(x)^2``."""
    if x <= 0 or mu < 0:
        raise DomainError("need x > 0 and mu >= 0")
    brk = list(np.arange(1.0, x, 1.0)) or None
    quad, _ = _quad(lambda r: bessel_j(mu, r) * bessel_j(mu + 1, r), 0.0, x, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400, points=brk)
    total = 0.0
    n = 0
    while True:
        t = bessel_j(mu + n + 1, x) ** 2
        total += t
        n += 1
        if n > x and t <= tol * total:
            break
        if n > 2000:
            raise ConvergenceError("Bessel square series did not converge")
    return float(quad), float(total)


# ---------------------------------------------------------------------------
# corner fit
# ---------------------------------------------------------------------------


@dataclass
class CornerModel:
    x0: np.ndarray
    Theta: float
    p: float
    q: float
    eta: float
    k: float
    mu: np.ndarray
    alpha: np.ndarray
    m_star: int
    beta_coeff: complex
    residual: float
    n_samples: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.pi < self.Theta <= 2 * math.pi + 1e-12):
            raise DomainError("Theta must lie in (pi, 2 pi]")
        if abs(self.q - (self.Theta - 2 * math.pi + self.p)) > 1e-9:
            raise DomainError("q must equal Theta - 2 pi + p")
        if not (-math.pi < self.q < self.p < 0):
            raise DomainError("need -pi < q < p < 0")
        if not self.eta * self.k < math.log(1.5):
            raise DomainError("eta k must stay below log(3/2)")

    @property
    def mu_star(self) -> float:
        return float(self.mu[self.m_star - 1])


def _mode_orders(Theta, order):
    return np.array([(m - 1) * math.pi / Theta for m in range(1, order + 1)])


def corner_fit(
    sol: BoundarySolution,
    corner: CornerFrame,
    eta: float | None = None,
    order: int = 6,
    m_star_tol: float = 1e-6,
) -> CornerModel:
    """Least-squares fit of ``alpha_1..alpha_order`` from the boundary trace near a convex corner.

    On the edge ``theta = 0`` the trace is ``sum alpha_m J_{mu_m}(kr)``; on
    ``theta = Theta`` each term picks up ``(-1)^{m-1}``. Samples are the
    quadrature nodes of the two edges with ``r`` in ``[eta/10, eta]`` so no
    interpolation is involved. ``eta`` defaults to ``0.3 / k``.
    """
    k = sol.k
    eta = 0.3 / k if eta is None else eta
    if not eta * k < math.log(1.5):
        raise DomainError("eta k must stay below log(3/2)")
    nodes = sol.boundary.nodes
    rel = nodes - corner.x0
    mu = _mode_orders(corner.Theta, order)
    rows, rhs = [], []
    for edge, sign_of in ((corner.edge_p, lambda m: 1.0), (corner.edge_q, lambda m: (-1.0) ** (m - 1))):
        along = rel @ edge
        across = rel @ np.array([-edge[1], edge[0]])
        sel = (np.abs(across) < 1e-9) & (along >= eta / 10) & (along <= eta)
        r = along[sel]
        block = np.stack([sign_of(m) * bessel_j(mu[m - 1], k * r) for m in range(1, order + 1)], axis=1)
        rows.append(block)
        rhs.append(sol.density[sel])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    if len(b) < 2 * order:
        raise IllConditionedError(f"only {len(b)} trace samples in the window")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] < 1e-13 * sv[0]:
        raise IllConditionedError("corner basis is numerically collinear on this window")
    alpha, *_ = np.linalg.lstsq(A.astype(complex), b, rcond=None)
    resid = float(np.sqrt(np.mean(np.abs(A @ alpha - b) ** 2)))
    comb = np.array([alpha[m - 1] * (cmath.exp(1j * corner.p * mu[m - 1]) + (-1) ** m * cmath.exp(1j * corner.q * mu[m - 1])) for m in range(1, order + 1)])
    big = np.max(np.abs(comb[1:])) if order > 1 else 0.0
    m_star = next((m for m in range(2, order + 1) if abs(comb[m - 1]) > m_star_tol * big), 0)
    if m_star == 0:
        raise IllConditionedError("no surviving corner mode")
    return CornerModel(
        np.array(corner.x0), corner.Theta, corner.p, corner.q, eta, k, mu, alpha, m_star, complex(comb[m_star - 1]), resid, len(b),
        {"sv_ratio": repr(float(sv[-1] / sv[0]))},
    )


def leading_coefficient(model: CornerModel) -> complex:
    """``-i beta e^{i pi mu*/2} (k/2)^{mu*}``: the limit of the scaled indicator."""
    mu = model.mu_star
    return -1j * model.beta_coeff * cmath.exp(0.5j * math.pi * mu) * (model.k / 2) ** mu


def scaled_indicator(sample, model: CornerModel, omega, k: float) -> complex:
    """``tau^{mu*} exp(-i sqrt(tau^2+k^2) x0 . omega_perp) exp(-tau h) I`` for an indicator sample."""
    om = Direction.coerce(omega)
    tau = sample.tau
    h = float(model.x0 @ om.omega)
    ph = math.hypot(tau, k) * float(model.x0 @ om.omega_perp)
    mag = math.exp(sample.scale - tau * h + model.mu_star * math.log(tau))
    return sample.I * mag * cmath.exp(-1j * ph)
