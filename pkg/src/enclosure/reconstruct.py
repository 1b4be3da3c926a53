"""From indicator series to geometry: support values, vertices, hull sweeps, far-field schedules."""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError, EnclosureWarning, IllConditionedError, InsufficientDataError
from .forward import CauchyData, FarField
from .geometry import Direction, convex_hull
from .indicators import IndicatorSeries, default_tau_grid, farfield_series, indicator, ratio_series
from .probes import ProbeParams

__all__ = [
    "ReconResult",
    "HullSweep",
    "FIT_DISCARD",
    "support_fit",
    "support_estimate",
    "vertex_from_limit",
    "vertex_estimate",
    "hull_sweep",
    "localize_by_minimization",
    "beta0",
    "farfield_reconstruct",
]

logger = logging.getLogger(__name__)

FIT_DISCARD = 0.25
MIN_SAMPLES = 10


@dataclass
class ReconResult:
    omega: Direction
    h_est: float
    vertex_est: np.ndarray
    mu_star_est: float
    residual: float
    method: str = "near-field"
    limit: complex = 0j
    n_used: int = 0
    meta: dict = field(default_factory=dict)

    def summary(self) -> str:
        v = self.vertex_est
        return (
            f"omega=({self.omega.omega[0]:.6f}, {self.omega.omega[1]:.6f}) h={self.h_est:.6f} "
            f"vertex=({v[0]:.6f}, {v[1]:.6f}) mu={self.mu_star_est:.4f} residual={self.residual:.2e} [{self.method}]"
        )


def _window(series: IndicatorSeries, discard: float):
    n = len(series.samples)
    start = int(math.floor(discard * n))
    keep = [s for s in series.samples[start:] if s.valid]
    if len(keep) < MIN_SAMPLES:
        raise InsufficientDataError(f"only {len(keep)} valid samples in the fit window; need {MIN_SAMPLES}")
    return keep


def _lstsq(A, b):
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise IllConditionedError("fit basis is rank deficient on this tau window")
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return coef


def support_fit(series: IndicatorSeries, discard: float = FIT_DISCARD):
    """Fit ``(1/tau) log|I| = h - mu log(tau)/tau + c/tau``; returns ``(h, mu, c, rms)``."""
    keep = _window(series, discard)
    tau = np.array([s.tau for s in keep])
    y = np.array([s.log_abs_I for s in keep]) / tau
    A = np.stack([np.ones_like(tau), -np.log(tau) / tau, 1.0 / tau], axis=1)
    coef = _lstsq(A, y)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), float(coef[1]), float(coef[2]), rms


def support_estimate(series: IndicatorSeries, discard: float = FIT_DISCARD) -> float:
    """Estimate of the support value ``h_D(omega)`` from the growth rate of ``|I|``."""
    return support_fit(series, discard)[0]


def vertex_from_limit(L: complex, omega) -> np.ndarray:
    """Point ``x`` with ``x . omega = Re L`` and ``x . omega_perp = Im L``."""
    z = Direction.coerce(omega).complex * complex(L).conjugate()
    return np.array([z.real, z.imag])


def vertex_estimate(series: IndicatorSeries, omega=None, discard: float = FIT_DISCARD, method: str | None = None) -> ReconResult:
    """Extrapolate the ratio ``I'/I = L - mu/tau + c/tau^2`` (``L``, ``c`` complex, ``mu`` real) and read off the vertex."""
    omega = series.omega if omega is None else Direction.coerce(omega)
    keep = _window(series, discard)
    tau = np.array([s.tau for s in keep])
    r = np.array([s.ratio for s in keep])
    if not np.all(np.isfinite(r)):
        raise InsufficientDataError("non-finite ratios in the fit window")
    one, inv, inv2 = np.ones_like(tau), 1.0 / tau, 1.0 / tau**2
    re = _lstsq(np.stack([one, -inv, inv2], axis=1), r.real)
    im = _lstsq(np.stack([one, inv2], axis=1), r.imag)
    fit = (re[0] - re[1] * inv + re[2] * inv2) + 1j * (im[0] + im[1] * inv2)
    rms = float(np.sqrt(np.mean(np.abs(fit - r) ** 2)))
    L = complex(re[0], im[0])
    meta = {"window": f"tau in [{tau[0]:.4g}, {tau[-1]:.4g}]", "discard": repr(discard), "c": repr(complex(re[2], im[1]))}
    return ReconResult(omega, float(L.real), vertex_from_limit(L, omega), float(re[1]), rms, method or series.provenance, L, len(keep), meta)


# ---------------------------------------------------------------------------
# hull sweep
# ---------------------------------------------------------------------------


@dataclass
class HullSweep:
    theta: np.ndarray
    results: list  # ReconResult or None
    labels: np.ndarray  # cluster index per angle, -1 when invalid
    representatives: np.ndarray
    jump_angles: np.ndarray
    hull: np.ndarray
    cluster_tol: float
    meta: dict = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(self.representatives)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# cluster_tol={float(self.cluster_tol)!r}, n_clusters={self.n_clusters}\n")
        for key, val in self.meta.items():
            buf.write(f"# {key}={val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "valid", "x1", "x2", "h", "mu", "residual", "cluster"])
        for th, res, lab in zip(self.theta, self.results, self.labels):
            if res is None:
                w.writerow([repr(float(th)), 0, "", "", "", "", "", -1])
            else:
                v = res.vertex_est
                w.writerow([repr(float(th)), 1, repr(float(v[0])), repr(float(v[1])), repr(res.h_est), repr(res.mu_star_est), repr(res.residual), int(lab)])
        return buf.getvalue()

    def hull_csv(self) -> str:
        lines = ["x1,x2"] + [f"{float(p[0])!r},{float(p[1])!r}" for p in self.hull]
        return "\n".join(lines) + "\n"


def _series_for(source, omega, config):
    if isinstance(source, CauchyData):
        return ratio_series(source, omega, config.get("tau_grid"))
    if isinstance(source, FarField):
        return farfield_series(source, omega, config["beta"], config["N"], config["R"], config.get("offset", 0.0))
    if callable(source):
        return source(omega)
    raise DomainError("hull_sweep needs Cauchy data, a far field or a series factory")


def _cluster(theta, pts, valid, tol):
    """Cyclic chaining: consecutive valid estimates closer than ``tol`` share a cluster."""
    idx = np.flatnonzero(valid)
    labels = np.full(len(theta), -1)
    if len(idx) == 0:
        return labels
    # start the chain after the largest jump so a cluster never straddles the wrap
    gaps = [np.linalg.norm(pts[idx[(j + 1) % len(idx)]] - pts[idx[j]]) for j in range(len(idx))]
    start = (int(np.argmax(gaps)) + 1) % len(idx)
    order = np.roll(idx, -start)
    cur = 0
    labels[order[0]] = 0
    for a, b in zip(order, order[1:]):
        if np.linalg.norm(pts[b] - pts[a]) > tol:
            cur += 1
        labels[b] = cur
    # merge last and first if the chain wraps without a jump
    if cur > 0 and np.linalg.norm(pts[order[0]] - pts[order[-1]]) <= tol:
        labels[labels == cur] = 0
    return labels


def hull_sweep(
    source,
    n_theta: int = 64,
    config: dict | None = None,
    cluster_tol: float | None = None,
    min_cluster: int = 2,
    threads: int = 1,
) -> HullSweep:
    """Vertex estimates over ``theta_j = (j + 1/2) 2 pi / n_theta``, clustered into hull corners.

    Per-angle failures (empty series, rank-deficient fits, negative decay order)
    mark that angle invalid. Clusters with fewer than ``min_cluster`` members are
    dropped as unresolved transition angles. ``cluster_tol`` defaults to ten
    times the median fit residual, floored at ``config["tol_floor"]``.
    """
    config = dict(config or {})
    theta = (np.arange(n_theta) + 0.5) * 2 * math.pi / n_theta

    def one(th):
        om = Direction.from_angle(float(th))
        try:
            res = vertex_estimate(_series_for(source, om, config), om)
        except (InsufficientDataError, IllConditionedError, ConvergenceError) as exc:
            logger.info("theta=%.4f invalid: %s", th, exc)
            return None
        if not np.all(np.isfinite(res.vertex_est)) or res.mu_star_est < 0:
            return None
        return res

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnclosureWarning)
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                results = list(ex.map(one, theta))
        else:
            results = [one(th) for th in theta]
    valid = np.array([r is not None for r in results])
    if not valid.any():
        raise InsufficientDataError("every direction of the sweep failed")
    pts = np.array([r.vertex_est if r is not None else [np.nan, np.nan] for r in results])
    resid = np.array([r.residual for r in results if r is not None])
    if cluster_tol is None:
        cluster_tol = max(10.0 * float(np.median(resid)), float(config.get("tol_floor", 0.0)))
    labels = _cluster(theta, pts, valid, cluster_tol)
    # drop undersized clusters and relabel in angular order
    ids = [lab for lab in dict.fromkeys(labels[labels >= 0])]
    keep = [lab for lab in ids if np.sum(labels == lab) >= min_cluster]
    remap = {}
    for lab in sorted(keep, key=lambda c: np.flatnonzero(labels == c)[0]):
        remap[lab] = len(remap)
    labels = np.array([remap.get(int(lab), -1) for lab in labels])
    reps = np.array([np.median(pts[labels == c], axis=0) for c in range(len(remap))]).reshape(-1, 2)
    jumps = _jump_angles(theta, labels)
    try:
        hull = convex_hull(reps) if len(reps) >= 3 else reps
    except DomainError:
        hull = reps
    meta = {"n_valid": int(valid.sum()), "median_residual": repr(float(np.median(resid)))}
    return HullSweep(theta, results, labels, reps, jumps, hull, cluster_tol, meta)


def _jump_angles(theta, labels):
    """Midpoints between consecutive labelled angles whose clusters differ (cyclic)."""
    idx = np.flatnonzero(labels >= 0)
    if len(idx) < 2:
        return np.array([])
    out = []
    for a, b in zip(idx, np.roll(idx, -1)):
        if labels[a] != labels[b]:
            ta = theta[a]
            tb = theta[b] if b > a else theta[b] + 2 * math.pi
            out.append(((ta + tb) / 2) % (2 * math.pi))
    return np.sort(np.array(out))


# ---------------------------------------------------------------------------
# minimisation variant
# ---------------------------------------------------------------------------


def localize_by_minimization(
    data: CauchyData,
    omega,
    tau: float | None = None,
    box=None,
    budget: int = 400,
    grid_n: int = 21,
) -> np.ndarray:
    """Minimise ``y -> |I'(tau; y)/I(tau; y)|`` over a search box.

    The shifted ratio equals ``I'/I - y . dc_tau/dtau`` so one indicator
    evaluation serves the whole search. ``tau`` defaults to the start of the
    upper third of the default grid. Coarse grid scan, then Nelder-Mead.
    """
    omega = Direction.coerce(omega)
    if tau is None:
        grid = default_tau_grid(data.R)
        tau = float(grid[2 * len(grid) // 3])
    p = ProbeParams(omega, tau, data.k)
    s = indicator(data, p)
    if not s.valid:
        raise InsufficientDataError(f"indicator invalid at tau = {tau}")
    r = s.ratio
    dc = p.dtau_c
    if box is None:
        c, R = data.center, data.R
        box = ((c[0] - R, c[0] + R), (c[1] - R, c[1] + R))
    (x0, x1), (y0, y1) = box

    def obj(y):
        return abs(r - (y[0] * dc[0] + y[1] * dc[1]))

    gx = np.linspace(x0, x1, grid_n)
    gy = np.linspace(y0, y1, grid_n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    vals = np.abs(r - (X * dc[0] + Y * dc[1]))
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    start = np.array([gx[i], gy[j]])
    res = minimize(obj, start, method="Nelder-Mead", options={"maxfev": budget, "xatol": 1e-12, "fatol": 1e-14})
    if not res.success:
        warnings.warn(f"simplex search stopped early: {res.message}", EnclosureWarning, stacklevel=2)
    y = np.clip(res.x, [x0, y0], [x1, y1])
    return y


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------


def _beta_eq(s):
    return 2.0 / math.e * s + math.log(s)


def beta0(tol: float = 1e-12) -> float:
    """Unique positive root of ``(2/e) s + log s = 0`` by bisection on (0.60, 0.65)."""
    lo, hi = 0.60, 0.65
    if not (_beta_eq(lo) < 0 < _beta_eq(hi)):
        raise ConvergenceError("bisection bracket lost its sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _beta_eq(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def farfield_reconstruct(
    F: FarField,
    omega,
    beta: float,
    Ns,
    R: float,
    offset: float = 0.0,
    discard: float = FIT_DISCARD,
) -> ReconResult:
    """Vertex from far-field data along ``tau(N) = beta N / (e R) + offset``.

    Raises DomainError unless ``0 < beta < beta0()``.
    """
    b0 = beta0()
    if not (0 < beta < b0):
        raise DomainError(f"beta = {beta} must lie in (0, beta0) with beta0 = {b0:.12f}")
    omega = Direction.coerce(omega)
    series = farfield_series(F, omega, beta, Ns, R, offset)
    res = vertex_estimate(series, omega, discard, method="far-field")
    per_n = []
    for N, s in zip(series.meta["N"].split(), series.samples):
        if s.valid:
            v = vertex_from_limit(s.ratio, omega)
            per_n.append((int(N), s.tau, v))
    res.meta.update({"beta": repr(float(beta)), "offset": repr(float(offset)), "R": repr(float(R))})
    res.meta["per_N"] = per_n
    res.meta["series"] = series
    return res
