"""Exterior sound-hard Helmholtz solver and synthetic data generation.

The unknown is the total field ``u`` on the obstacle boundary. With the
outgoing fundamental solution ``Phi(x, y) = (i/4) H0(k|x - y|)`` and the normal
``nu`` pointing out of the obstacle, Green's representation gives

    u(x) = u_inc(x) + int_{dD} d_nu_y Phi(x, y) u(y) ds_y        (x outside D)
    0    = u_inc(z) + int_{dD} d_nu_y Phi(z, y) u(y) ds_y        (z inside D)

and on the boundary ``u/2 - K u = u_inc``. The interior identity is imposed at a
few extra points (CHIEF) and the overdetermined system is solved by least
squares, which removes the interior-resonance non-uniqueness of the boundary
equation alone.

Discretisation is Nystrom with 16-point Gauss-Legendre panels. Polygon edges are
split in half and each half is graded algebraically towards its corner. Near
and self interactions are integrated by adaptive dyadic subdivision of the
source panel, with the density interpolated from its panel nodes.

Fields away from the boundary are sums over the boundary nodes, so the near
data, far field and indicator integrals all describe one and the same radiating
field.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import gmpy2
import numpy as np
import scipy.linalg
from scipy.special import hankel1 as _h

from .errors import DomainError, EnclosureWarning, IllConditionedError
from .geometry import Polygon, Scene

logger = logging.getLogger(__name__)

__all__ = [
    "PlaneWave",
    "PointSource",
    "WaveContext",
    "Discretization",
    "Boundary",
    "BoundarySolution",
    "CauchyData",
    "FarField",
    "polygon_boundary",
    "disc_boundary",
    "solve",
    "cauchy_data",
    "far_field",
    "point_source_data",
    "incident_cauchy_data",
    "add_noise",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------------------
# incident fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneWave:
    d: tuple

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (2,) or abs(np.hypot(*d) - 1.0) > 1e-12:
            raise DomainError("plane-wave direction must be a unit 2-vector")
        object.__setattr__(self, "d", (float(d[0]), float(d[1])))

    def value(self, k, x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * k * (x @ np.asarray(self.d)))

    def gradient(self, k, x):
        d = np.asarray(self.d)
        return 1j * k * self.value(k, x)[..., None] * d

    def describe(self) -> str:
        return f"plane(d=[{self.d[0]!r}, {self.d[1]!r}])"


@dataclass(frozen=True)
class PointSource:
    y: tuple

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.shape != (2,):
            raise DomainError("point source must be a 2-vector")
        object.__setattr__(self, "y", (float(y[0]), float(y[1])))

    def value(self, k, x):
        r = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(self.y), axis=-1)
        return 0.25j * _h(0, k * r)

    def gradient(self, k, x):
        diff = np.asarray(x, dtype=float) - np.asarray(self.y)
        r = np.linalg.norm(diff, axis=-1)
        return (-0.25j * k * _h(1, k * r) / r)[..., None] * diff

    def describe(self) -> str:
        return f"point(y=[{self.y[0]!r}, {self.y[1]!r}])"


@dataclass(frozen=True)
class WaveContext:
    k: float
    incidence: PlaneWave | PointSource

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError("wave number k must be positive")


def _parse_incidence(text: str):
    text = text.strip()
    kind, _, rest = text.partition("(")
    vals = rest.rstrip(")").split("=", 1)[1].strip().strip("[]").split(",")
    vec = tuple(float(v) for v in vals)
    if kind == "plane":
        return PlaneWave(vec)
    if kind == "point":
        return PointSource(vec)
    raise DomainError(f"unknown incidence descriptor {text!r}")


# ---------------------------------------------------------------------------
# boundary discretisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discretization:
    """Mesh and solver parameters.

    Attributes
    ----------
    panels_per_half_edge
        Number of panels on each half of a polygon edge.
    grading
        Algebraic grading exponent towards corners (breakpoints ``(j/n)**grading``).
    arc_panels
        Number of uniform panels on a disc boundary.
    n_chief
        Interior points per obstacle where the extinction identity is enforced.
    cond_max
        Largest acceptable condition estimate of the least-squares system.
    """

    panels_per_half_edge: int = 10
    grading: float = 3.0
    arc_panels: int = 24
    n_chief: int = 12
    cond_max: float = 1e10

    def __post_init__(self):
        if self.panels_per_half_edge < 1 or self.arc_panels < 3:
            raise DomainError("panel counts too small")
        if self.grading < 1:
            raise DomainError("grading exponent must be >= 1")


class _LinePanel:
    __slots__ = ("a", "b", "edge_id", "length", "normal", "tangent")

    def __init__(self, a, b, edge_id):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.edge_id = edge_id
        e = self.b - self.a
        self.length = float(np.hypot(*e))
        self.tangent = e / self.length
        # counter-clockwise boundary: outward normal is the tangent turned clockwise
        self.normal = np.array([self.tangent[1], -self.tangent[0]])

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.a + (0.5 * (t + 1.0))[..., None] * (self.b - self.a)

    def geom(self, t):
        t = np.asarray(t, dtype=float)
        pts = self.point(t)
        nrm = np.broadcast_to(self.normal, pts.shape)
        speed = np.full(t.shape, 0.5 * self.length)
        return pts, nrm, speed


class _ArcPanel:
    __slots__ = ("center", "radius", "phi0", "phi1", "edge_id", "length")

    def __init__(self, center, radius, phi0, phi1):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.phi0, self.phi1 = float(phi0), float(phi1)
        self.edge_id = None
        self.length = self.radius * (self.phi1 - self.phi0)

    def _phi(self, t):
        return self.phi0 + 0.5 * (np.asarray(t, dtype=float) + 1.0) * (self.phi1 - self.phi0)

    def point(self, t):
        ph = self._phi(t)
        return self.center + self.radius * np.stack([np.cos(ph), np.sin(ph)], axis=-1)

    def geom(self, t):
        ph = self._phi(t)
        nrm = np.stack([np.cos(ph), np.sin(ph)], axis=-1)
        pts = self.center + self.radius * nrm
        speed = np.full(np.shape(ph), 0.5 * self.length)
        return pts, nrm, speed


@dataclass(frozen=True, eq=False)
class Boundary:
    """Panelised closed boundary with Gauss-Legendre nodes."""

    panels: tuple
    chief_points: np.ndarray
    description: str = ""

    @cached_property
    def nodes(self):
        return np.vstack([p.geom(_GL_X)[0] for p in self.panels])

    @cached_property
    def normals(self):
        return np.vstack([p.geom(_GL_X)[1] for p in self.panels])

    @cached_property
    def weights(self):
        return np.concatenate([p.geom(_GL_X)[2] * _GL_W for p in self.panels])

    @cached_property
    def edge_ids(self):
        return np.array([-1 if p.edge_id is None else p.edge_id for p in self.panels for _ in _GL_X])

    @property
    def n_nodes(self) -> int:
        return len(self.panels) * len(_GL_X)

    def interpolate(self, density, points):
        """Interpolate nodal values to points lying on straight panels."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(pts), dtype=complex)
        for i, x in enumerate(pts):
            best = None
            for j, p in enumerate(self.panels):
                if not isinstance(p, _LinePanel):
                    continue
                s = float(np.dot(x - p.a, p.tangent))
                off = abs(float(np.dot(x - p.a, p.normal)))
                if -1e-12 <= s <= p.length + 1e-12 and off < 1e-10 * max(1.0, p.length):
                    best = (j, 2.0 * s / p.length - 1.0)
                    break
            if best is None:
                raise DomainError(f"point {x} is not on the boundary")
            j, t = best
            lag = _lagrange_matrix(np.array([t]))
            out[i] = lag[0] @ density[j * 16 : (j + 1) * 16]
        return out


def _graded_breaks(n, grading):
    return (np.arange(n + 1) / n) ** grading


def polygon_boundary(scene: Scene, disc: Discretization = Discretization(), seed: int = 0) -> Boundary:
    """Corner-graded panels for every polygon of ``scene`` plus interior CHIEF points."""
    if scene.screens:
        raise DomainError("screens are not supported by the forward solver; ingest their data instead")
    if not scene.obstacles:
        return Boundary(panels=(), chief_points=np.zeros((0, 2)), description="empty")
    panels = []
    edge_id = 0
    brk = _graded_breaks(disc.panels_per_half_edge, disc.grading)
    for poly in scene.obstacles:
        for a, b in poly.edges():
            m = 0.5 * (a + b)
            first = [a + t * (m - a) for t in brk]
            second = [b + t * (m - b) for t in brk][::-1]
            pts = first + second[1:]
            for p0, p1 in zip(pts[:-1], pts[1:]):
                panels.append(_LinePanel(p0, p1, edge_id))
            edge_id += 1
    chief = np.vstack([_chief_points(poly, disc.n_chief, seed) for poly in scene.obstacles])
    return Boundary(panels=tuple(panels), chief_points=chief, description=f"{len(scene.obstacles)} polygon(s)")


def _chief_points(poly: Polygon, n, seed):
    rng = np.random.default_rng(seed)
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    cand = lo + (hi - lo) * rng.random((40 * n, 2))
    inside = [c for c in cand if poly.contains(c)]
    if not inside:
        raise DomainError("could not place interior points in a polygon")
    dist = np.array([poly.distance_to_boundary(c) for c in inside])
    keep = np.asarray(inside)[dist >= 0.3 * dist.max()]
    return keep[: max(1, n)]


def disc_boundary(radius: float, center=(0.0, 0.0), n_panels: int = 24, n_chief: int = 12, seed: int = 0) -> Boundary:
    """Uniform arc panels on a circle (smooth validation geometry)."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    edges = np.linspace(0.0, 2 * math.pi, n_panels + 1)
    panels = tuple(_ArcPanel(center, radius, edges[i], edges[i + 1]) for i in range(n_panels))
    rng = np.random.default_rng(seed)
    r = 0.6 * radius * np.sqrt(rng.random(n_chief))
    ang = 2 * math.pi * rng.random(n_chief)
    chief = np.asarray(center, dtype=float) + np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    return Boundary(panels=panels, chief_points=chief, description=f"disc(radius={radius!r})")


# ---------------------------------------------------------------------------
# kernels and quadrature
# ---------------------------------------------------------------------------


def _dlp(k, x, y, ny):
    """d/d nu_y of (i/4) H0(k|x - y|)."""
    d = x - y
    r = np.hypot(d[..., 0], d[..., 1])
    return 0.25j * k * _h(1, k * r) * np.sum(d * ny, axis=-1) / r


def _dlp_n(k, x, nx, y, ny):
    """d/d nu_x d/d nu_y of (i/4) H0(k|x - y|)."""
    d = x - y
    r = np.hypot(d[..., 0], d[..., 1])
    dn_x = np.sum(d * nx, axis=-1)
    dn_y = np.sum(d * ny, axis=-1)
    nn = np.sum(nx * ny, axis=-1)
    kr = k * r
    h0, h1 = _h(0, kr), _h(1, kr)
    return 0.25j * k * (k * h0 * dn_x * dn_y / r**2 + h1 * nn / r - 2.0 * h1 * dn_x * dn_y / r**3)


def _bary_weights(xs):
    w = np.ones(len(xs))
    for j in range(len(xs)):
        w[j] = 1.0 / np.prod(xs[j] - np.delete(xs, j))
    return w


_BARY = _bary_weights(_GL_X)


def _lagrange_matrix(t):
    """Rows: Lagrange basis of the 16 panel nodes evaluated at ``t``."""
    t = np.asarray(t, dtype=float).reshape(-1)
    diff = t[:, None] - _GL_X[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tmp = _BARY / diff
        mat = tmp / tmp.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        mat[rows] = exact[rows].astype(float)
    return mat


_NEAR = 1.2
_MIN_PIECE = 1e-12


def _pieces(panel, x):
    out = []
    stack = [(-1.0, 1.0)]
    L = panel.length
    while stack:
        a, b = stack.pop()
        plen = 0.5 * (b - a) * L
        c = panel.point(0.5 * (a + b))
        if math.hypot(x[0] - c[0], x[1] - c[1]) >= _NEAR * plen:
            out.append((a, b))
        elif plen > _MIN_PIECE * L:
            m = 0.5 * (a + b)
            stack.append((a, m))
            stack.append((m, b))
    return out


def _near_block(panel, k, targets, tnormals, kind):
    """Weights (n_targets, 16) mapping panel nodal values to the layer potential at targets."""
    all_t, all_w, owner = [], [], []
    for i, x in enumerate(targets):
        for a, b in _pieces(panel, x):
            half = 0.5 * (b - a)
            all_t.append(0.5 * (a + b) + half * _GL_X)
            all_w.append(half * _GL_W)
            owner.append(np.full(16, i))
    t = np.concatenate(all_t)
    w = np.concatenate(all_w)
    own = np.concatenate(owner)
    y, ny, speed = panel.geom(t)
    x = targets[own]
    if kind == "dlp":
        kern = _dlp(k, x, y, ny)
        if isinstance(panel, _ArcPanel):
            # on the panel's own circle (x - y).nu_y = -r^2 / (2a) exactly; the
            # direct dot product loses all digits as y -> x
            rel = x - panel.center
            on = np.abs(np.hypot(rel[:, 0], rel[:, 1]) - panel.radius) <= 1e-12 * panel.radius
            if np.any(on):
                delta = np.arctan2(rel[on, 1], rel[on, 0]) - panel._phi(t[on])
                r = 2.0 * panel.radius * np.abs(np.sin(0.5 * delta))
                kern[on] = -0.25j * k * _h(1, k * r) * r / (2.0 * panel.radius)
    else:
        kern = _dlp_n(k, x, tnormals[own], y, ny)
    vals = kern * speed * w
    lag = _lagrange_matrix(t) * vals[:, None]
    out = np.zeros((len(targets), 16), dtype=complex)
    np.add.at(out, own, lag)
    return out


def _layer_matrix(boundary: Boundary, k, targets, tnormals=None, kind="dlp", target_edges=None):
    """Dense matrix of the (normal derivative of the) double layer, near-corrected."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    nodes, normals, wts = boundary.nodes, boundary.normals, boundary.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "dlp":
            mat = _dlp(k, targets[:, None, :], nodes[None, :, :], normals[None, :, :])
        else:
            tn = np.asarray(tnormals, dtype=float)
            mat = _dlp_n(k, targets[:, None, :], tn[:, None, :], nodes[None, :, :], normals[None, :, :])
    mat *= wts[None, :]
    for j, panel in enumerate(boundary.panels):
        cols = slice(16 * j, 16 * (j + 1))
        c = panel.point(0.0)
        dist = np.hypot(targets[:, 0] - c[0], targets[:, 1] - c[1])
        near = dist < _NEAR * panel.length
        if target_edges is not None and panel.edge_id is not None:
            same = target_edges == panel.edge_id
            mat[same, cols] = 0.0
            near &= ~same
        idx = np.flatnonzero(near)
        if len(idx):
            tn = None if tnormals is None else np.asarray(tnormals)[idx]
            mat[idx, cols] = _near_block(panel, k, targets[idx], tn, kind)
    if not np.all(np.isfinite(mat)):
        raise DomainError("evaluation point on the boundary")
    return mat


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BoundarySolution:
    """Total field on the boundary nodes together with everything needed to evaluate it elsewhere."""

    boundary: Boundary
    k: float
    incidence: PlaneWave | PointSource
    density: np.ndarray
    cond: float
    residual: float
    disc: Discretization

    def field(self, points):
        """Total field at points outside the obstacles."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = self.incidence.value(self.k, pts)
        if self.boundary.n_nodes:
            u = u + _layer_matrix(self.boundary, self.k, pts) @ self.density
        return u

    def scattered(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.field(pts) - self.incidence.value(self.k, pts)

    def normal_derivative(self, points, normals):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        nrm = np.atleast_2d(np.asarray(normals, dtype=float))
        du = np.sum(self.incidence.gradient(self.k, pts) * nrm, axis=-1)
        if self.boundary.n_nodes:
            du = du + _layer_matrix(self.boundary, self.k, pts, nrm, kind="dlp_n") @ self.density
        return du

    def boundary_trace(self, points):
        """Total field at points on straight boundary panels (interpolated density)."""
        return self.boundary.interpolate(self.density, points)


def solve(scene, ctx: WaveContext, disc: Discretization = Discretization()) -> BoundarySolution:
    """Solve the exterior sound-hard problem for ``scene`` (a Scene or a prepared Boundary)."""
    if isinstance(scene, Boundary):
        boundary = scene
    else:
        if isinstance(ctx.incidence, PointSource):
            y = np.asarray(ctx.incidence.y)
            if any(p.contains(y) or p.distance_to_boundary(y) < 1e-12 for p in scene.obstacles):
                raise DomainError("point source must lie outside the obstacles")
        boundary = polygon_boundary(scene, disc)
    k = ctx.k
    n = boundary.n_nodes
    if n == 0:
        return BoundarySolution(boundary, k, ctx.incidence, np.zeros(0, complex), 1.0, 0.0, disc)
    nodes = boundary.nodes
    kmat = _layer_matrix(boundary, k, nodes, target_edges=boundary.edge_ids)
    amat = 0.5 * np.eye(n) - kmat
    rhs = ctx.incidence.value(k, nodes)
    chief = boundary.chief_points
    if len(chief):
        cmat = _layer_matrix(boundary, k, chief)
        amat = np.vstack([amat, cmat])
        rhs = np.concatenate([rhs, -ctx.incidence.value(k, chief)])
    q, r = scipy.linalg.qr(amat, mode="economic")
    rcond, info = scipy.linalg.lapack.ztrcon(r, norm="1")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if not cond < disc.cond_max:
        raise IllConditionedError(f"boundary system condition estimate {cond:.3e} exceeds {disc.cond_max:.1e} (k={k})")
    dens = scipy.linalg.solve_triangular(r, q.conj().T @ rhs)
    res = float(np.linalg.norm(amat @ dens - rhs) / np.linalg.norm(rhs))
    logger.debug("solved %d unknowns, cond %.2e, residual %.2e", n, cond, res)
    return BoundarySolution(boundary, k, ctx.incidence, dens, cond, res, disc)


# ---------------------------------------------------------------------------
# Cauchy data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Samples of ``u`` and ``du/dnu`` at ``M`` equispaced angles on a circle."""

    theta: np.ndarray
    u: np.ndarray
    dnu: np.ndarray
    k: float
    R: float
    center: np.ndarray
    incidence: str
    provenance: str = "near-field"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        M = len(th)
        if M < 16 or M % 2:
            raise DomainError("Cauchy data need an even number M >= 16 of samples")
        if not np.allclose(th, 2 * math.pi * np.arange(M) / M, atol=1e-12, rtol=0):
            raise DomainError("angles must be equispaced starting at 0")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "u", np.asarray(self.u, dtype=complex))
        object.__setattr__(self, "dnu", np.asarray(self.dnu, dtype=complex))
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(2))
        if self.u.shape != th.shape or self.dnu.shape != th.shape:
            raise DomainError("trace arrays must match the angle grid")
        if not (self.k > 0 and self.R > 0):
            raise DomainError("k and R must be positive")

    @property
    def M(self) -> int:
        return len(self.theta)

    @property
    def points(self):
        return self.center + self.R * np.stack([np.cos(self.theta), np.sin(self.theta)], axis=1)

    @property
    def normals(self):
        return np.stack([np.cos(self.theta), np.sin(self.theta)], axis=1)

    def scaled(self, c: complex) -> "CauchyData":
        return CauchyData(self.theta, c * self.u, c * self.dnu, self.k, self.R, self.center, self.incidence, self.provenance, dict(self.meta))

    def __add__(self, other: "CauchyData") -> "CauchyData":
        if other.M != self.M or other.k != self.k or other.R != self.R or not np.array_equal(other.center, self.center):
            raise DomainError("cannot add Cauchy data on different circles")
        return CauchyData(self.theta, self.u + other.u, self.dnu + other.dnu, self.k, self.R, self.center, self.incidence, self.provenance, dict(self.meta))

    def header(self) -> dict:
        c = self.center
        hdr = {
            "k": repr(float(self.k)),
            "R": repr(float(self.R)),
            "center": f"[{float(c[0])!r}, {float(c[1])!r}]",
            "incidence": self.incidence,
            "provenance": self.provenance,
        }
        hdr.update({key: str(v) for key, v in self.meta.items()})
        return hdr

    def to_csv(self, extra_header: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        buf.write("# " + ", ".join(f"{key}={val}" for key, val in self.header().items() if key in ("k", "R", "center", "incidence")) + "\n")
        for key, val in self.header().items():
            if key not in ("k", "R", "center", "incidence"):
                buf.write(f"# {key}={val}\n")
        for line in extra_header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "re_u", "im_u", "re_dnu", "im_dnu"])
        for t, a, b in zip(self.theta, self.u, self.dnu):
            w.writerow([repr(float(t)), repr(float(a.real)), repr(float(a.imag)), repr(float(b.real)), repr(float(b.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CauchyData":
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("k="):
                    meta.update(_parse_main_header(body))
                elif "=" in body:
                    key, _, val = body.partition("=")
                    meta.setdefault(key.strip(), val.strip())
            elif line.strip() and not line.startswith("theta"):
                rows.append([float(v) for v in line.split(",")])
        arr = np.array(rows)
        known = {"k", "R", "center", "incidence", "provenance"}
        extra = {key: v for key, v in meta.items() if key not in known and key != "config"}
        return cls(
            theta=arr[:, 0],
            u=arr[:, 1] + 1j * arr[:, 2],
            dnu=arr[:, 3] + 1j * arr[:, 4],
            k=float(meta["k"]),
            R=float(meta["R"]),
            center=np.array([float(v) for v in meta["center"].strip("[]").split(",")]),
            incidence=meta["incidence"],
            provenance=meta.get("provenance", "near-field"),
            meta=extra,
        )


def _parse_main_header(body):
    out = {}
    # format: k=..., R=..., center=[a, b], incidence=kind(...=[a, b])
    k_part, rest = body.split(", R=", 1)
    out["k"] = k_part.split("=", 1)[1]
    r_part, rest = rest.split(", center=", 1)
    out["R"] = r_part
    c_part, inc = rest.split(", incidence=", 1)
    out["center"] = c_part
    out["incidence"] = inc
    return out


def _circle(center, R, M):
    theta = 2 * math.pi * np.arange(M) / M
    nrm = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return theta, np.asarray(center, dtype=float) + R * nrm, nrm


def cauchy_data(sol: BoundarySolution, R: float, M: int = 512, center=(0.0, 0.0), provenance="near-field") -> CauchyData:
    """Traces of the total field and its radial derivative on the circle ``|x - center| = R``."""
    center = np.asarray(center, dtype=float)
    if sol.boundary.n_nodes:
        dist = np.linalg.norm(sol.boundary.nodes - center, axis=1)
        if np.max(dist) >= R:
            raise DomainError("measurement circle intersects or lies inside the obstacles")
    theta, pts, nrm = _circle(center, R, M)
    u = sol.field(pts)
    du = sol.normal_derivative(pts, nrm)
    return CauchyData(theta, u, du, sol.k, R, center, sol.incidence.describe(), provenance)


def incident_cauchy_data(k, incidence, R, M=512, center=(0.0, 0.0)) -> CauchyData:
    """Exact traces of the incident field alone (the no-obstacle scene)."""
    theta, pts, nrm = _circle(center, R, M)
    u = incidence.value(k, pts)
    du = np.sum(incidence.gradient(k, pts) * nrm, axis=-1)
    prov = "point-source" if isinstance(incidence, PointSource) else "near-field"
    return CauchyData(theta, u, du, k, R, np.asarray(center, float), incidence.describe(), prov)


def point_source_data(scene: Scene, k: float, y, R: float | None = None, M: int = 512, disc: Discretization = Discretization()) -> CauchyData:
    """Traces of ``Phi_D(., y)`` on the measurement circle for a source ``y`` outside it.

    Warns (does not fail) when ``diam D < dist(D, dB_R1)`` is violated.
    """
    y = np.asarray(y, dtype=float)
    center = scene.measurement_center
    R = scene.R if R is None else R
    if np.linalg.norm(y - center) <= R:
        raise DomainError("the point source must lie outside the measurement disc")
    r1 = float(np.linalg.norm(y - center))
    if scene.obstacles and not scene.diameter() < scene.distance_to_circle(r1):
        warnings.warn(
            f"diam D = {scene.diameter():.4g} is not below dist(D, source circle) = {scene.distance_to_circle(r1):.4g}",
            EnclosureWarning,
            stacklevel=2,
        )
    ctx = WaveContext(k, PointSource(tuple(y)))
    if scene.is_empty:
        return incident_cauchy_data(k, ctx.incidence, R, M, center)
    sol = solve(scene, ctx, disc)
    return cauchy_data(sol, R, M, center, provenance="point-source")


def add_noise(data: CauchyData, level: float, seed: int | None = 0) -> CauchyData:
    """Independent complex Gaussian perturbation relative to the local magnitude of each trace."""
    if level < 0:
        raise DomainError("noise level must be non-negative")
    rng = np.random.default_rng(seed)
    M = data.M

    def perturb(x):
        z = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / math.sqrt(2.0)
        return x + level * np.abs(x) * z

    meta = dict(data.meta)
    meta["noise"] = repr(float(level))
    return CauchyData(data.theta, perturb(data.u), perturb(data.dnu), data.k, data.R, data.center, data.incidence, data.provenance, meta)


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------


def _mpfr_text(x, digits: int) -> str:
    """Scientific notation with ``digits`` significant digits."""
    if x == 0:
        return "0.0e+0"
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+d}"


@dataclass(frozen=True, eq=False)
class FarField:
    """Far-field pattern at ``Q`` equispaced directions, stored to ``precision_bits`` bits.

    ``values`` holds gmpy2 complex numbers. Extended precision matters because
    the Herglotz pairing multiplies sample errors by ``(s/k)**N``.
    """

    phi: np.ndarray
    values: tuple
    k: float
    precision_bits: int
    incidence: str = ""

    def __post_init__(self):
        Q = len(self.phi)
        if Q < 4 or Q % 2:
            raise DomainError("far field needs an even number of directions")
        if not np.allclose(self.phi, 2 * math.pi * np.arange(Q) / Q, atol=1e-12, rtol=0):
            raise DomainError("directions must be equispaced starting at 0")
        if len(self.values) != Q:
            raise DomainError("values must match the direction grid")

    @property
    def Q(self) -> int:
        return len(self.phi)

    @property
    def F(self) -> np.ndarray:
        return np.array([complex(v) for v in self.values])

    def moments(self, nmax: int):
        """``M_m = (1/Q) sum_q F(-phi_q) e^{i m phi_q}`` for ``m = -nmax..nmax`` (extended precision)."""
        cache = self.__dict__.setdefault("_moments", {})
        if nmax in cache:
            return cache[nmax]
        Q = self.Q
        with gmpy2.context(precision=self.precision_bits):
            twopi = 2 * gmpy2.const_pi()
            roots = []
            for j in range(Q):
                c, s = gmpy2.sin_cos(twopi * j / Q)[::-1]
                roots.append(gmpy2.mpc(c, s))
            g = [self.values[(q + Q // 2) % Q] for q in range(Q)]
            out = {}
            for m in range(-nmax, nmax + 1):
                acc = gmpy2.mpc(0)
                for q in range(Q):
                    acc += g[q] * roots[(m * q) % Q]
                out[m] = acc / Q
        cache[nmax] = out
        return out

    def to_csv(self, extra_header: Sequence[str] = ()) -> str:
        digits = int(math.ceil(self.precision_bits * math.log10(2))) + 2
        buf = io.StringIO()
        buf.write(f"# k={self.k!r}, precision_bits={self.precision_bits}, incidence={self.incidence}\n")
        for line in extra_header:
            buf.write(f"# {line}\n")
        buf.write("phi,re_F,im_F\n")
        for ph, v in zip(self.phi, self.values):
            buf.write(f"{float(ph)!r},{_mpfr_text(v.real, digits)},{_mpfr_text(v.imag, digits)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FarField":
        lines = text.splitlines()
        head = next((ln[1:].strip() for ln in lines if ln.startswith("# k=")), None)
        if head is None:
            raise DomainError("far-field file lacks its '# k=...' header line")
        k = float(head.split("k=", 1)[1].split(",", 1)[0])
        bits = int(head.split("precision_bits=", 1)[1].split(",", 1)[0])
        inc = head.split("incidence=", 1)[1] if "incidence=" in head else ""
        phi, vals = [], []
        with gmpy2.context(precision=bits):
            for line in lines:
                if line.startswith("#") or line.startswith("phi") or not line.strip():
                    continue
                a, b, c = line.split(",")
                phi.append(float(a))
                vals.append(gmpy2.mpc(gmpy2.mpfr(b), gmpy2.mpfr(c)))
        return cls(np.array(phi), tuple(vals), k, bits, inc)


def far_field(sol: BoundarySolution, Q: int = 256, precision_bits: int = 53) -> FarField:
    """Far-field pattern ``F`` with ``w(r phi) ~ e^{ikr} r^{-1/2} F(phi)``.

    The node sum is evaluated in ``precision_bits``-bit arithmetic, treating the
    double-precision nodes, weights and density as exact.
    """
    if Q < 4 or Q % 2:
        raise DomainError("Q must be even and at least 4")
    phi = 2 * math.pi * np.arange(Q) / Q
    k = sol.k
    n = sol.boundary.n_nodes
    if n == 0:
        vals = tuple(gmpy2.mpc(0) for _ in range(Q))
        return FarField(phi, vals, k, precision_bits, sol.incidence.describe())
    y = sol.boundary.nodes
    nu = sol.boundary.normals
    coef = sol.boundary.weights * sol.density
    if precision_bits <= 53:
        ph = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        term = (-1j * k * (ph @ nu.T)) * np.exp(-1j * k * (ph @ y.T)) * coef[None, :]
        F = np.exp(0.25j * math.pi) / math.sqrt(8 * math.pi * k) * term.sum(axis=1)
        return FarField(phi, tuple(gmpy2.mpc(complex(v)) for v in F), k, 53, sol.incidence.describe())
    vals = []
    with gmpy2.context(precision=precision_bits):
        mpf = gmpy2.mpfr
        kk = mpf(k)
        yx = [mpf(float(v)) for v in y[:, 0]]
        yy = [mpf(float(v)) for v in y[:, 1]]
        nx = [mpf(float(v)) for v in nu[:, 0]]
        ny = [mpf(float(v)) for v in nu[:, 1]]
        cr = [mpf(float(v.real)) for v in coef]
        ci = [mpf(float(v.imag)) for v in coef]
        twopi = 2 * gmpy2.const_pi()
        pref_arg = gmpy2.const_pi() / 4
        pref = gmpy2.mpc(gmpy2.cos(pref_arg), gmpy2.sin(pref_arg)) / gmpy2.sqrt(8 * gmpy2.const_pi() * kk)
        for q in range(Q):
            s_, c_ = gmpy2.sin_cos(twopi * q / Q)
            acc_r = mpf(0)
            acc_i = mpf(0)
            for j in range(n):
                arg = kk * (c_ * yx[j] + s_ * yy[j])
                sn, cs = gmpy2.sin_cos(arg)
                # (-i k phi.nu) e^{-i arg} (cr + i ci)
                a = kk * (c_ * nx[j] + s_ * ny[j])
                # e^{-i arg} (cr + i ci) = (cs cr + sn ci) + i (cs ci - sn cr)
                er = cs * cr[j] + sn * ci[j]
                ei = cs * ci[j] - sn * cr[j]
                # multiply by -i a: (er + i ei)(-i a) = a ei - i a er
                acc_r += a * ei
                acc_i -= a * er
            vals.append(pref * gmpy2.mpc(acc_r, acc_i))
    return FarField(phi, tuple(vals), k, precision_bits, sol.incidence.describe())
