"""Obstacle geometry, the omega / omega-perp convention, support functions and hulls.

Directions follow the convention ``omega_perp = (omega_2, -omega_1)``, so that
``(omega_perp, omega)`` is positively oriented and

    x . omega + i x . omega_perp = (x1 - i x2) (omega1 + i omega2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "Direction",
    "perp",
    "Polygon",
    "Screen",
    "Scene",
    "SupportResult",
    "CornerFrame",
    "support",
    "singular_directions",
    "convex_hull",
    "polygon_area",
    "corner_frame",
]

UNIT_TOL = 1e-12


def _as_vec(x, name="vector"):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (2,):
        raise DomainError(f"{name} must be a 2-vector")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be finite")
    return v


def perp(omega) -> np.ndarray:
    """Return ``omega_perp = (omega_2, -omega_1)`` for a unit vector ``omega``."""
    w = _as_vec(omega, "omega")
    if abs(math.hypot(w[0], w[1]) - 1.0) > UNIT_TOL:
        raise DomainError("omega must be a unit vector")
    return np.array([w[1], -w[0]])


@dataclass(frozen=True)
class Direction:
    """A unit direction together with its fixed perpendicular."""

    omega: np.ndarray

    def __post_init__(self):
        w = _as_vec(self.omega, "omega")
        if abs(math.hypot(w[0], w[1]) - 1.0) > UNIT_TOL:
            raise DomainError("omega must be a unit vector")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        return cls(np.array([math.cos(theta), math.sin(theta)]))

    @classmethod
    def coerce(cls, value) -> "Direction":
        """Accept a Direction, a 2-vector, or an angle in radians."""
        if isinstance(value, Direction):
            return value
        if np.ndim(value) == 0:
            return cls.from_angle(float(value))
        return cls(value)

    @property
    def omega_perp(self) -> np.ndarray:
        return np.array([self.omega[1], -self.omega[0]])

    @property
    def complex(self) -> complex:
        """omega as the complex number omega1 + i omega2."""
        return complex(self.omega[0], self.omega[1])

    @property
    def angle(self) -> float:
        return math.atan2(self.omega[1], self.omega[0]) % (2 * math.pi)


def polygon_area(vertices) -> float:
    """Signed area (positive for counter-clockwise order)."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_intersect(p1, p2, q1, q2, eps=1e-14) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps and min(a[1], b[1]) - eps <= c[1] <= max(
            a[1], b[1]
        ) + eps

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True
    if abs(d1) <= eps and on_seg(q1, q2, p1):
        return True
    if abs(d2) <= eps and on_seg(q1, q2, p2):
        return True
    if abs(d3) <= eps and on_seg(p1, p2, q1):
        return True
    if abs(d4) <= eps and on_seg(p1, p2, q2):
        return True
    return False


def _point_in_polygon(pt, verts) -> bool:
    x, y = pt
    inside = False
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counter-clockwise vertices (clockwise input is reversed)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("a polygon needs at least three 2D vertices")
        if not np.all(np.isfinite(v)):
            raise DomainError("polygon vertices must be finite")
        area = polygon_area(v)
        if abs(area) < 1e-14:
            raise DomainError("degenerate polygon (zero area)")
        if area < 0:
            v = v[::-1].copy()
        n = len(v)
        for i in range(n):
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if _segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise DomainError("polygon is not simple")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def contains(self, pt) -> bool:
        return _point_in_polygon(pt, self.vertices)

    def distance_to_boundary(self, pt) -> float:
        p = np.asarray(pt, dtype=float)
        best = math.inf
        for a, b in self.edges():
            ab = b - a
            t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
            best = min(best, float(np.linalg.norm(p - (a + t * ab))))
        return best


@dataclass(frozen=True)
class Screen:
    """Open piecewise-linear arc; ``endpoint_flags`` mark which ends are true screen tips."""

    vertices: np.ndarray
    endpoint_flags: tuple = (True, True)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise DomainError("a screen needs at least two 2D vertices")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "endpoint_flags", tuple(bool(f) for f in self.endpoint_flags))

    def edges(self):
        v = self.vertices
        return [(v[i], v[i + 1]) for i in range(len(v) - 1)]


@dataclass(frozen=True)
class Scene:
    """Obstacles (or screens) inside the measurement disc ``B_R(center)``."""

    obstacles: tuple = ()
    screens: tuple = ()
    measurement_center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    R: float = 1.0
    R1: float | None = None

    def __post_init__(self):
        obs = tuple(o if isinstance(o, Polygon) else Polygon(o) for o in self.obstacles)
        scr = tuple(s if isinstance(s, Screen) else Screen(**s) if isinstance(s, dict) else Screen(s) for s in self.screens)
        c = _as_vec(self.measurement_center, "measurement_center")
        c.setflags(write=False)
        object.__setattr__(self, "obstacles", obs)
        object.__setattr__(self, "screens", scr)
        object.__setattr__(self, "measurement_center", c)
        if not (self.R > 0 and math.isfinite(self.R)):
            raise DomainError("R must be positive")
        if self.R1 is not None and not self.R1 > self.R:
            raise DomainError("R1 must exceed R")
        pts = self.all_vertices()
        if len(pts) and np.max(np.linalg.norm(pts - c, axis=1)) >= self.R:
            raise DomainError("every obstacle must lie strictly inside the measurement circle")
        self._check_disjoint()

    def _check_disjoint(self):
        shapes = [o.edges() for o in self.obstacles] + [s.edges() for s in self.screens]
        for i in range(len(shapes)):
            for j in range(i + 1, len(shapes)):
                for a, b in shapes[i]:
                    for c, d in shapes[j]:
                        if _segments_intersect(a, b, c, d):
                            raise DomainError("obstacle closures must be disjoint")
        for i, oi in enumerate(self.obstacles):
            for j, oj in enumerate(self.obstacles):
                if i != j and oi.contains(oj.vertices[0]):
                    raise DomainError("obstacle closures must be disjoint")
            for s in self.screens:
                if oi.contains(s.vertices[0]):
                    raise DomainError("screens must lie outside the obstacles")

    @property
    def is_empty(self) -> bool:
        return not self.obstacles and not self.screens

    def all_vertices(self) -> np.ndarray:
        pts = [o.vertices for o in self.obstacles] + [s.vertices for s in self.screens]
        if not pts:
            return np.zeros((0, 2))
        return np.vstack(pts)

    def diameter(self) -> float:
        pts = self.all_vertices()
        if len(pts) < 2:
            return 0.0
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))

    def distance_to_circle(self, radius: float, center=None) -> float:
        """Distance from the obstacles to the circle of given radius (around the measurement centre)."""
        c = self.measurement_center if center is None else _as_vec(center)
        pts = self.all_vertices()
        return float(radius - np.max(np.linalg.norm(pts - c, axis=1)))

    def translated(self, t) -> "Scene":
        t = _as_vec(t)
        return Scene(
            obstacles=tuple(Polygon(o.vertices + t) for o in self.obstacles),
            screens=tuple(Screen(s.vertices + t, s.endpoint_flags) for s in self.screens),
            measurement_center=self.measurement_center + t,
            R=self.R,
            R1=self.R1,
        )

    def rotated(self, angle: float) -> "Scene":
        """Rotate obstacles and measurement centre about the origin."""
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return Scene(
            obstacles=tuple(Polygon(o.vertices @ rot.T) for o in self.obstacles),
            screens=tuple(Screen(sc.vertices @ rot.T, sc.endpoint_flags) for sc in self.screens),
            measurement_center=rot @ self.measurement_center,
            R=self.R,
            R1=self.R1,
        )

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "obstacles": [o.vertices.tolist() for o in self.obstacles],
            "screens": [{"vertices": s.vertices.tolist(), "endpoint_flags": list(s.endpoint_flags)} for s in self.screens],
            "measurement_center": self.measurement_center.tolist(),
            "R": self.R,
            "R1": self.R1,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        screens = []
        for s in d.get("screens", []) or []:
            if isinstance(s, dict):
                screens.append(Screen(s["vertices"], tuple(s.get("endpoint_flags", (True, True)))))
            else:
                screens.append(Screen(s))
        return cls(
            obstacles=tuple(Polygon(v) for v in d.get("obstacles", []) or []),
            screens=tuple(screens),
            measurement_center=d.get("measurement_center", [0.0, 0.0]),
            R=float(d["R"]),
            R1=None if d.get("R1") is None else float(d["R1"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Scene":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SupportResult:
    h: float
    argmax_points: tuple
    regular: bool


def support(scene: Scene, omega, merge_tol: float = 1e-9) -> SupportResult:
    """Support value ``h = max x . omega`` over all vertices, with the maximising vertices.

    Vertices within ``merge_tol * diameter`` of the maximum count as maximisers;
    coincident maximisers are merged.
    """
    w = Direction.coerce(omega).omega
    pts = scene.all_vertices()
    if len(pts) == 0:
        raise DomainError("support of an empty scene is undefined")
    proj = pts @ w
    h = float(np.max(proj))
    scale = max(scene.diameter(), 1.0) if len(pts) > 1 else 1.0
    tol = merge_tol * scale
    cand = pts[proj >= h - tol]
    merged = []
    for p in cand:
        if not any(np.linalg.norm(p - q) <= tol for q in merged):
            merged.append(p.copy())
    merged.sort(key=lambda p: (p[0], p[1]))
    return SupportResult(h=h, argmax_points=tuple(merged), regular=len(merged) == 1)


def convex_hull(points) -> np.ndarray:
    """Counter-clockwise convex hull with collinear points removed (monotone chain)."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        raise DomainError("convex hull needs at least three distinct points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    scale = max(float(np.ptp(pts[:, 0])), float(np.ptp(pts[:, 1])), 1e-300)
    eps = 1e-12 * scale * scale

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= eps:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= eps:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DomainError("all points are collinear")
    return hull


def singular_directions(scene: Scene) -> list:
    """Outward normal angles in ``[0, 2 pi)`` of the edges of the convex hull, sorted."""
    hull = convex_hull(scene.all_vertices())
    angles = []
    for i in range(len(hull)):
        e = hull[(i + 1) % len(hull)] - hull[i]
        # outward normal of a counter-clockwise polygon lies to the right of the edge
        angles.append(math.atan2(-e[0], e[1]) % (2 * math.pi))
    return sorted(angles)


@dataclass(frozen=True)
class CornerFrame:
    """Local polar frame at a support vertex.

    The edge at angle ``p`` (measured from omega_perp towards omega) carries
    ``theta = 0``; the one at ``q`` carries ``theta = Theta``.
    """

    x0: np.ndarray
    p: float
    q: float
    Theta: float
    edge_p: np.ndarray  # unit vector along the p-edge, pointing away from x0
    edge_q: np.ndarray
    polygon_index: int
    vertex_index: int


def corner_frame(scene: Scene, omega) -> CornerFrame:
    """Build the corner frame at the unique vertex attaining the support value in direction ``omega``."""
    d = Direction.coerce(omega)
    res = support(scene, d)
    if not res.regular:
        raise DomainError("omega is not regular: several vertices attain the support value")
    x0 = res.argmax_points[0]
    for pi, poly in enumerate(scene.obstacles):
        dist = np.linalg.norm(poly.vertices - x0, axis=1)
        vi = int(np.argmin(dist))
        if dist[vi] < 1e-12 * max(1.0, scene.diameter()):
            break
    else:
        raise DomainError("the support vertex does not belong to a polygonal obstacle")
    v = poly.vertices
    n = len(v)
    e1 = v[(vi + 1) % n] - v[vi]
    e2 = v[(vi - 1) % n] - v[vi]
    e1 = e1 / np.linalg.norm(e1)
    e2 = e2 / np.linalg.norm(e2)
    wp = d.omega_perp
    psi1 = math.atan2(e1 @ d.omega, e1 @ wp)
    psi2 = math.atan2(e2 @ d.omega, e2 @ wp)
    if psi1 >= psi2:
        p, q, ep, eq = psi1, psi2, e1, e2
    else:
        p, q, ep, eq = psi2, psi1, e2, e1
    if not (-math.pi < q < p < 0):
        raise DomainError("edge angles outside (-pi, 0): omega is not regular at this vertex")
    return CornerFrame(
        x0=np.array(x0), p=p, q=q, Theta=2 * math.pi + q - p, edge_p=ep, edge_q=eq, polygon_index=pi, vertex_index=vi
    )
