import math

import numpy as np
import pytest

from enclosure import forward as fw
from enclosure import indicators as ind
from enclosure import reconstruct as rc
from enclosure.errors import DomainError, InsufficientDataError
from enclosure.geometry import Direction, Polygon, Scene, polygon_area, support
from enclosure.probes import ProbeParams

X0 = np.array([0.5, 0.5])
SQUARE = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
PLANE = fw.PlaneWave((1.0, 0.0))

VERTEX_TOL = 5e-2


def _synthetic(ratio_fn, logabs_fn=None, grid=None, omega=None):
    grid = ind.default_tau_grid(0.75) if grid is None else grid
    samples = []
    for t in grid:
        t = float(t)
        r = ratio_fn(t)
        if logabs_fn is None:
            samples.append(ind.IndicatorSample(t, 1.0 + 0j, complex(r), 0.0))
        else:
            # the scale carries the modulus, the mantissa only a phase
            I = np.exp(1j * 0.37 * t)
            samples.append(ind.IndicatorSample(t, complex(I), complex(r * I), logabs_fn(t)))
    return ind.IndicatorSeries(omega or Direction.from_angle(0.4), 1.0, "synthetic", samples)


def test_ratio_fit_recovers_synthetic_limit():
    L, mu = 1.0 + 0.5j, 2 / 3
    ser = _synthetic(lambda t: L - mu / t + 0.1 / t**2)
    res = rc.vertex_estimate(ser)
    assert abs(res.limit - L) < 1e-10
    assert abs(res.mu_star_est - mu) < 1e-8
    assert res.residual < 1e-12
    assert res.n_used == 30


def test_support_fit_recovers_synthetic_growth():
    ser = _synthetic(lambda t: 1.0, lambda t: 1.4 * t - (2 / 3) * math.log(t))
    h, mu, c, rms = rc.support_fit(ser)
    assert abs(h - 1.4) < 1e-3
    assert abs(mu - 2 / 3) < 1e-6


def test_support_of_square(square_data, diag):
    ser = ind.ratio_series(square_data, diag)
    assert abs(rc.support_estimate(ser) - math.sqrt(2) / 2) < 5e-2
    assert rc.support_estimate(ind.ratio_series(square_data.scaled(5e3j), diag)) == pytest.approx(rc.support_estimate(ser), abs=1e-12)


def test_vertex_from_limit_identity():
    rng = np.random.default_rng(5)
    for _ in range(10):
        om = Direction.from_angle(rng.uniform(0, 2 * math.pi))
        x = rng.normal(size=2)
        L = complex(x @ om.omega, x @ om.omega_perp)
        np.testing.assert_allclose(rc.vertex_from_limit(L, om), x, atol=1e-14)


def test_vertex_of_square(square_data, diag):
    res = rc.vertex_estimate(ind.ratio_series(square_data, diag))
    assert np.linalg.norm(res.vertex_est - X0) < VERTEX_TOL
    assert abs(res.mu_star_est - 2 / 3) < 0.15
    assert "vertex=" in res.summary()


def test_beta0():
    b = rc.beta0()
    assert 0.60 < b < 0.65
    assert abs(2 / math.e * b + math.log(b)) < 1e-11
    s = np.linspace(0.05, 2.0, 50)
    assert np.all(np.diff(2 / math.e * s + np.log(s)) > 0)


def test_farfield_beta_out_of_range(square_far_field, diag):
    with pytest.raises(DomainError, match="beta0"):
        rc.farfield_reconstruct(square_far_field, diag, 0.7, range(10, 100, 5), 0.75)
    with pytest.raises(DomainError):
        rc.farfield_reconstruct(square_far_field, diag, 0.0, range(10, 100, 5), 0.75)


def test_translation_equivariance(square_scene, square_data, diag):
    t = np.array([0.3, -0.2])
    sol = fw.solve(square_scene.translated(t), fw.WaveContext(1.0, PLANE))
    moved = ind.ratio_series(fw.cauchy_data(sol, 0.75, 1024, center=t), diag)
    base = ind.ratio_series(square_data, diag)
    # translating the probe multiplies I by exp(t . c_tau), so the ratio shifts by t . dc/dtau
    shift = np.array([t @ ProbeParams(diag, tau, 1.0).dtau_c for tau in base.taus])
    np.testing.assert_allclose(moved.ratios, base.ratios + shift, atol=1e-9)
    dv = rc.vertex_estimate(moved).vertex_est - rc.vertex_estimate(base).vertex_est
    # the k^2/tau^2 part of the shift is absorbed by the fit, not exactly
    assert np.linalg.norm(dv - t) < 1e-4


def test_rotation_equivariance(square_scene, square_data, diag):
    a = 0.3
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    sol = fw.solve(square_scene.rotated(a), fw.WaveContext(1.0, fw.PlaneWave(tuple(rot @ [1.0, 0.0]))))
    om = Direction(rot @ diag.omega)
    got = rc.vertex_estimate(ind.ratio_series(fw.cauchy_data(sol, 0.75, 1024), om)).vertex_est
    want = rot @ rc.vertex_estimate(ind.ratio_series(square_data, diag)).vertex_est
    assert np.linalg.norm(got - want) < 1e-8


@pytest.fixture(scope="module")
def square_sweep(square_data):
    return rc.hull_sweep(square_data, 64)


def test_square_sweep_finds_corners(square_sweep):
    assert square_sweep.n_clusters == 4
    for v in SQUARE:
        assert np.min(np.linalg.norm(square_sweep.representatives - v, axis=1)) < VERTEX_TOL


def test_sweep_never_fabricates(square_sweep, square_scene):
    # near an edge normal an estimate may be dropped or degrade, but it stays with its own corner
    normals = np.array([0, 0.5, 1.0, 1.5]) * math.pi
    cell = 2 * math.pi / 64
    for th, r, lab in zip(square_sweep.theta, square_sweep.results, square_sweep.labels):
        if r is None:
            assert lab == -1
            continue
        if lab < 0:
            continue
        d = np.linalg.norm(SQUARE - r.vertex_est, axis=1)
        rep = square_sweep.representatives[lab]
        assert np.argmin(d) == np.argmin(np.linalg.norm(SQUARE - rep, axis=1))
        off = np.abs((normals - th + math.pi) % (2 * math.pi) - math.pi).min()
        if off > 4 * cell:
            assert d.min() < VERTEX_TOL
    # jumps happen close to the edge normals
    for j in square_sweep.jump_angles:
        d = np.abs((normals - j + math.pi) % (2 * math.pi) - math.pi)
        assert d.min() <= 1.5 * cell


def test_triangle_sweep(triangle_scene, triangle_data):
    hs = rc.hull_sweep(triangle_data, 64)
    assert hs.n_clusters == 3
    true_area = polygon_area(triangle_scene.obstacles[0].vertices)
    assert abs(polygon_area(hs.hull) - true_area) / true_area < 0.05


def test_sweep_csv(square_sweep):
    text = square_sweep.to_csv()
    lines = text.splitlines()
    assert lines[0].startswith("#") and "cluster_tol=" in lines[0]
    body = [ln for ln in lines if not ln.startswith("#")]
    assert len(body) == 65
    assert len(square_sweep.hull_csv().strip().splitlines()) >= 4


def test_localize_by_minimization(square_data, diag):
    y = rc.localize_by_minimization(square_data, diag, tau=30.0)
    assert np.linalg.norm(y - X0) < VERTEX_TOL
    p = ProbeParams(diag, 30.0, 1.0)
    r = ind.indicator(square_data, p).ratio
    obj = lambda z: abs(r - z @ p.dtau_c)
    assert obj(X0) < obj(X0 + 0.5 * diag.omega)
    dist = [np.linalg.norm(rc.localize_by_minimization(square_data, diag, tau=t) - X0) for t in (10.0, 20.0, 40.0)]
    assert dist[0] > dist[1] > dist[2]


def test_insufficient_data():
    ser = _synthetic(lambda t: 1.0, grid=np.linspace(2, 10, 8))
    with pytest.raises(InsufficientDataError):
        rc.vertex_estimate(ser)
    empty = fw.incident_cauchy_data(1.0, PLANE, 0.75, M=256)
    with pytest.raises(InsufficientDataError):
        rc.hull_sweep(empty, 8)


def test_support_of_scaled_square_off_axis():
    sc = Scene(obstacles=[Polygon(SQUARE * 0.6)], R=0.75)
    om = Direction.from_angle(0.9)
    data = fw.cauchy_data(fw.solve(sc, fw.WaveContext(1.0, PLANE)), 0.75, 1024)
    h = rc.support_estimate(ind.ratio_series(data, om))
    assert abs(h - support(sc, om).h) < 5e-2
