import math

import gmpy2
import numpy as np
import pytest

from enclosure import forward as fw
from enclosure import indicators as ind
from enclosure.errors import DomainError, EnclosureWarning, InsufficientDataError
from enclosure.geometry import Direction, Scene
from enclosure.probes import ProbeParams, dnu_v

X0 = np.array([0.5, 0.5])


@pytest.fixture(scope="module")
def empty_plane():
    return fw.incident_cauchy_data(1.0, fw.PlaneWave((1.0, 0.0)), 0.75, M=1024)


def _random_data(seed, M=64):
    rng = np.random.default_rng(seed)
    th = 2 * math.pi * np.arange(M) / M
    z = lambda: rng.normal(size=M) + 1j * rng.normal(size=M)
    return fw.CauchyData(th, z(), z(), 1.0, 0.75, (0.0, 0.0), "synthetic")


def test_null_plane_wave(empty_plane, diag):
    for tau in np.concatenate([np.linspace(1, 5, 9), ind.default_tau_grid(0.75)]):
        s = ind.indicator(empty_plane, ProbeParams(diag, float(tau), 1.0))
        # mantissa is I / exp(max exponent on the circle), i.e. scaled by exp(tau R)
        assert abs(s.I) < 1e-10
        assert abs(s.scale - tau * 0.75) < 1e-6 * tau
        assert not s.valid
    with pytest.raises(InsufficientDataError):
        ind.ratio_series(empty_plane, diag)


def test_null_plane_wave_coarse_circle(diag):
    coarse = fw.incident_cauchy_data(1.0, fw.PlaneWave((1.0, 0.0)), 0.75, M=256)
    for tau in np.linspace(1, 5, 17):
        assert abs(ind.indicator(coarse, ProbeParams(diag, float(tau), 1.0)).I) < 1e-10


def test_null_point_source(diag):
    e = fw.point_source_data(Scene(R=0.75), 1.0, (-3.0, 0.0), M=1024)
    for tau in ind.default_tau_grid(0.75):
        assert abs(ind.point_source_indicator(e, ProbeParams(diag, float(tau), 1.0)).I) < 1e-10


def test_linearity():
    a, b = _random_data(1), _random_data(2)
    p = ProbeParams(Direction.from_angle(0.3), 3.0, 1.0)
    sa, sb, sab = (ind.indicator(d, p, sigma=0.0) for d in (a, b, a + b))
    assert abs(sab.value() - sa.value() - sb.value()) < 1e-12 * (abs(sa.value()) + abs(sb.value()))
    assert abs(sab.Ip * math.exp(sab.scale) - (sa.Ip + sb.Ip) * math.exp(sa.scale)) < 1e-12 * math.exp(sa.scale) * (abs(sa.Ip) + abs(sb.Ip))


def test_scaling_invariance(square_data, diag):
    base = ind.ratio_series(square_data, diag)
    scaled = ind.ratio_series(square_data.scaled(3.0 - 4.0j), diag)
    assert np.array_equal(base.valid, scaled.valid)
    m = base.valid
    np.testing.assert_allclose(scaled.ratios[m], base.ratios[m], rtol=1e-12)
    y = (0.2, -0.1)
    b2 = ind.shift_ratio(square_data, diag, y=y)
    s2 = ind.shift_ratio(square_data.scaled(-2j), diag, y=y)
    np.testing.assert_allclose(s2.ratios[m], b2.ratios[m], rtol=1e-12)


def test_anchor_invariance(square_data, diag):
    p = ProbeParams(diag, 12.0, 1.0)
    s0 = ind.indicator(square_data, p)
    s1 = ind.indicator(square_data, p, anchor=np.array([0.3, -0.6]))
    assert abs(s1.ratio - s0.ratio) < 1e-12 * abs(s0.ratio)
    assert abs(s1.log_abs_I - s0.log_abs_I) < 1e-12 * abs(s0.log_abs_I)


def test_Iprime_matches_tau_difference(square_data, diag):
    tau = 7.3
    p = ProbeParams(diag, tau, 1.0)
    exact = ind.indicator(square_data, p).Ip * math.exp(ind.indicator(square_data, p).scale)
    hs = [0.04, 0.02, 0.01]
    errs = []
    for h in hs:
        fd = (ind.indicator(square_data, p.with_tau(tau + h)).value() - ind.indicator(square_data, p.with_tau(tau - h)).value()) / (2 * h)
        errs.append(abs(fd - exact))
    assert np.polyfit(np.log(hs), np.log(errs), 1)[0] == pytest.approx(2.0, abs=0.15)


def test_boundary_pairing_cross_check(square_solution, square_data, diag):
    # Green's identity moves the integral onto the obstacle, where du/dnu = 0
    bd = square_solution.boundary
    for tau in (3.0, 10.0, 30.0):
        p = ProbeParams(diag, tau, 1.0)
        s = ind.indicator(square_data, p)
        ref = -np.sum(bd.weights * square_solution.density * dnu_v(bd.nodes, bd.normals, p))
        assert abs(s.value() - ref) / abs(ref) < 1e-10


def test_log_growth_tends_to_support(square_data, diag):
    grid = np.geomspace(8, 40, 12)
    ser = ind.ratio_series(square_data, diag, grid)
    gap = np.abs(ser.log_abs_I / grid - math.sqrt(0.5))
    assert np.all(np.diff(gap) < 0)


def test_ratio_limit(square_data, diag):
    ser = ind.ratio_series(square_data, diag)
    L = complex(X0 @ diag.omega, X0 @ diag.omega_perp)
    err = np.abs(ser.ratios - L)
    assert err[-1] < 0.02
    assert err[-1] < err[len(err) // 2] < err[len(err) // 4]


def test_shift_zero_is_identity(square_data, diag):
    a = ind.ratio_series(square_data, diag)
    b = ind.shift_ratio(square_data, diag, y=(0.0, 0.0))
    np.testing.assert_array_equal(a.ratios, b.ratios)
    np.testing.assert_array_equal(a.log_abs_I, b.log_abs_I)


def test_shift_matches_requadrature(square_data, diag):
    y = np.array([0.25, -0.15])
    ser = ind.shift_ratio(square_data, diag, np.array([4.0, 9.0]), y=y)
    for s in ser.samples:
        direct = ind.indicator(square_data, ProbeParams(diag, s.tau, 1.0, shift=y))
        assert abs(direct.ratio - s.ratio) < 1e-10 * abs(s.ratio)
        assert abs(direct.log_abs_I - s.log_abs_I) < 1e-10


def test_shifted_ratio_modulus(square_data, diag):
    y = X0 + np.array([0.3, 0.4])
    ser = ind.shift_ratio(square_data, diag, y=y)
    mod = np.abs(ser.ratios[ser.valid])
    assert abs(mod[-1] - 0.5) < 0.02
    assert abs(mod[-1] - 0.5) < abs(mod[len(mod) // 2] - 0.5)


def test_far_field_matches_near_field(square_far_field, square_data, diag):
    for N in (40, 60, 80):
        tau = 0.5 * N / (math.e * 0.75)
        p = ProbeParams(diag, tau, 1.0)
        a = ind.farfield_indicator(square_far_field, p, N)
        b = ind.indicator(square_data, p)
        assert a.valid
        assert abs(a.ratio - b.ratio) < 1e-3
        assert abs(a.log_abs_I - b.log_abs_I) < 1e-8


def test_far_field_tail_decay(diag):
    sol = fw.solve(fw.disc_boundary(0.5, n_panels=24), fw.WaveContext(1.0, fw.PlaneWave((1.0, 0.0))))
    F = fw.far_field(sol, 256, 256)
    data = fw.cauchy_data(sol, 0.75, 512)
    errs = []
    for N in range(1, 8):
        p = ProbeParams(diag, 0.5 * N / (math.e * 0.75), 1.0)
        a, b = ind.farfield_indicator(F, p, N), ind.indicator(data, p)
        errs.append(abs(a.value() - b.value()) / abs(b.value()))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    # successive reduction factors grow: faster than any fixed power of N
    fac = [a / b for a, b in zip(errs, errs[1:])]
    assert all(b > a for a, b in zip(fac, fac[1:]))
    assert errs[-1] < 1e-11


def test_far_field_null_and_checks(square_far_field, diag):
    Q = 64
    zero = fw.FarField(2 * math.pi * np.arange(Q) / Q, tuple(gmpy2.mpc(0) for _ in range(Q)), 1.0, 128)
    s = ind.farfield_indicator(zero, ProbeParams(diag, 1.0, 1.0), 10)
    assert s.I == 0 and not s.valid
    with pytest.raises(DomainError):
        ind.farfield_indicator(zero, ProbeParams(diag, 1.0, 1.0), 40)
    with pytest.raises(DomainError):
        ind.farfield_indicator(square_far_field, ProbeParams(diag, 1.0, 2.0), 10)
    with pytest.warns(EnclosureWarning):
        s = ind.farfield_indicator(square_far_field, ProbeParams(diag, 40.0, 1.0), 120)
    assert not s.valid and s.note == "precision"


def test_point_source_provenance(square_data, square_point_source, diag):
    with pytest.raises(DomainError):
        ind.point_source_indicator(square_data, ProbeParams(diag, 3.0, 1.0))
    ser = ind.point_source_series(square_point_source, diag)
    assert ser.provenance == "point-source"
    L = complex(X0 @ diag.omega, X0 @ diag.omega_perp)
    assert abs(ser.ratios[ser.valid][-1] - L) < 0.03


def test_point_source_linearity(square_point_source, diag):
    p = ProbeParams(diag, 5.0, 1.0)
    one = ind.point_source_indicator(square_point_source, p)
    two = ind.point_source_indicator(square_point_source + square_point_source.scaled(1j), p)
    assert abs(two.value() - (1 + 1j) * one.value()) < 1e-12 * abs(one.value())


def test_series_csv_round_trip(square_data, diag):
    ser = ind.ratio_series(square_data, diag)
    back = ind.IndicatorSeries.from_csv(ser.to_csv())
    np.testing.assert_array_equal(back.taus, ser.taus)
    np.testing.assert_array_equal(back.valid, ser.valid)
    np.testing.assert_array_equal(back.ratios, ser.ratios)
    assert back.grid_spec == ser.grid_spec
    assert float(back.meta["ratio_guard"]) == 1e-13
    header = ser.to_csv().splitlines()
    assert "tau,re_I,im_I,scale,re_Ip,im_Ip,re_ratio,im_ratio,valid" in header


def test_default_grid():
    g = ind.default_tau_grid(0.75)
    assert len(g) == 40 and g[0] == 2.0 and g[-1] == pytest.approx(60.0)
    assert ind.default_tau_grid(20.0)[-1] == pytest.approx(30.0)


def test_mismatched_k_and_resolution(square_data, diag):
    with pytest.raises(DomainError):
        ind.indicator(square_data, ProbeParams(diag, 3.0, 2.0))
    coarse = _random_data(5, M=32)
    with pytest.warns(EnclosureWarning):
        ind.indicator(coarse, ProbeParams(diag, 40.0, 1.0), sigma=0.0)


def test_noise_marks_samples_invalid(square_data, diag):
    noisy = fw.add_noise(square_data, 1e-2, seed=3)
    sig = ind.estimate_noise(noisy)
    assert 0.3e-2 < sig < 3e-2
    assert ind.estimate_noise(square_data) < 1e-10
    ser = ind.ratio_series(noisy, diag)
    assert not ser.valid[-1]
    assert {s.note for s in ser.samples if not s.valid} <= {"noise", "cancellation", "ratio_guard"}


def test_tau_grid_must_increase(square_data, diag):
    with pytest.raises(DomainError):
        ind.ratio_series(square_data, diag, [5.0, 4.0, 6.0])
