import math

import numpy as np
import pytest

from enclosure.errors import DomainError, ExponentOverflowError
from enclosure.geometry import Direction
from enclosure.probes import (
    ProbeParams,
    dnu_dtau_v,
    dnu_v,
    dtau_g_N,
    dtau_v,
    g_N,
    herglotz_probe,
    herglotz_q,
    herglotz_tail,
    herglotz_wave,
    log_tail_bound,
    tail_bound,
    v,
)
from enclosure.specfun import bessel_j

rng = np.random.default_rng(2024)


def _params(tau=2.0, k=1.0, angle=0.7, shift=None):
    return ProbeParams(Direction.from_angle(angle), tau, k, shift)


def test_helmholtz_identity_random():
    for _ in range(20):
        p = _params(rng.uniform(0.1, 50), rng.uniform(0.1, 10), rng.uniform(0, 2 * math.pi))
        c = p.c_tau
        assert abs(c @ c + p.k**2) < 1e-12 * max(1.0, p.tau**2)


def test_s_identities():
    for _ in range(20):
        p = _params(rng.uniform(0.1, 50), rng.uniform(0.1, 10))
        s, k = p.s, p.k
        assert s * (s - 2 * p.tau) == pytest.approx(k**2, rel=1e-12)
        assert 0.5 * (s - k**2 / s) == pytest.approx(p.tau, rel=1e-12)
        assert 0.5 * (s + k**2 / s) == pytest.approx(p.root, rel=1e-12)


def test_v_anchor_and_modulus():
    p = _params(3.0)
    a = np.array([0.2, -0.1])
    assert v(a, p, anchor=a) == pytest.approx(1.0)
    x = rng.normal(size=(10, 2))
    np.testing.assert_allclose(np.abs(v(x, p, a)), np.exp(p.tau * (x - a) @ p.omega.omega), rtol=1e-12)
    # unscaled = scaled * exp(anchor . c)
    np.testing.assert_allclose(v(x, p, a) * np.exp(a @ p.c_tau), v(x, p), rtol=1e-12)


def test_shift_identity():
    y = np.array([0.3, -0.4])
    p, ps = _params(5.0), _params(5.0, shift=y)
    x = rng.normal(size=(6, 2))
    np.testing.assert_allclose(v(x, ps), np.exp(-y @ p.c_tau) * v(x, p), rtol=1e-12)


def test_helmholtz_fd_slope():
    p = _params(2.0, 1.5)
    x = np.array([0.3, -0.2])
    errs = []
    hs = [0.04, 0.02, 0.01]
    for h in hs:
        lap = (v(x + [h, 0], p) + v(x - [h, 0], p) + v(x + [0, h], p) + v(x - [0, h], p) - 4 * v(x, p)) / h**2
        errs.append(abs(lap + p.k**2 * v(x, p)))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_dtau_v_fd_slope():
    x = rng.normal(size=2) * 0.5
    p = _params(3.0)
    hs = [1e-2, 5e-3, 2.5e-3]
    errs = []
    for h in hs:
        fd = (v(x, p.with_tau(p.tau + h)) - v(x, p.with_tau(p.tau - h))) / (2 * h)
        errs.append(abs(fd - dtau_v(x, p)))
    assert np.polyfit(np.log(hs), np.log(errs), 1)[0] == pytest.approx(2.0, abs=0.1)
    assert dtau_v(np.zeros(2), p) == 0


def test_normal_derivatives_fd():
    x = np.array([0.4, 0.1])
    nu = np.array([0.6, 0.8])
    p = _params(2.5)
    h = 1e-5
    fd = (v(x + h * nu, p) - v(x - h * nu, p)) / (2 * h)
    assert abs(fd - dnu_v(x, nu, p)) < 1e-8 * abs(fd)
    fd = (dtau_v(x + h * nu, p) - dtau_v(x - h * nu, p)) / (2 * h)
    assert abs(fd - dnu_dtau_v(x, nu, p)) < 1e-8 * abs(fd)


def test_dtau_c_matches_perp_form():
    p = _params(4.0, 2.0)
    np.testing.assert_allclose(p.dtau_c, 1j / p.root * p.c_tau_perp, rtol=1e-14)
    # i c_tau(omega_perp) = sqrt(tau^2+k^2) omega + i tau omega_perp
    np.testing.assert_allclose(1j * p.c_tau_perp, p.root * p.omega.omega + 1j * p.tau * p.omega.omega_perp, rtol=1e-14)


def test_overflow_signalled():
    p = _params(100.0, angle=0.0)
    with pytest.raises(ExponentOverflowError):
        v(np.array([8.0, 0.0]), p)


def test_probe_params_validation():
    with pytest.raises(DomainError):
        _params(tau=0.0)
    with pytest.raises(DomainError):
        _params(k=-1.0)


def test_g_N_basics():
    p = _params(2.0)
    assert g_N(0.3, p, 0) == pytest.approx(1 / (2 * math.pi))
    phi = np.exp(1j * np.linspace(0, 2 * math.pi, 9))
    z = 1j * p.k * phi / (p.s * p.omega.complex)
    assert np.allclose(np.abs(z), p.k / p.s)
    direct = sum(z**m for m in range(-5, 6)) / (2 * math.pi)
    np.testing.assert_allclose(g_N(phi, p, 5), direct, rtol=1e-13)


def test_dtau_g_N_fd_slope():
    p = _params(2.0)
    phi = np.exp(0.4j)
    hs = [1e-2, 5e-3, 2.5e-3]
    errs = []
    for h in hs:
        fd = (g_N(phi, p.with_tau(p.tau + h), 6) - g_N(phi, p.with_tau(p.tau - h), 6)) / (2 * h)
        errs.append(abs(fd - dtau_g_N(phi, p, 6)))
    assert np.polyfit(np.log(hs), np.log(errs), 1)[0] == pytest.approx(2.0, abs=0.1)


def test_herglotz_constant_density_is_J0():
    for y in ([0.3, 0.4], [1.0, -2.0]):
        got = herglotz_wave(lambda phi: np.full(phi.shape, 1 / (2 * math.pi)), y, 1.3)
        assert abs(got - bessel_j(0, 1.3 * math.hypot(*y))) < 1e-13


def test_herglotz_q_rule():
    assert herglotz_q(10) == 256
    assert herglotz_q(200) == 402
    with pytest.raises(DomainError):
        herglotz_probe([0.1, 0.1], _params(), 10, Q=20)


def test_herglotz_tail_series():
    p = _params(2.0, 1.0)
    for y in ([0.5, 0.3], [-0.6, 0.7], [0.0, -1.0]):
        lhs = herglotz_probe(y, p, 30) - v(np.array(y), p)
        assert abs(lhs - herglotz_tail(y, p, 30)) < 1e-10
        dl = herglotz_probe(y, p, 30, derivative=True) - dtau_v(np.array(y), p)
        assert abs(dl - herglotz_tail(y, p, 30, derivative=True)) < 1e-10


def test_herglotz_tail_within_bound():
    p = _params(2.0, 1.0)
    for N in (5, 10, 20):
        y = [0.6, -0.5]
        err = abs(herglotz_probe(y, p, N) - v(np.array(y), p))
        assert err <= 2 * tail_bound(p.tau, p.k, 1.0, N + 1)
        derr = abs(herglotz_probe(y, p, N, derivative=True) - dtau_v(np.array(y), p))
        assert derr <= 2 * (N + 1) * tail_bound(p.tau, p.k, 1.0, N + 1) / p.root + 2 * err


def test_tail_bound_basics():
    assert tail_bound(2.0, 1.0, 1.0, 0) == pytest.approx(math.exp(0.5 * (2 + math.sqrt(5))))
    tau, k, R = 3.0, 1.0, 1.0
    s = tau + math.hypot(tau, k)
    for N in range(1, 30):
        ratio = tail_bound(tau, k, R, N + 1) / tail_bound(tau, k, R, N)
        assert ratio == pytest.approx(R * s / (2 * (N + 1)), rel=1e-12)
    start = int(math.ceil(R * s * math.e / 2))
    vals = [tail_bound(tau, k, R, N) for N in range(start, start + 20)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_tail_bound_schedule_decay():
    R, k, beta = 1.0, 1.0, 0.5
    lg = [R * beta * N / (math.e * R) + log_tail_bound(beta * N / (math.e * R), k, R, N + 1) for N in range(10, 81)]
    assert all(b < a for a, b in zip(lg, lg[1:]))
    # faster than any fixed power: log decays superlinearly in log N
    assert lg[-1] < -20
    with pytest.raises(ExponentOverflowError):
        tail_bound(2000.0, 1.0, 1.0, 0)
    with pytest.raises(DomainError):
        log_tail_bound(1.0, 1.0, 1.0, -1)
