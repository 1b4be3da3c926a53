import math

import numpy as np
import pytest
from scipy import integrate

from enclosure.errors import ConvergenceError, DomainError, ExponentOverflowError
from enclosure.specfun import (
    SeriesPolicy,
    bessel_j,
    bessel_j_deriv,
    bessel_y,
    gamma,
    hankel1,
    hankel1_deriv,
    jn_sequence,
    log_gamma,
)

# reference values from mpmath at 30 digits
J_REF = [
    (0.0, 1.0, 0.76519768655796655145),
    (2 / 3, 1.7, 0.61777690281555401244),
    (10.5, 3.3, 1.2712878685630385577e-5),
    (0.0, 20.0, 0.16702466434058315473),
    (1.0, 35.5, -0.022347970208817342649),
    (60.0, 99.7, -0.020201331754713684073),
    (1 / 3, 0.01, 0.19148747117327942867),
    (25.0, 5.0, 4.4976606841340539904e-16),
    (-1 / 3, 1.7, 0.10208951001979613628),
    (-0.25, 15.0, -0.092158858852451499889),
]
Y_REF = [
    (0, 0.5, -0.44451873350670655715),
    (1, 2.0, -0.10703243154093754689),
    (5, 12.0, -0.22981794662508243345),
    (10, 3.0, -2582.6071294842996691),
]
GAMMA_REF = [
    (0.3, 2.9915689876875907446),
    (4.5, 11.631728396567448929),
    (30.25, 2.062805313775346887e31),
    (170.5, 5.5620924145599996107e305),
]


def test_gamma_known_values():
    assert gamma(1.0) == pytest.approx(1.0, rel=1e-14)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-13)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)


@pytest.mark.parametrize("x,ref", GAMMA_REF)
def test_gamma_reference(x, ref):
    assert abs(gamma(x) - ref) / ref < 1e-12


def test_gamma_recurrence():
    for x in np.linspace(0.1, 50, 137):
        assert abs(gamma(x + 1) - x * gamma(x)) / gamma(x + 1) < 1e-12


def test_log_gamma_large():
    assert log_gamma(500.0) == pytest.approx(math.lgamma(500.0), rel=1e-13)


def test_gamma_errors():
    with pytest.raises(DomainError):
        gamma(0.0)
    with pytest.raises(DomainError):
        gamma(-1.5)
    with pytest.raises(ExponentOverflowError):
        gamma(180.0)
    with pytest.raises(DomainError):
        gamma(float("nan"))


@pytest.mark.parametrize("mu,z,ref", J_REF)
def test_bessel_j_reference(mu, z, ref):
    got = bessel_j(mu, z)
    assert abs(got - ref) <= 1e-12 * max(abs(ref), 1e-3)


def test_bessel_j_origin_and_half_order():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1.5, 0.0) == 0.0
    for z in (0.5, 1.0, 2.0):
        assert bessel_j(0.5, z) == pytest.approx(math.sqrt(2 / (math.pi * z)) * math.sin(z), rel=1e-13)


def _schlafli(nu, x):
    a = integrate.quad(lambda t: math.cos(nu * t - x * math.sin(t)), 0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    b = integrate.quad(lambda t: math.exp(-x * math.sinh(t) - nu * t), 0, 30, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return a / math.pi - math.sin(nu * math.pi) / math.pi * b


def test_bessel_j_integral_representation():
    for nu, x in ((2 / 3, 1.0), (1 / 3, 2.5), (1.7, 4.0)):
        assert abs(bessel_j(nu, x) - _schlafli(nu, x)) < 1e-10


def test_bessel_recurrence_standard_form():
    rng = np.random.default_rng(3)
    for _ in range(50):
        mu = rng.uniform(0.5, 5)
        z = rng.uniform(0.1, 10)
        lhs = bessel_j(mu - 1, z) + bessel_j(mu + 1, z)
        rhs = 2 * mu / z * bessel_j(mu, z)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_bessel_j_vectorised():
    z = np.array([0.1, 1.0, 3.0])
    out = bessel_j(2 / 3, z)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(bessel_j(2 / 3, 1.0), rel=1e-15)


def test_bessel_j_errors():
    with pytest.raises(DomainError):
        bessel_j(-1.0, 1.0)
    with pytest.raises(DomainError):
        bessel_j(-0.5, 0.0)
    with pytest.raises(DomainError):
        bessel_j(1.0, -1.0)
    with pytest.raises(DomainError):
        bessel_j(1.0, float("nan"))
    with pytest.raises(ConvergenceError):
        bessel_j(0.3, 8.0, SeriesPolicy(max_terms=3))


def test_series_policy_validation():
    with pytest.raises(ValueError):
        SeriesPolicy(max_terms=0)
    with pytest.raises(ValueError):
        SeriesPolicy(rel_tol=-1.0)
    with pytest.raises(ValueError):
        SeriesPolicy(abs_tol=math.inf)


def test_bessel_j_deriv():
    assert bessel_j_deriv(0, 1.0) == pytest.approx(-bessel_j(1, 1.0), rel=1e-14)
    h = 1e-4
    fd = (bessel_j(1, 0.7 + h) - bessel_j(1, 0.7 - h)) / (2 * h)
    assert abs(bessel_j_deriv(1, 0.7) - fd) < 1e-7
    z = 2.0
    exact = math.sqrt(2 / math.pi) * (math.cos(z) / math.sqrt(z) - 0.5 * math.sin(z) * z**-1.5)
    assert bessel_j_deriv(0.5, z) == pytest.approx(exact, rel=1e-12)
    with pytest.raises(DomainError):
        bessel_j_deriv(0.5, 0.0)


def test_jn_sequence_matches_scalar():
    seq = jn_sequence(30, 7.5)
    for n in (0, 3, 17, 30):
        assert seq[n] == pytest.approx(bessel_j(n, 7.5), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("n,z,ref", Y_REF)
def test_bessel_y_reference(n, z, ref):
    assert abs(bessel_y(n, z) - ref) / abs(ref) < 1e-10


def test_hankel_wronskian():
    for z in (0.3, 1.0, 10.0):
        h = hankel1(0, z)
        dh = hankel1_deriv(0, z)
        w = h.real * dh.imag - dh.real * h.imag
        assert abs(w - 2 / (math.pi * z)) < 1e-9


def test_hankel_log_singularity():
    z = np.array([1e-4, 1e-6, 1e-8])
    im = np.array([hankel1(0, x).imag for x in z])
    assert np.all(im < 0)
    slope = np.polyfit(np.log(z), im, 1)[0]
    assert slope == pytest.approx(2 / math.pi, rel=1e-6)


def test_hankel_recurrence_directions():
    z = 10.0
    # upward from Y0, Y1
    y = [bessel_y(0, z), bessel_y(1, z)]
    for n in range(1, 5):
        y.append(2 * n / z * y[n] - y[n - 1])
    h = hankel1(5, z)
    assert abs(h.imag - y[5]) < 1e-9 * abs(y[5])
    # J_5 by backward recurrence
    top = 60
    jj = [0.0] * (top + 2)
    jj[top] = 1e-30
    for n in range(top, 0, -1):
        jj[n - 1] = 2 * n / z * jj[n] - jj[n + 1]
    norm = jj[0] + 2 * sum(jj[2::2])
    assert abs(h.real - jj[5] / norm) < 1e-9


def test_hankel_domain():
    with pytest.raises(DomainError):
        hankel1(0, 0.0)
    with pytest.raises(DomainError):
        bessel_y(1, -2.0)
    with pytest.raises(DomainError):
        hankel1(-1, 1.0)
