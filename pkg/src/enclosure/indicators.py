"""Indicator integrals pairing measured Cauchy data with the exponential probes.

Values of ``I`` grow like ``exp(tau h_D(omega))`` so every sample stores a
mantissa and a real scale exponent; the true value is ``mantissa * exp(scale)``.
``I`` and ``I'`` of one sample share the scale, which makes the ratio
``I'/I`` scale free.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
import weakref
from dataclasses import dataclass, field, replace

import gmpy2
import numpy as np

from .errors import DomainError, EnclosureWarning, InsufficientDataError
from .forward import CauchyData, FarField
from .geometry import Direction
from .probes import ProbeParams, herglotz_bits

__all__ = [
    "IndicatorSample",
    "IndicatorSeries",
    "RATIO_GUARD",
    "default_tau_grid",
    "estimate_noise",
    "indicator",
    "ratio_series",
    "shift_ratio",
    "farfield_indicator",
    "farfield_series",
    "point_source_indicator",
    "point_source_series",
]

RATIO_GUARD = 1e-13
# smallest |I| relative to the sum of |integrand| contributions that double precision still resolves
CANCELLATION_GUARD = 1e-13
SNR_MIN = 10.0


@dataclass(frozen=True)
class IndicatorSample:
    tau: float
    I: complex
    Ip: complex
    scale: float
    valid: bool = True
    cancellation: float = 1.0
    note: str = ""

    @property
    def ratio(self) -> complex:
        if self.I == 0:
            return complex("nan")
        return self.Ip / self.I

    @property
    def log_abs_I(self) -> float:
        """``log |I|`` of the unscaled value."""
        a = abs(self.I)
        return -math.inf if a == 0 else math.log(a) + self.scale

    def value(self) -> complex:
        """Unscaled ``I``; raises OverflowError when it does not fit a double."""
        return self.I * math.exp(self.scale)


@dataclass
class IndicatorSeries:
    omega: Direction
    k: float
    incidence: str
    samples: list
    provenance: str = "near-field"
    grid_spec: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        taus = [s.tau for s in self.samples]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise DomainError("tau grid must be strictly increasing")

    def __len__(self):
        return len(self.samples)

    @property
    def taus(self) -> np.ndarray:
        return np.array([s.tau for s in self.samples])

    @property
    def ratios(self) -> np.ndarray:
        return np.array([s.ratio for s in self.samples])

    @property
    def valid(self) -> np.ndarray:
        return np.array([s.valid for s in self.samples], dtype=bool)

    @property
    def log_abs_I(self) -> np.ndarray:
        return np.array([s.log_abs_I for s in self.samples])

    def valid_only(self) -> "IndicatorSeries":
        return replace(self, samples=[s for s in self.samples if s.valid])

    def to_csv(self) -> str:
        buf = io.StringIO()
        om = self.omega.omega
        buf.write(f"# omega=[{float(om[0])!r}, {float(om[1])!r}], k={self.k!r}, incidence={self.incidence}, provenance={self.provenance}\n")
        if self.grid_spec:
            buf.write(f"# grid={self.grid_spec}\n")
        for key, val in self.meta.items():
            buf.write(f"# {key}={val}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "re_I", "im_I", "scale", "re_Ip", "im_Ip", "re_ratio", "im_ratio", "valid"])
        for s in self.samples:
            r = s.ratio
            w.writerow([repr(float(v)) for v in (s.tau, s.I.real, s.I.imag, s.scale, s.Ip.real, s.Ip.imag, r.real, r.imag)] + [int(s.valid)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IndicatorSeries":
        head = {}
        samples = []
        for line in text.splitlines():
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("omega="):
                    om, rest = body[len("omega=[") :].split("]", 1)
                    head["omega"] = [float(v) for v in om.split(",")]
                    for part in rest.strip(", ").split(", "):
                        key, _, val = part.partition("=")
                        head[key] = val
                else:
                    key, _, val = body.partition("=")
                    head.setdefault("meta", {})[key] = val
            elif line and not line.startswith("tau"):
                f = line.split(",")
                samples.append(IndicatorSample(float(f[0]), complex(float(f[1]), float(f[2])), complex(float(f[4]), float(f[5])), float(f[3]), bool(int(f[8]))))
        meta = head.get("meta", {})
        grid = meta.pop("grid", "")
        return cls(Direction(np.array(head["omega"])), float(head["k"]), head.get("incidence", ""), samples, head.get("provenance", "near-field"), grid, meta)


def default_tau_grid(R: float, n: int = 40) -> np.ndarray:
    """Geometric grid from 2 to ``min(60, 600/R)``."""
    return np.geomspace(2.0, min(60.0, 600.0 / R), n)


# ---------------------------------------------------------------------------
# near field
# ---------------------------------------------------------------------------


_NOISE_CACHE: "weakref.WeakKeyDictionary[CauchyData, float]" = weakref.WeakKeyDictionary()


def estimate_noise(data: CauchyData) -> float:
    """Relative noise level read off the flat top of the trace spectra.

    Smooth traces have geometrically decaying Fourier coefficients, so whatever
    sits in the band ``|n| >= 3M/8`` is treated as white noise.
    """
    cached = _NOISE_CACHE.get(data)
    if cached is not None:
        return cached
    M = data.M
    n = np.fft.fftfreq(M, 1.0 / M)
    band = np.abs(n) >= 3 * M // 8
    sig = 0.0
    for tr in (data.u, data.dnu):
        rms = math.sqrt(float(np.mean(np.abs(tr) ** 2)))
        if rms == 0:
            continue
        spec = np.fft.fft(tr) / math.sqrt(M)
        sig = max(sig, math.sqrt(float(np.mean(np.abs(spec[band]) ** 2))) / rms)
    _NOISE_CACHE[data] = sig
    return sig


def _check_resolution(data: CauchyData, p: ProbeParams):
    # probe Fourier content on the circle is negligible beyond order ~ e R s / 2
    need = math.e * data.R * p.s / 2 + 20
    if data.M / 2 < need:
        warnings.warn(
            f"M = {data.M} samples under-resolve the probe at tau = {p.tau:.3g} (need M/2 > {need:.0f})",
            EnclosureWarning,
            stacklevel=3,
        )


def indicator(data: CauchyData, p: ProbeParams, anchor=None, sigma: float | None = None, snr_min: float = SNR_MIN) -> IndicatorSample:
    """``I = int (du/dnu v - dv/dnu u) dS`` and ``I'`` (with the tau-differentiated probe) on the data circle.

    ``anchor`` defaults to the data center. The returned scale already includes
    the anchor factor, so samples computed with different anchors agree.
    """
    if not math.isclose(p.k, data.k, rel_tol=1e-12):
        raise DomainError(f"probe k = {p.k} does not match data k = {data.k}")
    _check_resolution(data, p)
    anchor = data.center if anchor is None else np.asarray(anchor, dtype=float)
    x = data.points
    nu = data.normals
    xr = x if p.shift is None else x - p.shift
    c = p.c_tau
    dc = p.dtau_c
    ex = (xr - anchor) @ c
    scale0 = float(np.max(ex.real))
    vv = np.exp(ex - scale0)
    nc = nu @ c
    xd = xr @ dc
    dv = nc * vv
    tv = xd * vv
    dtv = (nu @ dc + xd * nc) * vv
    w = 2 * math.pi * data.R / data.M
    terms = w * (data.dnu * vv - dv * data.u)
    terms_p = w * (data.dnu * tv - dtv * data.u)
    I = complex(np.sum(terms))
    Ip = complex(np.sum(terms_p))
    # fold exp(anchor . c) back in: real part into the scale, phase into the mantissa
    ac = complex(np.dot(anchor, c))
    rot = complex(math.cos(ac.imag), math.sin(ac.imag))
    scale = scale0 + ac.real
    mag = float(np.sum(np.abs(terms)))
    canc = abs(I) / mag if mag > 0 else 0.0
    valid = mag > 0 and canc > CANCELLATION_GUARD
    note = "" if valid else "cancellation"
    sig = estimate_noise(data) if sigma is None else sigma
    if valid and sig > 0:
        au, ad = np.abs(data.u), np.abs(data.dnu)
        noise_I = sig * w * math.sqrt(float(np.sum((ad * np.abs(vv)) ** 2 + (au * np.abs(dv)) ** 2)))
        if abs(I) < snr_min * noise_I:
            valid, note = False, "noise"
    return IndicatorSample(float(p.tau), I * rot, Ip * rot, scale, valid, canc, note)


def _apply_series_guard(samples, ratio_guard):
    top = max((abs(s.I) for s in samples if s.valid), default=0.0)
    out = []
    for s in samples:
        if s.valid and abs(s.I) <= ratio_guard * top:
            s = replace(s, valid=False, note="ratio_guard")
        out.append(s)
    return out


def _finish(samples, omega, data_like, provenance, grid_spec, meta):
    series = IndicatorSeries(omega, data_like.k, getattr(data_like, "incidence", ""), samples, provenance, grid_spec, meta)
    if not series.valid.any():
        raise InsufficientDataError(
            "every indicator sample is invalid; omega may be non-regular or the data inconsistent"
        )
    return series


def _grid(tau_grid, R):
    grid = default_tau_grid(R) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    spec = f"geomspace({grid[0]:.6g}, {grid[-1]:.6g}, {len(grid)})" if tau_grid is None else "explicit"
    return grid, spec


def ratio_series(data: CauchyData, omega, tau_grid=None, ratio_guard: float = RATIO_GUARD, anchor=None, snr_min: float = SNR_MIN) -> IndicatorSeries:
    """Indicator samples ``I, I'`` and the ratio ``I'/I`` over a tau grid."""
    omega = Direction.coerce(omega)
    grid, spec = _grid(tau_grid, data.R)
    sig = estimate_noise(data)
    samples = [indicator(data, ProbeParams(omega, float(t), data.k), anchor, sig, snr_min) for t in grid]
    samples = _apply_series_guard(samples, ratio_guard)
    return _finish(samples, omega, data, data.provenance, spec, {"ratio_guard": ratio_guard})


def shift_series(series: IndicatorSeries, y) -> IndicatorSeries:
    """Shift an existing series: ``I_y = exp(-y . c_tau) I`` and ``I'_y = exp(-y . c_tau)(I' - y . dc/dtau I)``."""
    y = np.asarray(y, dtype=float).reshape(2)
    out = []
    for s in series.samples:
        p = ProbeParams(series.omega, s.tau, series.k)
        yc = complex(np.dot(y, p.c_tau))
        rot = complex(math.cos(yc.imag), -math.sin(yc.imag))
        ydc = complex(np.dot(y, p.dtau_c))
        out.append(replace(s, I=s.I * rot, Ip=(s.Ip - ydc * s.I) * rot, scale=s.scale - yc.real))
    meta = dict(series.meta)
    meta["shift"] = f"[{float(y[0])!r}, {float(y[1])!r}]"
    return replace(series, samples=out, meta=meta)


def shift_ratio(data: CauchyData, omega, tau_grid=None, y=(0.0, 0.0), ratio_guard: float = RATIO_GUARD) -> IndicatorSeries:
    """Indicator series for the probe shifted by ``y``, derived algebraically from the unshifted one."""
    return shift_series(ratio_series(data, omega, tau_grid, ratio_guard), y)


def point_source_indicator(data: CauchyData, p: ProbeParams, anchor=None, sigma: float | None = None) -> IndicatorSample:
    """``J`` and ``J'``: same quadrature as :func:`indicator` on point-source data."""
    if data.provenance != "point-source":
        raise DomainError("point_source_indicator needs data with point-source provenance")
    return indicator(data, p, anchor, sigma)


def point_source_series(data: CauchyData, omega, tau_grid=None, ratio_guard: float = RATIO_GUARD) -> IndicatorSeries:
    if data.provenance != "point-source":
        raise DomainError("point_source_series needs data with point-source provenance")
    return ratio_series(data, omega, tau_grid, ratio_guard)


# ---------------------------------------------------------------------------
# far field
# ---------------------------------------------------------------------------


def farfield_indicator(F: FarField, p: ProbeParams, N: int, ratio_guard: float = RATIO_GUARD) -> IndicatorSample:
    """Far-field analogue of ``I, I'`` built from the truncated Herglotz density ``g_N``.

    ``I_N = -(sqrt(8 pi k)/e^{i pi/4}) sum_m z^m M_m`` where ``M_m`` are the
    extended-precision moments of ``F(-phi)`` and ``z = i k / (s omega)``; the
    tau-derivative carries the extra factor ``-m / sqrt(tau^2 + k^2)``.
    The sample is marked invalid when the stored precision cannot resolve the
    ``(s/k)^N`` amplification.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    if F.Q < 2 * N + 2:
        raise DomainError(f"far field sampled on {F.Q} directions; need at least {2 * N + 2}")
    if not math.isclose(p.k, F.k, rel_tol=1e-12):
        raise DomainError(f"probe k = {p.k} does not match far-field k = {F.k}")
    need = herglotz_bits(p, N)
    short = F.precision_bits < need
    if short:
        warnings.warn(
            f"far field stored at {F.precision_bits} bits; N = {N}, tau = {p.tau:.3g} needs about {need}",
            EnclosureWarning,
            stacklevel=2,
        )
    mom = F.moments(N)
    bits = F.precision_bits
    with gmpy2.context(precision=bits):
        mpf = gmpy2.mpfr
        tau, k = mpf(p.tau), mpf(p.k)
        root = gmpy2.sqrt(tau * tau + k * k)
        om = gmpy2.mpc(mpf(float(p.omega.omega[0])), mpf(float(p.omega.omega[1])))
        z = gmpy2.mpc(0, 1) * k / ((tau + root) * om)
        S0 = gmpy2.mpc(0)
        S1 = gmpy2.mpc(0)
        mag = mpf(0)
        amp = mpf(0)
        zi = 1 / z
        zp, zn = gmpy2.mpc(1), gmpy2.mpc(1)
        S0 += mom[0]
        mag += abs(mom[0])
        amp += 1
        for m in range(1, N + 1):
            zp *= z
            zn *= zi
            a, b = zp * mom[m], zn * mom[-m]
            S0 += a + b
            S1 += m * (a - b)
            mag += abs(a) + abs(b)
            amp += abs(zp) + abs(zn)
        pref = -gmpy2.sqrt(8 * gmpy2.const_pi() * k) * gmpy2.mpc(gmpy2.cos(gmpy2.const_pi() / 4), -gmpy2.sin(gmpy2.const_pi() / 4))
        I = pref * S0
        Ip = pref * (-S1 / root)
        fmax = max(abs(v) for v in F.values) if F.values else mpf(0)
        # rounding in the moments and in the sum, relative to |S0|
        err = gmpy2.exp2(-bits) * (mag + fmax * amp) * (2 * N + 1)
        absI = abs(S0)
        if absI == 0:
            return IndicatorSample(float(p.tau), 0j, 0j, 0.0, False, 0.0, "zero")
        lg = gmpy2.log(abs(I))
        scale = float(lg)
        norm = gmpy2.exp(-lg)
        Im = complex(I * norm)
        Ipm = complex(Ip * norm)
        canc = float(absI / mag) if mag > 0 else 0.0
        ok = float(err / absI) < ratio_guard
    valid = bool(ok and not short)
    note = "" if valid else ("precision" if short else "cancellation")
    return IndicatorSample(float(p.tau), Im, Ipm, scale, valid, canc, note)


def farfield_series(F: FarField, omega, beta: float, Ns, R: float, offset: float = 0.0, ratio_guard: float = RATIO_GUARD) -> IndicatorSeries:
    """Far-field samples along the schedule ``tau(N) = beta N / (e R) + offset``."""
    omega = Direction.coerce(omega)
    Ns = [int(n) for n in Ns]
    samples = []
    for N in Ns:
        tau = beta * N / (math.e * R) + offset
        samples.append(farfield_indicator(F, ProbeParams(omega, tau, F.k), N, ratio_guard))
    meta = {"beta": repr(float(beta)), "R": repr(float(R)), "offset": repr(float(offset)), "N": " ".join(map(str, Ns))}
    return _finish(samples, omega, F, "far-field", f"tau=beta*N/(e*R)+{offset!r}", meta)
