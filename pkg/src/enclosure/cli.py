"""Command-line front end.

Subcommands ``forward``, ``reconstruct``, ``farfield``, ``pointsource`` and
``oracle``. Every run reads one JSON config (``--config``) and writes into
``--out``; each output file starts with ``#`` lines carrying the resolved
config so a run can be reproduced from any of its outputs.

Exit status: 0 on success, 1 when an oracle row or a reconstruction fails,
2 for invalid configs or arguments, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .errors import DomainError, EnclosureError, EnclosureWarning
from .forward import (
    BoundarySolution,
    CauchyData,
    Discretization,
    FarField,
    PlaneWave,
    PointSource,
    WaveContext,
    add_noise,
    cauchy_data,
    far_field,
    incident_cauchy_data,
    point_source_data,
    polygon_boundary,
    solve,
)
from .geometry import Direction, Scene, corner_frame, support
from .indicators import default_tau_grid, point_source_series, ratio_series
from .probes import log_tail_bound
from .reconstruct import beta0, farfield_reconstruct, hull_sweep, vertex_estimate
from .specfun import bessel_j

__all__ = ["main", "load_config", "SCHEMA", "ORACLE_SUITES"]

logger = logging.getLogger("enclosure")

SCHEMA = "enclosure-config/1"
ORACLE_SUITES = ("lemma23", "model-integrals", "lemma22", "bessel-identity", "corner-fit", "tail-bound")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(EnclosureError, ValueError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def load_config(path: str | Path | None) -> dict:
    """Read and validate a JSON config; relative file paths resolve against its directory."""
    if path is None:
        return {"schema": SCHEMA, "_base": str(Path.cwd())}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"config schema must be {SCHEMA!r}, got {cfg.get('schema')!r}")
    cfg["_base"] = str(p.parent.resolve())
    noise = cfg.get("noise", {})
    if noise.get("level", 0.0) < 0:
        raise ConfigError("noise level must be non-negative")
    for key in ("scene_file",):
        if key in cfg and not _resolve(cfg, cfg[key]).exists():
            raise ConfigError(f"{key} {cfg[key]} does not exist")
    for key, val in cfg.get("data", {}).items():
        if not _resolve(cfg, val).exists():
            raise ConfigError(f"data file {key}={val} does not exist")
    return cfg


def _resolve(cfg, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def _public(cfg) -> dict:
    return {key: v for key, v in cfg.items() if not key.startswith("_")}


def _header_lines(cfg) -> list:
    return ["config=" + json.dumps(_public(cfg), sort_keys=True, separators=(",", ":"))]


def _scene(cfg) -> Scene:
    if "scene" in cfg:
        return Scene.from_dict(cfg["scene"])
    if "scene_file" in cfg:
        return Scene.from_json(_resolve(cfg, cfg["scene_file"]).read_text())
    raise ConfigError("config needs a 'scene' or 'scene_file'")


def _wave(cfg, scene=None) -> WaveContext:
    w = cfg.get("wave", {})
    k = float(w.get("k", 1.0))
    inc = w.get("incidence", {"type": "plane", "d": [1.0, 0.0]})
    if inc.get("type", "plane") == "plane":
        return WaveContext(k, PlaneWave(tuple(inc.get("d", (1.0, 0.0)))))
    if inc["type"] == "point":
        return WaveContext(k, PointSource(tuple(inc["y"])))
    raise ConfigError(f"unknown incidence type {inc['type']!r}")


def _measurement(cfg, scene):
    m = cfg.get("measurement", {})
    R = float(m.get("R", scene.R))
    center = m.get("center", scene.measurement_center.tolist())
    return int(m.get("M", 512)), R, center


def _disc(cfg) -> Discretization:
    return Discretization(**cfg.get("discretization", {}))


def _tau_grid(cfg, R):
    g = cfg.get("tau_grid")
    if g is None:
        return default_tau_grid(R)
    return np.geomspace(float(g["start"]), float(g["stop"]), int(g["n"]))


def _n_range(spec):
    if isinstance(spec, dict):
        return list(range(int(spec["start"]), int(spec["stop"]) + 1, int(spec.get("step", 1))))
    if len(spec) == 3:
        return list(range(int(spec[0]), int(spec[1]) + 1, int(spec[2])))
    raise ConfigError("N must be [start, stop, step] or a dict")


def _write(out: Path, name: str, body: str, cfg, extra=()):
    out.mkdir(parents=True, exist_ok=True)
    head = "".join(f"# {line}\n" for line in list(extra) + _header_lines(cfg))
    (out / name).write_text(head + body)
    return out / name


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_forward(cfg, out: Path, seed: int | None = None) -> dict:
    """Cauchy data (and optionally the far field) for the configured scene."""
    scene = _scene(cfg)
    ctx = _wave(cfg)
    M, R, center = _measurement(cfg, scene)
    if scene.is_empty:
        data = incident_cauchy_data(ctx.k, ctx.incidence, R, M, center)
        sol = None
    else:
        sol = solve(scene, ctx, _disc(cfg))
        prov = "point-source" if isinstance(ctx.incidence, PointSource) else "near-field"
        data = cauchy_data(sol, R, M, center, provenance=prov)
    noise = cfg.get("noise", {})
    level = float(noise.get("level", 0.0))
    if level > 0:
        data = add_noise(data, level, seed if seed is not None else noise.get("seed", 0))
    written = {"cauchy": _write(out, "cauchy.csv", data.to_csv(), cfg)}
    ff = cfg.get("far_field")
    if ff is not None:
        if sol is None:
            raise DomainError("far field of an empty scene is identically zero; nothing to write")
        F = far_field(sol, int(ff.get("Q", 256)), int(ff.get("precision_bits", 53)))
        written["far_field"] = _write(out, "farfield.csv", F.to_csv(), cfg)
    doc = scene.to_dict()
    doc["config"] = _public(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scene.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if sol is not None:
        logger.info("solver: %d unknowns, cond %.3g, residual %.3g", sol.boundary.n_nodes, sol.cond, sol.residual)
    return {"data": data, "files": written}


def _load_or_synthesize(cfg, out, seed):
    if "data" in cfg and "cauchy" in cfg["data"]:
        data = CauchyData.from_csv(_resolve(cfg, cfg["data"]["cauchy"]).read_text())
    else:
        data = cmd_forward(cfg, out, seed)["data"]
    w = cfg.get("wave", {})
    if "k" in w and not math.isclose(float(w["k"]), data.k, rel_tol=1e-12):
        raise ConfigError(f"config k = {w['k']} does not match data k = {data.k}")
    m = cfg.get("measurement", {})
    if "R" in m and not math.isclose(float(m["R"]), data.R, rel_tol=1e-12):
        raise ConfigError(f"config R = {m['R']} does not match data R = {data.R}")
    return data


def _screen_warnings(cfg, omega) -> list:
    """Endpoint caveat when a flagged screen tip attains the support value."""
    if "scene" not in cfg and "scene_file" not in cfg:
        return []
    scene = _scene(cfg)
    if not scene.screens:
        return []
    res = support(scene, omega)
    out = []
    for sc in scene.screens:
        for end, flag in zip((sc.vertices[0], sc.vertices[-1]), sc.endpoint_flags):
            if flag and any(np.linalg.norm(end - p) < 1e-9 for p in res.argmax_points):
                out.append(
                    f"screen endpoint ({end[0]:.4g}, {end[1]:.4g}) attains the support value; "
                    "the limit needs the incident direction not perpendicular to the screen normal there"
                )
    return out


def _summary_lines(results, warns):
    lines = [r.summary() for r in results]
    lines += [f"warning: {w}" for w in warns]
    return "\n".join(lines) + "\n"


def cmd_reconstruct(cfg, out: Path, seed: int | None = None, threads: int = 1) -> dict:
    """Single-direction vertex estimate (``omega`` in config) or a full hull sweep."""
    data = _load_or_synthesize(cfg, out, seed)
    grid = _tau_grid(cfg, data.R)
    warns = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EnclosureWarning)
        if "omega" in cfg:
            om = Direction.coerce(cfg["omega"])
            warns += _screen_warnings(cfg, om)
            series = ratio_series(data, om, grid)
            res = vertex_estimate(series, om)
            _write(out, "series.csv", series.to_csv(), cfg)
            _write(out, "summary.txt", _summary_lines([res], warns + [str(w.message) for w in caught]), cfg)
            return {"result": res}
        sweep = cfg.get("sweep", {})
        hs = hull_sweep(
            data,
            int(sweep.get("n_theta", 64)),
            {"tau_grid": grid, "tol_floor": float(sweep.get("tol_floor", 0.0))},
            threads=threads,
        )
    warns += sorted({str(w.message) for w in caught})
    _write(out, "sweep.csv", hs.to_csv(), cfg)
    _write(out, "hull.csv", hs.hull_csv(), cfg)
    lines = [f"clusters: {hs.n_clusters}", f"cluster_tol: {hs.cluster_tol:.4g}"]
    lines += [f"vertex {i}: ({v[0]:.6f}, {v[1]:.6f})" for i, v in enumerate(hs.representatives)]
    lines += ["jump angles: " + " ".join(f"{a:.6f}" for a in hs.jump_angles)]
    lines += [f"warning: {w}" for w in warns]
    _write(out, "summary.txt", "\n".join(lines) + "\n", cfg)
    return {"sweep": hs}


def cmd_farfield(cfg, out: Path, seed: int | None = None, threads: int = 1) -> dict:
    """Vertex estimate from the far field along ``tau(N) = beta N / (e R)``."""
    ff = cfg.get("far_field")
    if ff is None:
        raise ConfigError("far-field mode needs a 'far_field' section")
    beta = float(ff.get("beta", 0.5))
    b0 = beta0()
    if not 0 < beta < b0:
        raise ConfigError(f"beta = {beta} is not below beta0 = {b0:.12f}")
    if "data" in cfg and "far_field" in cfg["data"]:
        F = FarField.from_csv(_resolve(cfg, cfg["data"]["far_field"]).read_text())
        scene = _scene(cfg) if ("scene" in cfg or "scene_file" in cfg) else None
    else:
        scene = _scene(cfg)
        if scene.measurement_center.any():
            raise ConfigError("far-field mode needs an origin-centred scene")
        sol = solve(scene, _wave(cfg), _disc(cfg))
        F = far_field(sol, int(ff.get("Q", 256)), int(ff.get("precision_bits", 512)))
        _write(out, "farfield.csv", F.to_csv(), cfg)
    if "R" not in ff and scene is None:
        raise ConfigError("far_field.R is required when no scene is given")
    R = float(ff.get("R", scene.R if scene is not None else 0.0))
    Ns = _n_range(ff.get("N", [20, 80, 4]))
    offset = float(ff.get("offset", 0.0))
    om = Direction.coerce(cfg.get("omega", [math.sqrt(0.5), math.sqrt(0.5)]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EnclosureWarning)
        res = farfield_reconstruct(F, om, beta, Ns, R, offset)
    series = res.meta.pop("series")
    per_n = res.meta.pop("per_N")
    _write(out, "series.csv", series.to_csv(), cfg)
    body = "N,tau,x1,x2\n" + "".join(f"{n},{float(t)!r},{float(v[0])!r},{float(v[1])!r}\n" for n, t, v in per_n)
    _write(out, "per_n.csv", body, cfg)
    _write(out, "summary.txt", _summary_lines([res], sorted({str(w.message) for w in caught})), cfg)
    return {"result": res}


def cmd_pointsource(cfg, out: Path, seed: int | None = None, threads: int = 1) -> dict:
    """Point-source data on the outer circle and the vertex estimate from ``J'/J``."""
    scene = _scene(cfg)
    w = cfg.get("wave", {})
    k = float(w.get("k", 1.0))
    ps = cfg.get("point_source", {})
    if "y" not in ps:
        raise ConfigError("pointsource mode needs point_source.y")
    M, R, _ = _measurement(cfg, scene)
    warns = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EnclosureWarning)
        data = point_source_data(scene, k, ps["y"], R, M, _disc(cfg))
        noise = cfg.get("noise", {})
        if float(noise.get("level", 0.0)) > 0:
            data = add_noise(data, float(noise["level"]), seed if seed is not None else noise.get("seed", 0))
        om = Direction.coerce(cfg.get("omega", [math.sqrt(0.5), math.sqrt(0.5)]))
        series = point_source_series(data, om, _tau_grid(cfg, R))
        res = vertex_estimate(series, om, method="point-source")
    warns += sorted({str(m.message) for m in caught})
    _write(out, "cauchy.csv", data.to_csv(), cfg)
    _write(out, "series.csv", series.to_csv(), cfg)
    _write(out, "summary.txt", _summary_lines([res], warns), cfg)
    return {"result": res}


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def _oracle_lemma23():
    rows = []
    for n in range(16):
        for mu in (0.0, 1 / 3, 2 / 3, 1.0, 1.5, math.pi / 1.7):
            lhs, rhs = asy.lemma23_check(n, mu)
            rows.append((f"n={n} mu={mu:.6g}", lhs, rhs, abs(lhs - rhs) / abs(rhs), 1e-10))
    return rows


def _oracle_model_integrals():
    rows = []
    for th in (-math.pi / 4, -2 * math.pi / 3):
        for mu in (1 / 3, 2 / 3, 4 / 3):
            for s in (20.0, 40.0, 100.0, 200.0, 400.0):
                p = asy.ModelIntegralParams((s - 1 / s) / 2, th, mu)
                I, K = asy.model_integral_I(p), asy.model_integral_K(p)
                aI, aK = asy.asymptotic_I(p), asy.asymptotic_K(p)
                tag = f"theta={th:.4f} mu={mu:.4f} s={s:g}"
                rows.append((tag + " I", abs(I), abs(aI), abs(I - aI) / abs(aI), s**-4))
                rows.append((tag + " K", abs(K), abs(aK), abs(K - aK) / abs(aK), s**-4))
            # slope of the error once the zeta factor is dropped
            ss = np.array([20.0, 40.0, 80.0, 160.0])
            errs = []
            for s in ss:
                p = asy.ModelIntegralParams((s - 1 / s) / 2, th, mu)
                K = asy.model_integral_K(p)
                errs.append(abs(K - asy.asymptotic_K(p, with_zeta=False)) / abs(K))
            slope = float(np.polyfit(np.log(ss), np.log(errs), 1)[0])
            rows.append((f"theta={th:.4f} mu={mu:.4f} no-zeta slope", slope, -2.0, abs(slope + 2.0), 0.1))
    return rows


def _oracle_lemma22():
    rows = []
    for sigma in (0.0, 0.5, 2 / 3):
        for th in (-math.pi / 4, -2 * math.pi / 3):
            for s in (20.0, 100.0):
                tau = (s - 1 / s) / 2
                q = asy.laplace_power_integral(sigma, tau, th)
                part = sum(asy.lemma22_coeff(sigma, n, th) / s ** (sigma + 2 * n + 1) for n in range(3))
                tol = 10 * s ** (-2 * 3) + 1e-12
                rows.append((f"sigma={sigma:.4g} theta={th:.4f} s={s:g}", abs(part), abs(q), abs(part - q) / abs(q), tol))
    return rows


def _oracle_bessel():
    rows = []
    for x, mu in ((1.0, 0.0), (0.6, 2 / 3), (5.0, 1.5)):
        lhs, rhs = asy.bessel_product_check(x, mu)
        rows.append((f"x={x:g} mu={mu:.4g}", lhs, rhs, abs(lhs - rhs) / abs(rhs), 1e-10))
    return rows


def _oracle_corner_fit():
    # manufactured trace J_{mu_2}(kr) cos(mu_2 theta) placed on the square's boundary nodes
    scene = Scene(obstacles=[[[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]], R=0.75)
    cf = corner_frame(scene, Direction(np.array([math.sqrt(0.5), math.sqrt(0.5)])))
    bd = polygon_boundary(scene)
    rel = bd.nodes - cf.x0
    on_q = np.abs(rel @ np.array([-cf.edge_q[1], cf.edge_q[0]])) < 1e-9
    mu2 = math.pi / cf.Theta
    dens = bessel_j(mu2, np.linalg.norm(rel, axis=1)) * np.cos(mu2 * np.where(on_q, cf.Theta, 0.0))
    sol = BoundarySolution(bd, 1.0, PlaneWave((1.0, 0.0)), dens.astype(complex), 1.0, 0.0, Discretization())
    model = asy.corner_fit(sol, cf)
    rows = []
    for m, a in enumerate(model.alpha, start=1):
        want = 1.0 if m == 2 else 0.0
        rows.append((f"alpha_{m}", abs(a), want, abs(a - want), 1e-8))
    return rows


def _oracle_tail_bound():
    rows = []
    R, beta, k = 1.0, 0.5, 1.0
    prev = None
    # log of e^{R tau(N)} E(tau(N); N+1); each row must sit below the previous one
    for N in range(10, 81, 5):
        tau = beta * N / (math.e * R)
        lg = R * tau + log_tail_bound(tau, k, R, N + 1)
        rise = 0.0 if prev is None else max(0.0, lg - prev)
        rows.append((f"N={N} tau={tau:.4f}", lg, lg if prev is None else prev, rise, 1e-300))
        prev = lg
    return rows


_ORACLES = {
    "lemma23": _oracle_lemma23,
    "model-integrals": _oracle_model_integrals,
    "lemma22": _oracle_lemma22,
    "bessel-identity": _oracle_bessel,
    "corner-fit": _oracle_corner_fit,
    "tail-bound": _oracle_tail_bound,
}


def cmd_oracle(suite: str, out: Path | None = None, cfg=None):
    """Run an oracle suite; returns ``(rows, all_passed)``."""
    if suite not in _ORACLES:
        raise ConfigError(f"unknown oracle suite {suite!r}; choose from {', '.join(ORACLE_SUITES)}")
    rows = _ORACLES[suite]()
    table = ["parameter,lhs,rhs,rel_error,tolerance,pass"]
    ok = True
    for name, lhs, rhs, err, tol in rows:
        good = bool(err < tol)
        ok &= good
        table.append(f"{name},{float(lhs)!r},{float(rhs)!r},{err:.3e},{tol:.3e},{'PASS' if good else 'FAIL'}")
    if out is not None:
        _write(out, f"oracle_{suite}.csv", "\n".join(table) + "\n", cfg or {"schema": SCHEMA}, [f"suite={suite}"])
    return rows, ok, "\n".join(table)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="enclosure", description="Polygon hull reconstruction from scattering data.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="noise seed (overrides config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for direction sweeps")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("forward", "reconstruct", "farfield", "pointsource"):
        sub.add_parser(name, parents=[common])
    orc = sub.add_parser("oracle", parents=[common])
    orc.add_argument("suite", help="one of: " + ", ".join(ORACLE_SUITES))
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = copy.deepcopy(cfg)
            cfg.setdefault("noise", {})["seed"] = args.seed
        if args.command == "oracle":
            _, ok, table = cmd_oracle(args.suite, out, cfg)
            print(table)
            print(f"{args.suite}: {'PASS' if ok else 'FAIL'}")
            return EXIT_OK if ok else EXIT_FAIL
        if args.command == "forward":
            res = cmd_forward(cfg, out, args.seed)
            for key, path in res["files"].items():
                print(f"{key}: {path}")
            return EXIT_OK
        fn = {"reconstruct": cmd_reconstruct, "farfield": cmd_farfield, "pointsource": cmd_pointsource}[args.command]
        fn(cfg, out, args.seed, args.threads)
        print((out / "summary.txt").read_text(), end="")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnclosureError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
