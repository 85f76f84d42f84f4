"""Command-line front end.

Each run reads one JSON scenario, validates all of it before touching the
library, and writes a primary CSV or JSON file plus ``<stem>.metadata.json``.
Frequencies in configs are cyclic THz. Exit status: 0 success, 2 config or
domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import _kernels, io
from .berry import (KGrid, berry_field, chern_number, cp_chern_number, cp_loop_integral,
                    incremental_berry_phase, q_peak, solid_angle_left, spherical_path_phase)
from .bulk import polar_state, solve_bulk_band, tm_effective_eps, tm_gap
from .constants import C0, thz_to_rad
from .emitter import FarFieldModel, vibration_spectrum
from .errors import BerryEMError, DomainError, NonConvergent, NumericalFailure
from .media import (RANDOM_FAMILIES, ConstantMedium, NonlocalParams, PlasmaParams,
                    _material_errors, classify_symmetry, material_from_json, random_material)
from .spp import PEC, confinement_map, spp_band

__all__ = ["COMMANDS", "ConfigError", "Scenario", "validate", "run", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_RESONANCE_GUARD = 1e-9


class ConfigError(DomainError):
    """Aggregated validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class Scenario:
    command: str
    params: dict
    raw: dict
    material: Any = None
    seed: int = 0
    threads: int | None = None
    out_dir: Path = field(default_factory=lambda: Path("."))


# ------------------------------------------------------------ field checks
# A spec is (checker, default). ``REQUIRED`` marks fields without a default.

REQUIRED = object()


def _number(positive=False, nonneg=False, lo=None, hi=None):
    def check(v, where, errs):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            errs.append(f"{where}: expected a finite number")
            return None
        if positive and v <= 0:
            errs.append(f"{where}: must be positive")
        if nonneg and v < 0:
            errs.append(f"{where}: must be non-negative")
        if lo is not None and v < lo:
            errs.append(f"{where}: must be >= {lo}")
        if hi is not None and v > hi:
            errs.append(f"{where}: must be <= {hi}")
        return float(v)
    return check


def _integer(minimum=None, maximum=None):
    def check(v, where, errs):
        if isinstance(v, bool) or not isinstance(v, int):
            errs.append(f"{where}: expected an integer")
            return None
        if minimum is not None and v < minimum:
            errs.append(f"{where}: must be >= {minimum}")
        if maximum is not None and v > maximum:
            errs.append(f"{where}: must be <= {maximum}")
        return v
    return check


def _choice(*options):
    def check(v, where, errs):
        if v not in options:
            errs.append(f"{where}: expected one of {list(options)}, got {v!r}")
            return None
        return v
    return check


def _list_of(item, min_len=1):
    def check(v, where, errs):
        if not isinstance(v, list) or len(v) < min_len:
            errs.append(f"{where}: expected a list with at least {min_len} entries")
            return None
        return [item(x, f"{where}[{i}]", errs) for i, x in enumerate(v)]
    return check


def _vector(n):
    num = _number()

    def check(v, where, errs):
        if not isinstance(v, list) or len(v) != n:
            errs.append(f"{where}: expected a list of {n} numbers")
            return None
        return [num(x, f"{where}[{i}]", errs) for i, x in enumerate(v)]
    return check


def _range(min_n=2):
    keys = {"min", "max", "n"}

    def check(v, where, errs):
        if not isinstance(v, dict):
            errs.append(f"{where}: expected an object {{min, max, n}}")
            return None
        for k in sorted(set(v) - keys):
            errs.append(f"{where}.{k}: unknown field")
        for k in sorted(keys - set(v)):
            errs.append(f"{where}.{k}: required")
        if not keys <= set(v):
            return None
        lo = _number()(v["min"], f"{where}.min", errs)
        hi = _number()(v["max"], f"{where}.max", errs)
        n = _integer(min_n)(v["n"], f"{where}.n", errs)
        if lo is not None and hi is not None and not lo < hi:
            errs.append(f"{where}: min must be below max")
        return {"min": lo, "max": hi, "n": n}
    return check


def _eps_s(v, where, errs):
    if isinstance(v, str):
        if v.lower() != PEC:
            errs.append(f"{where}: expected a number or \"pec\"")
            return None
        return PEC
    x = _number()(v, where, errs)
    if x is not None and x == 0.0:
        errs.append(f"{where}: must be non-zero")
    return x


def _direction(v, where, errs):
    if v is None or v in (1, -1) and not isinstance(v, bool):
        return v
    errs.append(f"{where}: expected 1, -1 or null")
    return None


def _output(v, where, errs):
    if not isinstance(v, str) or not v or "/" in v or "\\" in v or v.startswith("."):
        errs.append(f"{where}: expected a plain file stem")
        return None
    return v


PLASMA_TYPES = ("plasma", "nonlocal_plasma")
ANY_TYPE = ("vacuum", "dielectric", "plasma", "nonlocal_plasma")

# command -> (material types accepted or None, field specs, default output stem)
SCHEMAS: dict[str, tuple[tuple | None, dict, str]] = {
    "bands": (PLASMA_TYPES, {
        "k_max_norm": (_number(positive=True), 3.0),
        "n_k": (_integer(2, 100_000), 301),
        "polarizations": (_list_of(_choice("TM", "TE")), ["TM", "TE"]),
    }, "bands"),
    "berry-field": (PLASMA_TYPES, {
        "band": (_choice("upper", "lower", "te"), "upper"),
        "half_width_norm": (_number(positive=True), 2.0),
        "center_norm": (_vector(2), [0.0, 0.0]),
        "n": (_integer(4, 4096), 64),
    }, "berry_field"),
    "chern": (PLASMA_TYPES, {
        "bands": (_list_of(_choice("upper", "lower", "te")), ["upper", "lower"]),
        "n_radial": (_integer(16, 1_000_000), 256),
        "n_angular": (_integer(16, 1_000_000), 256),
        "far_factor": (_number(lo=1.0), 1e3),
        "strict": (_choice(True, False), True),
    }, "chern"),
    "spp": (("plasma",), {
        "eps_s": (_eps_s, REQUIRED),
        "f_min_thz": (_number(positive=True), REQUIRED),
        "f_max_thz": (_number(positive=True), REQUIRED),
        "n_f": (_integer(2, 100_000), 201),
        "direction": (_direction, None),
    }, "spp"),
    "confinement": (None, {
        "omega_p_thz": (_number(positive=True), REQUIRED),
        "omega_over_omega_p": (_range(), {"min": 1.001, "max": 2.0, "n": 1000}),
        "omega_c_over_omega_p": (_list_of(_number()), [0.2, 0.5, 1.0]),
    }, "confinement"),
    "qcheck": (("plasma",), {
        "f_thz": (_number(positive=True), REQUIRED),
        "delta_phi_deg": (_list_of(_number(positive=True, hi=5.0)), [1.0, 2.0, 3.0, 4.0]),
        "r_over_wavelength": (_list_of(_number(nonneg=True)), [0.0]),
        "window_rad": (_vector(2), [-0.2, 0.2]),
        "n_scan": (_integer(3, 1_000_000), 4001),
    }, "qcheck"),
    "emitter": (None, {
        "vortex_n": (_integer(-64, 64), 1),
        "V0": (_number(positive=True), 1.0),
        "carrier_over_vibration": (_integer(11, 100_000), 64),
        "dphi0": (_number(positive=True, hi=0.1), 1e-2),
        "n_periods": (_integer(32, 100_000), 64),
        "floor_db": (_number(hi=0.0), -120.0),
    }, "spectrum"),
    "symmetry": (ANY_TYPE, {
        "f_thz": (_number(positive=True), 10.0),
        "k_samples_norm": (_list_of(_vector(3)), [[0.0, 0.0, 0.0], [0.5, 0.3, 0.0]]),
        "random_family": (_integer(0, 100_000), 0),
    }, "symmetry"),
    "geophase": (None, {
        "path": (_list_of(_vector(3), min_len=2), [[0, 0, 1], [1, 0, 0], [0, 1, 0]]),
        "helicity": (_choice(1, -1), 1),
        "sphere_grid": (_integer(8, 4096), 64),
    }, "geophase"),
}
COMMANDS = tuple(SCHEMAS)
_COMMON = {"command", "material", "output"}


# ------------------------------------------------------------ validation


def _check_frequency(model, omega, where, errs):
    """Up-front physical preconditions for a probe frequency."""
    if not isinstance(model, (PlasmaParams, NonlocalParams)):
        return
    wc = abs(model.omega_c)
    if abs(omega - wc) <= _RESONANCE_GUARD * omega:
        errs.append(f"{where}: resonance singularity (omega = |omega_c|)")


def _physics(cmd, model, p, errs):
    if cmd == "qcheck":
        w = thz_to_rad(p["f_thz"])
        _check_frequency(model, w, "f_thz", errs)
        if not errs:
            e11, _, _ = model.components(w)
            if e11 == 0.0:
                errs.append("f_thz: epsilon_11 = 0 at this frequency")
            elif tm_effective_eps(model, w) <= 0.0:
                errs.append("f_thz: no propagating TM mode (epsilon_eff <= 0)")
        lo, hi = p["window_rad"]
        if not lo < hi:
            errs.append("window_rad: first entry must be below the second")
    elif cmd == "symmetry":
        _check_frequency(model, thz_to_rad(p["f_thz"]), "f_thz", errs)
    elif cmd == "spp":
        if p["f_min_thz"] >= p["f_max_thz"]:
            errs.append("f_min_thz: must be below f_max_thz")
        else:
            for f in np.linspace(p["f_min_thz"], p["f_max_thz"], p["n_f"]):
                _check_frequency(model, thz_to_rad(f), "f_min_thz..f_max_thz", errs)
                if errs:
                    break
    elif cmd == "confinement":
        r = p["omega_over_omega_p"]
        if r["min"] <= 0:
            errs.append("omega_over_omega_p.min: must be positive")
        grid = np.linspace(r["min"], r["max"], r["n"])
        for j, rc in enumerate(p["omega_c_over_omega_p"]):
            if np.any(np.abs(grid - abs(rc)) <= _RESONANCE_GUARD * grid):
                errs.append(f"omega_c_over_omega_p[{j}]: resonance singularity on the sweep")
    elif cmd == "geophase":
        pts = np.array(p["path"], dtype=float)
        if np.any(np.linalg.norm(pts, axis=1) == 0.0):
            errs.append("path: zero vector")


def validate(text: str, out_dir: Path | str = ".", seed: int = 0,
             threads: int | None = None) -> Scenario:
    """Parse and check a scenario. Raises ``ConfigError`` listing every problem."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: malformed JSON at line {exc.lineno} column {exc.colno}: "
                           f"{exc.msg}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config: top level must be an object"])
    cmd = raw.get("command")
    if cmd not in SCHEMAS:
        raise ConfigError([f"command: expected one of {list(COMMANDS)}, got {cmd!r}"])
    kinds, specs, stem = SCHEMAS[cmd]
    errs: list[str] = []
    for key in sorted(set(raw) - set(specs) - _COMMON):
        errs.append(f"{key}: unknown field")
    if kinds is None and "material" in raw:
        errs.append("material: not used by this command")

    model = None
    if kinds is not None:
        mat = raw.get("material")
        if mat is None:
            errs.append("material: required")
        else:
            merrs = _material_errors(mat)
            if not merrs and mat["type"] not in kinds:
                merrs.append(f"material.type: {cmd} accepts {list(kinds)}")
            errs.extend(merrs)
            if not merrs:
                try:
                    model = material_from_json(mat)
                except BerryEMError as exc:
                    errs.append(f"material: {exc}")

    params: dict = {"output": stem}
    if "output" in raw:
        params["output"] = _output(raw["output"], "output", errs)
    for key, (check, default) in specs.items():
        if key in raw:
            params[key] = check(raw[key], key, errs)
        elif default is REQUIRED:
            errs.append(f"{key}: required")
        else:
            params[key] = default
    # invalid optional fields fall back to defaults so the physics checks still run
    probe = {k: (specs[k][1] if v is None and k in specs and specs[k][1] is not REQUIRED else v)
             for k, v in params.items()}
    usable = all(probe.get(k) is not None for k in specs if specs[k][1] is not None)
    if usable and (model is not None or kinds is None):
        perrs: list[str] = []
        try:
            _physics(cmd, model, probe, perrs)
        except TypeError:
            pass  # a malformed entry already reported above
        errs.extend(perrs)
    if errs:
        raise ConfigError(errs)
    return Scenario(cmd, params, raw, model, seed, threads, Path(out_dir))


# ------------------------------------------------------------ commands


def _norm_k(model):
    return model.omega_p / C0


def _cmd_bands(sc):
    m, p = sc.material, sc.params
    kn = np.linspace(0.0, p["k_max_norm"], p["n_k"])
    rows = []
    for pol in p["polarizations"]:
        for band in (("lower", "upper") if pol == "TM" else ("te",)):
            for x in kn:
                k = x * _norm_k(m)
                s = solve_bulk_band(m, k, "upper" if band == "te" else band, pol)
                rows.append((x, k, s.omega / (2e12 * math.pi), s.omega / m.omega_p, band, pol))
    header = ("k_norm", "k_rad_per_m", "f_thz", "omega_over_omega_p", "band", "polarization")
    lo, hi = tm_gap(m)
    grid = {"n_k": p["n_k"], "k_max_norm": p["k_max_norm"]}
    return "csv", header, rows, grid, {"tm_gap_thz": [lo / (2e12 * math.pi),
                                                      hi / (2e12 * math.pi)]}


def _cmd_berry_field(sc):
    m, p = sc.material, sc.params
    s = _norm_k(m)
    c = p["center_norm"]
    grid = KGrid.square(p["half_width_norm"] * s, p["n"], (c[0] * s, c[1] * s))
    bf = berry_field(m, p["band"], grid)
    rows = []
    for idx in np.ndindex(bf.kx.shape):
        rows.append((bf.kx[idx] / s, bf.ky[idx] / s, bf.A[idx][0], bf.A[idx][1], bf.F[idx]))
    header = ("kx_norm", "ky_norm", "A_x", "A_y", "F_z")
    return "csv", header, rows, {"n": p["n"], "half_width_norm": p["half_width_norm"],
                                 "center_norm": c}, {"gauge": bf.gauge_tag}


def _cmd_chern(sc):
    m, p = sc.material, sc.params
    results, failed = [], None
    for band in p["bands"]:
        try:
            r = chern_number(m, band, n_radial=p["n_radial"], n_angular=p["n_angular"],
                             far_factor=p["far_factor"], strict=p["strict"])
        except NonConvergent as exc:
            r, failed = exc.result, exc
        results.append({"band": band, "label": r.band, "value": r.value, "nearest_integer": r.nearest_integer,
                        "deviation": r.deviation, "grid": r.grid})
    body = {"results": results}
    if "upper" in p["bands"]:
        up = next(r for r in results if r["band"] == "upper")
        body["gap_chern_number"] = -up["nearest_integer"]
    grid = {"n_radial": p["n_radial"], "n_angular": p["n_angular"], "far_factor": p["far_factor"]}
    return "json", None, body, grid, {"failure": str(failed) if failed else None}


def _cmd_spp(sc):
    m, p = sc.material, sc.params
    fs = np.linspace(p["f_min_thz"], p["f_max_thz"], p["n_f"])
    pts = spp_band(np.array([thz_to_rad(f) for f in fs]), p["eps_s"], m, p["direction"])
    s = _norm_k(m)
    rows = [(pt.omega / (2e12 * math.pi), pt.omega / m.omega_p, pt.k_spp / s, pt.k_spp,
             pt.alpha_s / s, pt.alpha_p / s, pt.group_velocity / C0, pt.in_gap) for pt in pts]
    header = ("f_thz", "omega_over_omega_p", "k_spp_norm", "k_spp_rad_per_m",
              "alpha_s_norm", "alpha_p_norm", "v_g_over_c", "in_gap")
    return "csv", header, rows, {"n_f": p["n_f"]}, {"solved": len(rows)}


def _cmd_confinement(sc):
    p = sc.params
    r = p["omega_over_omega_p"]
    ratios = np.linspace(r["min"], r["max"], r["n"])
    wcs = np.array(p["omega_c_over_omega_p"])
    amap = confinement_map(ratios, wcs, thz_to_rad(p["omega_p_thz"]))
    rows = [(ratios[i], wcs[j], amap[i, j]) for j in range(wcs.size) for i in range(ratios.size)]
    header = ("omega_over_omega_p", "omega_c_over_omega_p", "alpha_p_norm")
    return "csv", header, rows, {"n_omega": r["n"], "n_omega_c": int(wcs.size)}, {}


def _cmd_qcheck(sc):
    m, p = sc.material, sc.params
    w = thz_to_rad(p["f_thz"])
    lam = 2 * math.pi / polar_state(m, w).k
    rows = []
    for deg in p["delta_phi_deg"]:
        dphi = math.radians(deg)
        dg = incremental_berry_phase(m, w, dphi)
        for rw in p["r_over_wavelength"]:
            wt = q_peak(m, w, dphi, r=rw * lam, window=tuple(p["window_rad"]),
                        n_scan=p["n_scan"])
            rows.append((deg, rw, wt, dg, wt - dg))
    header = ("delta_phi_deg", "r_over_wavelength", "wt_peak_rad", "delta_gamma_rad",
              "difference_rad")
    return "csv", header, rows, {"n_scan": p["n_scan"], "window_rad": p["window_rad"]}, {}


def _cmd_emitter(sc):
    p = sc.params
    Omega = 1.0
    omega = float(p["carrier_over_vibration"])
    duration = p["n_periods"] * 2 * math.pi / Omega
    lines = vibration_spectrum(FarFieldModel.vortex(p["vortex_n"]), p["V0"], omega, Omega,
                               p["dphi0"], duration, floor_db=p["floor_db"])
    rows = [(ln.offset_over_Omega, ln.amplitude, ln.rel_carrier_db) for ln in lines]
    header = ("f_offset_over_Omega", "amplitude", "amplitude_rel_carrier_db")
    return "csv", header, rows, {"n_periods": p["n_periods"],
                                 "carrier_over_vibration": p["carrier_over_vibration"]}, {}


def _cmd_symmetry(sc):
    m, p = sc.material, sc.params
    w = thz_to_rad(p["f_thz"])
    scale = m.omega_p / C0 if isinstance(m, (PlasmaParams, NonlocalParams)) else w / C0
    ks = [np.array(k) * scale for k in p["k_samples_norm"]]
    rep = classify_symmetry(m, w, ks)
    body = {"lossless": rep.lossless, "tr_invariant": rep.tr_invariant,
            "inversion_invariant": rep.inversion_invariant, "reciprocal": rep.reciprocal,
            "theorem_holds": rep.theorem_holds, "residuals": rep.residuals}
    n = p["random_family"]
    if n:
        rng = np.random.default_rng(sc.seed)
        tally = {f: {"count": 0, "theorem_holds": 0} for f in RANDOM_FAMILIES}
        for i in range(n):
            fam = RANDOM_FAMILIES[i % len(RANDOM_FAMILIES)]
            r = classify_symmetry(ConstantMedium(random_material(rng, fam)))
            tally[fam]["count"] += 1
            tally[fam]["theorem_holds"] += int(r.theorem_holds)
        body["random_family"] = tally
    return "json", None, body, {"k_samples": len(ks)}, {}


def _cmd_geophase(sc):
    p = sc.params
    path, h = p["path"], p["helicity"]
    body = {"helicity": h, "phase": spherical_path_phase(path, h)}
    if len(path) >= 3:
        body["solid_angle_left"] = solid_angle_left(path)
        body["loop_integral"] = cp_loop_integral(path, h)
    n = p["sphere_grid"]
    body["chern_number"] = cp_chern_number(h, n, n)
    return "json", None, body, {"sphere_grid": n}, {}


_DISPATCH: dict[str, Callable] = {
    "bands": _cmd_bands, "berry-field": _cmd_berry_field, "chern": _cmd_chern,
    "spp": _cmd_spp, "confinement": _cmd_confinement, "qcheck": _cmd_qcheck,
    "emitter": _cmd_emitter, "symmetry": _cmd_symmetry, "geophase": _cmd_geophase,
}


def run(sc: Scenario) -> int:
    """Execute a validated scenario; returns the exit status."""
    from . import __version__

    _kernels.set_threads(sc.threads)
    t0 = time.perf_counter()
    kind, header, payload, grid, extra = _DISPATCH[sc.command](sc)
    runtime = time.perf_counter() - t0
    sc.out_dir.mkdir(parents=True, exist_ok=True)
    stem = sc.params["output"]
    primary = sc.out_dir / f"{stem}.{kind}"
    if kind == "csv":
        io.write_csv(primary, header, payload)
    else:
        io.write_json(primary, payload)
    failure = extra.get("failure") if extra else None
    meta = {"command": sc.command, "inputs": sc.raw, "version": __version__,
            "backend": _kernels.backend(), "threads": sc.threads, "seed": sc.seed,
            "grid": grid, "runtime_s": runtime, "primary": primary.name,
            "status": "numerical failure" if failure else "ok"}
    meta.update({k: v for k, v in (extra or {}).items() if v is not None})
    io.write_json(sc.out_dir / f"{stem}.metadata.json", meta)
    if failure:
        print(f"numerical failure: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="berryem", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="scenario JSON file ('-' for stdin)")
    ap.add_argument("--out-dir", default=".", help="directory for output files")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for grid kernels")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized families")
    args = ap.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sc = validate(text, args.out_dir, args.seed, args.threads)
        if sc.command != args.command:
            raise ConfigError([f"command: config says {sc.command!r} but "
                               f"{args.command!r} was requested"])
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(sc)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
