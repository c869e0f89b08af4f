"""Command-line driver: ground-state solving, single minimizations,
sweeps, predictions, and the verification suite, bound to a YAML config.

Config schema (unknown keys anywhere are errors):

    grid:     {L: <float or "auto">, n: <int>}
    model:    {a | a_over_astar | a_list | a_list_over_astar, g,
               potential: {type: zero} | {type: trap, q} |
                          {type: singular, h0, points: [{z: [x, y], p}]}}
    solver:   {tau0, energy_tol, residual_tol, max_iter,
               warm_start, trial_bound, profile_error,
               seed: {type: gaussian, center, width} |
                     {type: q0, center, b}}
    q_solver: {dr, r_max, tol}
    output:   {directory, formats}

"auto" box sizing uses the predicted blow-up scale(s) for the requested
a value(s). The a_over_astar forms are resolved against the freshly
computed critical strength, so configs stay valid across profile
resolutions.

Field binary format (documented bit-exactly): little-endian int64 n,
little-endian float64 L, then n*n little-endian float64 values in row
major order (x index outer, y index inner). No magic, no padding;
total size is exactly 16 + 8*n*n bytes.

Exit codes: 0 success; 1 error (config, domain, solver failure) or any
verify criterion failed; 3 minimize ran to completion without meeting
the convergence tolerances.
"""
from __future__ import annotations

import argparse
import json
import struct
import sys
import time
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import yaml

from .asymptotics import (
    SweepOptions,
    SweepResult,
    choose_box,
    predict,
    regime_for_g,
    sweep,
)
from .energy import ModelParams, evaluate, gradient
from .gravity import build_kernel, gravity_energy
from .grid import (
    Field,
    Grid2D,
    coords,
    dilate,
    kinetic_energy,
    make_field,
    make_grid,
    normalize,
    set_fft_workers,
)
from .groundstate import (
    a_star,
    a_star_grid,
    profile_kinetic,
    profile_mass,
    profile_quartic,
    q0_constants,
    q0_on_grid,
    solve_Q,
)
from .minimizer import GaussianSeed, MinimizeOptions, Q0Seed, minimize
from .potentials import (
    SingularSum,
    SingularTerm,
    Trap,
    Zero,
    sample_potential,
    singular_set,
)

__all__ = ["save_field", "load_field", "load_config", "main"]

CSV_COLUMNS = ("a", "E", "kinetic", "potential", "quartic", "gravity", "mu",
               "width", "peak_x", "peak_y", "l_pred", "E_pred", "err_L2",
               "err_H1", "converged")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- field I/O

def save_field(u: Field, path) -> None:
    """Write the bit-exact flat binary: int64 n, float64 L, n*n float64
    row-major values, all little-endian."""
    with open(path, "wb") as f:
        f.write(struct.pack("<q", u.grid.n))
        f.write(struct.pack("<d", u.grid.L))
        f.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as f:
        head = f.read(16)
        if len(head) != 16:
            raise ValueError(f"{path}: truncated header")
        n = struct.unpack("<q", head[:8])[0]
        L = struct.unpack("<d", head[8:])[0]
        data = f.read()
    if len(data) != 8 * n * n:
        raise ValueError(f"{path}: expected {8*n*n} payload bytes, got {len(data)}")
    vals = np.frombuffer(data, dtype="<f8").reshape(n, n).astype(float)
    return make_field(make_grid(L, n), vals)


# ------------------------------------------------------------------- config

_SCHEMA = {
    "grid": {"L", "n"},
    "model": {"a", "a_over_astar", "a_list", "a_list_over_astar", "g", "potential"},
    "solver": {"tau0", "energy_tol", "residual_tol", "max_iter",
               "warm_start", "trial_bound", "profile_error", "seed"},
    "q_solver": {"dr", "r_max", "tol"},
    "output": {"directory", "formats"},
}

_DEFAULTS = {
    "grid": {"L": 8.0, "n": 512},
    "model": {"g": 1.0, "potential": {"type": "zero"}},
    "solver": {},
    "q_solver": {"dr": 5.0e-4, "r_max": 20.0, "tol": 1.0e-12},
    "output": {"directory": ".", "formats": ["csv", "json"]},
}


def _check_keys(d: dict, allowed, path: str) -> None:
    bad = sorted(set(d) - set(allowed))
    if bad:
        raise ConfigError(f"unknown key(s) {bad} under '{path}' "
                          f"(allowed: {sorted(allowed)})")


def load_config(path) -> dict:
    """Parse and schema-check a YAML config, merging section defaults."""
    if path is None:
        raw = {}
    else:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(raw, _SCHEMA, "<root>")
    cfg = {}
    for sec, allowed in _SCHEMA.items():
        merged = dict(_DEFAULTS[sec])
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section '{sec}' must be a mapping")
        _check_keys(given, allowed, sec)
        merged.update(given)
        cfg[sec] = merged
    _check_potential(cfg["model"]["potential"])
    if "seed" in cfg["solver"]:
        _check_seed(cfg["solver"]["seed"])
    return cfg


def _check_potential(d) -> None:
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("model.potential must be a mapping with a 'type'")
    t = d["type"]
    if t == "zero":
        _check_keys(d, {"type"}, "model.potential")
    elif t == "trap":
        _check_keys(d, {"type", "q"}, "model.potential")
        if "q" not in d:
            raise ConfigError("trap potential needs exponent 'q'")
    elif t == "singular":
        _check_keys(d, {"type", "h0", "points"}, "model.potential")
        pts = d.get("points")
        if not isinstance(pts, list) or not pts:
            raise ConfigError("singular potential needs a nonempty 'points' list")
        for i, p in enumerate(pts):
            _check_keys(p, {"z", "p"}, f"model.potential.points[{i}]")
            if "z" not in p or "p" not in p:
                raise ConfigError(f"points[{i}] needs 'z' and 'p'")
            if not (isinstance(p["z"], (list, tuple)) and len(p["z"]) == 2):
                raise ConfigError(f"points[{i}].z must be [x, y]")
    else:
        raise ConfigError(f"unknown potential type {t!r} "
                          "(expected zero, trap, or singular)")


def _check_seed(d) -> None:
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("solver.seed must be a mapping with a 'type'")
    t = d["type"]
    if t == "gaussian":
        _check_keys(d, {"type", "center", "width"}, "solver.seed")
    elif t == "q0":
        _check_keys(d, {"type", "center", "b"}, "solver.seed")
    else:
        raise ConfigError(f"unknown seed type {t!r} (expected gaussian or q0)")


def _build_potential(d):
    t = d["type"]
    if t == "zero":
        return Zero()
    if t == "trap":
        return Trap(q=float(d["q"]))
    pts = tuple(SingularTerm(z=(float(p["z"][0]), float(p["z"][1])),
                             p=float(p["p"])) for p in d["points"])
    return SingularSum(points=pts, h0=float(d.get("h0", 1.0)))


def _p_list_for(potential) -> tuple:
    base = {0.5, 1.0, 1.5}
    ss = singular_set(potential)
    if ss is not None:
        base.add(ss.p)
    return tuple(sorted(base))


def _solve_constants(cfg):
    q = cfg["q_solver"]
    prof = solve_Q(dr=float(q["dr"]), r_max=float(q["r_max"]), tol=float(q["tol"]))
    potential = _build_potential(cfg["model"]["potential"])
    consts = q0_constants(prof, p_list=_p_list_for(potential))
    return prof, consts, potential


def _resolve_a(model: dict, astar: float, want_list: bool):
    keys = [k for k in ("a", "a_over_astar", "a_list", "a_list_over_astar")
            if k in model]
    if len(keys) != 1:
        raise ConfigError(
            "model must set exactly one of a, a_over_astar, a_list, "
            f"a_list_over_astar (got {keys or 'none'})")
    k = keys[0]
    if want_list and k in ("a", "a_over_astar"):
        raise ConfigError(f"sweep needs a list form, got scalar '{k}'")
    if not want_list and k in ("a_list", "a_list_over_astar"):
        raise ConfigError(f"this command needs a scalar a, got list '{k}'")
    v = model[k]
    if k == "a":
        return float(v)
    if k == "a_over_astar":
        return float(v) * astar
    vals = [float(x) for x in v]
    if k == "a_list_over_astar":
        vals = [x * astar for x in vals]
    return vals


def _build_grid(cfg, ells=None) -> Grid2D:
    g = cfg["grid"]
    n = int(g["n"])
    L = g["L"]
    if isinstance(L, str):
        if L != "auto":
            raise ConfigError(f"grid.L must be a number or 'auto', got {L!r}")
        if not ells:
            raise ConfigError("grid.L: auto needs a predictable blow-up scale; "
                              "set L explicitly for this model")
        return make_grid(choose_box(ells, n), n)
    return make_grid(float(L), n)


def _minimize_opts(cfg, consts, profile) -> MinimizeOptions:
    s = cfg["solver"]
    kw = {}
    for key in ("tau0", "energy_tol", "residual_tol"):
        if key in s:
            kw[key] = float(s[key])
    if "max_iter" in s:
        kw["max_iter"] = int(s["max_iter"])
    if "seed" in s:
        d = s["seed"]
        center = tuple(float(c) for c in d.get("center", (0.0, 0.0)))
        if d["type"] == "gaussian":
            kw["init"] = GaussianSeed(center=center, width=float(d.get("width", 1.0)))
        else:
            kw["init"] = Q0Seed(profile=profile, center=center, b=float(d.get("b", 1.0)))
    return MinimizeOptions(consts=consts, **kw)


# ------------------------------------------------------------------ writers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        x = x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_sweep_csv(path: Path, result: SweepResult) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for r in result.rows:
        b = r.breakdown
        vals = [r.a, b.total, b.kinetic, b.potential, b.quartic, b.gravity,
                r.mu, r.width, r.peak[0], r.peak[1], r.ell_pred, r.E_pred,
                r.err_L2, r.err_H1]
        lines.append(",".join(_fmt(v) for v in vals)
                     + ("," + ("true" if r.converged else "false")))
    path.write_text("\n".join(lines) + "\n")


def _row_dict(r) -> dict:
    d = asdict(r)
    d["E"] = r.breakdown.total
    return d


def _sweep_json(result: SweepResult, cfg) -> dict:
    return {
        "fit": {"exponent": result.fit_exponent,
                "amplitude": result.fit_amplitude,
                "rows_used": list(result.fit_rows_used)},
        "grid": {"L": result.grid_L, "n": result.grid_n},
        "model": cfg["model"],
        "solver": {k: v for k, v in cfg["solver"].items()},
        "rows": [_row_dict(r) for r in result.rows],
    }


# ----------------------------------------------------------------- commands

def cmd_solve_q(cfg, outdir: Path) -> int:
    prof, consts, _ = _solve_constants(cfg)
    astar = consts.a_star
    identities = {
        "kinetic_minus_1": profile_kinetic(prof) - 1.0,
        "mass_minus_1": profile_mass(prof) - 1.0,
        "quartic_identity_minus_1": (astar / 2.0) * profile_quartic(prof) - 1.0,
    }
    _write_json(outdir / "q_profile.json",
                {"r": prof.r, "q": prof.q, "dr": prof.dr,
                 "r_max": prof.r_max, "q0_initial": prof.q0_initial})
    _write_json(outdir / "q0_constants.json",
                {**consts.as_dict(), "identities": identities})
    print(f"a_star = {astar:.10f}")
    for k, v in identities.items():
        print(f"|{k}| = {abs(v):.3e}")
    ok = all(abs(v) < 1e-6 for v in identities.values())
    return 0 if ok else 1


def cmd_minimize(cfg, outdir: Path) -> int:
    prof, consts, potential = _solve_constants(cfg)
    a = _resolve_a(cfg["model"], consts.a_star, want_list=False)
    params = ModelParams(a=a, g=float(cfg["model"]["g"]), potential=potential)
    ells = None
    try:
        ells = [predict(a, params, consts).ell_pred]
    except ValueError:
        pass
    grid = _build_grid(cfg, ells)
    kernel = build_kernel(grid)
    opts = _minimize_opts(cfg, consts, prof)
    if opts.init is None:
        init = (Q0Seed(profile=prof, b=ells[0]) if ells
                else GaussianSeed(width=1.0))
        opts = replace(opts, init=init)
    try:
        res = minimize(params, grid, kernel, opts)
    except ValueError as e:
        if "unbounded below" in str(e):
            print(f"refused: {e} (E(a) = -infinity for all a >= a*)",
                  file=sys.stderr)
        else:
            print(f"error: {e}", file=sys.stderr)
        return 1
    save_field(res.u, outdir / "field.bin")
    _write_json(outdir / "result.json", {
        "energy": asdict(res.breakdown),
        "mu": res.el.mu, "residual": res.el.residual_norm,
        "degenerate": res.el.degenerate,
        "iterations": res.iterations, "converged": res.converged,
        "peak": list(res.peak), "width_grad": res.width_grad,
        "width_iqr": res.width_iqr,
        "candidates": [{"center": list(c), "energy": e}
                       for c, e in res.candidates],
        "degenerate_tie": res.degenerate_tie,
        "grid": {"L": grid.L, "n": grid.n},
        "field_file": "field.bin",
    })
    print(f"E = {res.breakdown.total:.12g}  converged = {res.converged}  "
          f"iterations = {res.iterations}")
    return 0 if res.converged else 3


def cmd_sweep(cfg, outdir: Path) -> int:
    prof, consts, potential = _solve_constants(cfg)
    a_vals = _resolve_a(cfg["model"], consts.a_star, want_list=True)
    params = ModelParams(a=a_vals[0], g=float(cfg["model"]["g"]),
                         potential=potential)
    ells = [predict(a, params, consts).ell_pred for a in a_vals]
    grid = _build_grid(cfg, ells)
    kernel = build_kernel(grid)
    s = cfg["solver"]
    sopts = SweepOptions(
        profile=prof, consts=consts,
        minimize_opts=_minimize_opts(cfg, consts, prof),
        warm_start=bool(s.get("warm_start", True)),
        with_trial_bound=bool(s.get("trial_bound", True)),
        with_profile_error=bool(s.get("profile_error", True)))
    result = sweep(a_vals, params, grid, kernel, sopts)
    formats = cfg["output"]["formats"]
    if "csv" in formats:
        _write_sweep_csv(outdir / "sweep.csv", result)
    if "json" in formats:
        _write_json(outdir / "fit.json", _sweep_json(result, cfg))
    bad = [r.a for r in result.rows if not r.converged]
    if result.fit_exponent is not None:
        print(f"fit exponent = {result.fit_exponent:.6f}  "
              f"amplitude = {result.fit_amplitude:.6f}  "
              f"rows used = {list(result.fit_rows_used)}")
    if bad:
        print(f"non-converged rows at a = {bad}", file=sys.stderr)
        return 1
    return 0


def cmd_predict(cfg, outdir: Path) -> int:
    prof, consts, potential = _solve_constants(cfg)
    a = _resolve_a(cfg["model"], consts.a_star, want_list=False)
    params = ModelParams(a=a, g=float(cfg["model"]["g"]), potential=potential)
    pred = predict(a, params, consts)
    out = {"a": a, "a_star": consts.a_star, **asdict(pred)}
    ss = singular_set(potential)
    if ss is not None and 0.0 < ss.p < 2.0 and params.g > 0:
        cls = regime_for_g(a, params.g, ss.p, consts, h0=ss.h0)
        out["gravity_classification"] = asdict(cls)
    _write_json(outdir / "prediction.json", out)
    print(f"regime = {pred.regime}  ell_pred = {pred.ell_pred:.8g}  "
          f"E_pred = {pred.E_pred:.8g}")
    return 0


# ------------------------------------------------------------------- verify

def _crit(cid, name, status, measured, tolerance, detail="", seconds=0.0):
    return {"criterion": cid, "name": name, "status": status,
            "measured": measured, "tolerance": tolerance,
            "detail": detail, "runtime_seconds": round(seconds, 2)}


def _gaussian_field(grid: Grid2D) -> Field:
    x = coords(grid)
    rr2 = x[:, None] ** 2 + x[None, :] ** 2
    vals = np.exp(-rr2 / 2.0) / np.sqrt(np.pi)
    return normalize(make_field(grid, vals))


def _run_sweep_for_verify(n, prof, consts, g, potential, a_fracs,
                          max_iter=8000):
    astar = consts.a_star
    a_vals = [f * astar for f in a_fracs]
    params = ModelParams(a=a_vals[0], g=g, potential=potential)
    ells = [predict(a, params, consts).ell_pred for a in a_vals]
    # tight box: the scaled-energy discrepancies of the last sweep rows
    # need ~8 cells across the collapsing core, and 6 decay lengths of
    # the widest row are already below the energy tolerances in the tail
    grid = make_grid(choose_box(ells, n, decay_margin=6.0,
                                max_core_step=0.125), n)
    kernel = build_kernel(grid)
    sopts = SweepOptions(profile=prof, consts=consts,
                         minimize_opts=MinimizeOptions(max_iter=max_iter))
    return sweep(a_vals, params, grid, kernel, sopts), grid


def _verify_all(cfg) -> list:
    """Run the ten acceptance criteria at the configured resolution.

    Sweep-based criteria whose scale span provably does not fit the
    configured n (box sizing infeasible) are skipped, not failed.
    """
    n = int(cfg["grid"]["n"])
    report = []
    t0 = time.time()
    prof, consts, _ = _solve_constants(cfg)
    astar = consts.a_star
    setup_s = time.time() - t0

    # 1: dual-method critical strength + normalized-profile identities
    t0 = time.time()
    ag = a_star_grid(make_grid(8.0, min(256, n)))
    rel = abs(ag - astar) / astar
    kin_sh = profile_kinetic(prof) - 1.0
    mass_sh = profile_mass(prof) - 1.0
    quart_sh = (astar / 2.0) * profile_quartic(prof) - 1.0
    gg = make_grid(8.0, min(256, n))
    u0 = q0_on_grid(prof, gg)
    kin_gr = kinetic_energy(u0) - 1.0
    quart_gr = (astar / 2.0) * gg.h**2 * np.sum(u0.values**4) - 1.0
    ok = (rel < 2e-3 and max(abs(kin_sh), abs(mass_sh), abs(quart_sh)) < 1e-6
          and max(abs(kin_gr), abs(quart_gr)) < 1e-3)
    report.append(_crit(
        1, "critical strength dual-method + profile identities",
        "pass" if ok else "fail",
        {"a_star_shooting": astar, "a_star_grid": ag, "rel_diff": rel,
         "shooting_identity_errors": [kin_sh, mass_sh, quart_sh],
         "grid_identity_errors": [float(kin_gr), float(quart_gr)]},
        {"rel_diff": 2e-3, "shooting": 1e-6, "grid": 1e-3},
        seconds=time.time() - t0 + setup_s))

    # 2: Gaussian closed-form oracles
    t0 = time.time()
    g256 = make_grid(8.0, 256)
    k256 = build_kernel(g256)
    u = _gaussian_field(g256)
    h2 = g256.h**2
    x = coords(g256)
    rr2 = x[:, None] ** 2 + x[None, :] ** 2
    vals = {
        "kinetic": (kinetic_energy(u), 1.0),
        "trap_r2": (float(h2 * np.sum(rr2 * u.values**2)), 1.0),
        "quartic_integral": (float(h2 * np.sum(u.values**4)), 1.0 / (2 * np.pi)),
        "gravity_D": (gravity_energy(u, k256), float(np.sqrt(np.pi / 2))),
    }
    errs = {k: abs(m / ref - 1.0) for k, (m, ref) in vals.items()}
    report.append(_crit(
        2, "gaussian closed-form oracles",
        "pass" if max(errs.values()) < 1e-3 else "fail",
        {k: {"measured": m, "exact": ref} for k, (m, ref) in vals.items()},
        {"relative": 1e-3}, seconds=time.time() - t0))

    # 3: dilation scaling laws, on a grid resolving the narrowest dilate
    t0 = time.time()
    g3 = make_grid(8.0, 1024)
    k3 = build_kernel(g3)
    u3 = _gaussian_field(g3)
    h3 = g3.h**2
    worst = {}
    for ell in (0.5, 2.0, 4.0):
        ud = dilate(u3, ell, warn=False)
        worst[f"kinetic_{ell}"] = kinetic_energy(ud) / (ell**2 * kinetic_energy(u3)) - 1.0
        q_ratio = np.sum(ud.values**4) / np.sum(u3.values**4)
        worst[f"quartic_{ell}"] = q_ratio / ell**2 - 1.0
        worst[f"gravity_{ell}"] = gravity_energy(ud, k3) / (ell * gravity_energy(u3, k3)) - 1.0
        for p in (0.5, 1.0, 1.5):
            V = sample_potential(
                SingularSum(points=(SingularTerm(z=(0.0, 0.0), p=p),)), g3)
            ev = float(h3 * np.sum(V * ud.values**2))
            e1 = float(h3 * np.sum(V * u3.values**2))
            worst[f"potential_p{p}_{ell}"] = ev / (ell**p * e1) - 1.0
    wmax = max(abs(v) for v in worst.values())
    report.append(_crit(
        3, "dilation scaling laws",
        "pass" if wmax < 1e-3 else "fail",
        {"relative_errors": worst}, {"relative": 1e-3},
        seconds=time.time() - t0))

    # 4-6: the three sweeps
    sweeps = {}
    plans = {
        "weak": ("weak sweep: exponent, prefactor, profile convergence",
                 Zero(), 1.0, (0.80, 0.85, 0.90, 0.93, 0.96)),
        "strong": ("strong sweep: exponent, localization, prefactor",
                   SingularSum(points=(SingularTerm(z=(0.0, 0.0), p=1.5),)),
                   1.0, (0.80, 0.84, 0.87, 0.90)),
        "border": ("border sweep: exponent, combined prefactor",
                   SingularSum(points=(SingularTerm(z=(0.0, 0.0), p=1.0),)),
                   1.0, (0.80, 0.85, 0.90, 0.93, 0.96)),
    }
    for key, (name, pot, gval, fracs) in plans.items():
        cid = {"weak": 4, "strong": 5, "border": 6}[key]
        t0 = time.time()
        try:
            res, sgrid = _run_sweep_for_verify(n, prof, consts, gval,
                                               pot, fracs)
        except ValueError as e:
            report.append(_crit(cid, name, "skip", {}, {},
                                detail=f"infeasible at n={n}: {e}",
                                seconds=time.time() - t0))
            continue
        sweeps[key] = (res, sgrid)
        rows = res.rows
        # the slope fit already drops rows whose residual metric did not
        # converge, but their energies are settled and the prefactor and
        # discrepancy conditions are stated over the sweep itself
        fit_ok = res.fit_exponent is not None
        measured = {"fit_exponent": res.fit_exponent,
                    "rows_converged": [r.converged for r in rows]}
        tol = {}
        if key == "weak":
            pref = rows[-1].breakdown.total * (astar - rows[-1].a)
            theory = -consts.beta_weak**2 / astar
            disc = [abs(r.breakdown.total * (astar - r.a) - theory)
                    for r in rows]
            l2s = [r.err_L2 for r in rows]
            ok = (fit_ok and abs(res.fit_exponent + 1.0) < 0.1
                  and abs(pref / theory - 1.0) < 0.15
                  and all(d1 > d2 for d1, d2 in zip(disc, disc[1:]))
                  and all(e1 > e2 for e1, e2 in zip(l2s, l2s[1:])))
            measured.update({"prefactor": pref, "prefactor_theory": theory,
                             "discrepancies": disc, "err_L2": l2s})
            tol = {"exponent": [-1.0, 0.1], "prefactor_rel": 0.15,
                   "monotone": "strict"}
        elif key == "strong":
            A = consts.I[1.5]
            beta = (1.5 * astar * A / 2.0) ** (1.0 / 0.5)
            theory = (beta**2 / astar - beta**1.5 * A)
            pref = rows[-1].breakdown.total * (astar - rows[-1].a) ** 3
            disc = [abs(r.breakdown.total * (astar - r.a) ** 3 - theory)
                    for r in rows]
            peaks_ok = all(np.hypot(*r.peak) <= 2 * sgrid.h for r in rows)
            ok = (fit_ok and abs(res.fit_exponent + 3.0) < 0.3 and peaks_ok
                  and abs(pref / theory - 1.0) < 0.25
                  and all(d1 > d2 for d1, d2 in zip(disc, disc[1:])))
            measured.update({"prefactor": pref, "prefactor_theory": theory,
                             "discrepancies": disc,
                             "peaks": [list(r.peak) for r in rows],
                             "h": sgrid.h})
            tol = {"exponent": [-3.0, 0.3], "prefactor_rel": 0.25,
                   "peak_distance": 2 * sgrid.h}
        else:
            pref = rows[-1].breakdown.total * (astar - rows[-1].a)
            pure_gravity = -consts.beta_weak**2 / astar
            ok = (fit_ok and abs(res.fit_exponent + 1.0) < 0.1
                  and pref < pure_gravity)
            measured.update({"prefactor": pref,
                             "pure_gravity_prediction": pure_gravity})
            tol = {"exponent": [-1.0, 0.1],
                   "prefactor": "strictly below pure-gravity value"}
        report.append(_crit(cid, name, "pass" if ok else "fail",
                            measured, tol, seconds=time.time() - t0))

    # 7: variational sandwich across all sweep rows
    t0 = time.time()
    if sweeps:
        gaps = [r.trial_bound - r.breakdown.total
                for res, _ in sweeps.values() for r in res.rows if r.converged]
        ok = all(gap >= -1e-8 for gap in gaps)
        report.append(_crit(
            7, "variational sandwich E <= trial bound",
            "pass" if ok else "fail",
            {"min_gap": min(gaps), "rows": len(gaps)}, {"slack": 1e-8},
            seconds=time.time() - t0))
    else:
        report.append(_crit(7, "variational sandwich E <= trial bound",
                            "skip", {}, {}, detail="no feasible sweeps"))

    # 8: stationarity - EL residuals and finite-difference gradient
    t0 = time.time()
    gtrap = make_grid(8.0, min(256, n))
    ktrap = build_kernel(gtrap)
    ptrap = ModelParams(a=5.0, g=1.0, potential=Trap(q=2.0))
    rng = np.random.default_rng(7)
    res_t = minimize(ptrap, gtrap, ktrap,
                     MinimizeOptions(consts=consts, max_iter=4000))
    h2 = gtrap.h**2
    uv = res_t.u.values
    # tangent direction: the sphere constraint makes E(normalize(u + t d))
    # differentiate to the projected gradient paired with d
    d = rng.standard_normal(uv.shape)
    d -= (h2 * np.sum(d * uv)) * uv
    d /= np.sqrt(h2 * np.sum(d * d))
    G = gradient(res_t.u, ptrap, ktrap)
    Gp = G - (h2 * np.sum(G * uv)) * uv
    eps = 1e-6
    ep = evaluate(normalize(make_field(gtrap, uv + eps * d)), ptrap, ktrap).total
    em = evaluate(normalize(make_field(gtrap, uv - eps * d)), ptrap, ktrap).total
    fd = (ep - em) / (2 * eps)
    an = float(h2 * np.sum(Gp * d))
    fd_rel = abs(fd - an) / max(1.0, abs(an))
    # same comparison away from stationarity, where the pairing is O(1)
    # and a wrong factor in any gradient term cannot hide
    ug = _gaussian_field(gtrap)
    Gg = gradient(ug, ptrap, ktrap)
    Ggp = Gg - (h2 * np.sum(Gg * ug.values)) * ug.values
    epg = evaluate(normalize(make_field(gtrap, ug.values + eps * d)), ptrap, ktrap).total
    emg = evaluate(normalize(make_field(gtrap, ug.values - eps * d)), ptrap, ktrap).total
    fdg = (epg - emg) / (2 * eps)
    ang = float(h2 * np.sum(Ggp * d))
    fd_rel = max(fd_rel, abs(fdg - ang) / max(1.0, abs(ang)))
    residuals = [r.residual for res, _ in sweeps.values() for r in res.rows
                 if r.converged]
    residuals.append(res_t.el.residual_norm)
    ok = res_t.converged and max(residuals) < 1e-6 and fd_rel < 1e-5
    report.append(_crit(
        8, "stationarity: EL residual + gradient FD check",
        "pass" if ok else "fail",
        {"max_residual": max(residuals), "fd_rel_error": fd_rel,
         "fields_checked": len(residuals)},
        {"residual": 1e-6, "fd": 1e-5}, seconds=time.time() - t0))

    # 9: regime classifier against measured dominant terms
    t0 = time.time()
    a95 = 0.95 * astar
    cells = [(0.5, 0.1), (0.5, 1.0), (1.5, 1.0), (1.5, 10.0)]
    cell_rows = []
    all_ok = True
    try:
        for p, gval in cells:
            cls = regime_for_g(a95, gval, p, consts)
            pot = SingularSum(points=(SingularTerm(z=(0.0, 0.0), p=p),))
            cgrid = make_grid(choose_box([cls.ell_opt], n), n)
            ck = build_kernel(cgrid)
            cres = minimize(
                ModelParams(a=a95, g=gval, potential=pot), cgrid, ck,
                MinimizeOptions(consts=consts, max_iter=8000,
                                init=Q0Seed(profile=prof, b=cls.ell_opt)))
            grav_term = cres.breakdown.gravity
            pot_term = -cres.breakdown.potential
            dominant = ("gravity-dominated" if grav_term > pot_term
                        else "potential-dominated")
            match = cres.converged and dominant == cls.label
            all_ok = all_ok and match
            cell_rows.append({"p": p, "g": gval, "classified": cls.label,
                              "measured_gravity": grav_term,
                              "measured_potential": pot_term,
                              "dominant": dominant,
                              "converged": cres.converged, "match": match})
        report.append(_crit(
            9, "gravitation-strength regime classifier, four cells",
            "pass" if all_ok else "fail",
            {"cells": cell_rows}, {"match": "exact label"},
            seconds=time.time() - t0))
    except ValueError as e:
        report.append(_crit(9, "gravitation-strength regime classifier",
                            "skip", {"cells": cell_rows}, {},
                            detail=f"infeasible at n={n}: {e}",
                            seconds=time.time() - t0))

    # 10: monotonicity and symmetry
    t0 = time.time()
    checks = {}
    for key, (res, _) in sweeps.items():
        tot = [r.breakdown.total for r in res.rows]
        checks[f"E_nonincreasing_{key}"] = all(
            t2 <= t1 + 1e-12 for t1, t2 in zip(tot, tot[1:]))
    useq = np.asarray(res_t.energy_sequence)
    checks["energy_sequence_nonincreasing"] = bool(
        np.all(np.diff(useq) <= 4e-15 * np.maximum(1.0, np.abs(useq[:-1]))))
    v = res_t.u.values
    peak = v.max()
    refl_x = np.roll(v[::-1, :], 1, axis=0)
    refl_y = np.roll(v[:, ::-1], 1, axis=1)
    sym_err = max(np.max(np.abs(v - refl_x)), np.max(np.abs(v - refl_y)),
                  np.max(np.abs(v - v.T)))
    checks["radial_symmetry_within_1pct"] = bool(sym_err <= 0.01 * peak)
    xs = coords(gtrap)
    rr = np.hypot(xs[:, None], xs[None, :]).ravel()
    order = np.argsort(rr)
    prof_sorted = v.ravel()[order]
    running_min = np.minimum.accumulate(prof_sorted)
    checks["radially_decreasing_within_1pct"] = bool(
        np.max(prof_sorted - running_min) <= 0.01 * peak)
    ok = all(checks.values())
    report.append(_crit(
        10, "monotonicity and symmetry",
        "pass" if ok else "fail",
        {**checks, "symmetry_error_over_peak": float(sym_err / peak)},
        {"symmetry": 0.01, "slack": "rounding"}, seconds=time.time() - t0))
    return report


def cmd_verify(cfg, outdir: Path) -> int:
    report = _verify_all(cfg)
    _write_json(outdir / "verify_report.json", {"criteria": report})
    failed = 0
    for c in report:
        line = (f"[{c['status'].upper():4s}] criterion {c['criterion']}: "
                f"{c['name']} ({c['runtime_seconds']}s)")
        if c["detail"]:
            line += f" -- {c['detail']}"
        print(line)
        failed += c["status"] == "fail"
    print(f"{len(report)} criteria: "
          f"{sum(c['status'] == 'pass' for c in report)} passed, "
          f"{failed} failed, "
          f"{sum(c['status'] == 'skip' for c in report)} skipped")
    return 1 if failed else 0


# --------------------------------------------------------------------- main

def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="gpgrav",
        description="Ground states and collapse laws of the 2D attractive "
                    "condensate with self-gravity")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (("solve-q", cmd_solve_q), ("minimize", cmd_minimize),
                     ("sweep", cmd_sweep), ("predict", cmd_predict),
                     ("verify", cmd_verify)):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="YAML config file (defaults used if omitted)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (overrides output.directory)")
        p.add_argument("--threads", type=int, default=1,
                       help="FFT worker threads")
        p.add_argument("--deterministic", action="store_true",
                       help="force single-threaded FFTs for bit-stable runs")
        p.set_defaults(fn=fn)
    args = ap.parse_args(argv)

    set_fft_workers(1 if args.deterministic else max(1, args.threads))
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, yaml.YAMLError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    outdir = args.out if args.out is not None else Path(cfg["output"]["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", Warning)
            return args.fn(cfg, outdir)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
