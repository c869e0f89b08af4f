"""Config parsing, the binary field format, and the CLI commands
end to end on coarse grids."""

import json
import struct

import numpy as np
import pytest

from gpgrav import Field, make_field, make_grid, mass
from gpgrav.cli import (
    CSV_COLUMNS,
    ConfigError,
    _resolve_a,
    load_config,
    load_field,
    main,
    save_field,
)

# coarse but valid profile resolution keeps every command under a second
# of ODE work; the exponential tail still needs r_max = 20
FAST_Q = "q_solver: {dr: 1.0e-2, r_max: 20.0, tol: 1.0e-12}\n"


def write_cfg(tmp_path, text):
    p = tmp_path / "cfg.yaml"
    p.write_text(text)
    return p


# ------------------------------------------------------------------- config

def test_load_config_defaults():
    cfg = load_config(None)
    assert cfg["grid"] == {"L": 8.0, "n": 512}
    assert cfg["model"]["g"] == 1.0
    assert cfg["model"]["potential"] == {"type": "zero"}
    assert cfg["q_solver"]["dr"] == pytest.approx(5.0e-4)
    assert cfg["output"]["formats"] == ["csv", "json"]


def test_load_config_unknown_keys(tmp_path):
    with pytest.raises(ConfigError, match=r"unknown key\(s\).*<root>"):
        load_config(write_cfg(tmp_path, "grids: {n: 4}\n"))
    with pytest.raises(ConfigError, match=r"unknown key\(s\).*'grid'"):
        load_config(write_cfg(tmp_path, "grid: {m: 4}\n"))
    with pytest.raises(ConfigError, match=r"points\[0\]"):
        load_config(write_cfg(tmp_path, (
            "model:\n  potential:\n    type: singular\n"
            "    points: [{z: [0, 0], p: 1.0, weight: 2}]\n")))


def test_load_config_bad_potential(tmp_path):
    with pytest.raises(ConfigError, match="unknown potential type"):
        load_config(write_cfg(tmp_path,
                              "model: {potential: {type: coulomb}}\n"))
    with pytest.raises(ConfigError, match="needs exponent 'q'"):
        load_config(write_cfg(tmp_path, "model: {potential: {type: trap}}\n"))
    with pytest.raises(ConfigError, match="nonempty 'points'"):
        load_config(write_cfg(tmp_path, (
            "model: {potential: {type: singular, points: []}}\n")))
    with pytest.raises(ConfigError, match=r"z must be \[x, y\]"):
        load_config(write_cfg(tmp_path, (
            "model:\n  potential:\n    type: singular\n"
            "    points: [{z: [0, 0, 0], p: 1.0}]\n")))


def test_load_config_bad_seed(tmp_path):
    with pytest.raises(ConfigError, match="unknown seed type"):
        load_config(write_cfg(tmp_path,
                              "solver: {seed: {type: vortex}}\n"))


def test_resolve_a_forms():
    astar = 10.0
    assert _resolve_a({"a": 3.0}, astar, want_list=False) == 3.0
    assert _resolve_a({"a_over_astar": 0.5}, astar,
                      want_list=False) == pytest.approx(5.0)
    assert _resolve_a({"a_list": [1.0, 2.0]}, astar,
                      want_list=True) == [1.0, 2.0]
    assert _resolve_a({"a_list_over_astar": [0.1, 0.2]}, astar,
                      want_list=True) == pytest.approx([1.0, 2.0])
    with pytest.raises(ConfigError, match="exactly one"):
        _resolve_a({}, astar, want_list=False)
    with pytest.raises(ConfigError, match="exactly one"):
        _resolve_a({"a": 1.0, "a_over_astar": 0.5}, astar, want_list=False)
    with pytest.raises(ConfigError, match="needs a list form"):
        _resolve_a({"a": 1.0}, astar, want_list=True)
    with pytest.raises(ConfigError, match="needs a scalar"):
        _resolve_a({"a_list": [1.0]}, astar, want_list=False)


# ---------------------------------------------------------------- field I/O

def test_field_roundtrip(tmp_path):
    g = make_grid(3.5, 16)
    rng = np.random.default_rng(11)
    u = make_field(g, np.abs(rng.standard_normal((16, 16))))
    path = tmp_path / "u.bin"
    save_field(u, path)
    assert path.stat().st_size == 16 + 8 * 16 * 16
    v = load_field(path)
    assert v.grid.n == 16 and v.grid.L == 3.5
    np.testing.assert_array_equal(v.values, u.values)


def test_field_format_layout(tmp_path):
    # header is (int64 n, float64 L) little-endian, payload row-major
    g = make_grid(2.0, 16)
    vals = np.arange(256.0).reshape(16, 16)
    path = tmp_path / "u.bin"
    save_field(Field(values=vals, grid=g), path)
    raw = path.read_bytes()
    assert struct.unpack("<q", raw[:8])[0] == 16
    assert struct.unpack("<d", raw[8:16])[0] == 2.0
    assert struct.unpack("<256d", raw[16:]) == tuple(vals.ravel())


def test_load_field_truncated(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"\x00" * 8)
    with pytest.raises(ValueError, match="truncated header"):
        load_field(p)
    p.write_bytes(struct.pack("<q", 4) + struct.pack("<d", 2.0) + b"\x00" * 17)
    with pytest.raises(ValueError, match="payload bytes"):
        load_field(p)


# ----------------------------------------------------------------- commands

def test_cli_solve_q(tmp_path, capsys):
    # the exit code checks the profile identities at 1e-6, which needs
    # a step under ~1e-3 (errors shrink as dr^2)
    cfg = write_cfg(tmp_path, "q_solver: {dr: 1.0e-3, r_max: 20.0}\n")
    rc = main(["solve-q", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    assert "a_star" in capsys.readouterr().out
    consts = json.loads((tmp_path / "q0_constants.json").read_text())
    assert consts["a_star"] == pytest.approx(11.70089471, rel=1e-5)
    prof = json.loads((tmp_path / "q_profile.json").read_text())
    assert prof["dr"] == pytest.approx(1.0e-3)
    assert len(prof["r"]) == len(prof["q"])


def test_cli_minimize_supercritical(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FAST_Q + (
        "grid: {L: 4.0, n: 32}\n"
        "model: {a_over_astar: 1.0, g: 1.0}\n"))
    rc = main(["minimize", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 1
    err = capsys.readouterr().err
    assert "E(a) = -infinity for all a >= a*" in err


def test_cli_minimize_nonconverged_exit3(tmp_path):
    # free mass with no well spreads forever; the command must still
    # write its outputs and signal non-convergence
    cfg = write_cfg(tmp_path, FAST_Q + (
        "grid: {L: 4.0, n: 64}\n"
        "model: {a: 0.0, g: 0.0}\n"
        "solver: {max_iter: 30, seed: {type: gaussian, width: 1.0}}\n"))
    rc = main(["minimize", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 3
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["converged"] is False
    assert (tmp_path / "field.bin").exists()


def test_cli_minimize_trap(tmp_path):
    # the coarse 64^2 grid pins the relative residual near 2e-6, so the
    # run only converges with the tolerance overridden through the config
    cfg = write_cfg(tmp_path, FAST_Q + (
        "grid: {L: 8.0, n: 64}\n"
        "model: {a: 2.0, g: 0.5, potential: {type: trap, q: 2.0}}\n"
        "solver: {max_iter: 6000, residual_tol: 1.0e-5}\n"))
    rc = main(["minimize", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    res = json.loads((tmp_path / "result.json").read_text())
    assert res["converged"] is True
    assert res["energy"]["total"] < 2.0  # below the pure harmonic level
    u = load_field(tmp_path / "field.bin")
    assert u.grid.n == 64 and u.grid.L == 8.0
    assert mass(u) == pytest.approx(1.0, abs=1e-10)
    assert res["energy"]["total"] == pytest.approx(
        res["energy"]["kinetic"] + res["energy"]["potential"]
        - res["energy"]["quartic"] - res["energy"]["gravity"], abs=1e-9)


def test_cli_minimize_auto_box_needs_scale(tmp_path, capsys):
    # a = 0, g = 0: no collapse scale exists, auto sizing must refuse
    cfg = write_cfg(tmp_path, FAST_Q + (
        "grid: {L: auto, n: 32}\n"
        "model: {a: 0.0, g: 0.0}\n"))
    rc = main(["minimize", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 1
    assert "auto needs a predictable blow-up scale" in capsys.readouterr().err


def test_cli_predict(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FAST_Q + (
        "grid: {L: 4.0, n: 32}\n"
        "model:\n"
        "  a_over_astar: 0.9\n"
        "  g: 1.0\n"
        "  potential: {type: singular, points: [{z: [0.0, 0.0], p: 0.5}]}\n"))
    rc = main(["predict", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    assert "regime" in capsys.readouterr().out
    pred = json.loads((tmp_path / "prediction.json").read_text())
    assert pred["regime"] == "weak"
    assert pred["ell_pred"] > 0 and pred["E_pred"] < 0
    cls = pred["gravity_classification"]
    assert cls["label"] in ("gravity-dominated", "potential-dominated",
                            "balanced")


def test_cli_sweep(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FAST_Q + (
        "grid: {L: 8.0, n: 128}\n"
        "model: {a_list_over_astar: [0.5, 0.6], g: 1.0}\n"
        "solver: {max_iter: 6000}\n"))
    rc = main(["sweep", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    assert "fit exponent" in capsys.readouterr().out

    lines = (tmp_path / "sweep.csv").read_text().strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3
    fit = json.loads((tmp_path / "fit.json").read_text())
    for line, row in zip(lines[1:], fit["rows"]):
        cells = line.split(",")
        assert len(cells) == len(CSV_COLUMNS)
        assert cells[-1] == "true"
        # %.17g is enough digits for a bit-exact float round trip
        assert float(cells[1]) == row["E"]
        assert float(cells[0]) == row["a"]
    assert fit["fit"]["exponent"] is not None


def test_cli_sweep_rejects_scalar_a(tmp_path, capsys):
    cfg = write_cfg(tmp_path, FAST_Q + "model: {a: 1.0}\n")
    rc = main(["sweep", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 1
    assert "needs a list form" in capsys.readouterr().err


def test_cli_bad_config_is_exit_1(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "model: {potential: {type: coulomb}}\n")
    rc = main(["minimize", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 1
    assert "config error" in capsys.readouterr().err
