import json
import math
import os

import numpy as np
import pytest

from cohesive1d import __version__
from cohesive1d.cli import main
from cohesive1d.config import build_model, config_hash, parse_config
from cohesive1d.errors import ConfigError
from cohesive1d.io import read_csv
from cohesive1d.model import FamilyA, FamilyB

MINIMAL = """
[model]
family = "A"
ell = 1.0

[scenario]
kind = "law"
"""


def _errors(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return exc.value.errors


# config -------------------------------------------------------------------


def test_minimal_config_parses():
    cfg = parse_config(MINIMAL)
    assert cfg.scenario == "law"
    assert isinstance(build_model(cfg.model), FamilyA)
    assert cfg.law["n_s"] == 97
    assert cfg.hash == config_hash(MINIMAL) and len(cfg.hash) == 16


def test_family_b_parameter_range():
    errs = _errors(MINIMAL.replace('family = "A"\nell = 1.0', 'family = "B"\nell = 1.0\nb = 2.5'))
    assert len(errs) == 1
    assert errs[0].startswith("model.b:") and "-ell < b < 2*ell" in errs[0]
    ok = parse_config(MINIMAL.replace('family = "A"\nell = 1.0', 'family = "B"\nell = 1.5\nb = 2.8'))
    assert isinstance(build_model(ok.model), FamilyB)


def test_unknown_key_names_its_path():
    errs = _errors(MINIMAL + "\n[law]\nsmax = 3.0\n")
    assert errs == ["law.smax: unknown key"]


def test_all_errors_are_collected():
    text = """
[model]
family = "A"
colour = "red"

[law]
n_s = "many"

[extra]
x = 1
"""
    errs = _errors(text)
    assert "extra: unknown table" in errs
    assert "scenario: missing required table" in errs
    assert "model.colour: unknown key" in errs
    assert any(e.startswith("law.n_s: expected int") for e in errs)


def test_semantic_errors_are_collected():
    text = """
[model]
family = "A"
[scenario]
kind = "evolve"
[evolve]
T_final = -1.0
tau = 0.1
b1 = {times = [0.0, 0.0], values = [0.0, 1.0]}
"""
    errs = _errors(text)
    assert "evolve.T_final: must be positive, got -1.0" in errs
    assert "evolve.b1.times: must increase strictly" in errs


def test_parse_error_reports_position():
    errs = _errors("[model]\nfamily = \n")
    assert len(errs) == 1
    assert errs[0].startswith("parse error:") and "line 2" in errs[0] and "column" in errs[0]


def test_phasefield_eps_must_decrease():
    text = MINIMAL.replace('kind = "law"', 'kind = "phasefield"') + "\n[phasefield]\neps = [0.01, 0.1]\n"
    assert _errors(text) == ["phasefield.eps: must decrease strictly"]


# cli ----------------------------------------------------------------------


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


LAW = MINIMAL + "\n[law]\ns_max = 2.0\nn_s = 17\nsprime = [0.5]\n"


def test_law_output_is_deterministic(tmp_path):
    cfg = _write(tmp_path, LAW)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["law", "--config", cfg, "--out", str(a)]) == 0
    assert main(["--config", cfg, "--out", str(b), "law"]) == 0
    for name in ("law.csv", "law.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    meta, cols = read_csv(a / "law.csv")
    assert meta["version"] == __version__
    assert meta["config_hash"] == config_hash(LAW)
    assert set(cols) == {"s", "g0", "m", "g_sprime_0.5"}
    assert cols["s"].size == 17 and cols["g0"][0] == 0.0


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, MINIMAL + "\n[law]\nsmax = 3.0\n")
    assert main(["law", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "law.smax: unknown key" in capsys.readouterr().err
    assert main(["law", "--config", str(tmp_path / "missing.toml")]) == 2


def test_verify_gap_exit_code(tmp_path):
    text = MINIMAL.replace('"law"', '"verify"') + (
        "\n[verify]\ns = [0.5]\npairs = []\nn_nodes = 128\nn_scenarios = 0\ntolerance = 1e-12\n"
    )
    assert main(["verify", "--config", _write(tmp_path, text), "--out", str(tmp_path / "v")]) == 4
    doc = json.loads((tmp_path / "v" / "verify.json").read_text())
    assert doc["failed"] == ["g0(s=0.5)"]
    loose = text.replace("tolerance = 1e-12", "tolerance = 1e-2")
    assert main(["verify", "--config", _write(tmp_path, loose, "l.toml"), "--out", str(tmp_path / "w")]) == 0


def test_phasefield_nonconvergence_exit_code(tmp_path, monkeypatch):
    from cohesive1d import phasefield

    base = phasefield.AltOptions
    monkeypatch.setattr(phasefield, "AltOptions", lambda: base(max_iter=1))
    text = MINIMAL.replace('"law"', '"phasefield"') + "\n[phasefield]\neps = [0.05]\n"
    assert main(["phasefield", "--config", _write(tmp_path, text), "--out", str(tmp_path / "p")]) == 3


def test_evolve_writes_trace(tmp_path):
    text = MINIMAL.replace('"law"', '"evolve"') + (
        "\n[evolve]\nn_cells = 8\nT_final = 1.0\ntau = 0.25\nb1 = {times = [0.0, 1.0], values = [0.0, 1.0]}\n"
    )
    out = tmp_path / "e"
    assert main(["evolve", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    meta, cols = read_csv(out / "trace.csv")
    assert cols["t"].tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    doc = json.loads((out / "evolve.json").read_text())
    assert doc["irreversible"] and doc["all_converged"]
    _, mem = read_csv(out / "memory.csv")
    assert mem["memory"].max() > 0.5


def test_profiles_command(tmp_path):
    out = tmp_path / "p"
    assert main(["profiles", "--out", str(out)]) == 0
    doc = json.loads((out / "profiles.json").read_text())
    assert all(p["equipartition_residual"] <= 1e-4 for p in doc["profiles"])
    _, cols = read_csv(out / "profile_0.csv")
    assert set(cols) == {"t", "alpha", "beta"}


@pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"])
def test_presets_run(tmp_path, name):
    assert main(["preset", name, "--out", str(tmp_path)]) == 0
    assert any(f.startswith(name) for f in os.listdir(tmp_path))


def test_fig2_content(tmp_path):
    main(["preset", "fig2", "--out", str(tmp_path)])
    _, cols = read_csv(tmp_path / "fig2.csv")
    assert cols["g0_a"][-1] == 1.0
    assert np.all(cols["g0_b"] < 1.0)
    doc = json.loads((tmp_path / "fig2.json").read_text())
    assert doc["s_frac_b"] == "unbounded" and 2.5 <= doc["s_frac_a"] <= 3.5


def test_fig1_content(tmp_path):
    main(["preset", "fig1", "--out", str(tmp_path)])
    _, c = read_csv(tmp_path / "fig1.csv")
    s = c["s"]
    # memory curves start at (1 - m)^2 and join g0 at their memory
    for m in (0.3, 0.5, 0.7):
        assert c[f"g_m{m:g}"][0] == pytest.approx((1 - m) ** 2, abs=1e-6)
        assert np.all(c[f"g_m{m:g}"] >= c["g0"] - 1e-12)
    low = s < 0.1
    assert np.all(c["g_m0.3"][low] > c["g_m0.5"][low]) and np.all(c["g_m0.5"][low] > c["g_m0.7"][low])
    assert np.allclose(c["g_m0.3"][s > 2.5], c["g0"][s > 2.5], atol=1e-12)


def test_fig6_kinks(tmp_path):
    main(["preset", "fig6", "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "fig6.json").read_text())
    assert doc["constraint_active"] == {"m0.7": False, "m0.5": True, "m0.2": True, "m0.1": True}


def test_unknown_preset_is_rejected():
    with pytest.raises(SystemExit):
        main(["preset", "fig9"])
