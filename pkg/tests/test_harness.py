import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fsqubit.config import ConfigError
from fsqubit.dsp import Measured
from fsqubit.harness import presets, readout
from fsqubit.harness.cli import main as cli_main
from fsqubit.harness.runio import RunWriter
from fsqubit.harness.scenario import load_scenario, parse_scenario
from fsqubit.harness.svgplot import PlotError, Series, emit_plot


GOOD_SCENARIO = """
[scenario]
name = test-run
kind = rabi
seed = 5

[drive]
rabi_up = 36 MHz
rabi_down = 36 MHz
detuning = -6 GHz

[ensemble]
rabi_spread = 0.4 %
samples = 3

[simulation]
duration = 0.1 ms
samples = 256
"""


# ---------------------------------------------------------------- scenario

def test_scenario_parses_and_converts():
    sc = parse_scenario(GOOD_SCENARIO)
    assert sc.name == "test-run"
    assert sc.kind == "rabi"
    assert sc.seed == 5
    assert sc.get("drive", "detuning") == pytest.approx(-2 * math.pi * 6e9)
    assert sc.get_int("simulation", "samples") == 256


def test_scenario_missing_name():
    with pytest.raises(ConfigError) as err:
        parse_scenario("[scenario]\nkind = rabi\n")
    assert "name" in str(err.value)


def test_scenario_empty_file():
    with pytest.raises(ConfigError) as err:
        parse_scenario("")
    assert "scenario" in str(err.value)


def test_scenario_missing_unit_line_numbered():
    bad = GOOD_SCENARIO.replace("detuning = -6 GHz", "detuning = -6")
    with pytest.raises(ConfigError) as err:
        parse_scenario(bad, source="f.scenario")
    assert "unit" in str(err.value)


def test_scenario_unknown_key_rejected():
    bad = GOOD_SCENARIO.replace("rabi_up = 36 MHz", "rabi_up = 36 MHz\nwat = 3 MHz")
    with pytest.raises(ConfigError) as err:
        parse_scenario(bad)
    assert "wat" in str(err.value)


def test_scenario_unknown_section_rejected():
    with pytest.raises(ConfigError):
        parse_scenario(GOOD_SCENARIO + "\n[mystery]\nx = 1 ms\n")


def test_scenario_missing_required_key():
    bad = GOOD_SCENARIO.replace("duration = 0.1 ms\n", "")
    with pytest.raises(ConfigError) as err:
        parse_scenario(bad)
    assert "duration" in str(err.value)


def test_scenario_unknown_kind():
    with pytest.raises(ConfigError):
        parse_scenario("[scenario]\nname = x\nkind = nonsense\n")


def test_all_packaged_scenarios_parse():
    for fig in presets.FIGURE_PRESETS:
        sc = load_scenario(presets.packaged_scenario_path(fig))
        assert sc.kind in presets.RUNNERS


# ---------------------------------------------------------------- readout

def test_normalize_constant_references():
    times = np.linspace(0, 1e-3, 9)
    truth = np.linspace(1.0, 0.2, 9)
    refs_t = np.array([-1e-4, 1.1e-3])
    refs_v = np.array([500.0, 500.0])
    out = readout.normalize_readout(times, truth * 500.0, refs_t, refs_v)
    np.testing.assert_allclose(out.up, truth, rtol=1e-12)


def test_normalize_drifting_references_flat_signal():
    times = np.linspace(0, 1e-3, 17)
    refs_t = np.linspace(-1e-4, 1.1e-3, 5)
    refs_v = 800.0 * (1.0 + 0.1 * refs_t / 1e-3)  # 10% linear drift
    ref_at = np.interp(times, refs_t, refs_v)
    raw = 0.75 * ref_at
    out = readout.normalize_readout(times, raw, refs_t, refs_v)
    np.testing.assert_allclose(out.up, 0.75, rtol=1e-12)


def test_normalize_extrapolation_warns():
    with pytest.warns(readout.ReadoutWarning):
        readout.normalize_readout(np.array([0.0, 2.0]), np.array([1.0, 1.0]),
                                  np.array([0.5, 1.0]), np.array([1.0, 1.0]))


def test_down_correction_and_fidelity_chain():
    times = np.array([0.0, 1.0])
    refs_t = np.array([-0.5, 1.5])
    refs_v = np.array([100.0, 100.0])
    raw_down = np.array([0.0, 0.94 * 0.975]) * 100.0
    out = readout.normalize_readout(times, np.array([100.0, 2.0]), refs_t, refs_v,
                                    raw_down=raw_down, lz_efficiency=0.975)
    assert out.down[-1] == pytest.approx(0.94, rel=1e-12)
    chain = readout.fidelity_chain(Measured(out.down[-1], 0.03), Measured(0.98, 0.01))
    assert chain.value == pytest.approx(0.96, abs=5e-3)
    assert chain.sigma == pytest.approx(0.03, abs=5e-3)


# ------------------------------------------------------------------- plots

def test_emit_plot_single_polyline(tmp_path):
    path = tmp_path / "p.svg"
    emit_plot(path, [Series(np.array([0.0, 1.0]), np.array([1.0, 2.0]))], "x", "y")
    text = path.read_text()
    assert text.count("<polyline") == 1
    assert "<svg" in text and "</svg>" in text


def test_emit_plot_two_series_with_fits(tmp_path):
    path = tmp_path / "c.svg"
    t = np.geomspace(1e-3, 1e-1, 7)
    emit_plot(path, [
        Series(t, np.exp(-t / 2e-3), "a", "markers"),
        Series(t, np.exp(-t / 38e-3), "b", "markers"),
        Series(t, np.exp(-((t / 2e-3) ** 2)), "fit a", "line"),
        Series(t, np.exp(-((t / 38e-3) ** 2)), "fit b", "line"),
    ], "dark time", "contrast", log_x=True)
    text = path.read_text()
    assert text.count("<polyline") == 2
    assert text.count("<circle") == 14


def test_emit_plot_empty_rejected(tmp_path):
    with pytest.raises(PlotError):
        emit_plot(tmp_path / "e.svg", [], "x", "y")
    with pytest.raises(PlotError):
        Series(np.array([]), np.array([]))


def test_emit_plot_deterministic_bytes(tmp_path):
    s = [Series(np.arange(5.0), np.arange(5.0) ** 2, "q", "line")]
    emit_plot(tmp_path / "a.svg", s, "x", "y")
    emit_plot(tmp_path / "b.svg", s, "x", "y")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    low = (tmp_path / "a.svg").read_text().lower()
    assert "date" not in low and "time:" not in low


# ------------------------------------------------------------------- runio

def test_runwriter_summary_and_manifest(tmp_path):
    sc = parse_scenario(GOOD_SCENARIO)
    w = RunWriter(outdir=tmp_path / "run", scenario=sc)
    w.write_csv("data.csv", {"x": np.array([1.0, 2.0]), "y": np.array([3.0, 4.0])})
    assert w.check("x_max", 2.0, 1.5, 2.5)
    assert not w.check("bad", 9.0, 0.0, 1.0)
    ok = w.finish()
    assert not ok
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["pass"] is False
    assert [c["name"] for c in summary["checks"]] == ["x_max", "bad"]
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["scenario_sha256"] == sc.digest()
    assert "data.csv" in manifest["outputs"]
    digest = hashlib.sha256((tmp_path / "run" / "data.csv").read_bytes()).hexdigest()
    assert manifest["outputs"]["data.csv"] == digest


def test_read_csv_roundtrip(tmp_path):
    sc = parse_scenario(GOOD_SCENARIO)
    w = RunWriter(outdir=tmp_path / "run", scenario=sc)
    cols = {"t_s": np.linspace(0, 1, 7), "v": np.sin(np.linspace(0, 1, 7))}
    w.write_csv("x.csv", cols)
    back = w.read_csv("x.csv")
    for k in cols:
        np.testing.assert_array_equal(back[k], cols[k])


# --------------------------------------------------------------------- CLI

def test_cli_dry_run_smoke(capsys):
    assert cli_main(["simulate", "rabi", "--dry-run"]) == 0
    out = capsys.readouterr().out
    assert "drive.detuning" in out
    assert cli_main(["reproduce", "fig3d", "--dry-run"]) == 0
    assert cli_main(["trap", "magic", "--wavelength", "914", "--dry-run"]) == 0
    assert cli_main(["scan", "cpt", "--dry-run"]) == 0


def test_cli_trap_magic(capsys):
    assert cli_main(["trap", "magic", "--wavelength", "914"]) == 0
    assert "79.0" in capsys.readouterr().out
    assert cli_main(["trap", "magic", "--wavelength", "1064"]) == 0
    assert "no magic angle" in capsys.readouterr().out


def test_cli_trap_recoil(capsys):
    assert cli_main(["trap", "recoil", "--wavelength", "914"]) == 0
    assert "2716.86" in capsys.readouterr().out


def test_cli_unknown_figure_exit_code(capsys):
    assert cli_main(["reproduce", "fig99"]) == 2
    err = capsys.readouterr().err
    assert "fig3d" in err  # lists the available presets


def test_cli_missing_scenario_file():
    assert cli_main(["simulate", "rabi", "--scenario", "/nonexistent.scenario"]) == 2


def test_cli_kind_mismatch(tmp_path):
    p = tmp_path / "x.scenario"
    p.write_text(GOOD_SCENARIO)
    assert cli_main(["simulate", "lz", "--scenario", str(p)]) == 2


def test_cli_analyze_rabi(tmp_path, capsys):
    from fsqubit import formulas
    from fsqubit.units import TWO_PI

    dt = 0.4e-6
    t = np.arange(4096) * dt
    y = formulas.damped_model(t, TWO_PI * 100.94e3, 0.0, 684e-6, 0.17, 1.15e-3)
    csv = "t_s,value\n" + "\n".join(f"{ti:.17g},{yi:.17g}" for ti, yi in zip(t, y))
    src = tmp_path / "trace.csv"
    src.write_text(csv)
    out = tmp_path / "result.json"
    assert cli_main(["analyze", "rabi", "--input", str(src), "--out", str(out)]) == 0
    result = json.loads(out.read_text())
    assert result["omega_hz"] == pytest.approx(100.94e3, rel=2e-3)
    assert result["tau_s"] == pytest.approx(684e-6, rel=0.05)


def test_cli_analyze_decay(tmp_path):
    t = np.linspace(0, 2e-3, 200)
    y = 0.8 * np.exp(-t / 300e-6)
    src = tmp_path / "d.csv"
    src.write_text("t_s,value\n" + "\n".join(f"{a:.17g},{b:.17g}" for a, b in zip(t, y)))
    assert cli_main(["analyze", "decay", "--input", str(src)]) == 0


def test_cli_numerical_failure_exit_code(tmp_path, capsys):
    src = tmp_path / "short.csv"
    src.write_text("t_s,value\n0,1\n1e-6,1\n2e-6,1\n3e-6,1\n")
    assert cli_main(["analyze", "rabi", "--input", str(src)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_failed_checks_exit_code(tmp_path, capsys):
    # a trace too short for the pipeline windows fails its checks
    bad = GOOD_SCENARIO.replace("duration = 0.1 ms", "duration = 0.05 ms") \
                       .replace("samples = 256", "samples = 128")
    p = tmp_path / "bad.scenario"
    p.write_text(bad)
    code = cli_main(["simulate", "rabi", "--scenario", str(p), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 4
    assert "FAIL" in out


# ------------------------------------------------------------ reproducing

def test_reproduce_unknown_figure():
    with pytest.raises(ConfigError):
        presets.reproduce("fig0", Path("/tmp/never"))


def test_reproduce_fig3d_byte_identical_and_worker_independent(tmp_path):
    ok1 = presets.reproduce("fig3d", tmp_path / "a", workers=1)
    ok2 = presets.reproduce("fig3d", tmp_path / "b", workers=3)
    assert ok1 and ok2
    csv_a = (tmp_path / "a" / "trace.csv").read_bytes()
    csv_b = (tmp_path / "b" / "trace.csv").read_bytes()
    assert hashlib.sha256(csv_a).hexdigest() == hashlib.sha256(csv_b).hexdigest()
    m_a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    m_b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert m_a["outputs"] == m_b["outputs"]


def test_summary_checks_recomputable_from_csv(tmp_path):
    presets.reproduce("fig2c", tmp_path / "run")
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    data = np.genfromtxt(tmp_path / "run" / "spectrum.csv", delimiter=",", names=True)
    dip = data["excitation"][np.argmin(np.abs(data["delta_hz"]))]
    recorded = next(c for c in summary["checks"] if c["name"] == "dip_at_zero")
    assert recorded["value"] == pytest.approx(float(dip), abs=1e-15)
