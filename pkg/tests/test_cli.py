import json
import subprocess
import sys

import numpy as np
import pytest

from twobit import cli

T_D = np.arange(6) * 12 / 195.0


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def ideal_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ideal")
    assert run("run", "--config", "formate_ideal", "--out-dir", out) == 0
    return out


def fits_of(out, mode, model="ideal"):
    rows = [r for r in cli.read_csv(out / "fits.csv") if r["mode"] == mode and r["model"] == model]
    return sorted(rows, key=lambda r: r["t_d"])


def test_run_writes_outputs(ideal_run):
    manifest = json.loads((ideal_run / "manifest.json").read_text())
    assert set(manifest) == {"config_digest", "tool_version", "timestamp", "output_paths"}
    trials = cli.read_csv(ideal_run / "trials.csv")
    assert len(trials) == 11 * 6 * 2
    assert tuple(trials[0]) == cli.TRIAL_COLUMNS


def test_formate_ideal_fits(ideal_run):
    coded = fits_of(ideal_run, "coded")
    assert coded[0]["t_d"] == 0.0
    assert abs(coded[0]["eps"] - 1.0) < 1e-9
    control = fits_of(ideal_run, "control")
    eps = np.array([r["eps"] for r in control])
    assert np.allclose(eps, np.exp(T_D / 0.4), atol=1e-9, rtol=0)


def test_chloroform_coded_is_flat(tmp_path):
    assert run("run", "--config", "chloroform", "--out-dir", tmp_path) == 0
    coded = np.array([r["eps"] for r in fits_of(tmp_path, "coded")])
    control = np.array([r["eps"] for r in fits_of(tmp_path, "control")])
    assert np.max(coded) - 1 < 0.05
    assert control[-1] == pytest.approx(np.exp(T_D[-1] / 0.35), abs=1e-9)


def test_run_is_deterministic(tmp_path, ideal_run):
    assert run("run", "--config", "formate_ideal", "--out-dir", tmp_path, "--parallelism", 3) == 0
    for name in ("trials.csv", "fits.csv", "config.json"):
        assert (tmp_path / name).read_bytes() == (ideal_run / name).read_bytes()


def test_config_round_trip(tmp_path, ideal_run):
    resolved = ideal_run / "config.json"
    assert run("run", "--config", resolved, "--out-dir", tmp_path) == 0
    d1 = json.loads((ideal_run / "manifest.json").read_text())["config_digest"]
    d2 = json.loads((tmp_path / "manifest.json").read_text())["config_digest"]
    assert d1 == d2


@pytest.mark.parametrize("patch", [
    {"system": {"J": -1.0}},
    {"relaxation": {"attenuation_a": 0.3}},
    {"sweep": {"theta_steps": 0}},
    {"bogus_section": {}},
    {"noise": {"nodes": 1}},
])
def test_bad_config_exits_2(tmp_path, patch, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(patch))
    assert run("run", "--config", path, "--out-dir", tmp_path / "o") == 2
    assert "config error" in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path):
    assert run("run", "--config", tmp_path / "nope.json", "--out-dir", tmp_path) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("run", "--config", bad, "--out-dir", tmp_path) == 2


@pytest.mark.parametrize("figure", cli.FIGURES)
def test_every_figure_renders(ideal_run, tmp_path, figure):
    assert run("plot", "--results", ideal_run, "--figure", figure, "--out-dir", tmp_path) == 0
    svg = (tmp_path / f"{figure}.svg").read_text()
    assert svg.startswith("<?xml") and "<svg" in svg


def test_plots_are_reproducible(ideal_run, tmp_path):
    for sub in ("a", "b"):
        run("plot", "--results", ideal_run, "--figure", "p_vs_p", "--out-dir", tmp_path / sub)
    assert (tmp_path / "a/p_vs_p.svg").read_bytes() == (tmp_path / "b/p_vs_p.svg").read_bytes()


def test_p_vs_p_has_dotted_reference(ideal_run, tmp_path):
    run("plot", "--results", ideal_run, "--figure", "p_vs_p", "--out-dir", tmp_path)
    svg = (tmp_path / "p_vs_p.svg").read_text()
    assert "45 degree line" in svg
    assert "stroke-dasharray" in svg


def test_bloch_ellipses_six_nested(ideal_run, tmp_path):
    run("plot", "--results", ideal_run, "--figure", "bloch_ellipses", "--out-dir", tmp_path)
    svg = (tmp_path / "bloch_ellipses.svg").read_text()
    assert svg.count("ms</text>") == 2 * 6
    trials = [r for r in cli.read_csv(ideal_run / "trials.csv") if r["mode"] == "control"]
    radius = {}
    for r in trials:
        radius.setdefault(r["t_d"], []).append(np.hypot(r["accepted_x"], r["accepted_z"]))
    minor = [min(radius[t]) for t in sorted(radius)]
    assert minor[0] == pytest.approx(1.0) and np.all(np.diff(minor) < 0)


def test_plot_errors(ideal_run, tmp_path):
    assert run("plot", "--results", ideal_run, "--figure", "pie", "--out-dir", tmp_path) == 2
    assert run("plot", "--results", tmp_path / "missing", "--figure", "p_vs_p") == 2
    empty = tmp_path / "empty"
    empty.mkdir()
    for name, cols in (("trials.csv", cli.TRIAL_COLUMNS), ("fits.csv", cli.FIT_COLUMNS)):
        (empty / name).write_text(",".join(cols) + "\n")
    assert run("plot", "--results", empty, "--figure", "p_vs_p") == 2


def coefficient_table(path):
    return {r["label"]: (r["reconstructed"], r["direct"]) for r in cli.read_csv(path)}


def test_tomography_rho0(tmp_path):
    assert run("tomography", "--stage", "rho0", "--out-dir", tmp_path) == 0
    table = coefficient_table(tmp_path / "tomography_rho0.csv")
    big = {k for k, (rec, _) in table.items() if abs(rec) > 1e-10}
    assert big <= {"zI", "Iz", "zz"} and "zI" in big
    assert max(abs(rec - d) for rec, d in table.values()) < 1e-10


def test_tomography_rho1_pattern(tmp_path):
    assert run("tomography", "--stage", "rho1", "--theta", np.pi / 2, "--out-dir", tmp_path) == 0
    table = coefficient_table(tmp_path / "tomography_rho1.csv")
    # sin(theta) sigma_x (x) (I + sigma_z)/2 -> xI and xz at 1/2
    assert table["xI"][0] == pytest.approx(0.5, abs=1e-10)
    assert table["xz"][0] == pytest.approx(0.5, abs=1e-10)
    others = [abs(rec) for k, (rec, _) in table.items() if k not in ("xI", "xz", "Iz")]
    assert max(others) < 1e-10
    matrix = cli.read_csv(tmp_path / "tomography_rho1_matrix.csv")
    assert len(matrix) == 16


def test_tomography_errors(tmp_path):
    assert run("tomography", "--stage", "rho9", "--out-dir", tmp_path) == 2
    assert run("tomography", "--stage", "rho1", "--mode", "both", "--out-dir", tmp_path) == 2


def test_tradeoff_command(tmp_path, capsys):
    assert run("tradeoff", "--out-dir", tmp_path, "--p-max", 0.3, "--steps", 31) == 0
    printed = capsys.readouterr().out
    assert "pool: crossover at p = 0.166667" in printed
    assert "signal_2m: crossover at p = 0.25" in printed
    rows = cli.read_csv(tmp_path / "tradeoff.csv")
    assert len(rows) == 3 * 31
    assert (tmp_path / "tradeoff.svg").exists()


def test_tradeoff_empty_range(tmp_path):
    assert run("tradeoff", "--out-dir", tmp_path, "--p-min", 0.3, "--p-max", 0.1) == 0
    text = (tmp_path / "tradeoff.csv").read_text()
    assert text == ",".join(cli.TRADEOFF_COLUMNS) + "\n"
    assert run("tradeoff", "--out-dir", tmp_path, "--p-g", 0.7) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "twobit.cli", "tradeoff", "--out-dir", str(tmp_path),
                           "--steps", "2"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "gate_cost: crossover at p = 0" in proc.stdout
