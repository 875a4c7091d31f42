import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vil.cli import ConfigError, apply_override, demo_config_path, load_config, main
from vil.svgplot import line_plot

MANIFEST_KEYS = {
    "schema",
    "schema_version",
    "package_version",
    "subcommand",
    "config",
    "results",
    "checks",
    "passed",
    "error",
    "artifacts",
    "timing_seconds",
}


def _manifest(out, command):
    with open(out / command / "manifest.json") as fh:
        return json.load(fh)


def test_demo_config_loads():
    cfg = load_config(demo_config_path())
    assert cfg["eigensolver"]["alpha"] == 0.4
    assert cfg["eigensolver"]["k"] == 2


@pytest.mark.parametrize(
    "override",
    ["eigensolver.alpha=2.5", "eigensolver.k=1", "vortex.colour=1", "eigensolver.eta_method='spline'", "demo.p_list=[6.0]"],
)
def test_invalid_config_exits_2(tmp_path, override, capsys):
    assert main(["build-vortex", "--output-dir", str(tmp_path), "--set", override]) == 2
    assert "invalid config" in capsys.readouterr().err


def test_small_M_rejected():
    with pytest.raises(ConfigError):
        load_config(demo_config_path(), ["discretization.M=32.0"])


def test_unknown_toml_key_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("schema_version = 1\n[vortex]\nwidth = 3.0\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_dotted_override_parses_toml_values():
    cfg = load_config(demo_config_path())
    out = apply_override(cfg, "resolvent.beta_list=[10.0, 20.0]")
    assert out["resolvent"]["beta_list"] == [10.0, 20.0]
    assert apply_override(cfg, "eigensolver.eta_method=semigroup")["eigensolver"]["eta_method"] == "semigroup"
    with pytest.raises(ConfigError):
        apply_override(cfg, "eigensolver.alpha")


def test_build_vortex_outputs(tmp_path):
    assert main(["build-vortex", "--output-dir", str(tmp_path)]) == 0
    m = _manifest(tmp_path, "build-vortex")
    assert set(m) == MANIFEST_KEYS
    assert m["passed"] and m["error"] is None and m["subcommand"] == "build-vortex"
    with open(tmp_path / "build-vortex" / "vortex.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["r", "g", "g_prime", "v", "A"]
    ET.parse(tmp_path / "build-vortex" / "vortex.svg")
    assert abs(m["results"]["vortex"]["moment_at_r0"]) < 1e-10


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("VIL_OUTPUT_DIR", str(tmp_path))
    monkeypatch.chdir(tmp_path)
    assert main(["build-vortex"]) == 0
    assert (tmp_path / "build-vortex" / "manifest.json").exists()


def test_output_dir_flag_beats_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("VIL_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["build-vortex", "--output-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "build-vortex" / "manifest.json").exists()
    assert not (tmp_path / "env").exists()


def test_failed_check_exits_1_with_manifest(tmp_path):
    assert main(["verify-powerlaw", "--output-dir", str(tmp_path), "--set", "demo.powerlaw_tol=1e-30"]) == 1
    m = _manifest(tmp_path, "verify-powerlaw")
    assert not m["passed"]
    assert any(not c["passed"] for c in m["checks"])


def test_verify_powerlaw_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["verify-powerlaw", "--output-dir", str(tmp_path / name), "--alpha", "0.6", "--gamma", "2.0"]) == 0
    ra = _manifest(tmp_path / "a", "verify-powerlaw")["results"]
    rb = _manifest(tmp_path / "b", "verify-powerlaw")["results"]
    assert ra == rb
    assert ra["powerlaw"]["alpha"] == 0.6


def test_manifest_config_reruns(tmp_path):
    assert main(["verify-powerlaw", "--output-dir", str(tmp_path / "a"), "--alpha", "1.3"]) == 0
    path = tmp_path / "a" / "verify-powerlaw" / "manifest.json"
    cfg = load_config(path)
    assert cfg["demo"]["powerlaw_alpha"] == 1.3
    assert main(["verify-powerlaw", "--config", str(path), "--output-dir", str(tmp_path / "b")]) == 0
    assert _manifest(tmp_path / "b", "verify-powerlaw")["results"] == _manifest(tmp_path / "a", "verify-powerlaw")["results"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "vil", "verify-powerlaw", "--output-dir", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "PASS powerlaw.transport" in proc.stdout


def test_line_plot_writes_valid_svg(tmp_path):
    x = np.linspace(0, 1, 20)
    path = tmp_path / "plot.svg"
    line_plot(path, [("sin", x, np.sin(x)), ("cos", x, np.cos(x))], title="t", xlabel="x", ylabel="y")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    assert len([el for el in root.iter() if el.tag.endswith("polyline") or el.tag.endswith("path")]) >= 2
