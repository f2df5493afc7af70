import ast
import json
import subprocess
import sys

import pytest

from hardykernel import __version__
from hardykernel.cli import OUT_ENV, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(out):
    return "\n".join(line for line in out.splitlines() if not line.startswith("#"))


def test_header_on_every_run(capsys):
    code, out, _ = run(capsys, "characteristic", "--weight", "const:1", "--alpha", "1", "--jmax", "4", "--seed", "5")
    lines = out.splitlines()
    assert lines[0] == f"# hardykernel {__version__}"
    assert lines[1] == "# seed: 5"
    cfg = json.loads(lines[2].removeprefix("# config: "))
    assert cfg["weight"] == "const:1" and cfg["jmax"] == 4 and cfg["command"] == "characteristic"


def test_characteristic_bergman_value(capsys):
    code, out, _ = run(capsys, "characteristic", "--weight", "const:1", "--p", "2", "--alpha", "2")
    assert code == 0
    value = float(body(out).splitlines()[0].split(":")[1])
    assert value == pytest.approx(1.0, abs=1e-10)


def test_characteristic_divergence_is_a_result(capsys):
    code, out, _ = run(capsys, "characteristic", "--weight", "const:1", "--p", "2", "--alpha", "3", "--jmax", "10")
    assert code == 0
    assert "divergent: True" in out
    assert "generation,max_ratio,growth" in out
    rows = [l for l in out.splitlines() if l[:1].isdigit()]
    assert len(rows) == 11


def test_characteristic_json_and_csv(capsys):
    code, out, _ = run(capsys, "characteristic", "--alpha", "2", "--jmax", "5", "--format", "json")
    assert json.loads(body(out))["value"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "characteristic", "--alpha", "2", "--jmax", "5", "--format", "csv")
    assert body(out).splitlines()[0] == "generation,max_ratio,growth"


def test_necessity_prints_constants(capsys):
    code, out, _ = run(capsys, "necessity", "--alpha", "1", "--theta", "0.01", "--samples", "5000")
    assert code == 0
    text = body(out)
    for key in ("a:", "b:", "d: 6", "C1:", "min_slack:", "passed: True"):
        assert key in text
    slack = ast.literal_eval(text.split("min_slack: ")[1].splitlines()[0])
    assert min(slack.values()) >= 0


def test_necessity_invalid_theta_is_config_error(capsys):
    code, _, err = run(capsys, "necessity", "--alpha", "1", "--theta", "0.5")
    assert code == 2 and "config error" in err


def test_bad_weight_reports_position(capsys):
    code, out, err = run(capsys, "characteristic", "--weight", "radial:q=1")
    assert code == 2
    assert "^" in err and out == ""


def test_unknown_flag_exit_two(capsys):
    code, _, _ = run(capsys, "characteristic", "--nonsense", "1")
    assert code == 2


def test_check_failure_exit_one(capsys):
    code, out, _ = run(capsys, "maximal", "--weight", "const:1", "--levels", "4,5", "--trials", "1")
    assert code == 0
    code, out, _ = run(capsys, "embedding", "--weight", "const:1", "--levels", "3,4,5", "--max-variation", "1e-6")
    assert code == 1 and "passed: False" in out


def test_other_subcommands_run(capsys):
    for argv in (["guo-wang", "--jmax", "4"],
                 ["norm", "--depth", "4", "--alpha", "1"],
                 ["norm", "--depth", "4", "--alpha", "1", "--p", "3"],
                 ["dominate", "--alpha", "2", "--samples", "20000"],
                 ["doubling", "--weight", "radial:t=0.5", "--samples", "200", "--jmax", "6"]):
        code, out, err = run(capsys, *argv)
        assert code == 0, (argv, err)
        assert out.startswith("# hardykernel")


def test_dump_config_round_trip(capsys, tmp_path):
    argv = ["characteristic", "--weight", "radial:t=0.5", "--alpha", "1.5", "--jmax", "5", "--seed", "3"]
    code, direct, _ = run(capsys, *argv)
    code, dumped, _ = run(capsys, *argv, "--dump-config")
    assert code == 0
    cfg = tmp_path / "c.toml"
    cfg.write_text(dumped)
    code, again, _ = run(capsys, "characteristic", "--config", str(cfg))
    assert code == 0 and again == direct


def test_config_rejects_unknown_keys(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('jmx = 4\n')
    code, _, err = run(capsys, "characteristic", "--config", str(cfg))
    assert code == 2 and "jmx" in err


def test_out_env_directory(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    code, out, _ = run(capsys, "characteristic", "--alpha", "2", "--jmax", "4", "--format", "json")
    assert json.loads((tmp_path / "characteristic.json").read_text())["value"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "characteristic", "--alpha", "2", "--jmax", "4", "--out", "sub/x.json")
    assert (tmp_path / "sub" / "x.json").exists()


def test_sweep_requires_config(capsys):
    code, _, err = run(capsys, "sweep")
    assert code == 2 and "--config" in err
    code, out, _ = run(capsys, "sweep", "--dump-config")
    assert code == 0 and "[[families]]" in out


def test_sweep_from_config(capsys, tmp_path):
    cfg = tmp_path / "s.toml"
    cfg.write_text('depths = [3, 4, 5]\nj_max = 5\ndoubling_budget = 100\n'
                   '[[family]]\nweights = ["const:1"]\nalphas = [1.0, 3.0]\n')
    svg = tmp_path / "s.svg"
    code, out1, _ = run(capsys, "sweep", "--config", str(cfg), "--threads", "1", "--svg", str(svg))
    assert code == 0 and svg.exists()
    code, out2, _ = run(capsys, "sweep", "--config", str(cfg), "--threads", "2")
    assert out1 == out2
    lines = body(out1).splitlines()
    assert lines[0].startswith("schema_version,seed,weight") and len(lines) == 3
    code, out3, _ = run(capsys, "sweep", "--config", str(cfg), "--seed", "4")
    assert "# seed: 4" in out3


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "hardykernel.cli", "characteristic", "--alpha", "2", "--jmax", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "value: 1" in res.stdout
