import json
import subprocess
import sys

import numpy as np
import pytest

from tdm_mbqc import cli
from tdm_mbqc.config import ConfigError, ExperimentConfig, config_from_dict, parse_config
from tdm_mbqc.experiments import gate_sweep, multistep, nullifier_table, read_report_meta
from tdm_mbqc.gates import rotation, shear, squeeze
from tdm_mbqc.targets import TargetParseError, parse_target

SMALL = """
seed: 17
shots: 3000
bootstrap_resamples: 50
sweeps:
  rotation: [0, 90]
  shear: [20]
table:
  squeeze_rot: [15, 45]
multistep:
  n_values: [1, 3]
trace:
  n_bins: 12
"""


def table_rows(cols, rows):
    return [dict(zip(cols, r)) for r in rows]


def test_parse_targets():
    np.testing.assert_allclose(parse_target("R(30)"), rotation(np.deg2rad(30)))
    np.testing.assert_allclose(parse_target("S(20)"), squeeze(np.deg2rad(20)))
    np.testing.assert_allclose(
        parse_target("R(90) * P(10)"), rotation(np.pi / 2) @ shear(np.deg2rad(10))
    )
    np.testing.assert_allclose(parse_target("R(10)S(20)"), rotation(np.deg2rad(10)) @ squeeze(np.deg2rad(20)))
    np.testing.assert_allclose(parse_target("[[1, 0], [0.5, 1]]"), [[1, 0], [0.5, 1]])
    np.testing.assert_allclose(parse_target("RS(30)"), rotation(np.pi / 2) @ squeeze(np.deg2rad(30)))


@pytest.mark.parametrize("text,pos", [("R(30", 4), ("Q(1)", 0), ("R(30)*", 6), ("", 0),
                                      ("[[2,0],[0,1]]", 0), ("S(0)", 0)])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(TargetParseError) as exc:
        parse_target(text)
    assert exc.value.pos == pos
    assert f"position {pos}" in str(exc.value)


def test_config_unknown_key_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("seed: 1\nchain:\n  eta_detect: 0.9\n  squeez: -3\n", "x.yaml")
    assert "x.yaml:4:" in str(exc.value) and "chain.squeez" in str(exc.value)
    assert exc.value.line == 4


@pytest.mark.parametrize("text", [
    "shots: 0\n", "mode: fast\n", "chain:\n  eta_detect: 1.5\n", "sweeps:\n  rotation: []\n",
    "chain:\n  squeezing_db: -4\n  r_x: 0.3\n", "trace:\n  n_bins: 300\n", "sweeps: [1]\n",
    "seed: [\n",
])
def test_config_validation_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_defaults_and_hash():
    cfg = parse_config("")
    assert cfg.shots == 38_600
    assert np.exp(-2 * cfg.chain.r_x) == pytest.approx(10 ** -0.4)
    other = parse_config("shots: 1000\n")
    assert cfg.hash() != other.hash()
    assert config_from_dict(other.to_dict()).hash() == other.hash()


def test_config_phase_noise_roundtrip():
    cfg = parse_config("chain:\n  phase_noise: {bits: 6, jitter_sigma: 1.0}\n")
    assert cfg.chain.phase_noise.bits == 6
    assert config_from_dict(cfg.to_dict()).chain == cfg.chain


def test_gate_sweep_analytic_matches_theory():
    exp = parse_config(SMALL)
    exp.mode = "analytic"
    for row in table_rows(*gate_sweep(exp)):
        for k in ("s11", "s12", "s21", "s22"):
            assert row[k] == pytest.approx(row["theory_" + k], abs=1e-10)


def test_nullifier_table_thresholds_and_pattern():
    exp = parse_config(SMALL)
    rows = table_rows(*nullifier_table(exp))
    assert [r["threshold_2dp"] for r in rows] == [1.0, 2.0]
    assert [r["pass"] for r in rows] == [False, True]
    assert all(r["sum_se"] > 0 for r in rows)


def test_analytic_and_sampled_agree():
    exp = parse_config(SMALL)
    sampled = table_rows(*multistep(exp))
    exp.mode = "analytic"
    exact = table_rows(*multistep(exp))
    for s, a in zip(sampled, exact):
        for k in ("s11", "s12", "s21", "s22", "var_x", "var_p"):
            assert abs(s[k] - a[k]) < 4 * s[k + "_se"]


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "tdm_mbqc.cli", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


@pytest.mark.parametrize("command", ["gate-sweep", "nullifier-table", "multistep", "trace-demo"])
def test_outputs_replay_identically(tmp_path, command):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / f"{command}.csv"
    assert cli.main([command, "--config", str(cfg), "--out", str(out)]) == 0
    meta = read_report_meta(out)
    assert meta["seed"] == 17 and meta["config_hash"] == parse_config(SMALL).hash()
    assert cli.main(["replay", str(out)]) == 0


def test_replay_detects_tampering(tmp_path):
    out = tmp_path / "m.csv"
    assert cli.main(["multistep", "--analytic", "--seed", "1", "--out", str(out)]) == 0
    text = out.read_text().replace("\n1,", "\n1,0.5", 1)
    out.write_text(text)
    assert cli.main(["replay", str(out)]) == 3


def test_threads_do_not_change_output(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.main(["gate-sweep", "--config", str(cfg), "--out", str(a)])
    cli.main(["gate-sweep", "--config", str(cfg), "--threads", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_json_output(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL + "output:\n  format: json\n")
    out = tmp_path / "t.json"
    assert cli.main(["nullifier-table", "--config", str(cfg), "--out", str(out)]) == 0
    body = json.loads(out.read_text())
    assert body["meta"]["command"] == "nullifier-table"
    assert body["rows"][0]["operation"] == "squeeze_rot"
    assert cli.main(["replay", str(out)]) == 0


def test_compile_command(tmp_path, capsys):
    assert cli.main(["compile", "R(30)"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert len(lines) == 2  # header + one step
    assert cli.main(["compile", "S(20)", "--out", str(tmp_path / "s.csv")]) == 0
    rows = [l for l in (tmp_path / "s.csv").read_text().splitlines() if not l.startswith("#")][1:]
    assert 1 <= len(rows) <= 2
    assert all(float(r.split(",")[-1]) < 1e-8 for r in rows)


def test_trace_demo_writes_traces(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / "demo.csv"
    assert cli.main(["trace-demo", "--config", str(cfg), "--out", str(out)]) == 0
    assert (tmp_path / "demo_A.trace").exists() and (tmp_path / "demo_B.trace").exists()
    rows = [l.split(",") for l in out.read_text().splitlines() if not l.startswith("#")][1:]
    assert len(rows) == 12
    for r in rows:
        assert abs(float(r[1]) - float(r[2])) < 1e-9


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("chain:\n  bogus: 1\n")
    res = run_cli("gate-sweep", "--config", bad)
    assert res.returncode == 2 and "bad.yaml:2" in res.stderr
    res = run_cli("compile", "R(30")
    assert res.returncode == 2 and "position 4" in res.stderr
    res = run_cli("compile", "R(30)")
    assert res.returncode == 0
    assert run_cli("nonsense").returncode == 2
    assert run_cli("gate-sweep", "--config", tmp_path / "missing.yaml").returncode == 2


def test_numerical_failure_exit_code(monkeypatch):
    from tdm_mbqc import experiments
    from tdm_mbqc.gates import CompileError

    def boom(*_):
        raise CompileError("no convergence", [], 1.0)

    monkeypatch.setattr(experiments, "compile_target", boom)
    assert cli.main(["compile", "S(20)"]) == 3


def test_experiment_config_defaults():
    exp = ExperimentConfig()
    assert exp.table["rotation"][:3] == [0.0, 22.5, -22.5]
    assert len(exp.table["squeeze_rot"]) == 13 and len(exp.table["shear"]) == 11
