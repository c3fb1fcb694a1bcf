import csv

import numpy as np
import pytest

from manifold_sde.cli import ConfigError, main, parse_config

HAPPY = (
    "command=simulate\nmanifold=sphere\nn=3\nintegrator=ito-em\nT=2\n"
    "n_div=1000\nn_path=1000\nseed=7\ncost=phi_5_2\nout=run.csv"
)

SMALL_SIM = """\
# quick smoke run
command = simulate
manifold = sphere
n = 3
integrator = ito-em
T = 0.5
n_div = 20
n_path = 16
seed = 3
cost = phi_5_2
out = {out}
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# parsing


def test_happy_path_config_parses():
    config = parse_config(HAPPY)
    assert config.command == "simulate"
    assert config.get("manifold") == "sphere"
    assert config.get("n") == 3
    assert config.get("T") == 2.0
    assert config.get("n_div") == 1000
    assert config.get("cost") == "phi_5_2"
    assert config.get("out") == "run.csv"


def test_missing_required_key_is_named():
    text = HAPPY.replace("T=2\n", "")
    with pytest.raises(ConfigError, match=r"\bT\b"):
        parse_config(text)


def test_unknown_integrator_lists_valid_ids():
    text = HAPPY.replace("integrator=ito-em", "integrator=milstein")
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    message = str(excinfo.value)
    assert "milstein" in message
    assert "ito-em" in message and "geodesic-walk" in message


def test_unknown_keys_reported_with_line_numbers():
    text = "command=validate\nmanifold=sphere\ncolor=red\nn=3\nflavor=salt\n"
    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)
    message = str(excinfo.value)
    assert "line 3" in message and "color" in message
    assert "line 5" in message and "flavor" in message


def test_type_mismatches_are_reported():
    with pytest.raises(ConfigError, match="integer"):
        parse_config(HAPPY.replace("n_div=1000", "n_div=many"))
    with pytest.raises(ConfigError, match="number"):
        parse_config(HAPPY.replace("T=2", "T=two"))


def test_family_parameter_checks():
    with pytest.raises(ConfigError, match="needs key"):
        parse_config("command=validate\nmanifold=stiefel\nn=5\n")  # p missing
    with pytest.raises(ConfigError, match="do not apply"):
        parse_config("command=validate\nmanifold=sphere\nn=3\nN=3\n")


def test_overrides_apply_after_file():
    config = parse_config(HAPPY, overrides=["seed=9", "n_div=50"])
    assert config.get("seed") == 9
    assert config.get("n_div") == 50
    with pytest.raises(ConfigError, match="--set #1"):
        parse_config(HAPPY, overrides=["seed"])


# ---------------------------------------------------------------------------
# command execution through main()


def test_missing_config_file_is_config_error(tmp_path, capsys):
    assert main([str(tmp_path / "nope.cfg")]) == 3
    assert "config error" in capsys.readouterr().err


def test_simulate_with_zero_paths_is_config_error(tmp_path, capsys):
    out = tmp_path / "zero.csv"
    path = write(tmp_path, "zero.cfg", SMALL_SIM.format(out=out).replace("n_path = 16", "n_path = 0"))
    assert main([path]) == 3
    assert "config error" in capsys.readouterr().err


def test_validate_sphere_passes(tmp_path, capsys):
    path = write(tmp_path, "val.cfg", "command=validate\nmanifold=sphere\nn=3\n")
    assert main([path]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_heat_kernel_prints_reference_value(tmp_path, capsys):
    path = write(tmp_path, "hk.cfg", "command=heat-kernel\nmanifold=sphere\nn=3\ncost=phi_5_2\n")
    assert main([path]) == 0
    assert "0.299" in capsys.readouterr().out


def test_heat_kernel_rejects_other_manifolds(tmp_path, capsys):
    path = write(tmp_path, "hk2.cfg", "command=heat-kernel\nmanifold=so\nN=3\ncost=phi_5_2\n")
    assert main([path]) == 3


def test_simulate_outputs_are_deterministic(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert main([write(tmp_path, "a.cfg", SMALL_SIM.format(out=out_a))]) == 0
    assert main([write(tmp_path, "b.cfg", SMALL_SIM.format(out=out_b))]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_simulate_csv_schema_and_summary_consistency(tmp_path, capsys):
    out = tmp_path / "run.csv"
    assert main([write(tmp_path, "run.cfg", SMALL_SIM.format(out=out))]) == 0

    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["path_index", "value"]
    assert len(rows) == 1 + 16
    assert [r[0] for r in rows[1:]] == [str(i) for i in range(16)]
    values = np.array([float(r[1]) for r in rows[1:]])

    summary = tmp_path / "run.summary.csv"
    with open(summary, newline="") as fh:
        srows = list(csv.reader(fh))
    assert srows[0] == ["metric", "mean", "stderr", "n_path", "n_div", "T",
                        "integrator", "manifold"]
    record = dict(zip(srows[0], srows[1]))
    assert record["metric"] == "phi_5_2"
    assert record["n_path"] == "16" and record["n_div"] == "20"
    assert record["integrator"] == "ito-em"
    assert abs(float(record["mean"]) - float(np.mean(values))) < 1e-12


def test_set_override_changes_the_run(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    cfg = write(tmp_path, "o.cfg", SMALL_SIM.format(out=out_a))
    assert main([cfg]) == 0
    assert main([cfg, "--set", f"out={out_b}", "--set", "seed=4"]) == 0
    va = [r.split(",")[1] for r in out_a.read_text().splitlines()[1:]]
    vb = [r.split(",")[1] for r in out_b.read_text().splitlines()[1:]]
    assert va != vb

    out_c = tmp_path / "c.csv"
    assert main([cfg, "--set", f"out={out_c}", "--set", "n_path=8"]) == 0
    assert len(out_c.read_text().splitlines()) == 1 + 8


def test_compare_command_writes_grid(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    text = (f"command=compare\nmanifold=so\nN=3\nT=0.5\nn_div=30\n"
            f"n_path=32\nseed=5\ncost=sum_abs\nout={out}\n")
    assert main([write(tmp_path, "cmp.cfg", text)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 4  # four integrators at the single n_div
    printed = capsys.readouterr().out
    assert ("consistent" in printed) or ("UNSTABLE" in printed)


def test_uniform_command_requires_compact_manifold(tmp_path, capsys):
    out = tmp_path / "u.csv"
    text = (f"command=uniform\nmanifold=spd\nN=3\nn_path=8\nn_div=10\nT=2\n"
            f"seed=1\ncost=sum_abs\nout={out}\n")
    assert main([write(tmp_path, "ub.cfg", text)]) == 3
    assert "compact" in capsys.readouterr().err


def test_uniform_command_writes_both_estimates(tmp_path, capsys):
    out = tmp_path / "u.csv"
    text = (f"command=uniform\nmanifold=so\nN=3\nn_path=16\nn_div=10\nT=2\n"
            f"seed=1\ncost=sum_abs\nout={out}\n")
    assert main([write(tmp_path, "u.cfg", text)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    metrics = [r[0] for r in rows[1:]]
    assert metrics == ["sum_abs", "sum_abs_uniform"]
    assert rows[2][6] == "direct-sampler"
