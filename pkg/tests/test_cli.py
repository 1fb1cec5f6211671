import math
import subprocess
import sys

import numpy as np
import pytest

from qkrfid.cli import main
from qkrfid.trace import trace_from_csv

K1 = str(0.6 * math.pi)
K2 = str(0.8 * math.pi)


def _run(args):
    return main(args)


def test_fidelity_writes_trace_and_sidecar(tmp_path):
    out = tmp_path / "fid"
    code = _run([
        "fidelity", "--k1", K1, "--k2", K2, "--epsilon", "0.05", "--beta", "0.3",
        "--kicks", "40", "--basis-size", "256", "--smoothing-window", "10",
        "--out", str(out),
    ])
    assert code == 0
    lines = (tmp_path / "fid.csv").read_text().splitlines()
    assert lines[0] == "kick,fidelity,smoothed"
    assert len(lines) == 42  # header + kicks + 1 rows
    meta = (tmp_path / "fid.meta").read_text()
    assert "command=fidelity" in meta
    assert "sha256:" in meta


def test_equal_strengths_give_unit_trace(tmp_path):
    out = tmp_path / "flat"
    code = _run([
        "fidelity", "--k1", K1, "--k2", K1, "--epsilon", "0.05", "--beta", "0.3",
        "--kicks", "30", "--basis-size", "128", "--smoothing-window", "0",
        "--out", str(out),
    ])
    assert code == 0
    trace = trace_from_csv(tmp_path / "flat.csv")
    assert np.abs(trace.values - 1.0).max() < 1e-12


def test_rerun_is_bit_identical(tmp_path):
    args = [
        "ensemble", "--k1", K1, "--k2", K2, "--epsilon", "0.05", "--beta1", "0.2",
        "--delta-beta", "0.04", "--n-beta", "8", "--kicks", "25",
        "--basis-size", "128", "--smoothing-window", "5",
    ]
    _run(args + ["--out", str(tmp_path / "a")])
    _run(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_config_file_with_flag_override(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(
        "# comparison setup\n"
        f"k1={K1}\n"
        f"k2={K2}\n"
        "epsilon=0.05\n"
        "beta=0.3\n"
        "kicks=20\n"
        "basis_size=128\n"
        "smoothing_window=0\n"
    )
    out = tmp_path / "conf"
    code = _run(["fidelity", "--config", str(config), "--kicks", "10", "--out", str(out)])
    assert code == 0
    lines = (tmp_path / "conf.csv").read_text().splitlines()
    assert len(lines) == 12  # flag overrides the config kicks
    meta = (tmp_path / "conf.meta").read_text()
    assert "kicks=10" in meta


def test_missing_parameter_exits_2(tmp_path, capsys):
    code = _run(["fidelity", "--k1", K1, "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error:config:" in capsys.readouterr().err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    config = tmp_path / "bad.conf"
    config.write_text("k3=1.0\n")
    code = _run(["fidelity", "--config", str(config), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error:config:" in capsys.readouterr().err


def test_numerical_guard_exits_3(tmp_path, capsys):
    code = _run([
        "fidelity", "--k1", "1.0", "--k2", "20.0", "--epsilon", "0.05", "--beta", "0.3",
        "--kicks", "10", "--basis-size", "32", "--smoothing-window", "0",
        "--out", str(tmp_path / "x"),
    ])
    assert code == 3
    assert "error:numerical:" in capsys.readouterr().err


def test_portrait_outputs_both_dynamics(tmp_path):
    out = tmp_path / "por"
    code = _run([
        "portrait", "--k", K2, "--epsilon", "0.1", "--beta", "0.3",
        "--steps", "20", "--seed-i", "0:1:3", "--out", str(out),
    ])
    assert code == 0
    for suffix in ("_map.csv", "_pendulum.csv"):
        lines = (tmp_path / f"por{suffix}").read_text().splitlines()
        assert lines[0] == "orbit_id,step,theta,I"
        assert len(lines) == 1 + 3 * 21


def test_pendulum_and_perturbative_traces(tmp_path):
    shared = [
        "--k1", K1, "--k2", K2, "--epsilon", "0.05",
        "--kicks", "30", "--smoothing-window", "0",
    ]
    code = _run(["pendulum", "--beta", "0.3", "--basis-size", "101",
                 "--n-lo", "-80", "--n-hi", "80", "--out", str(tmp_path / "pen")] + shared)
    assert code == 0
    code = _run(["perturbative", "--beta", "0.3", "--basis-size", "64",
                 "--order", "4", "--out", str(tmp_path / "pt")] + shared)
    assert code == 0
    code = _run(["perturbative", "--beta1", "0.2", "--delta-beta", "0.04",
                 "--n-beta", "6", "--basis-size", "64", "--order", "3",
                 "--out", str(tmp_path / "pte")] + shared)
    assert code == 0
    for name in ("pen", "pt", "pte"):
        trace = trace_from_csv(tmp_path / f"{name}.csv")
        assert len(trace) == 31
        assert trace.values[0] == pytest.approx(1.0, abs=1e-10)


def test_perturbative_requires_exactly_one_mode(tmp_path, capsys):
    code = _run([
        "perturbative", "--k1", K1, "--k2", K2, "--epsilon", "0.05",
        "--kicks", "10", "--out", str(tmp_path / "x"),
    ])
    assert code == 2


def test_spectrum_table(tmp_path):
    out = tmp_path / "spec"
    code = _run([
        "spectrum", "--k", K1, "--epsilon", "0.05", "--beta", "0.3",
        "--m-min", "-1", "--m-max", "1", "--n-lo", "-100", "--n-hi", "100",
        "--out", str(out),
    ])
    assert code == 0
    lines = (tmp_path / "spec.csv").read_text().splitlines()
    assert lines[0] == "m,E_wkb,E_exact,E_pert2,E_pert3,E_pert4"
    assert len(lines) == 4
    row = [float(x) for x in lines[2].split(",")]
    assert row[0] == 0
    assert row[1] == pytest.approx(row[2], rel=1e-4)  # WKB close to exact


def test_scaling_outputs(tmp_path):
    out = tmp_path / "sc"
    code = _run([
        "scaling", "--k1", K1, "--k2", K2, "--epsilon", "0.05",
        "--delta-beta", "0.06", "--n-beta", "24", "--kicks", "700",
        "--beta1-list", "0.18,0.22", "--beta-ref", "0.18",
        "--basis-size", "256", "--smoothing-window", "50",
        "--out", str(out),
    ])
    assert code == 0
    lines = (tmp_path / "sc_factors.csv").read_text().splitlines()
    assert lines[0] == "beta1,alpha,objective"
    rows = {float(r.split(",")[0]): float(r.split(",")[1]) for r in lines[1:]}
    assert rows[0.18] == 1.0
    assert rows[0.22] < 1.0  # larger beta1 decays earlier
    assert (tmp_path / "sc_trace_beta0.22.csv").exists()
    assert (tmp_path / "sc_rescaled_beta0.22.csv").exists()


def test_validity_csv(tmp_path):
    out = tmp_path / "val"
    code = _run([
        "validity", "--epsilons", "0.05", "--k1", K1, "--k2", K2,
        "--delta-beta", "0.06", "--n-beta", "16", "--kicks", "700",
        "--beta1-start", "0.4", "--beta1-stop", "0.4", "--beta1-step", "0.02",
        "--basis-size", "512", "--smoothing-window", "100",
        "--out", str(out),
    ])
    assert code == 0
    lines = (tmp_path / "val.csv").read_text().splitlines()
    assert lines[0] == "epsilon,lower_lo,lower_hi,upper_lo,upper_hi,upper_theory"
    theory = float(lines[1].split(",")[-1])
    assert theory == pytest.approx(0.39, abs=0.005)


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qkrfid.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "portrait" in proc.stdout
