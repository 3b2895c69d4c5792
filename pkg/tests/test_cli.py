import json
import subprocess
import sys

import numpy as np
import pytest

from procdisc import io
from procdisc.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_SEMANTIC, main
from procdisc.errors import SolverError
from procdisc.process_matrices import make_cns_example, maximally_mixed, party_labels, random_comb_ab
from procdisc.protocols import random_perfect_pair
from procdisc.tensor_core import HermitianOperator


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(5)
    paths = {}
    for name, op in {
        "cns": make_cns_example().op,
        "mixed": maximally_mixed().op,
        "zero": HermitianOperator(party_labels(), np.zeros((16, 16))),
        "comb0": random_comb_ab(rng).op,
        "comb1": random_comb_ab(rng).op,
        "wide": maximally_mixed((2, 3, 2, 2)).op,
    }.items():
        paths[name] = str(tmp_path / f"{name}.json")
        io.write_matrix(paths[name], op)
    paths["bad"] = str(tmp_path / "bad.json")
    (tmp_path / "bad.json").write_text("{not json")
    paths["dir"] = tmp_path
    return paths


def run(capsys, *argv):
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


def test_validate(files, capsys):
    code, rep = run(capsys, "validate", files["cns"])
    assert code == EXIT_OK and rep["valid"]
    code, rep = run(capsys, "validate", files["zero"])
    assert code == EXIT_SEMANTIC and rep["residuals"]["trace"] == pytest.approx(4.0)
    code, rep = run(capsys, "validate", files["bad"])
    assert code == EXIT_INPUT and "invalid JSON" in rep["error"]


def test_classify(files, capsys):
    assert run(capsys, "classify", files["mixed"])[1]["class"] == "free"
    assert run(capsys, "classify", files["comb0"])[1]["class"] == "comb-ab"
    assert run(capsys, "classify", files["zero"])[0] == EXIT_SEMANTIC


def test_psucc_identical(files, capsys):
    code, rep = run(capsys, "psucc", files["cns"], files["cns"])
    assert code == EXIT_OK
    assert rep["p_succ"] == pytest.approx(0.5, abs=1e-7)
    assert rep["files"]["S0"] is None


def test_psucc_with_files(files, capsys):
    out = files["dir"] / "out"
    code, rep = run(capsys, "psucc", files["comb0"], files["comb1"], "--adaptive", "--realize", "--out", str(out))
    assert code == EXIT_OK
    assert rep["p_adapt"] == pytest.approx(rep["p_succ"], abs=1e-5)
    assert rep["realization_probability"] == pytest.approx(rep["p_succ"], abs=1e-6)
    s0 = io.read_matrix(rep["files"]["S0"])
    s1 = io.read_matrix(rep["files"]["S1"])
    w0, w1 = io.read_matrix(files["comb0"]), io.read_matrix(files["comb1"])
    replay = 0.5 * (np.vdot(s0.data, w0.data) + np.vdot(s1.data, w1.data)).real
    assert replay == pytest.approx(rep["p_succ"], abs=1e-6)
    assert io.read_matrix(rep["files"]["K"]).side == 256


def test_psucc_adaptive_needs_combs(files, capsys):
    code, rep = run(capsys, "psucc", files["cns"], files["mixed"], "--adaptive")
    assert code == EXIT_OK and rep["p_adapt"] is None and "A-before-B" in rep["adaptive_error"]


def test_psucc_errors(files, capsys):
    assert run(capsys, "psucc", files["cns"], files["wide"])[0] == EXIT_SEMANTIC
    assert run(capsys, "psucc", files["cns"], files["zero"])[0] == EXIT_SEMANTIC
    assert run(capsys, "psucc", files["bad"], files["cns"])[0] == EXIT_INPUT


def test_distance(files, capsys):
    out = files["dir"] / "out"
    code, rep = run(capsys, "distance", files["cns"], "--set", "sep", "--out", str(out))
    assert code == EXIT_OK
    assert rep["distance"] == pytest.approx(1 - np.sqrt(2) / 2, abs=1e-4)
    assert rep["closest_valid"]
    closest = io.read_matrix(rep["files"]["closest"])
    assert closest.real_trace() == pytest.approx(4.0, abs=1e-8)
    code, rep = run(capsys, "distance", files["mixed"], "--set", "free")
    assert code == EXIT_OK and abs(rep["distance"]) < 1e-6


def test_distance_solver_failure(files, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise SolverError("no convergence")
    monkeypatch.setattr("procdisc.cli.distance_to_class", boom)
    assert run(capsys, "distance", files["cns"], "--set", "free")[0] == EXIT_NUMERICAL


def test_basenorm(files, capsys):
    code, rep = run(capsys, "basenorm", files["cns"], files["mixed"])
    assert code == EXIT_OK and rep["base_norm"] > 0.5


def test_demo_perfect(capsys):
    code, rep = run(capsys, "demo-perfect", "--dim", "3", "--seed", "0")
    assert code == EXIT_OK
    assert rep["probability"] == pytest.approx(1.0, abs=1e-12)
    assert rep["register_supports"]["AB"] == [[0, 1], [1, 2], [2, 0]]
    assert rep["register_supports"]["BA"] == [[0, 0], [1, 1], [2, 2]]
    again = run(capsys, "demo-perfect", "--dim", "3", "--seed", "0")[1]
    assert again == rep
    assert run(capsys, "demo-perfect", "--dim", "1")[0] == EXIT_SEMANTIC


def test_demo_perfect_with_sdp(capsys):
    code, rep = run(capsys, "demo-perfect", "--dim", "2", "--seed", "0", "--sdp")
    assert rep["sdp_p_succ"] == pytest.approx(1.0, abs=1e-6)


def test_cone_report(capsys):
    code, rep = run(capsys, "cone-report", "--samples", "0")
    assert code == EXIT_OK and rep["forward"] == []
    code, rep = run(capsys, "cone-report", "--samples", "6", "--seed", "2")
    assert code == EXIT_OK and rep["max_forward_residual"] <= 1e-9
    assert run(capsys, "cone-report", "--samples", "6", "--seed", "2")[1] == rep


def test_text_output(files, capsys):
    assert main(["validate", files["cns"]]) == EXIT_OK
    assert "valid: True" in capsys.readouterr().out


def test_console_script(files):
    proc = subprocess.run([sys.executable, "-m", "procdisc.cli", "validate", files["zero"], "--json"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_SEMANTIC
    assert json.loads(proc.stdout)["valid"] is False


def test_psucc_perfect_pair(tmp_path, capsys):
    pp = random_perfect_pair(np.random.default_rng(0), 2)
    a, b = tmp_path / "ab.json", tmp_path / "ba.json"
    io.write_matrix(a, pp.w_ab.op)
    io.write_matrix(b, pp.w_ba.op)
    code, rep = run(capsys, "psucc", str(a), str(b))
    assert code == EXIT_OK and rep["p_succ"] == pytest.approx(1.0, abs=1e-6)
