import json

import numpy as np
import pytest

from cproots import cli, fixtures
from cproots.cli import main, read_matrix, write_matrix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def write_map(path, cmap):
    write_matrix(path, cmap.superop)
    return str(path)


def test_matrix_file_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    path = tmp_path / "m.json"
    write_matrix(path, m)
    back = read_matrix(str(path))
    assert np.array_equal(back, m)  # repr-based floats round-trip exactly


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rows": 2, "cols": 2,\n  "data": [[1, 0], [0, 0]\n}')
    code = main(["check-cp", "--map", str(bad)])
    out = json.loads(capsys.readouterr().out)
    assert code == 1
    assert "line" in out["error"] and "column" in out["error"]


def test_check_cp_accepts_and_rejects(tmp_path, capsys):
    good = write_map(tmp_path / "half.json", fixtures.offdiag_scale())
    code, report = run(capsys, "check-cp", "--map", good)
    assert code == 0
    assert report["cp"] and report["unital"] and not report["idempotent"]

    transpose = np.zeros((4, 4), dtype=complex)
    transpose[0, 0] = transpose[3, 3] = 1.0
    transpose[1, 2] = transpose[2, 1] = 1.0
    path = tmp_path / "transpose.json"
    write_matrix(path, transpose)
    code, report = run(capsys, "check-cp", "--map", str(path))
    assert code == 2
    assert report["choi_min_eig"] == pytest.approx(-1.0, abs=1e-9)


def test_support_command(tmp_path, capsys):
    from cproots import cpmap

    state = cpmap.make_state(np.diag([0.5, 0.5, 0.0]).astype(complex))
    path = write_map(tmp_path / "state.json", cpmap.state_map(state))
    code, report = run(capsys, "--out", str(tmp_path / "art"), "support", "--map", path)
    assert code == 0
    assert report["rank"] == 2
    proj = read_matrix(report["artifacts"]["projection"])
    assert np.allclose(proj, np.diag([1.0, 1.0, 0.0]))


def test_root_state_command(tmp_path, capsys):
    rho = tmp_path / "rho.json"
    write_matrix(rho, np.diag([0.5, 0.5]).astype(complex))
    code, report = run(
        capsys, "--out", str(tmp_path / "art"), "root", "state", "--density", str(rho), "--n", "3"
    )
    assert code == 0
    assert report["certificate"]["verdict"] == "accepted"
    tau = read_matrix(report["artifacts"]["tau_superop"])
    assert tau.shape == (4, 4)

    code, report = run(capsys, "root", "state", "--density", str(rho), "--n", "4")
    assert code == 2


def test_root_stochastic_inline(capsys):
    code, report = run(capsys, "root", "stochastic", "--p", "(1/2,1/3,1/6)", "--n", "2")
    assert code == 0
    assert report["certificate"]["verdict"] == "accepted"

    code, report = run(capsys, "root", "stochastic", "--p", "(1/2,1/2)", "--n", "2")
    assert code == 2


def test_verify_root_command(tmp_path, capsys):
    half = write_map(tmp_path / "half.json", fixtures.offdiag_scale())
    root = write_map(tmp_path / "root.json", fixtures.offdiag_scale_root(2))
    code, report = run(capsys, "verify-root", "--tau", root, "--phi", half, "--n", "2")
    assert code == 0

    code, report = run(capsys, "verify-root", "--tau", half, "--phi", half, "--n", "2")
    assert code == 2
    assert "properness margin" in report["reason"] and "k=1" in report["reason"]


def test_asymptotic_command(tmp_path, capsys):
    restrict = write_map(tmp_path / "restrict.json", fixtures.diag_restrict())
    code, report = run(capsys, "--out", str(tmp_path / "art"), "asymptotic", "--map", restrict)
    assert code == 0
    assert report["ccp"]
    assert max(report["rate_residuals"].values()) < 1e-9
    gen = read_matrix(report["artifacts"]["generator"])
    assert np.allclose(gen, np.diag([0.0, -1.0, -1.0, 0.0]))

    half = write_map(tmp_path / "half.json", fixtures.offdiag_scale())
    code, report = run(capsys, "asymptotic", "--map", half)
    assert code == 2


def test_continuous_command(tmp_path, capsys):
    half = write_map(tmp_path / "half.json", fixtures.offdiag_scale())
    code, report = run(capsys, "continuous", "--map", half)
    assert code == 0
    ev = sorted(z[0] for z in report["generator_eigenvalues"])
    assert ev == pytest.approx([-np.log(2), -np.log(2), 0.0, 0.0], abs=1e-9)

    flip = write_map(tmp_path / "flip.json", fixtures.flip_scale())
    code, report = run(capsys, "continuous", "--map", flip)
    assert code == 2
    assert report["reason"] == "no_principal_branch"
    assert report["heuristic"] is True


def test_shift_demo_command(capsys):
    code, report = run(capsys, "shift-demo", "--m", "8")
    assert code == 0
    assert report["tau_1_equals_phi_residual"] <= 1e-14
    assert report["semigroup_law_max_residual"] <= 1e-12


def test_search_command_inconclusive(tmp_path, capsys):
    swap = write_map(tmp_path / "swap.json", fixtures.diag_swap())
    code, report = run(
        capsys, "root", "search", "--map", swap, "--n", "2", "--restarts", "2", "--seed", "0"
    )
    assert code == 3
    assert report["verdict"] == "inconclusive"


def test_report_determinism(tmp_path, capsys):
    rho = tmp_path / "rho.json"
    write_matrix(rho, np.diag([0.5, 0.5]).astype(complex))
    argv = ["root", "state", "--density", str(rho), "--n", "2", "--seed", "7"]
    code1 = main(argv)
    out1 = capsys.readouterr().out
    code2 = main(argv)
    out2 = capsys.readouterr().out
    assert code1 == code2 == 0
    assert out1 == out2


def test_fixtures_command_is_seed_stable(capsys):
    argv = ["fixtures", "--restarts", "3", "--seed", "1"]
    code1 = main(argv)
    out1 = capsys.readouterr().out
    code2 = main(argv)
    out2 = capsys.readouterr().out
    assert code1 == code2 == 0
    assert out1 == out2
    report = json.loads(out1)
    assert all(row["status"] == "pass" for row in report["table"])
