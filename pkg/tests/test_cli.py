"""End-to-end command line coverage: flag parsing, file plumbing, exit codes.

Everything runs in-process through main(argv) except one subprocess smoke
test that exercises the installed entry point.
"""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from snlbcd import ConfigError, read_instance, read_solution, write_instance
from snlbcd.cli import main, parse_rho
from snlbcd.model import ProblemInstance


# --- rho parsing ------------------------------------------------------------


def test_parse_rho_literal():
    assert parse_rho("0.5", m=10) == 0.5
    assert parse_rho(" 2e-1 ", m=10) == 0.2


def test_parse_rho_sqrt_form():
    assert parse_rho("sqrt(1.2/m)", m=30) == pytest.approx(
        math.sqrt(1.2 / 30), rel=1e-15
    )
    # embedded spaces are tolerated
    assert parse_rho("sqrt( 1.2 / m )", m=30) == parse_rho("sqrt(1.2/m)", m=30)


def test_parse_rho_cbrt_form():
    assert parse_rho("cbrt(2/m)", m=16) == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("bad", ["foo", "sqrt(m/2)", "sqrt(-1/m)", "log(2/m)", ""])
def test_parse_rho_rejects_garbage(bad):
    with pytest.raises(ConfigError):
        parse_rho(bad, m=10)


# --- generate ---------------------------------------------------------------


def test_generate_with_symbolic_rho(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SNLBCD_OUT_DIR", str(tmp_path))
    code = main(
        ["generate", "--m", "20", "--n", "5", "--rho", "sqrt(1.2/m)", "--seed", "4"]
    )
    assert code == 0
    out_file = tmp_path / "instance_m20_seed4.json"
    assert out_file.exists()
    line = capsys.readouterr().out
    assert f"wrote {out_file}: m=20 n=5 dim=2" in line
    assert "ss_edges=" in line and "sa_edges=" in line

    doc = json.loads(out_file.read_text())
    assert doc["generation"]["rho_expr"] == "sqrt(1.2/m)"
    assert doc["generation"]["rho"] == pytest.approx(math.sqrt(1.2 / 20), rel=1e-15)
    assert doc["generation"]["seed"] == 4


def test_generate_with_literal_rho_stores_no_expression(tmp_path):
    out = tmp_path / "inst.json"
    code = main(
        ["generate", "--m", "8", "--n", "3", "--rho", "0.7", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["generation"]["rho_expr"] is None
    assert doc["generation"]["rho"] == 0.7


def test_generate_is_deterministic_on_disk(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["generate", "--m", "12", "--n", "4", "--rho", "0.6", "--sigma", "0.2",
            "--seed", "9"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_rejects_bad_rho(tmp_path, capsys):
    code = main(
        ["generate", "--m", "5", "--n", "2", "--rho", "banana",
         "--out", str(tmp_path / "x.json")]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_generate_warns_about_disconnected_draws(tmp_path, capsys):
    out = tmp_path / "sparse.json"
    code = main(
        ["generate", "--m", "6", "--n", "2", "--rho", "1e-6", "--out", str(out)]
    )
    assert code == 0  # generation succeeds; solving it later is what fails
    assert "DISCONNECTED (resample advised)" in capsys.readouterr().out


# --- solve ------------------------------------------------------------------


def _gen(tmp_path, name="inst.json", m=15, n=4, rho="0.6", sigma="0.1", seed="3"):
    out = tmp_path / name
    code = main(
        ["generate", "--m", str(m), "--n", str(n), "--rho", rho,
         "--sigma", sigma, "--seed", seed, "--out", str(out)]
    )
    assert code == 0
    return out


def test_generate_then_solve_chain(tmp_path, capsys):
    inst = _gen(tmp_path)
    sol = tmp_path / "out.json"
    code = main(["solve", "--instance", str(inst), "--out", str(sol)])
    assert code == 0
    line = capsys.readouterr().out.splitlines()[-1]
    assert line.startswith("misfit=")
    assert "rmsd=" in line and "sweeps=" in line and "termination=" in line
    assert f"-> {sol}" in line

    data = read_solution(sol)
    assert data.report.termination == "converged"
    assert data.report.rmsd is not None and data.report.rmsd < 0.2
    assert data.instance_path == str(inst)


def test_solve_default_output_name(tmp_path, monkeypatch, capsys):
    inst = _gen(tmp_path, name="walk.json")
    monkeypatch.setenv("SNLBCD_OUT_DIR", str(tmp_path))
    assert main(["solve", "--instance", str(inst)]) == 0
    assert (tmp_path / "walk_solution.json").exists()


def test_solve_is_deterministic_modulo_wall_time(tmp_path):
    inst = _gen(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["solve", "--instance", str(inst), "--out", str(a)]) == 0
    assert main(["solve", "--instance", str(inst), "--out", str(b)]) == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da["report"]["wall_time_s"] = db["report"]["wall_time_s"] = 0.0
    assert da == db


def test_solve_fixed_gamma_flags(tmp_path, capsys):
    inst = _gen(tmp_path)
    sol = tmp_path / "fixed.json"
    code = main(
        ["solve", "--instance", str(inst), "--gamma-mode", "fixed",
         "--gamma", "0.25", "--out", str(sol)]
    )
    assert code == 0
    assert read_solution(sol).report.gamma_final == 0.25


def test_solve_rejects_non_numeric_gamma(tmp_path, capsys):
    inst = _gen(tmp_path)
    code = main(
        ["solve", "--instance", str(inst), "--gamma-mode", "fixed",
         "--gamma", "abc", "--out", str(tmp_path / "x.json")]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_solve_interior_init(tmp_path):
    inst = _gen(tmp_path)
    sol = tmp_path / "interior.json"
    code = main(
        ["solve", "--instance", str(inst), "--init", "interior",
         "--seed", "1", "--out", str(sol)]
    )
    assert code == 0
    assert read_solution(sol).report.termination == "converged"


def test_solve_init_file_requires_path(tmp_path, capsys):
    inst = _gen(tmp_path)
    code = main(
        ["solve", "--instance", str(inst), "--init", "file",
         "--out", str(tmp_path / "x.json")]
    )
    assert code == 2
    assert "--init-file" in capsys.readouterr().err


def test_solve_can_warm_start_from_a_solution(tmp_path):
    inst = _gen(tmp_path)
    first = tmp_path / "first.json"
    assert main(["solve", "--instance", str(inst), "--out", str(first)]) == 0
    second = tmp_path / "second.json"
    code = main(
        ["solve", "--instance", str(inst), "--init", "file",
         "--init-file", str(first), "--out", str(second)]
    )
    assert code == 0
    a, b = read_solution(first), read_solution(second)
    assert b.report.misfit_final <= a.report.misfit_final * (1 + 1e-9)


def test_solve_init_file_shape_mismatch(tmp_path, capsys):
    inst = _gen(tmp_path)
    other = _gen(tmp_path, name="other.json", m=7)
    sol = tmp_path / "other_sol.json"
    assert main(["solve", "--instance", str(other), "--out", str(sol)]) == 0
    code = main(
        ["solve", "--instance", str(inst), "--init", "file",
         "--init-file", str(sol), "--out", str(tmp_path / "x.json")]
    )
    assert code == 3


def test_solve_missing_instance_file(tmp_path, capsys):
    code = main(["solve", "--instance", str(tmp_path / "ghost.json")])
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_solve_corrupted_instance_file(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"format": "snl-instance", "version": 1,,,')
    assert main(["solve", "--instance", str(p)]) == 3


def test_solve_disconnected_instance_exits_4(tmp_path, capsys):
    inst = ProblemInstance.from_edges(
        dim=2,
        num_sensors=2,
        anchors=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        ss_edges=[],
        sa_edges=[(0, 0, 1.0), (0, 1, 1.0)],  # sensor 1 is unreachable
    )
    p = tmp_path / "island.json"
    write_instance(inst, p)
    sol = tmp_path / "island_solution.json"
    code = main(["solve", "--instance", str(p), "--out", str(sol)])
    assert code == 4
    assert not sol.exists()
    assert "error:" in capsys.readouterr().err


# --- bench ------------------------------------------------------------------


def test_bench_writes_csv_grid(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(
        json.dumps(
            [
                {"m": 6, "n": 3, "rho": 0.8, "sigma": 0.1, "seed": 2},
                {"m": 6, "n": 3, "rho": "sqrt(3.84/m)", "sigma": 0.0, "seed": 2},
            ]
        )
    )
    out = tmp_path / "bench.csv"
    code = main(["bench", "--grid", str(grid), "--reps", "1", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "m,n,dim,rho,sigma,reps,mean_cpu_s,mean_rmsd,failures"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "6" and first[5] == "1" and first[-1] == "0"
    # symbolic rho resolves to the same range as the literal row
    assert float(lines[2].split(",")[3]) == pytest.approx(0.8, rel=1e-15)
    printed = capsys.readouterr().out
    assert printed.count("mean_rmsd=") == 2
    assert f"wrote {out}" in printed


def test_bench_rejects_malformed_grid(tmp_path, capsys):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"m": 6}))
    assert main(["bench", "--grid", str(grid), "--out",
                 str(tmp_path / "b.csv")]) == 3


# --- eval -------------------------------------------------------------------


def test_eval_reports_scores(tmp_path, capsys):
    inst = _gen(tmp_path)
    sol = tmp_path / "sol.json"
    assert main(["solve", "--instance", str(inst), "--out", str(sol)]) == 0
    capsys.readouterr()
    code = main(["eval", "--solution", str(sol), "--instance", str(inst)])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("rmsd=")
    assert "stored_rmsd=" in line and "max_abs_residual=" in line
    # the freshly computed score matches what the solver stored
    score = float(line.split()[0].split("=")[1])
    assert score == pytest.approx(read_solution(sol).report.rmsd, rel=1e-6)


def test_eval_requires_truth(tmp_path, capsys):
    inst_path = _gen(tmp_path)
    sol = tmp_path / "sol.json"
    assert main(["solve", "--instance", str(inst_path), "--out", str(sol)]) == 0
    stripped = tmp_path / "naked.json"
    write_instance(read_instance(inst_path).without_truth(), stripped)
    assert main(["eval", "--solution", str(sol), "--instance", str(stripped)]) == 3


def test_eval_shape_mismatch(tmp_path):
    inst = _gen(tmp_path)
    other = _gen(tmp_path, name="other.json", m=7)
    sol = tmp_path / "sol.json"
    assert main(["solve", "--instance", str(other), "--out", str(sol)]) == 0
    assert main(["eval", "--solution", str(sol), "--instance", str(inst)]) == 3


# --- entry point ------------------------------------------------------------


def test_module_entry_point_smoke(tmp_path):
    out = tmp_path / "inst.json"
    proc = subprocess.run(
        [sys.executable, "-m", "snlbcd", "generate", "--m", "5", "--n", "3",
         "--rho", "0.8", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert "wrote" in proc.stdout
