"""Acceptance gate: ten contract-level behaviors, one test line each.

Each test states its tolerance inline.  Numbered names keep the report
stable; the suffix says what the number guarantees.
"""

import json
import time

import numpy as np
import pytest

from conftest import (
    fd_gradient,
    make_connected,
    random_factors,
    sampled_column_minimizer,
)
from snlbcd import (
    GenSpec,
    SolverConfig,
    build_neighbor_table,
    generate,
    initial_point,
    objective_grad,
    random_interior_point,
    rmsd,
    run_benchmark,
    solve,
    solve_u_column,
    solve_v_column,
    trace_monotonicity_report,
    two_sensor_fixture,
    write_instance,
)
from snlbcd.cli import main
from snlbcd.evaluate import _generate_connected
from snlbcd.model import ProblemInstance


def test_criterion_01_fixture_localizes_from_random_interior_starts():
    inst = two_sensor_fixture()
    cfg = SolverConfig(gamma_mode="fixed", gamma=None, gamma_scale=1.0)
    t0 = time.perf_counter()
    scores = []
    for seed in range(10):
        start = random_interior_point(inst, rng=seed)
        res = solve(inst, start, cfg)
        scores.append(rmsd(res.positions(), inst.truth))
    elapsed = time.perf_counter() - t0
    assert max(scores) <= 1e-2, f"worst start missed the truth: {scores}"
    assert elapsed < 1.0, f"ten fixture solves took {elapsed:.3f}s"


def test_criterion_02_thousand_sensor_noisy_runs_stay_accurate_and_fast():
    specs = [
        GenSpec(m=1000, n=100, dim=2, rho=0.1, sigma=0.1, seed=0),
        GenSpec(m=1000, n=100, dim=2, rho=0.1, sigma=0.2, seed=0),
    ]
    rows = run_benchmark(specs, SolverConfig(), repetitions=5)
    for row in rows:
        assert row.failures == 0, f"sigma={row.sigma}: {row.failures} failed runs"
        assert row.mean_rmsd <= 1.0e-1, (
            f"sigma={row.sigma}: mean rmsd {row.mean_rmsd:.4e} > 1.0e-1"
        )
        assert row.mean_cpu_s <= 60.0, (
            f"sigma={row.sigma}: mean solve time {row.mean_cpu_s:.1f}s > 60s"
        )


def test_criterion_03_noiseless_runs_localize_and_mostly_reach_zero_misfit():
    scores = []
    misfits = []
    for rep in range(5):
        spec = GenSpec(m=1000, n=100, dim=2, rho=0.1, sigma=0.0, seed=rep)
        inst = _generate_connected(spec)
        res = solve(inst, initial_point(inst), SolverConfig())
        scores.append(rmsd(res.positions(), inst.truth))
        misfits.append(res.misfit_final)
    hits = sum(f <= 1e-6 for f in misfits)
    assert np.mean(scores) <= 1.0e-1, f"mean rmsd {np.mean(scores):.4e} > 1.0e-1"
    assert hits >= 3, (
        f"only {hits}/5 runs reached misfit <= 1e-6 "
        f"(misfits: {[f'{f:.3e}' for f in misfits]}, "
        f"rmsds: {[f'{s:.3e}' for s in scores]})"
    )


def test_criterion_04_column_updates_match_a_value_sampling_minimizer():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for idx in range(50):
        m = idx % 5 + 1
        spec = GenSpec(m=m, n=3, dim=2, rho=0.9, sigma=0.25, seed=500 + idx)
        instance = generate(spec)
        gamma = float(10.0 ** rng.uniform(-3, 1))
        fac = random_factors(instance, rng, spread=1.2)
        table = build_neighbor_table(instance)
        for i in range(m):
            got_u = solve_u_column(instance, i, fac.U, fac.V, gamma, table)
            ref_u = sampled_column_minimizer(instance, i, fac.U, fac.V, gamma, "u")
            got_v = solve_v_column(instance, i, fac.U, fac.V, gamma, table)
            ref_v = sampled_column_minimizer(instance, i, fac.U, fac.V, gamma, "v")
            worst = max(
                worst,
                float(np.max(np.abs(got_u - ref_u))),
                float(np.max(np.abs(got_v - ref_v))),
            )
    assert worst <= 1e-8, f"worst column deviation {worst:.3e} > 1e-8"


def test_criterion_05_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(31337)
    worst = 0.0
    for idx in range(20):
        m = int(rng.integers(3, 11))
        instance = make_connected(m=m, n=4, rho=0.8, sigma=0.2, seed=900 + idx)
        gamma = float(10.0 ** rng.uniform(-2, 1))
        fac = random_factors(instance, rng, spread=1.5)
        GU, GV = objective_grad(instance, fac.U, fac.V, gamma)
        FU, FV = fd_gradient(instance, fac.U, fac.V, gamma, h=1e-6)
        num = np.sqrt(np.sum((FU - GU) ** 2) + np.sum((FV - GV) ** 2))
        den = np.sqrt(np.sum(GU**2) + np.sum(GV**2))
        worst = max(worst, float(num / den))
    assert worst <= 1e-5, f"worst relative gradient error {worst:.3e} > 1e-5"


def test_criterion_06_fixed_weight_sweeps_never_increase_the_objective():
    runs = []
    fixture = two_sensor_fixture()
    runs.append((fixture, SolverConfig(gamma_mode="fixed", gamma=1.0)))
    for idx in range(10):
        inst = make_connected(m=20 + 5 * idx, n=5, rho=0.5, sigma=0.1, seed=40 + idx)
        scale = (1.0, 1.01, 2.0)[idx % 3]
        runs.append((inst, SolverConfig(gamma_mode="fixed", gamma_scale=scale)))
    for inst, cfg in runs:
        res = solve(inst, initial_point(inst), cfg)
        ok, where = trace_monotonicity_report(res.trace, rel_slack=1e-12)
        assert ok, f"objective increased at sweep {where} (m={inst.num_sensors})"


@pytest.fixture(scope="module")
def twenty_equal_start_runs():
    """Twenty desk-scale solves with U = V starts and a weight just above the
    agreement threshold; shared by the factor-gap and stationarity checks.

    The family is the constant-average-degree scaling rho = sqrt(2/m) with a
    ten percent anchor fraction, the same shape as the large benchmark grid.
    """
    rng = np.random.default_rng(7)
    cfg = SolverConfig(gamma_mode="fixed", gamma=None, gamma_scale=1.01)
    out = []
    for idx in range(20):
        m = int(rng.integers(20, 101))
        n = max(4, m // 10)
        rho = float(np.sqrt(2.0 / m))
        instance = make_connected(m=m, n=n, rho=rho, sigma=0.1, seed=1000 + idx)
        result = solve(instance, initial_point(instance), cfg)
        out.append((instance, result))
    return out


def test_criterion_07_agreement_weight_closes_the_factor_gap(
    twenty_equal_start_runs,
):
    for instance, res in twenty_equal_start_runs:
        assert res.termination == "converged", (
            f"m={instance.num_sensors}: terminated by {res.termination}"
        )
        U, V = res.factors.U, res.factors.V
        gap = 2.0 * np.linalg.norm(U - V) / (
            np.linalg.norm(U) + np.linalg.norm(V)
        )
        assert gap < 1e-5, f"m={instance.num_sensors}: factor gap {gap:.3e}"


def test_criterion_08_terminal_iterates_are_near_stationary(
    twenty_equal_start_runs,
):
    for instance, res in twenty_equal_start_runs:
        U, V = res.factors.U, res.factors.V
        GU, GV = objective_grad(instance, U, V, res.gamma_final)
        gnorm = np.sqrt(np.sum(GU**2) + np.sum(GV**2))
        xnorm = np.sqrt(np.sum(U**2) + np.sum(V**2))
        ratio = gnorm / (1.0 + xnorm)
        assert ratio <= 1e-4, (
            f"m={instance.num_sensors}: scaled gradient norm {ratio:.3e}"
        )


def test_criterion_09_cli_runs_are_reproducible(tmp_path):
    gen = ["generate", "--m", "30", "--n", "6", "--rho", "0.45",
           "--sigma", "0.1", "--seed", "12"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(gen + ["--out", str(a)]) == 0
    assert main(gen + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes(), "instance files differ"

    sa, sb = tmp_path / "sa.json", tmp_path / "sb.json"
    assert main(["solve", "--instance", str(a), "--out", str(sa)]) == 0
    assert main(["solve", "--instance", str(a), "--out", str(sb)]) == 0
    ea = json.loads(sa.read_text())["estimates"]
    eb = json.loads(sb.read_text())["estimates"]
    assert ea == eb, "solve produced different estimates on identical input"


def test_criterion_10_disconnected_instances_are_rejected_before_solving(
    tmp_path, capsys
):
    island = ProblemInstance.from_edges(
        dim=2,
        num_sensors=3,
        anchors=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        ss_edges=[(0, 1, 0.5)],
        sa_edges=[(0, 0, 1.0), (1, 1, 1.0)],  # sensor 2 reaches nothing
    )
    p = tmp_path / "island.json"
    write_instance(island, p)
    out = tmp_path / "island_solution.json"
    code = main(["solve", "--instance", str(p), "--out", str(out)])
    assert code == 4, f"expected the connectivity exit code 4, got {code}"
    assert not out.exists(), "a solution file was written for a rejected instance"
    assert "error:" in capsys.readouterr().err
