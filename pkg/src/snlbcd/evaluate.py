"""Solution quality metrics, solve reports, and the benchmark harness."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DisconnectedInstanceError, SnlError
from .generate import GenSpec, generate, initial_point
from .model import ProblemInstance, check_connectivity
from .solver import SolveResult, SolverConfig, SolveTrace, solve

__all__ = [
    "rmsd",
    "SolutionReport",
    "make_report",
    "BenchRow",
    "run_benchmark",
    "trace_monotonicity_report",
]

logger = logging.getLogger(__name__)

# a disconnected draw is retried at seed + attempt * RESAMPLE_STRIDE
RESAMPLE_STRIDE = 100_003
MAX_RESAMPLE_ATTEMPTS = 20


def rmsd(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Root mean squared deviation sqrt(mean_i ||est_i - true_i||^2)."""
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    if est.shape != tru.shape or est.ndim != 2:
        raise ConfigError(
            f"estimates and truth must share an (m, d) shape, got "
            f"{est.shape} and {tru.shape}"
        )
    return float(np.sqrt(np.mean(np.sum((est - tru) ** 2, axis=1))))


@dataclass
class SolutionReport:
    """Summary of one solve: estimates plus the scalars worth keeping."""

    estimates: np.ndarray
    misfit_final: float
    objective_final: float
    gamma_final: float
    rmsd: float | None
    sweeps: int
    wall_time_s: float
    termination: str


def make_report(instance: ProblemInstance, result: SolveResult) -> SolutionReport:
    """Build the report for a finished solve, scoring against truth if known."""
    estimates = result.positions()
    score = rmsd(estimates, instance.truth) if instance.truth is not None else None
    return SolutionReport(
        estimates=estimates,
        misfit_final=result.misfit_final,
        objective_final=result.objective_final,
        gamma_final=result.gamma_final,
        rmsd=score,
        sweeps=result.sweeps,
        wall_time_s=result.wall_time_s,
        termination=result.termination,
    )


def trace_monotonicity_report(
    trace: SolveTrace, rel_slack: float = 1e-12
) -> tuple[bool, int | None]:
    """Check the objective never increases while gamma is constant.

    Consecutive trace rows sharing a gamma value are compared; an increase
    beyond rel_slack * max(1, previous objective) is a violation.  Returns
    (ok, first offending sweep number or None).
    """
    gammas = trace.gamma
    objs = trace.objective
    for t in range(1, len(trace)):
        if gammas[t] != gammas[t - 1]:
            continue
        allowed = rel_slack * max(1.0, abs(float(objs[t - 1])))
        if float(objs[t]) - float(objs[t - 1]) > allowed:
            return False, int(trace.sweep[t])
    return True, None


@dataclass
class BenchRow:
    """One benchmark grid cell: the spec, and means over successful runs."""

    m: int
    n: int
    dim: int
    rho: float
    sigma: float
    reps: int
    mean_cpu_s: float
    mean_rmsd: float
    failures: int


def _generate_connected(spec: GenSpec) -> ProblemInstance:
    """Generate, resampling with shifted seeds until connectivity holds."""
    instance = generate(spec)
    if check_connectivity(instance):
        return instance
    for attempt in range(1, MAX_RESAMPLE_ATTEMPTS + 1):
        retry = replace(spec, seed=spec.seed + attempt * RESAMPLE_STRIDE)
        logger.warning(
            "disconnected instance (m=%d, n=%d, rho=%g, seed=%d); "
            "resampling with seed=%d",
            spec.m, spec.n, spec.rho, spec.seed, retry.seed,
        )
        instance = generate(retry)
        if check_connectivity(instance):
            return instance
    raise DisconnectedInstanceError(
        f"no connected instance within {MAX_RESAMPLE_ATTEMPTS} resamples "
        f"of seed {spec.seed}"
    )


def run_benchmark(
    specs: list[GenSpec],
    config: SolverConfig | None = None,
    repetitions: int = 5,
) -> list[BenchRow]:
    """Solve `repetitions` fresh instances per spec and average the results.

    Repetition r of a spec uses seed spec.seed + r.  A repetition that cannot
    produce a connected instance, or whose solve raises, counts as a failure
    and is excluded from the means (nan when nothing succeeded).
    """
    if repetitions < 1:
        raise ConfigError(f"repetitions must be >= 1, got {repetitions}")
    config = config or SolverConfig()
    out: list[BenchRow] = []
    for spec in specs:
        times: list[float] = []
        scores: list[float] = []
        failures = 0
        for rep in range(repetitions):
            rep_spec = replace(spec, seed=spec.seed + rep)
            try:
                instance = _generate_connected(rep_spec)
                result = solve(instance, initial_point(instance), config)
                times.append(result.wall_time_s)
                scores.append(rmsd(result.positions(), instance.truth))
            except SnlError as exc:
                failures += 1
                logger.warning(
                    "benchmark run failed (m=%d, sigma=%g, rep=%d): %s",
                    spec.m, spec.sigma, rep, exc,
                )
        out.append(
            BenchRow(
                m=spec.m,
                n=spec.n,
                dim=spec.dim,
                rho=spec.rho,
                sigma=spec.sigma,
                reps=repetitions,
                mean_cpu_s=float(np.mean(times)) if times else math.nan,
                mean_rmsd=float(np.mean(scores)) if scores else math.nan,
                failures=failures,
            )
        )
    return out
