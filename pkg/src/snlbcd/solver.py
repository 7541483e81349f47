"""Block coordinate descent over the two-factor split.

One sweep updates every u column in ascending sensor order with V fixed, then
every v column with the new U fixed.  Each column subproblem is a strongly
convex quadratic whose unique minimizer solves a d x d positive definite
system: for sensor i with sensor neighbors j and anchor neighbors k,

    A = gamma*I + sum_j (v_i - v_j)(v_i - v_j)^T + sum_k (v_i - a_k)(v_i - a_k)^T
    b = gamma*v_i + sum_j (u_j^T (v_i - v_j) + d_ij^2)(v_i - v_j)
               + sum_k (a_k^T (v_i - a_k) + d_ik^2)(v_i - a_k)

gives the new u_i = A^{-1} b (solved by Cholesky factorization, never by an
explicit inverse); the v update swaps the roles of U and V.  Updates within a
sweep are immediately visible (Gauss-Seidel).  The run stops when

    max( 2||U - V||_F / (||U||_F + ||V||_F),
         ||U - U_prev||_F / ||U_prev||_F,
         ||V - V_prev||_F / ||V_prev||_F ) < epsilon

or after max_sweeps sweeps.  The penalty weight is either fixed for the whole
run or driven by the dynamic schedule (exploration, one restart, fixed tail).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernels
from .errors import (
    ConfigError,
    DegenerateScheduleError,
    DisconnectedInstanceError,
    DivergenceError,
)
from .model import (
    FactorPair,
    NeighborTable,
    ProblemInstance,
    build_neighbor_table,
    check_connectivity,
    misfit,
    penalized_objective,
)
from .schedule import (
    ScheduleConfig,
    gamma_threshold,
    init_schedule,
    next_gamma,
    restart,
    should_restart,
)

__all__ = [
    "SolverConfig",
    "SweepOutcome",
    "SolveTrace",
    "SolveResult",
    "solve_u_column",
    "solve_v_column",
    "sweep",
    "stop_components",
    "stop_stat",
    "solve",
    "gamma_threshold",
]

TERMINATION_CONVERGED = "converged"
TERMINATION_SWEEP_CAP = "sweep_cap"
TERMINATION_DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SolverConfig:
    """Solve parameters.

    gamma_mode "fixed" runs one constant weight: the given gamma, or, when
    gamma is None, the agreement threshold at the initial point times
    gamma_scale.  gamma_mode "scheduled" runs the dynamic schedule and ignores
    gamma/gamma_scale.
    """

    epsilon: float = 1e-5
    max_sweeps: int = 10_000
    gamma_mode: str = "scheduled"
    gamma: float | None = None
    gamma_scale: float = 1.0
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)

    def __post_init__(self) -> None:
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not isinstance(self.max_sweeps, int) or self.max_sweeps < 1:
            raise ConfigError(f"max_sweeps must be an int >= 1, got {self.max_sweeps}")
        if self.gamma_mode not in ("fixed", "scheduled"):
            raise ConfigError(f"unknown gamma_mode {self.gamma_mode!r}")
        if self.gamma is not None:
            if self.gamma_mode != "fixed":
                raise ConfigError("an explicit gamma requires gamma_mode='fixed'")
            if not (self.gamma > 0 and math.isfinite(self.gamma)):
                raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if not (self.gamma_scale > 0 and math.isfinite(self.gamma_scale)):
            raise ConfigError(f"gamma_scale must be > 0, got {self.gamma_scale}")


@dataclass
class SweepOutcome:
    """Result of one full sweep."""

    factors: FactorPair
    misfit_value: float
    objective_value: float
    stop_stat: float
    factor_gap: float
    u_change: float
    v_change: float


@dataclass
class SolveTrace:
    """Per-sweep history (parallel arrays, one entry per completed sweep)."""

    sweep: np.ndarray
    gamma: np.ndarray
    misfit: np.ndarray
    objective: np.ndarray
    factor_gap: np.ndarray
    u_change: np.ndarray
    v_change: np.ndarray
    stop_stat: np.ndarray

    COLUMNS = (
        "sweep",
        "gamma",
        "misfit",
        "objective",
        "factor_gap",
        "u_change",
        "v_change",
        "stop_stat",
    )

    def __len__(self) -> int:
        return int(self.sweep.shape[0])

    def rows(self) -> list[list[float]]:
        cols = [getattr(self, name) for name in self.COLUMNS]
        return [[col[t].item() for col in cols] for t in range(len(self))]


@dataclass
class SolveResult:
    """Final factors plus run metadata."""

    factors: FactorPair
    trace: SolveTrace
    termination: str
    sweeps: int
    wall_time_s: float
    gamma_final: float
    misfit_final: float
    objective_final: float

    def positions(self) -> np.ndarray:
        return self.factors.positions()


class _TraceBuilder:
    def __init__(self) -> None:
        self.rows: list[tuple] = []

    def add(self, sweep_no: int, gamma: float, outcome: SweepOutcome) -> None:
        self.rows.append(
            (
                sweep_no,
                gamma,
                outcome.misfit_value,
                outcome.objective_value,
                outcome.factor_gap,
                outcome.u_change,
                outcome.v_change,
                outcome.stop_stat,
            )
        )

    def build(self) -> SolveTrace:
        cols = list(zip(*self.rows)) if self.rows else [[]] * 8
        return SolveTrace(
            sweep=np.asarray(cols[0], dtype=np.int64),
            gamma=np.asarray(cols[1], dtype=np.float64),
            misfit=np.asarray(cols[2], dtype=np.float64),
            objective=np.asarray(cols[3], dtype=np.float64),
            factor_gap=np.asarray(cols[4], dtype=np.float64),
            u_change=np.asarray(cols[5], dtype=np.float64),
            v_change=np.asarray(cols[6], dtype=np.float64),
            stop_stat=np.asarray(cols[7], dtype=np.float64),
        )


def _column_system(
    instance: ProblemInstance,
    table: NeighborTable,
    i: int,
    live: np.ndarray,
    fixed: np.ndarray,
    gamma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Normal system (A, b) of the column subproblem for sensor i.

    `fixed` is the factor the quadratic is built from (V for a u update) and
    `live` the factor being updated (U for a u update, supplying the coupling
    terms of already-updated columns).
    """
    d = instance.dim
    A = gamma * np.eye(d)
    b = gamma * fixed[:, i].copy()
    nbrs, dists = table.ss_neighbors(i)
    if len(nbrs):
        W = fixed[:, [i]] - fixed[:, nbrs]
        A += W @ W.T
        coef = np.einsum("dk,dk->k", live[:, nbrs], W) + dists**2
        b += W @ coef
    aks, adists = table.sa_neighbors(i)
    if len(aks):
        Ak = instance.anchors[aks].T
        W = fixed[:, [i]] - Ak
        A += W @ W.T
        coef = np.einsum("dk,dk->k", Ak, W) + adists**2
        b += W @ coef
    return A, b


def solve_u_column(
    instance: ProblemInstance,
    i: int,
    U: np.ndarray,
    V: np.ndarray,
    gamma: float,
    table: NeighborTable | None = None,
) -> np.ndarray:
    """Exact minimizer of the penalized objective over column i of U."""
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    if table is None:
        table = build_neighbor_table(instance)
    A, b = _column_system(instance, table, i, live=U, fixed=V, gamma=gamma)
    return cho_solve(cho_factor(A, lower=True), b)


def solve_v_column(
    instance: ProblemInstance,
    i: int,
    U: np.ndarray,
    V: np.ndarray,
    gamma: float,
    table: NeighborTable | None = None,
) -> np.ndarray:
    """Exact minimizer of the penalized objective over column i of V."""
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    if table is None:
        table = build_neighbor_table(instance)
    A, b = _column_system(instance, table, i, live=V, fixed=U, gamma=gamma)
    return cho_solve(cho_factor(A, lower=True), b)


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / den


def stop_components(prev: FactorPair, cur: FactorPair) -> tuple[float, float, float]:
    """(factor gap, relative U change, relative V change) between two sweeps."""
    gap = _ratio(
        2.0 * float(np.linalg.norm(cur.U - cur.V)),
        float(np.linalg.norm(cur.U)) + float(np.linalg.norm(cur.V)),
    )
    du = _ratio(
        float(np.linalg.norm(cur.U - prev.U)), float(np.linalg.norm(prev.U))
    )
    dv = _ratio(
        float(np.linalg.norm(cur.V - prev.V)), float(np.linalg.norm(prev.V))
    )
    return gap, du, dv


def stop_stat(prev: FactorPair, cur: FactorPair) -> float:
    """Stopping statistic: max of the three relative-change components."""
    return max(stop_components(prev, cur))


def sweep(
    instance: ProblemInstance,
    factors: FactorPair,
    gamma: float,
    table: NeighborTable | None = None,
) -> SweepOutcome:
    """One full Gauss-Seidel sweep (all u columns, then all v columns).

    The input factors are not modified; the outcome carries the updated pair,
    the misfit and penalized objective at the new point, and the stopping
    statistic measured against the pre-sweep factors.
    """
    if not (gamma > 0 and math.isfinite(gamma)):
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    if factors.U.shape != (instance.dim, instance.num_sensors):
        raise ConfigError(
            f"factors have shape {factors.U.shape}, expected "
            f"{(instance.dim, instance.num_sensors)}"
        )
    if table is None:
        table = build_neighbor_table(instance)
    Ut = np.ascontiguousarray(factors.U.T)
    Vt = np.ascontiguousarray(factors.V.T)
    try:
        _kernels.gauss_seidel_sweep(
            Ut,
            Vt,
            instance.anchors,
            table.ss_indptr,
            table.ss_index,
            table.ss_dist**2,
            table.sa_indptr,
            table.sa_index,
            table.sa_dist**2,
            float(gamma),
        )
    except FloatingPointError as exc:
        raise DivergenceError(str(exc)) from exc
    if not (np.all(np.isfinite(Ut)) and np.all(np.isfinite(Vt))):
        raise DivergenceError("non-finite factor values after sweep")
    new = FactorPair(Ut.T, Vt.T)
    gap, du, dv = stop_components(factors, new)
    f_val = misfit(instance, new.U, new.V)
    return SweepOutcome(
        factors=new,
        misfit_value=f_val,
        objective_value=penalized_objective(instance, new.U, new.V, gamma),
        stop_stat=max(gap, du, dv),
        factor_gap=gap,
        u_change=du,
        v_change=dv,
    )


def _run_fixed(
    instance: ProblemInstance,
    table: NeighborTable,
    factors: FactorPair,
    gamma: float,
    config: SolverConfig,
    tb: _TraceBuilder,
    start: int,
) -> tuple[FactorPair, str, int]:
    """Iterate at constant gamma until the stopping statistic or the cap."""
    count = start
    termination = TERMINATION_SWEEP_CAP
    while count < config.max_sweeps:
        outcome = sweep(instance, factors, gamma, table)
        count += 1
        tb.add(count, gamma, outcome)
        factors = outcome.factors
        if outcome.stop_stat < config.epsilon:
            termination = TERMINATION_CONVERGED
            break
    return factors, termination, count


def solve(
    instance: ProblemInstance,
    initial: FactorPair,
    config: SolverConfig | None = None,
) -> SolveResult:
    """Run block coordinate descent from the given initial factors.

    Connectivity is checked first: an instance where some sensor cannot reach
    any anchor raises DisconnectedInstanceError.  The returned result carries
    the final factors, the per-sweep trace, and the termination reason
    ("converged", "sweep_cap", or "degenerate" when a zero-misfit fallback
    weight was used).
    """
    config = config or SolverConfig()
    inst = instance.without_truth()
    table = build_neighbor_table(inst)
    if not check_connectivity(inst, table):
        raise DisconnectedInstanceError(
            "instance violates the anchor-connectivity assumption: every sensor "
            "must reach some anchor directly or through other sensors"
        )
    if initial.U.shape != (inst.dim, inst.num_sensors):
        raise ConfigError(
            f"initial factors have shape {initial.U.shape}, expected "
            f"{(inst.dim, inst.num_sensors)}"
        )
    if not (np.all(np.isfinite(initial.U)) and np.all(np.isfinite(initial.V))):
        raise ConfigError("initial factors must be finite")

    t0 = time.perf_counter()
    tb = _TraceBuilder()
    factors = initial.copy()
    sweeps_done = 0
    degenerate = False
    termination = TERMINATION_SWEEP_CAP

    if config.gamma_mode == "fixed":
        if config.gamma is not None:
            gamma_final = float(config.gamma)
        else:
            gamma_final = config.gamma_scale * gamma_threshold(
                inst, factors.U, factors.V, table
            )
            if gamma_final == 0.0:
                gamma_final = 1.0
                degenerate = True
        factors, termination, sweeps_done = _run_fixed(
            inst, table, factors, gamma_final, config, tb, sweeps_done
        )
    else:
        try:
            state, gamma0, gamma1 = init_schedule(
                inst, factors, config.schedule, table
            )
        except DegenerateScheduleError:
            state = None
            gamma_final = 1.0
            degenerate = True
            factors, termination, sweeps_done = _run_fixed(
                inst, table, factors, gamma_final, config, tb, sweeps_done
            )
        if state is not None:
            gamma_final = gamma0
            for g in (gamma0, gamma1):
                if sweeps_done >= config.max_sweeps:
                    break
                outcome = sweep(inst, factors, g, table)
                sweeps_done += 1
                tb.add(sweeps_done, g, outcome)
                factors = outcome.factors
                state.push(g, outcome.misfit_value)
                gamma_final = g
            restart_point: FactorPair | None = None
            if len(state.misfits) >= 3:
                while sweeps_done < config.max_sweeps:
                    g = next_gamma(state)
                    pre_sweep = factors
                    outcome = sweep(inst, factors, g, table)
                    sweeps_done += 1
                    tb.add(sweeps_done, g, outcome)
                    factors = outcome.factors
                    state.push(g, outcome.misfit_value)
                    gamma_final = g
                    if should_restart(state, outcome.stop_stat, config.epsilon):
                        restart_point = pre_sweep
                        break
            if restart_point is not None:
                state.phase = "restarted"
                factors, gamma_fix, floored = restart(inst, restart_point, table)
                degenerate = degenerate or floored
                gamma_final = gamma_fix
                factors, termination, sweeps_done = _run_fixed(
                    inst, table, factors, gamma_fix, config, tb, sweeps_done
                )

    wall = time.perf_counter() - t0
    if degenerate and termination == TERMINATION_CONVERGED:
        termination = TERMINATION_DEGENERATE
    return SolveResult(
        factors=factors,
        trace=tb.build(),
        termination=termination,
        sweeps=sweeps_done,
        wall_time_s=wall,
        gamma_final=gamma_final,
        misfit_final=misfit(inst, factors.U, factors.V),
        objective_final=penalized_objective(inst, factors.U, factors.V, gamma_final),
    )
