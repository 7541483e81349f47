"""Penalty weight management: agreement threshold, warm-start schedule, restart.

The penalized objective couples the factors via gamma/2 * ||U - V||_F^2.  A
large enough gamma forces U = V at every stationary point; the critical value
depends on the objective level and the degree profile:

    threshold(U, V) = 1/2 * sqrt(2 * misfit(U, V)) * max_i sqrt(4*|ss_i| + |sa_i|)

The dynamic schedule starts far below the threshold (warm exploration), halves
once, then extrapolates or backtracks depending on whether the relative misfit
decrease improved, until progress plateaus.  At that point the run restarts
once from the averaged factors W = (U + V)/2 with the fixed weight
threshold(W, W) and iterates to convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateScheduleError
from .model import (
    FactorPair,
    NeighborTable,
    ProblemInstance,
    build_neighbor_table,
    misfit,
)

__all__ = [
    "ScheduleConfig",
    "ScheduleState",
    "gamma_threshold",
    "init_schedule",
    "next_gamma",
    "should_restart",
    "restart",
]


def gamma_threshold(
    instance: ProblemInstance,
    U: np.ndarray,
    V: np.ndarray,
    table: NeighborTable | None = None,
) -> float:
    """Agreement threshold 1/2 * sqrt(2*misfit) * max_i sqrt(4|ss_i| + |sa_i|).

    Zero when the misfit is zero or no sensor has any edge.
    """
    if table is None:
        table = build_neighbor_table(instance)
    degree_term = float(np.sqrt(4 * table.ss_degrees + table.sa_degrees).max())
    return 0.5 * math.sqrt(2.0 * misfit(instance, U, V)) * degree_term


@dataclass(frozen=True)
class ScheduleConfig:
    """Constants of the dynamic schedule.

    warm_factor scales the threshold down for the first exploratory weight,
    plateau_tol is the relative misfit change under which the run restarts,
    and gamma_floor_rel floors exploratory weights at that fraction of the
    initial weight.
    """

    warm_factor: float = 5e-3
    plateau_tol: float = 1e-2
    gamma_floor_rel: float = 1e-12

    def __post_init__(self) -> None:
        if not (self.warm_factor > 0 and math.isfinite(self.warm_factor)):
            raise ConfigError(f"warm_factor must be > 0, got {self.warm_factor}")
        if not (self.plateau_tol > 0 and math.isfinite(self.plateau_tol)):
            raise ConfigError(f"plateau_tol must be > 0, got {self.plateau_tol}")
        if not (self.gamma_floor_rel >= 0 and math.isfinite(self.gamma_floor_rel)):
            raise ConfigError(
                f"gamma_floor_rel must be >= 0, got {self.gamma_floor_rel}"
            )


@dataclass
class ScheduleState:
    """Mutable exploration state: last two weights and the misfit history."""

    gamma_floor: float
    plateau_tol: float
    gamma_prev: float = math.nan
    gamma_prev2: float = math.nan
    misfits: list[float] = field(default_factory=list)
    phase: str = "exploratory"

    def push(self, gamma_used: float, misfit_value: float) -> None:
        """Record one completed sweep (its weight and resulting misfit)."""
        self.gamma_prev2 = self.gamma_prev
        self.gamma_prev = gamma_used
        self.misfits.append(misfit_value)


def init_schedule(
    instance: ProblemInstance,
    initial: FactorPair,
    config: ScheduleConfig | None = None,
    table: NeighborTable | None = None,
) -> tuple[ScheduleState, float, float]:
    """Prime the schedule at the initial factors.

    Returns (state, gamma0, gamma1) where gamma0 = warm_factor * threshold and
    gamma1 = gamma0 / 2 are the weights for the first two sweeps; the caller
    pushes each sweep's outcome into the state.  Raises
    DegenerateScheduleError when the initial misfit is zero (the caller falls
    back to a fixed unit weight).
    """
    config = config or ScheduleConfig()
    f0 = misfit(instance, initial.U, initial.V)
    if f0 == 0.0:
        raise DegenerateScheduleError("initial misfit is zero; schedule undefined")
    gamma0 = config.warm_factor * gamma_threshold(instance, initial.U, initial.V, table)
    state = ScheduleState(
        gamma_floor=config.gamma_floor_rel * gamma0,
        plateau_tol=config.plateau_tol,
        misfits=[f0],
    )
    return state, gamma0, gamma0 / 2.0


def next_gamma(state: ScheduleState) -> float:
    """Weight for the next exploratory sweep.

    If the latest relative misfit decrease matched or beat the previous one,
    extrapolate the current ratio (gamma_prev / gamma_prev2); otherwise back
    off to gamma_prev2.  A zero denominator counts as zero decrease.  The
    result is floored at state.gamma_floor.
    """
    if len(state.misfits) < 3:
        raise ConfigError("next_gamma needs three recorded misfit values")
    f_older, f_prev, f_cur = state.misfits[-3:]
    dec_recent = (f_prev - f_cur) / f_prev if f_prev > 0 else 0.0
    dec_older = (f_older - f_prev) / f_older if f_older > 0 else 0.0
    if dec_recent >= dec_older:
        gamma = state.gamma_prev * (state.gamma_prev / state.gamma_prev2)
    else:
        gamma = state.gamma_prev2
    return max(gamma, state.gamma_floor)


def should_restart(state: ScheduleState, stop_value: float, epsilon: float) -> bool:
    """True when exploration should stop: misfit plateaued or iterates settled.

    The plateau test is |f_prev - f_cur| / f_prev < plateau_tol on the last
    two recorded misfits (an exact zero f_prev restarts immediately); the
    settle test is stop_value < epsilon.  Either way the run proceeds to the
    restart, never straight to termination.
    """
    if state.phase != "exploratory":
        raise ConfigError("should_restart is only defined in the exploratory phase")
    if len(state.misfits) < 2:
        return False
    f_prev, f_cur = state.misfits[-2], state.misfits[-1]
    if f_prev == 0.0:
        return True
    plateaued = abs(f_prev - f_cur) / f_prev < state.plateau_tol
    return plateaued or stop_value < epsilon


def restart(
    instance: ProblemInstance,
    factors: FactorPair,
    table: NeighborTable | None = None,
) -> tuple[FactorPair, float, bool]:
    """Collapse the factors onto W = (U + V)/2 and fix the final weight.

    Returns (factors with U = V = W, gamma, floored) where gamma is the
    agreement threshold evaluated at (W, W), floored to 1.0 when that
    threshold is exactly zero.
    """
    W = (factors.U + factors.V) / 2.0
    gamma = gamma_threshold(instance, W, W, table)
    floored = gamma == 0.0
    if floored:
        gamma = 1.0
    return FactorPair(W.copy(), W.copy()), gamma, floored
