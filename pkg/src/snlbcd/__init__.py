"""Sensor network localization by penalized block coordinate descent.

The sensor block is split into two factor matrices coupled by a quadratic
agreement penalty; block coordinate descent updates one factor column at a
time through exact d x d solves.  The package bundles the solver, a penalty
schedule with one restart, synthetic instance generation, evaluation
utilities, file formats, and a command line front end (``snlbcd``).

The sweep kernel runs compiled (Cython) when the extension built, with a
numpy fallback selected automatically at import; see
``snlbcd.kernel_backend()``.
"""

from ._kernels import BACKEND_NAME as _BACKEND_NAME
from .errors import (
    ConfigError,
    DegenerateScheduleError,
    DisconnectedInstanceError,
    DivergenceError,
    FileFormatError,
    MalformedInstanceError,
    SnlError,
)
from .evaluate import (
    BenchRow,
    SolutionReport,
    make_report,
    rmsd,
    run_benchmark,
    trace_monotonicity_report,
)
from .fileio import (
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)
from .generate import (
    GenSpec,
    generate,
    initial_point,
    random_interior_point,
    two_sensor_fixture,
)
from .model import (
    FactorPair,
    NeighborTable,
    ProblemInstance,
    build_neighbor_table,
    check_connectivity,
    edge_residuals,
    misfit,
    objective_grad,
    penalized_objective,
    residual_sa,
    residual_ss,
)
from .schedule import (
    ScheduleConfig,
    ScheduleState,
    gamma_threshold,
    init_schedule,
    next_gamma,
    restart,
    should_restart,
)
from .solver import (
    SolveResult,
    SolverConfig,
    SolveTrace,
    SweepOutcome,
    TERMINATION_CONVERGED,
    TERMINATION_DEGENERATE,
    TERMINATION_SWEEP_CAP,
    solve,
    solve_u_column,
    solve_v_column,
    stop_components,
    stop_stat,
    sweep,
)

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Which sweep kernel this process is using: 'compiled' or 'python'."""
    return _BACKEND_NAME


__all__ = [
    "SnlError",
    "MalformedInstanceError",
    "FileFormatError",
    "DisconnectedInstanceError",
    "ConfigError",
    "DegenerateScheduleError",
    "DivergenceError",
    "ProblemInstance",
    "NeighborTable",
    "FactorPair",
    "build_neighbor_table",
    "check_connectivity",
    "residual_ss",
    "residual_sa",
    "edge_residuals",
    "misfit",
    "penalized_objective",
    "objective_grad",
    "SolverConfig",
    "SweepOutcome",
    "SolveTrace",
    "SolveResult",
    "TERMINATION_CONVERGED",
    "TERMINATION_DEGENERATE",
    "TERMINATION_SWEEP_CAP",
    "solve",
    "solve_u_column",
    "solve_v_column",
    "sweep",
    "stop_components",
    "stop_stat",
    "ScheduleConfig",
    "ScheduleState",
    "gamma_threshold",
    "init_schedule",
    "next_gamma",
    "should_restart",
    "restart",
    "GenSpec",
    "generate",
    "two_sensor_fixture",
    "initial_point",
    "random_interior_point",
    "rmsd",
    "SolutionReport",
    "make_report",
    "BenchRow",
    "run_benchmark",
    "trace_monotonicity_report",
    "read_instance",
    "write_instance",
    "read_solution",
    "write_solution",
    "kernel_backend",
    "__version__",
]
