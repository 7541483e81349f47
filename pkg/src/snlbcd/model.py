"""Problem data and objective functions for sensor network localization.

An instance has m sensors with unknown positions in R^d, n anchors with known
positions, and noisy squared-distance measurements on two edge sets: sensor to
sensor and sensor to anchor.  The solver works on a two-factor split of the
sensor block: factor matrices U and V, each d x m with column i belonging to
sensor i.  The data misfit couples the factors bilinearly,

    misfit(U, V) = 1/2 sum_ss ((u_i - u_j)^T (v_i - v_j) - d_ij^2)^2
                 + 1/2 sum_sa ((u_i - a_k)^T (v_i - a_k) - d_ik^2)^2

and the penalized objective adds gamma/2 * ||U - V||_F^2 to push the factors
together.  Everything here is pure and operates on immutable instance data;
indices are 0-based throughout (file formats convert at the I/O boundary).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import MalformedInstanceError

__all__ = [
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
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable localization instance.

    Attributes
    ----------
    dim : int
        Ambient dimension d >= 1.
    num_sensors : int
        Number of sensors m >= 1 (0-based ids 0..m-1).
    anchors : ndarray, shape (n, dim)
        Anchor positions, one per row.  n may be 0.
    ss_pairs : ndarray, shape (E_ss, 2), int64
        Sensor-sensor edges with i < j, no duplicates.
    ss_dists : ndarray, shape (E_ss,)
        Measured sensor-sensor distances, strictly positive.
    sa_pairs : ndarray, shape (E_sa, 2), int64
        Sensor-anchor edges (sensor id, anchor id), no duplicates.
    sa_dists : ndarray, shape (E_sa,)
        Measured sensor-anchor distances, strictly positive.
    truth : ndarray or None, shape (num_sensors, dim)
        True sensor positions when known (generated instances).  Only
        evaluation code may look at this field; the solver never does.
    """

    dim: int
    num_sensors: int
    anchors: np.ndarray
    ss_pairs: np.ndarray
    ss_dists: np.ndarray
    sa_pairs: np.ndarray
    sa_dists: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise MalformedInstanceError(f"dim must be >= 1, got {self.dim}")
        if self.num_sensors < 1:
            raise MalformedInstanceError(
                f"num_sensors must be >= 1, got {self.num_sensors}"
            )
        anchors = _readonly(np.asarray(self.anchors, dtype=np.float64))
        if anchors.ndim != 2 or anchors.shape[1] != self.dim:
            raise MalformedInstanceError(
                f"anchors must have shape (n, {self.dim}), got {anchors.shape}"
            )
        if not np.all(np.isfinite(anchors)):
            raise MalformedInstanceError("anchor coordinates must be finite")
        object.__setattr__(self, "anchors", anchors)

        ss_pairs = _readonly(np.asarray(self.ss_pairs, dtype=np.int64).reshape(-1, 2))
        ss_dists = _readonly(np.asarray(self.ss_dists, dtype=np.float64).ravel())
        sa_pairs = _readonly(np.asarray(self.sa_pairs, dtype=np.int64).reshape(-1, 2))
        sa_dists = _readonly(np.asarray(self.sa_dists, dtype=np.float64).ravel())
        object.__setattr__(self, "ss_pairs", ss_pairs)
        object.__setattr__(self, "ss_dists", ss_dists)
        object.__setattr__(self, "sa_pairs", sa_pairs)
        object.__setattr__(self, "sa_dists", sa_dists)
        self._validate_edges()

        if self.truth is not None:
            truth = _readonly(np.asarray(self.truth, dtype=np.float64))
            if truth.shape != (self.num_sensors, self.dim):
                raise MalformedInstanceError(
                    f"truth must have shape ({self.num_sensors}, {self.dim}), "
                    f"got {truth.shape}"
                )
            if not np.all(np.isfinite(truth)):
                raise MalformedInstanceError("truth coordinates must be finite")
            object.__setattr__(self, "truth", truth)

    def _validate_edges(self) -> None:
        m, n = self.num_sensors, self.num_anchors
        if len(self.ss_pairs) != len(self.ss_dists):
            raise MalformedInstanceError("ss_pairs and ss_dists length mismatch")
        if len(self.sa_pairs) != len(self.sa_dists):
            raise MalformedInstanceError("sa_pairs and sa_dists length mismatch")
        for dists, label in ((self.ss_dists, "ss"), (self.sa_dists, "sa")):
            if len(dists) and not np.all(np.isfinite(dists) & (dists > 0.0)):
                raise MalformedInstanceError(
                    f"{label} distances must be finite and strictly positive"
                )
        if len(self.ss_pairs):
            i, j = self.ss_pairs[:, 0], self.ss_pairs[:, 1]
            if np.any(i < 0) or np.any(j >= m) or np.any(i >= j):
                raise MalformedInstanceError(
                    "ss edges must satisfy 0 <= i < j < num_sensors"
                )
            keys = i * m + j
            if len(np.unique(keys)) != len(keys):
                raise MalformedInstanceError("duplicate sensor-sensor edge")
        if len(self.sa_pairs):
            s, k = self.sa_pairs[:, 0], self.sa_pairs[:, 1]
            if np.any(s < 0) or np.any(s >= m) or np.any(k < 0) or np.any(k >= n):
                raise MalformedInstanceError("sa edge index out of range")
            keys = s * max(n, 1) + k
            if len(np.unique(keys)) != len(keys):
                raise MalformedInstanceError("duplicate sensor-anchor edge")

    @classmethod
    def from_edges(
        cls,
        dim: int,
        num_sensors: int,
        anchors: Sequence[Sequence[float]] | np.ndarray,
        ss_edges: Iterable[tuple[int, int, float]],
        sa_edges: Iterable[tuple[int, int, float]],
        truth: Sequence[Sequence[float]] | np.ndarray | None = None,
    ) -> "ProblemInstance":
        """Build an instance from (i, j, dist) / (sensor, anchor, dist) triples.

        Sensor-sensor pairs are normalized to i < j; a pair with i == j is
        rejected.  All indices are 0-based.
        """
        ss = [(int(i), int(j), float(d)) for i, j, d in ss_edges]
        for i, j, _ in ss:
            if i == j:
                raise MalformedInstanceError(f"self edge on sensor {i}")
        ss_pairs = np.array(
            [sorted((i, j)) for i, j, _ in ss], dtype=np.int64
        ).reshape(-1, 2)
        ss_dists = np.array([d for _, _, d in ss], dtype=np.float64)
        sa = [(int(s), int(k), float(d)) for s, k, d in sa_edges]
        sa_pairs = np.array([(s, k) for s, k, _ in sa], dtype=np.int64).reshape(-1, 2)
        sa_dists = np.array([d for _, _, d in sa], dtype=np.float64)
        anchors_arr = np.asarray(anchors, dtype=np.float64)
        if anchors_arr.size == 0:
            anchors_arr = anchors_arr.reshape(0, dim)
        return cls(
            dim=dim,
            num_sensors=num_sensors,
            anchors=anchors_arr,
            ss_pairs=ss_pairs,
            ss_dists=ss_dists,
            sa_pairs=sa_pairs,
            sa_dists=sa_dists,
            truth=truth,
        )

    @property
    def num_anchors(self) -> int:
        return int(self.anchors.shape[0])

    @property
    def num_ss_edges(self) -> int:
        return int(self.ss_pairs.shape[0])

    @property
    def num_sa_edges(self) -> int:
        return int(self.sa_pairs.shape[0])

    def without_truth(self) -> "ProblemInstance":
        """Copy of the instance with the truth field removed (solver-side view)."""
        if self.truth is None:
            return self
        return replace(self, truth=None)


@dataclass(frozen=True)
class NeighborTable:
    """Per-sensor adjacency in CSR layout, derived from a ProblemInstance.

    For sensor i, ss_index[ss_indptr[i]:ss_indptr[i+1]] are its sensor
    neighbors (both directions of each edge) and ss_dist the matching measured
    distances; sa_* likewise lists anchor neighbors.  Neighbor lists are
    sorted by index.
    """

    num_sensors: int
    ss_indptr: np.ndarray
    ss_index: np.ndarray
    ss_dist: np.ndarray
    sa_indptr: np.ndarray
    sa_index: np.ndarray
    sa_dist: np.ndarray

    def ss_neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.ss_indptr[i], self.ss_indptr[i + 1])
        return self.ss_index[sl], self.ss_dist[sl]

    def sa_neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.sa_indptr[i], self.sa_indptr[i + 1])
        return self.sa_index[sl], self.sa_dist[sl]

    @property
    def ss_degrees(self) -> np.ndarray:
        return np.diff(self.ss_indptr)

    @property
    def sa_degrees(self) -> np.ndarray:
        return np.diff(self.sa_indptr)


def _csr_from_edges(
    m: int, rows: np.ndarray, cols: np.ndarray, dists: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sort (row, col, dist) records into CSR arrays over m rows."""
    indptr = np.zeros(m + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(rows, minlength=m))
    order = np.lexsort((cols, rows))
    return indptr, _readonly(cols[order]), _readonly(dists[order])


def build_neighbor_table(instance: ProblemInstance) -> NeighborTable:
    """Derive the CSR neighbor table from an instance's edge lists."""
    m = instance.num_sensors
    i, j = instance.ss_pairs[:, 0], instance.ss_pairs[:, 1]
    ss_rows = np.concatenate([i, j])
    ss_cols = np.concatenate([j, i])
    ss_dd = np.concatenate([instance.ss_dists, instance.ss_dists])
    ss_indptr, ss_index, ss_dist = _csr_from_edges(m, ss_rows, ss_cols, ss_dd)
    sa_indptr, sa_index, sa_dist = _csr_from_edges(
        m, instance.sa_pairs[:, 0], instance.sa_pairs[:, 1], instance.sa_dists
    )
    return NeighborTable(
        num_sensors=m,
        ss_indptr=_readonly(ss_indptr),
        ss_index=ss_index,
        ss_dist=ss_dist,
        sa_indptr=_readonly(sa_indptr),
        sa_index=sa_index,
        sa_dist=sa_dist,
    )


def check_connectivity(
    instance: ProblemInstance, table: NeighborTable | None = None
) -> bool:
    """True iff every sensor reaches some anchor through the measurement graph.

    A sensor is covered when it has a direct anchor edge or a chain of
    sensor-sensor edges ending at a sensor that has one.
    """
    if table is None:
        table = build_neighbor_table(instance)
    m = instance.num_sensors
    reached = table.sa_degrees > 0
    queue = deque(np.flatnonzero(reached))
    while queue:
        i = queue.popleft()
        nbrs, _ = table.ss_neighbors(i)
        for j in nbrs:
            if not reached[j]:
                reached[j] = True
                queue.append(j)
    return bool(np.all(reached))


@dataclass
class FactorPair:
    """The two factor matrices, each dim x num_sensors (columns are sensors)."""

    U: np.ndarray
    V: np.ndarray

    def __post_init__(self) -> None:
        U = np.asarray(self.U, dtype=np.float64)
        V = np.asarray(self.V, dtype=np.float64)
        if U.ndim != 2 or U.shape != V.shape:
            raise MalformedInstanceError(
                f"factor shapes must match, got {U.shape} and {V.shape}"
            )
        self.U, self.V = U, V

    @property
    def dim(self) -> int:
        return int(self.U.shape[0])

    @property
    def num_sensors(self) -> int:
        return int(self.U.shape[1])

    def copy(self) -> "FactorPair":
        return FactorPair(self.U.copy(), self.V.copy())

    def positions(self) -> np.ndarray:
        """Reported position estimates (u_i + v_i) / 2, one sensor per row."""
        return ((self.U + self.V) / 2.0).T.copy()


def _check_factors(instance: ProblemInstance, U: np.ndarray, V: np.ndarray) -> None:
    expect = (instance.dim, instance.num_sensors)
    if U.shape != expect or V.shape != expect:
        raise MalformedInstanceError(
            f"factors must have shape {expect}, got {U.shape} and {V.shape}"
        )


def residual_ss(
    u_i: np.ndarray, u_j: np.ndarray, v_i: np.ndarray, v_j: np.ndarray, d_ij: float
) -> float:
    """Bilinear residual (u_i - u_j)^T (v_i - v_j) - d_ij^2 for one ss edge."""
    return float(np.dot(u_i - u_j, v_i - v_j) - d_ij * d_ij)


def residual_sa(u_i: np.ndarray, v_i: np.ndarray, a_k: np.ndarray, d_ik: float) -> float:
    """Bilinear residual (u_i - a_k)^T (v_i - a_k) - d_ik^2 for one sa edge."""
    return float(np.dot(u_i - a_k, v_i - a_k) - d_ik * d_ik)


def edge_residuals(
    instance: ProblemInstance, U: np.ndarray, V: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Residual vectors over all ss and sa edges (vectorized).

    Returns (r_ss, r_sa) aligned with the instance edge arrays.
    """
    i, j = instance.ss_pairs[:, 0], instance.ss_pairs[:, 1]
    dU = U[:, i] - U[:, j]
    dV = V[:, i] - V[:, j]
    r_ss = np.einsum("de,de->e", dU, dV) - instance.ss_dists**2
    s, k = instance.sa_pairs[:, 0], instance.sa_pairs[:, 1]
    A = instance.anchors.T[:, k]
    r_sa = np.einsum("de,de->e", U[:, s] - A, V[:, s] - A) - instance.sa_dists**2
    return r_ss, r_sa


def misfit(instance: ProblemInstance, U: np.ndarray, V: np.ndarray) -> float:
    """Half the sum of squared edge residuals (the data-fit term)."""
    _check_factors(instance, U, V)
    r_ss, r_sa = edge_residuals(instance, U, V)
    return 0.5 * (float(r_ss @ r_ss) + float(r_sa @ r_sa))


def penalized_objective(
    instance: ProblemInstance, U: np.ndarray, V: np.ndarray, gamma: float
) -> float:
    """misfit plus the factor-agreement penalty gamma/2 * ||U - V||_F^2."""
    if gamma < 0.0:
        raise MalformedInstanceError(f"gamma must be >= 0, got {gamma}")
    diff = U - V
    return 0.5 * gamma * float(np.vdot(diff, diff)) + misfit(instance, U, V)


def objective_grad(
    instance: ProblemInstance, U: np.ndarray, V: np.ndarray, gamma: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the penalized objective with respect to (U, V).

    Column i of the U gradient is gamma*(u_i - v_i)
    + sum over sensor neighbors j of r_ij * (v_i - v_j)
    + sum over anchor neighbors k of r_ik * (v_i - a_k),
    and the V gradient swaps the roles of U and V.  Returns (GU, GV), each
    dim x num_sensors.
    """
    _check_factors(instance, U, V)
    r_ss, r_sa = edge_residuals(instance, U, V)
    Ut, Vt = U.T, V.T
    GU = gamma * (Ut - Vt)
    GV = gamma * (Vt - Ut)
    i, j = instance.ss_pairs[:, 0], instance.ss_pairs[:, 1]
    dU = Ut[i] - Ut[j]
    dV = Vt[i] - Vt[j]
    np.add.at(GU, i, r_ss[:, None] * dV)
    np.add.at(GU, j, -r_ss[:, None] * dV)
    np.add.at(GV, i, r_ss[:, None] * dU)
    np.add.at(GV, j, -r_ss[:, None] * dU)
    s, k = instance.sa_pairs[:, 0], instance.sa_pairs[:, 1]
    Ak = instance.anchors[k]
    np.add.at(GU, s, r_sa[:, None] * (Vt[s] - Ak))
    np.add.at(GV, s, r_sa[:, None] * (Ut[s] - Ak))
    return np.ascontiguousarray(GU.T), np.ascontiguousarray(GV.T)
