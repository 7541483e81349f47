"""Synthetic instance generation, the classic two-sensor fixture, and
initial-point heuristics.

Generation places sensors and anchors i.i.d. uniformly on the unit cube,
keeps every pair closer than the radio range rho (strict inequality) as an
edge, and perturbs each true distance multiplicatively:

    measured = max(1 + sigma * eps, 0.1) * true,   eps ~ N(0, 1)

Randomness is split into two named streams derived from one seed (positions
vs noise), so runs with the same seed and different sigma share the exact
same geometry and edge sets.  Normal variates come from numpy's Generator
(PCG64 + its standard_normal transform).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import ConfigError
from .model import (
    FactorPair,
    NeighborTable,
    ProblemInstance,
    build_neighbor_table,
)

__all__ = [
    "GenSpec",
    "generate",
    "two_sensor_fixture",
    "initial_point",
    "random_interior_point",
]


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one synthetic instance."""

    m: int
    n: int
    dim: int
    rho: float
    sigma: float
    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 1:
            raise ConfigError(f"m must be an int >= 1, got {self.m}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be an int >= 1, got {self.n}")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ConfigError(f"dim must be an int >= 1, got {self.dim}")
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ConfigError(f"rho must be > 0, got {self.rho}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative int, got {self.seed}")


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent generators derived from one seed: positions, noise."""
    root = np.random.SeedSequence(seed)
    pos_ss, noise_ss = root.spawn(2)
    return (
        np.random.Generator(np.random.PCG64(pos_ss)),
        np.random.Generator(np.random.PCG64(noise_ss)),
    )


def _sorted_pairs(pairs: np.ndarray) -> np.ndarray:
    """Lexicographically sort an (E, 2) index array by (first, second)."""
    if len(pairs) == 0:
        return pairs.reshape(0, 2).astype(np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def generate(spec: GenSpec) -> ProblemInstance:
    """Draw one instance (truth included) from the generation model."""
    rng_pos, rng_noise = _streams(spec.seed)
    sensors = rng_pos.random((spec.m, spec.dim))
    anchors = rng_pos.random((spec.n, spec.dim))

    sensor_tree = cKDTree(sensors)
    ss_pairs = sensor_tree.query_pairs(spec.rho, output_type="ndarray")
    ss_pairs = _sorted_pairs(np.asarray(ss_pairs, dtype=np.int64))
    ss_true = np.linalg.norm(
        sensors[ss_pairs[:, 0]] - sensors[ss_pairs[:, 1]], axis=1
    )
    keep = ss_true < spec.rho  # query_pairs is "at most r"; membership is strict
    ss_pairs, ss_true = ss_pairs[keep], ss_true[keep]

    anchor_tree = cKDTree(anchors)
    hits = anchor_tree.query_ball_point(sensors, spec.rho)
    sa_list = [(i, k) for i in range(spec.m) for k in sorted(hits[i])]
    sa_pairs = np.asarray(sa_list, dtype=np.int64).reshape(-1, 2)
    sa_true = np.linalg.norm(sensors[sa_pairs[:, 0]] - anchors[sa_pairs[:, 1]], axis=1)
    keep = sa_true < spec.rho
    sa_pairs, sa_true = sa_pairs[keep], sa_true[keep]

    eps_ss = rng_noise.standard_normal(len(ss_true))
    eps_sa = rng_noise.standard_normal(len(sa_true))
    ss_meas = np.maximum(1.0 + spec.sigma * eps_ss, 0.1) * ss_true
    sa_meas = np.maximum(1.0 + spec.sigma * eps_sa, 0.1) * sa_true

    return ProblemInstance(
        dim=spec.dim,
        num_sensors=spec.m,
        anchors=anchors,
        ss_pairs=ss_pairs,
        ss_dists=ss_meas,
        sa_pairs=sa_pairs,
        sa_dists=sa_meas,
        truth=sensors,
    )


def two_sensor_fixture() -> ProblemInstance:
    """Two sensors, three anchors, exact distances; locatable in the plane.

    Sensor truths (0, 0.5) and (0.6, 0.7); anchors (0, 1.4), (-1, 0), (1, 0).
    The five measured distances are exact, so the misfit at the truth is 0.
    """
    anchors = [[0.0, 1.4], [-1.0, 0.0], [1.0, 0.0]]
    truth = [[0.0, 0.5], [0.6, 0.7]]
    ss_edges = [(0, 1, math.sqrt(0.4))]
    sa_edges = [
        (0, 1, math.sqrt(1.25)),
        (0, 2, math.sqrt(1.25)),
        (1, 0, math.sqrt(0.85)),
        (1, 2, math.sqrt(0.65)),
    ]
    return ProblemInstance.from_edges(
        dim=2,
        num_sensors=2,
        anchors=anchors,
        ss_edges=ss_edges,
        sa_edges=sa_edges,
        truth=truth,
    )


def initial_point(
    instance: ProblemInstance, table: NeighborTable | None = None
) -> FactorPair:
    """Anchor-based warm start with U = V.

    Each sensor starts at its nearest directly-connected anchor (by measured
    distance, ties to the lowest anchor index); a sensor with no anchor edge
    starts at the componentwise midpoint of the anchor bounding box.
    """
    if instance.num_anchors == 0:
        raise ConfigError("initial_point needs at least one anchor")
    if table is None:
        table = build_neighbor_table(instance)
    lo = instance.anchors.min(axis=0)
    hi = instance.anchors.max(axis=0)
    midpoint = (lo + hi) / 2.0
    pos = np.empty((instance.num_sensors, instance.dim))
    for i in range(instance.num_sensors):
        aks, dists = table.sa_neighbors(i)
        if len(aks):
            # neighbor lists are sorted by anchor index, so argmin's first
            # minimum realizes the lowest-index tie break
            pos[i] = instance.anchors[aks[np.argmin(dists)]]
        else:
            pos[i] = midpoint
    U = np.ascontiguousarray(pos.T)
    return FactorPair(U, U.copy())


def random_interior_point(
    instance: ProblemInstance,
    rng: np.random.Generator | int,
    max_attempts: int = 100_000,
) -> FactorPair:
    """Start every sensor at an independent uniform draw from the interior of
    the anchor convex hull, with U = V.  Plane instances only (dim == 2),
    at least three affinely independent anchors required.
    """
    if instance.dim != 2:
        raise ConfigError("random_interior_point requires dim == 2")
    if instance.num_anchors < 3:
        raise ConfigError("random_interior_point needs at least 3 anchors")
    try:
        hull = ConvexHull(instance.anchors)
    except QhullError as exc:
        raise ConfigError(f"anchors are affinely degenerate: {exc}") from exc
    gen = np.random.default_rng(rng)
    normals = hull.equations[:, :2]
    offsets = hull.equations[:, 2]
    lo = instance.anchors.min(axis=0)
    hi = instance.anchors.max(axis=0)
    pos = np.empty((instance.num_sensors, 2))
    for i in range(instance.num_sensors):
        for _ in range(max_attempts):
            cand = gen.uniform(lo, hi)
            if np.max(normals @ cand + offsets) < 0.0:
                pos[i] = cand
                break
        else:
            raise ConfigError("interior sampling failed; hull nearly degenerate")
    U = np.ascontiguousarray(pos.T)
    return FactorPair(U, U.copy())
