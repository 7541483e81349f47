"""Shared test helpers: connected instances, random factors, independent oracles."""

from __future__ import annotations

import numpy as np

from snlbcd import (
    FactorPair,
    GenSpec,
    ProblemInstance,
    build_neighbor_table,
    check_connectivity,
    generate,
    penalized_objective,
)


def make_connected(
    m: int,
    n: int,
    rho: float,
    sigma: float = 0.0,
    seed: int = 0,
    dim: int = 2,
) -> ProblemInstance:
    """Generate, bumping the seed until the draw satisfies connectivity."""
    for attempt in range(50):
        inst = generate(
            GenSpec(m=m, n=n, dim=dim, rho=rho, sigma=sigma, seed=seed + 7919 * attempt)
        )
        if check_connectivity(inst):
            return inst
    raise RuntimeError(
        f"no connected draw in 50 attempts (m={m}, n={n}, rho={rho}, seed={seed})"
    )


def random_factors(
    instance: ProblemInstance, rng: np.random.Generator, spread: float = 1.0
) -> FactorPair:
    """Independent uniform U and V (deliberately unequal)."""
    shape = (instance.dim, instance.num_sensors)
    return FactorPair(
        np.ascontiguousarray(rng.uniform(-spread, spread, shape)),
        np.ascontiguousarray(rng.uniform(-spread, spread, shape)),
    )


def fd_gradient(
    instance: ProblemInstance,
    U: np.ndarray,
    V: np.ndarray,
    gamma: float,
    h: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient of the penalized objective, both factors."""

    def value(Uc: np.ndarray, Vc: np.ndarray) -> float:
        return penalized_objective(instance, Uc, Vc, gamma)

    GU = np.zeros_like(U)
    GV = np.zeros_like(V)
    for which, G in (("U", GU), ("V", GV)):
        for idx in np.ndindex(*G.shape):
            Up, Vp = U.copy(), V.copy()
            Um, Vm = U.copy(), V.copy()
            if which == "U":
                Up[idx] += h
                Um[idx] -= h
            else:
                Vp[idx] += h
                Vm[idx] -= h
            G[idx] = (value(Up, Vp) - value(Um, Vm)) / (2.0 * h)
    return GU, GV


def _column_terms(
    instance: ProblemInstance,
    i: int,
    U: np.ndarray,
    V: np.ndarray,
    gamma: float,
    which: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linear terms of the one-column objective, in extended precision.

    Restricted to column i of the live factor, the penalized objective is
    gamma/2 |z - p|^2 + 1/2 sum_e (z.w_e - c_e)^2 plus a constant, where p is
    the partner column and each measured edge at i contributes one (w, c)
    pair built straight from the residual definition.
    """
    ld = np.longdouble
    table = build_neighbor_table(instance)
    live, fixed = (U, V) if which == "u" else (V, U)
    p = fixed[:, i].astype(ld)
    ws: list[np.ndarray] = []
    cs: list[np.longdouble] = []
    js, ss_d = table.ss_neighbors(i)
    for j, dij in zip(js, ss_d):
        w = fixed[:, i].astype(ld) - fixed[:, j].astype(ld)
        cs.append(live[:, j].astype(ld) @ w + ld(dij) ** 2)
        ws.append(w)
    ks, sa_d = table.sa_neighbors(i)
    for k, dik in zip(ks, sa_d):
        a = instance.anchors[k].astype(ld)
        w = fixed[:, i].astype(ld) - a
        cs.append(a @ w + ld(dik) ** 2)
        ws.append(w)
    W = np.asarray(ws, dtype=ld).reshape(len(ws), instance.dim)
    c = np.asarray(cs, dtype=ld)
    return p, W, c


def column_objective(
    instance: ProblemInstance,
    i: int,
    z: np.ndarray,
    U: np.ndarray,
    V: np.ndarray,
    gamma: float,
    which: str,
) -> float:
    """Penalized objective as a function of one column (constant terms dropped)."""
    p, W, c = _column_terms(instance, i, U, V, gamma, which)
    zl = np.asarray(z, dtype=np.longdouble)
    r = W @ zl - c
    return float(0.5 * gamma * ((zl - p) @ (zl - p)) + 0.5 * (r @ r))


def sampled_column_minimizer(
    instance: ProblemInstance,
    i: int,
    U: np.ndarray,
    V: np.ndarray,
    gamma: float,
    which: str,
) -> np.ndarray:
    """Brute-force one-column minimizer driven purely by objective values.

    The column objective is an exact quadratic, so second differences of
    sampled values recover its Hessian and gradient without truncation error;
    the stationary point then comes from one 2 x 2 solve.  Everything runs in
    extended precision, and no code is shared with the production update.
    """
    assert instance.dim == 2, "value-sampling oracle is written for the plane"
    ld = np.longdouble
    p, W, c = _column_terms(instance, i, U, V, gamma, which)

    def g(z: np.ndarray) -> np.longdouble:
        r = W @ z - c
        return 0.5 * ld(gamma) * ((z - p) @ (z - p)) + 0.5 * (r @ r)

    e1 = np.array([1, 0], dtype=ld)
    e2 = np.array([0, 1], dtype=ld)
    g0 = g(p)
    gpx, gmx = g(p + e1), g(p - e1)
    gpy, gmy = g(p + e2), g(p - e2)
    gxy = g(p + e1 + e2)
    hxx = gpx + gmx - 2.0 * g0
    hyy = gpy + gmy - 2.0 * g0
    hxy = gxy - gpx - gpy + g0
    grad = np.array([(gpx - gmx) / 2.0, (gpy - gmy) / 2.0], dtype=ld)
    det = hxx * hyy - hxy * hxy
    step = (
        np.array(
            [hyy * grad[0] - hxy * grad[1], hxx * grad[1] - hxy * grad[0]], dtype=ld
        )
        / det
    )
    return np.asarray(p - step, dtype=np.float64)
