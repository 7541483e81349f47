"""Pure numpy Gauss-Seidel sweep kernel (fallback backend).

Same contract as the compiled kernel: one full sweep updates the rows of Ut in
ascending sensor order with Vt fixed, then the rows of Vt with the new Ut
fixed.  Each row update solves the d x d normal system of the single-column
subproblem exactly (Cholesky factor, two triangular substitutions).

Matrices that do not depend on the live factor (the per-sensor system matrix
and the constant part of the right-hand side) are assembled vectorized once
per phase; only the Gauss-Seidel coupling term stays inside the Python loop.
"""

from __future__ import annotations

import numpy as np


def _scatter_rows(m: int, rows: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Sum (len(rows), d) values into an (m, d) array by row id."""
    d = values.shape[1]
    out = np.empty((m, d))
    for q in range(d):
        out[:, q] = np.bincount(rows, weights=values[:, q], minlength=m)
    return out


def _half_sweep(
    X: np.ndarray,
    Y: np.ndarray,
    anchors: np.ndarray,
    ss_indptr: np.ndarray,
    ss_index: np.ndarray,
    ss_dsq: np.ndarray,
    sa_indptr: np.ndarray,
    sa_index: np.ndarray,
    sa_dsq: np.ndarray,
    gamma: float,
) -> None:
    """Update the rows of X in place, in ascending order, with Y fixed."""
    m, d = X.shape
    rows_ss = np.repeat(np.arange(m), np.diff(ss_indptr))
    rows_sa = np.repeat(np.arange(m), np.diff(sa_indptr))
    W_ss = Y[rows_ss] - Y[ss_index]
    W_sa = Y[rows_sa] - anchors[sa_index]

    rows_all = np.concatenate([rows_ss, rows_sa])
    W_all = np.vstack([W_ss, W_sa])
    # coefficient of w in the constant rhs part: dsq for ss, a^T w + dsq for sa
    coef_all = np.concatenate(
        [ss_dsq, np.einsum("ed,ed->e", anchors[sa_index], W_sa) + sa_dsq]
    )

    M = np.zeros((m, d, d))
    for p in range(d):
        for q in range(p, d):
            s = np.bincount(rows_all, weights=W_all[:, p] * W_all[:, q], minlength=m)
            M[:, p, q] = s
            if q != p:
                M[:, q, p] = s
    M[:, np.arange(d), np.arange(d)] += gamma
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        # same failure surface as the compiled kernel
        raise FloatingPointError(f"column system not positive definite: {exc}") from exc

    B = gamma * Y + _scatter_rows(m, rows_all, coef_all[:, None] * W_all)

    for i in range(m):
        lo, hi = ss_indptr[i], ss_indptr[i + 1]
        b = B[i].copy()
        if hi > lo:
            Wi = W_ss[lo:hi]
            c = np.einsum("kd,kd->k", X[ss_index[lo:hi]], Wi)
            b += Wi.T @ c
        Li = L[i]
        # forward then backward substitution with the cached Cholesky factor
        for r in range(d):
            s = b[r]
            for t in range(r):
                s -= Li[r, t] * b[t]
            b[r] = s / Li[r, r]
        for r in range(d - 1, -1, -1):
            s = b[r]
            for t in range(r + 1, d):
                s -= Li[t, r] * b[t]
            b[r] = s / Li[r, r]
        X[i] = b


def gauss_seidel_sweep(
    Ut: np.ndarray,
    Vt: np.ndarray,
    anchors: np.ndarray,
    ss_indptr: np.ndarray,
    ss_index: np.ndarray,
    ss_dsq: np.ndarray,
    sa_indptr: np.ndarray,
    sa_index: np.ndarray,
    sa_dsq: np.ndarray,
    gamma: float,
) -> None:
    """One full sweep in place: all u columns, then all v columns."""
    args = (anchors, ss_indptr, ss_index, ss_dsq, sa_indptr, sa_index, sa_dsq, gamma)
    _half_sweep(Ut, Vt, *args)
    _half_sweep(Vt, Ut, *args)
