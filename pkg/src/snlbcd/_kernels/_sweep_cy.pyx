# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gauss-Seidel sweep kernel.

Same contract as the numpy fallback: update every row of Ut in ascending
sensor order with Vt fixed, then every row of Vt with the new Ut fixed.  Each
row update assembles the d x d normal system of its column subproblem and
solves it by an in-place Cholesky factorization with two substitutions.
"""

from libc.math cimport sqrt, isfinite
from libc.stdlib cimport free, malloc


cdef int _half_sweep(
    double[:, ::1] X,
    const double[:, ::1] Y,
    const double[:, ::1] anchors,
    const long long[::1] ss_indptr,
    const long long[::1] ss_index,
    const double[::1] ss_dsq,
    const long long[::1] sa_indptr,
    const long long[::1] sa_index,
    const double[::1] sa_dsq,
    double gamma,
    double* A,
    double* b,
    double* w,
) except -1:
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, p, q, r, t
    cdef long long e, j, k
    cdef double c, s

    for i in range(m):
        for p in range(d):
            for q in range(d):
                A[p * d + q] = 0.0
            A[p * d + p] = gamma
            b[p] = gamma * Y[i, p]

        for e in range(ss_indptr[i], ss_indptr[i + 1]):
            j = ss_index[e]
            c = ss_dsq[e]
            for p in range(d):
                w[p] = Y[i, p] - Y[j, p]
                c += X[j, p] * w[p]
            for p in range(d):
                b[p] += c * w[p]
                for q in range(p, d):
                    A[p * d + q] += w[p] * w[q]

        for e in range(sa_indptr[i], sa_indptr[i + 1]):
            k = sa_index[e]
            c = sa_dsq[e]
            for p in range(d):
                w[p] = Y[i, p] - anchors[k, p]
                c += anchors[k, p] * w[p]
            for p in range(d):
                b[p] += c * w[p]
                for q in range(p, d):
                    A[p * d + q] += w[p] * w[q]

        # lower Cholesky factor written into the lower triangle of A
        for p in range(d):
            s = A[p * d + p]
            for t in range(p):
                s -= A[p * d + t] * A[p * d + t]
            if not (s > 0.0 and isfinite(s)):
                raise FloatingPointError(
                    "column system lost positive definiteness (non-finite input?)"
                )
            A[p * d + p] = sqrt(s)
            for r in range(p + 1, d):
                s = A[p * d + r]
                for t in range(p):
                    s -= A[r * d + t] * A[p * d + t]
                A[r * d + p] = s / A[p * d + p]

        # forward then backward substitution, in place in b
        for r in range(d):
            s = b[r]
            for t in range(r):
                s -= A[r * d + t] * b[t]
            b[r] = s / A[r * d + r]
        for r in range(d - 1, -1, -1):
            s = b[r]
            for t in range(r + 1, d):
                s -= A[t * d + r] * b[t]
            b[r] = s / A[r * d + r]

        for p in range(d):
            X[i, p] = b[p]
    return 0


def gauss_seidel_sweep(
    double[:, ::1] Ut,
    double[:, ::1] Vt,
    const double[:, ::1] anchors,
    const long long[::1] ss_indptr,
    const long long[::1] ss_index,
    const double[::1] ss_dsq,
    const long long[::1] sa_indptr,
    const long long[::1] sa_index,
    const double[::1] sa_dsq,
    double gamma,
):
    """One full sweep in place: all u columns, then all v columns."""
    cdef Py_ssize_t d = Ut.shape[1]
    cdef double* A = <double*> malloc(d * d * sizeof(double))
    cdef double* b = <double*> malloc(d * sizeof(double))
    cdef double* w = <double*> malloc(d * sizeof(double))
    if A == NULL or b == NULL or w == NULL:
        free(A)
        free(b)
        free(w)
        raise MemoryError()
    try:
        _half_sweep(
            Ut, Vt, anchors,
            ss_indptr, ss_index, ss_dsq,
            sa_indptr, sa_index, sa_dsq,
            gamma, A, b, w,
        )
        _half_sweep(
            Vt, Ut, anchors,
            ss_indptr, ss_index, ss_dsq,
            sa_indptr, sa_index, sa_dsq,
            gamma, A, b, w,
        )
    finally:
        free(A)
        free(b)
        free(w)
