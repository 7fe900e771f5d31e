# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal theta-step march.

Solves A u^{m+1} = B u^m + load^m for m = 0..N-1 with constant tridiagonal
A and B. A is Thomas-factored once; each step is two O(M) sweeps. Band
convention: lower[i] multiplies x[i-1] in row i (lower[0] unused), upper[i]
multiplies x[i+1] (upper[m-1] unused).
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def theta_march(double[::1] a_lower, double[::1] a_diag, double[::1] a_upper,
                double[::1] b_lower, double[::1] b_diag, double[::1] b_upper,
                double[::1] u0, double[:, ::1] loads, int n_steps):
    """March n_steps steps; loads has shape (n_steps, m) or (1, m) if the
    per-step load is constant. Returns an (n_steps+1, m) array of states."""
    cdef Py_ssize_t m = a_diag.shape[0]
    cdef Py_ssize_t nload = loads.shape[0]
    if loads.shape[1] != m or u0.shape[0] != m:
        raise ValueError("band, state, and load sizes disagree")
    if nload not in (1, n_steps):
        raise ValueError("loads must have 1 or n_steps rows")

    out_arr = np.empty((n_steps + 1, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] denom = np.empty(m, dtype=np.float64)
    cdef double[::1] lfac = np.empty(m, dtype=np.float64)
    cdef double[::1] rhs = np.empty(m, dtype=np.float64)

    cdef Py_ssize_t i, step, row
    cdef double piv

    # Thomas factorization of A, reused across all steps.
    denom[0] = a_diag[0]
    lfac[0] = 0.0
    for i in range(1, m):
        piv = a_lower[i] / denom[i - 1]
        lfac[i] = piv
        denom[i] = a_diag[i] - piv * a_upper[i - 1]

    for i in range(m):
        out[0, i] = u0[i]

    for step in range(n_steps):
        row = step if nload > 1 else 0
        # rhs = B u + load
        if m == 1:
            rhs[0] = b_diag[0] * out[step, 0] + loads[row, 0]
        else:
            rhs[0] = (b_diag[0] * out[step, 0]
                      + b_upper[0] * out[step, 1] + loads[row, 0])
            for i in range(1, m - 1):
                rhs[i] = (b_lower[i] * out[step, i - 1]
                          + b_diag[i] * out[step, i]
                          + b_upper[i] * out[step, i + 1] + loads[row, i])
            rhs[m - 1] = (b_lower[m - 1] * out[step, m - 2]
                          + b_diag[m - 1] * out[step, m - 1]
                          + loads[row, m - 1])
        # forward elimination, then back substitution
        for i in range(1, m):
            rhs[i] = rhs[i] - lfac[i] * rhs[i - 1]
        out[step + 1, m - 1] = rhs[m - 1] / denom[m - 1]
        for i in range(m - 2, -1, -1):
            out[step + 1, i] = (rhs[i] - a_upper[i] * out[step + 1, i + 1]) / denom[i]

    return out_arr
