"""Pure NumPy/SciPy fallback for the tridiagonal theta-step march.

Same contract as the compiled kernel in _stepper.pyx. Each step forms the
right-hand side with vectorized band products and calls LAPACK's banded
solver. Slower than the compiled march (the banded factorization is redone
every step) but dependency-light and bit-for-bit deterministic.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

__all__ = ["theta_march"]


def theta_march(a_lower, a_diag, a_upper, b_lower, b_diag, b_upper,
                u0, loads, n_steps):
    m = len(a_diag)
    loads = np.asarray(loads, dtype=float)
    if loads.shape not in ((1, m), (n_steps, m)):
        raise ValueError("loads must have 1 or n_steps rows")
    ab = np.zeros((3, m))
    ab[0, 1:] = a_upper[:-1]
    ab[1, :] = a_diag
    ab[2, :-1] = a_lower[1:]

    out = np.empty((n_steps + 1, m))
    out[0] = u0
    constant = loads.shape[0] == 1
    for step in range(n_steps):
        u = out[step]
        rhs = b_diag * u
        if m > 1:
            rhs[1:] += b_lower[1:] * u[:-1]
            rhs[:-1] += b_upper[:-1] * u[1:]
        rhs += loads[0] if constant else loads[step]
        out[step + 1] = solve_banded((1, 1), ab, rhs, check_finite=False)
    return out
