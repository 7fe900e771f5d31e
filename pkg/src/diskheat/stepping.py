"""Backend selection for the tridiagonal theta-step march.

Prefers the compiled Cython kernel when it was built; falls back to the
SciPy-backed implementation otherwise. Set DISKHEAT_PURE=1 to force the
fallback (used by the benchmark and the agreement tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _stepper_py

if os.environ.get("DISKHEAT_PURE"):
    _impl = _stepper_py
    BACKEND = "pure"
else:
    try:
        from . import _stepper as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _stepper_py
        BACKEND = "pure"

__all__ = ["theta_march", "BACKEND"]


def theta_march(a_lower, a_diag, a_upper, b_lower, b_diag, b_upper,
                u0, loads, n_steps: int) -> np.ndarray:
    """Solve A u^{m+1} = B u^m + load^m for n_steps steps.

    Band convention: lower[i] pairs with x[i-1] (entry 0 unused), upper[i]
    with x[i+1] (last entry unused). loads is (n_steps, m), or (1, m) /
    (m,) for a load that does not change between steps. Returns the full
    state history, shape (n_steps + 1, m).
    """
    loads = np.ascontiguousarray(np.atleast_2d(np.asarray(loads, dtype=float)))
    args = [np.ascontiguousarray(np.asarray(x, dtype=float))
            for x in (a_lower, a_diag, a_upper, b_lower, b_diag, b_upper, u0)]
    return _impl.theta_march(*args, loads, int(n_steps))
