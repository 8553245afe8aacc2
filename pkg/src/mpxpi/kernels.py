"""Fixed-step integration kernels.

The classical fourth-order Runge-Kutta loop over small dense LTI systems is the
one hot path in this package (long traces, parameter studies, demo scenarios).
It is compiled with numba when available; a pure-numpy twin with identical
semantics serves as fallback. Selection order:

* ``MPX_BACKEND=numpy`` forces the fallback,
* ``MPX_BACKEND=numba`` forces the compiled kernel (error if numba is missing),
* unset: numba when importable, numpy otherwise.

Both paths run the same statements in the same order, so results agree to
floating-point roundoff.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

# State magnitude beyond which a trajectory is declared divergent.
DIVERGENCE_LIMIT = 1e12


def _rk4_record(mat, forcing, y0, dt, n_steps, stride, out, limit):
    # out must have n_steps // stride + 1 rows; row 0 is y0.
    dim = y0.shape[0]
    y = y0.copy()
    for j in range(dim):
        out[0, j] = y[j]
    idx = 1
    for step in range(1, n_steps + 1):
        k1 = mat @ y + forcing
        k2 = mat @ (y + (0.5 * dt) * k1) + forcing
        k3 = mat @ (y + (0.5 * dt) * k2) + forcing
        k4 = mat @ (y + dt * k3) + forcing
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0:
            for j in range(dim):
                out[idx, j] = y[j]
            idx += 1
            peak = np.abs(y).max()
            if not np.isfinite(peak) or peak > limit:
                return idx, True
    return idx, False


_rk4_record_numba = njit(cache=True)(_rk4_record) if HAVE_NUMBA else None


def active_backend() -> str:
    """Resolve which kernel implementation is in effect."""
    choice = os.environ.get("MPX_BACKEND", "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("MPX_BACKEND=numba requested but numba is not importable")
        return "numba"
    if choice:
        raise RuntimeError(f"unknown MPX_BACKEND {choice!r} (use 'numba' or 'numpy')")
    return "numba" if HAVE_NUMBA else "numpy"


def integrate_lti(
    mat: np.ndarray,
    forcing: np.ndarray,
    y0: np.ndarray,
    dt: float,
    n_steps: int,
    stride: int = 1,
    backend: str | None = None,
) -> tuple[np.ndarray, bool]:
    """Integrate ``y' = mat @ y + forcing`` with classical RK4.

    Records the state every ``stride`` steps (``stride`` must divide
    ``n_steps``). Returns ``(samples, diverged)`` where ``samples`` has
    ``n_steps // stride + 1`` rows starting at ``y0``; when the trajectory
    exceeds :data:`DIVERGENCE_LIMIT` or goes non-finite the array is truncated
    after the offending sample and ``diverged`` is True.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if stride < 1 or n_steps % stride != 0:
        raise ValueError("stride must be a positive divisor of n_steps")
    mat = np.ascontiguousarray(mat, dtype=np.float64)
    forcing = np.ascontiguousarray(forcing, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    if mat.shape != (y0.size, y0.size) or forcing.shape != y0.shape:
        raise ValueError("mat, forcing and y0 have inconsistent shapes")

    out = np.empty((n_steps // stride + 1, y0.size))
    which = backend or active_backend()
    if which == "numba":
        n_rec, diverged = _rk4_record_numba(
            mat, forcing, y0, dt, n_steps, stride, out, DIVERGENCE_LIMIT
        )
    elif which == "numpy":
        with np.errstate(over="ignore", invalid="ignore"):
            n_rec, diverged = _rk4_record(
                mat, forcing, y0, dt, n_steps, stride, out, DIVERGENCE_LIMIT
            )
    else:
        raise RuntimeError(f"unknown backend {which!r}")
    return out[:n_rec], diverged
