"""Backend selection for the hot numerical kernels.

The compiled extension is used when it imports; setting the environment
variable ``CFL_PURE_PYTHON=1`` forces the pure-Python implementation.
:data:`BACKEND` records which one is active.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("CFL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or None = active)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def propagate_linear2(coef, h, y0=None, backend=None):
    """RK4 propagation of Y' = M(t)Y; see :func:`cfl._kernels_py.propagate_linear2`."""
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    return get_backend(backend).propagate_linear2(coef, float(h), y0)


def solve_linear2(mfunc, t0, t1, n_steps, y0=None, backend=None):
    """Sample ``mfunc`` (vectorised t -> (..., 2, 2)) and propagate over [t0, t1].

    Returns ``(times, Y)`` with ``times`` of length ``n_steps + 1``.
    """
    n_steps = int(n_steps)
    tt = np.linspace(t0, t1, 2 * n_steps + 1)
    coef = np.asarray(mfunc(tt), dtype=np.float64)
    h = (t1 - t0) / n_steps
    return tt[::2], propagate_linear2(coef, h, y0=y0, backend=backend)


def solve_linear2_adaptive(mfunc, t0, t1, tol=1e-10, n_start=256, n_max=2**20, backend=None):
    """Double the step count until the end value changes by less than ``tol``.

    RK4 is fourth order, so the last difference over-estimates the error of
    the finer solution by roughly a factor 15.
    """
    n = int(n_start)
    times, ys = solve_linear2(mfunc, t0, t1, n, backend=backend)
    while True:
        n2 = 2 * n
        times2, ys2 = solve_linear2(mfunc, t0, t1, n2, backend=backend)
        err = float(np.max(np.abs(ys2[-1] - ys[-1])))
        if err < tol or n2 >= n_max:
            return times2, ys2, err
        n, times, ys = n2, times2, ys2
