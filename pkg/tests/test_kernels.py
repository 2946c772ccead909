import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from cfl import kernels


def has_cython():
    try:
        kernels.get_backend("cython")
        return True
    except ImportError:
        return False


BACKENDS = ["python", pytest.param("cython", marks=pytest.mark.skipif(not has_cython(), reason="not built"))]


def rotation_field(t):
    t = np.asarray(t)
    M = np.zeros(t.shape + (2, 2))
    M[..., 0, 1], M[..., 1, 0] = -1.0, 1.0
    return M


@pytest.mark.parametrize("backend", BACKENDS)
def test_constant_matrix_matches_expm(backend):
    A = np.array([[0.3, -1.2], [0.8, -0.1]])
    t, Y = kernels.solve_linear2(lambda s: np.broadcast_to(A, np.shape(s) + (2, 2)), 0.0, 2.0, 400,
                                 backend=backend)
    np.testing.assert_allclose(Y[-1], expm(2.0 * A), atol=1e-10)
    assert len(t) == 401


@pytest.mark.parametrize("backend", BACKENDS)
def test_fourth_order(backend):
    exact = -np.eye(2)
    errs = [np.max(np.abs(kernels.solve_linear2(rotation_field, 0, np.pi, n, backend=backend)[1][-1] - exact))
            for n in (20, 40)]
    assert 14 < errs[0] / errs[1] < 18


@pytest.mark.parametrize("backend", BACKENDS)
def test_initial_value(backend):
    y0 = np.array([[2.0, 1.0], [0.0, 3.0]])
    _, Y = kernels.solve_linear2(rotation_field, 0, np.pi / 2, 200, y0=y0, backend=backend)
    np.testing.assert_allclose(Y[-1], np.array([[0, -1], [1, 0]]) @ y0, atol=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_bad_shapes(backend):
    with pytest.raises(ValueError):
        kernels.propagate_linear2(np.zeros((4, 2, 2)), 0.1, backend=backend)


@pytest.mark.skipif(not has_cython(), reason="not built")
@given(st.integers(0, 2**32 - 1), st.integers(1, 300))
def test_backends_agree(seed, n):
    coef = np.random.default_rng(seed).standard_normal((2 * n + 1, 2, 2))
    a = kernels.propagate_linear2(coef, 0.01, backend="python")
    b = kernels.propagate_linear2(coef, 0.01, backend="cython")
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


def test_adaptive_tolerance():
    f = lambda t: np.stack([np.stack([0 * t, -(1 + 0.5 * np.cos(t))], -1),
                            np.stack([1 + 0 * t, 0 * t], -1)], -2)
    _, Y, err = kernels.solve_linear2_adaptive(f, 0, 10.0, tol=1e-11)
    _, Yref = kernels.solve_linear2(f, 0, 10.0, 2**15)
    assert err < 1e-11
    np.testing.assert_allclose(Y[-1], Yref[-1], atol=1e-10)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_forces_pure_python():
    env = dict(os.environ, CFL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cfl import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
