# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 propagation of 2x2 linear systems."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _mul(const double* c, Py_ssize_t k, double* y, double* out) noexcept nogil:
    # out = M_k @ Y, with Y stored row-major as (y00, y01, y10, y11)
    cdef const double* m = c + 4 * k
    cdef double m00 = m[0], m01 = m[1], m10 = m[2], m11 = m[3]
    out[0] = m00 * y[0] + m01 * y[2]
    out[1] = m00 * y[1] + m01 * y[3]
    out[2] = m10 * y[0] + m11 * y[2]
    out[3] = m10 * y[1] + m11 * y[3]


def propagate_linear2(double[:, :, ::1] coef, double h, y0=None):
    """Integrate Y' = M(t) Y with classical RK4 on a uniform grid.

    ``coef`` holds M at the 2N+1 points t0, t0+h/2, t0+h, ... and the
    result has shape (N+1, 2, 2) with Y(t0) = ``y0`` (identity by default).
    """
    cdef Py_ssize_t npts = coef.shape[0]
    if npts < 3 or npts % 2 == 0:
        raise ValueError("coef must hold 2N+1 samples with N >= 1")
    cdef Py_ssize_t n = (npts - 1) // 2
    out_arr = np.empty((n + 1, 2, 2), dtype=np.float64)
    cdef double[:, :, :] out = out_arr
    cdef double[4] y, k1, k2, k3, k4, tmp
    cdef Py_ssize_t i, j
    cdef double hh = 0.5 * h
    if y0 is None:
        y[0] = 1.0; y[1] = 0.0; y[2] = 0.0; y[3] = 1.0
    else:
        start = np.asarray(y0, dtype=np.float64).reshape(2, 2)
        y[0] = start[0, 0]; y[1] = start[0, 1]; y[2] = start[1, 0]; y[3] = start[1, 1]
    cdef const double* c = &coef[0, 0, 0]
    with nogil:
        out[0, 0, 0] = y[0]; out[0, 0, 1] = y[1]; out[0, 1, 0] = y[2]; out[0, 1, 1] = y[3]
        for i in range(n):
            _mul(c, 2 * i, y, k1)
            for j in range(4):
                tmp[j] = y[j] + hh * k1[j]
            _mul(c, 2 * i + 1, tmp, k2)
            for j in range(4):
                tmp[j] = y[j] + hh * k2[j]
            _mul(c, 2 * i + 1, tmp, k3)
            for j in range(4):
                tmp[j] = y[j] + h * k3[j]
            _mul(c, 2 * i + 2, tmp, k4)
            for j in range(4):
                y[j] = y[j] + h * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0
            out[i + 1, 0, 0] = y[0]; out[i + 1, 0, 1] = y[1]
            out[i + 1, 1, 0] = y[2]; out[i + 1, 1, 1] = y[3]
    return out_arr
