"""Pure-Python twin of :mod:`cfl._kernels` (used when the extension is absent)."""

import numpy as np


def propagate_linear2(coef, h, y0=None):
    """Integrate Y' = M(t) Y with classical RK4 on a uniform grid.

    Same contract as the compiled kernel: ``coef`` has shape (2N+1, 2, 2),
    the result has shape (N+1, 2, 2).
    """
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    npts = coef.shape[0]
    if npts < 3 or npts % 2 == 0:
        raise ValueError("coef must hold 2N+1 samples with N >= 1")
    n = (npts - 1) // 2
    flat = coef.reshape(npts, 4).tolist()
    if y0 is None:
        a, b, c, d = 1.0, 0.0, 0.0, 1.0
    else:
        a, b, c, d = (float(v) for v in np.asarray(y0, dtype=np.float64).ravel())
    hh = 0.5 * h
    h6 = h / 6.0
    out = [(a, b, c, d)]
    for i in range(n):
        m00, m01, m10, m11 = flat[2 * i]
        k1 = (m00 * a + m01 * c, m00 * b + m01 * d, m10 * a + m11 * c, m10 * b + m11 * d)
        m00, m01, m10, m11 = flat[2 * i + 1]
        ta, tb, tc, td = a + hh * k1[0], b + hh * k1[1], c + hh * k1[2], d + hh * k1[3]
        k2 = (m00 * ta + m01 * tc, m00 * tb + m01 * td, m10 * ta + m11 * tc, m10 * tb + m11 * td)
        ta, tb, tc, td = a + hh * k2[0], b + hh * k2[1], c + hh * k2[2], d + hh * k2[3]
        k3 = (m00 * ta + m01 * tc, m00 * tb + m01 * td, m10 * ta + m11 * tc, m10 * tb + m11 * td)
        m00, m01, m10, m11 = flat[2 * i + 2]
        ta, tb, tc, td = a + h * k3[0], b + h * k3[1], c + h * k3[2], d + h * k3[3]
        k4 = (m00 * ta + m01 * tc, m00 * tb + m01 * td, m10 * ta + m11 * tc, m10 * tb + m11 * td)
        a += h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        b += h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        c += h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        d += h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        out.append((a, b, c, d))
    return np.array(out, dtype=np.float64).reshape(n + 1, 2, 2)
