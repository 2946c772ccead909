"""Star-shaped toric boundaries in coordinates (t, θ1, θ2).

A profile ``f`` on ``[0, a]`` describes the boundary of a toric domain. On
``(0, a) x T²`` the contact form pulls back to ``(t/2π) dθ1 + (f/2π) dθ2`` and
the Reeb field is ``u(t)(-f'(t) ∂θ1 + ∂θ2)`` with ``u = 2π/(f - t f')``.

If a frame ``X1 = A1 ∂t + A2 ∂θ1 + A3 ∂θ2``, ``X2 = B1 ∂t + ...`` exists with
K ≡ 1, every Fourier mode (k1, k2) carried by A1 or B1 obeys
``(f' k1 - k2)² = 1/u²`` on an interval. :func:`mode_scan` tests that relation.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .core import TWO_PI, TangentVector, as_point
from .errors import DomainError, ParameterError

ENDPOINT_MARGIN = 1e-3


class ToricProfile:
    """Boundary profile with analytic first and second derivatives.

    Parameters
    ----------
    a : float
        Right endpoint, ``f(a) = 0``.
    f, df, d2f : callable
        Vectorised closed forms of f, f' and f''.
    name : str
        Label used in reports.
    """

    def __init__(self, a, f, df, d2f, name="custom", params=None):
        a = float(a)
        if not a > 0:
            raise ParameterError("profile endpoint a must be positive")
        self.a = a
        self._f, self._df, self._d2f = f, df, d2f
        self.name = name
        self.params = dict(params or {})
        self.b = float(f(0.0))
        if not self.b > 0:
            raise ParameterError("profile must satisfy f(0) > 0")
        if abs(float(f(a))) > 1e-12 * max(1.0, self.b):
            raise ParameterError(f"profile must vanish at t=a (f(a)={float(f(a))!r})")
        fa = float(df(a))
        if not np.isfinite(fa) or fa == 0.0:
            raise ParameterError("profile needs a finite nonzero slope at t=a")
        inner = np.linspace(0.0, a, 65)[1:-1]
        if not np.all(np.isfinite(df(inner))):
            raise ParameterError("profile slope must be finite on (0, a)")

    def __repr__(self):
        return f"ToricProfile({self.name}, a={self.a!r}, b={self.b!r})"

    # -- closed-form constructors ------------------------------------------

    @classmethod
    def linear(cls, a, b):
        """Ellipsoid profile f(t) = b(1 - t/a)."""
        a, b = _positive(a, "a"), _positive(b, "b")
        return cls(a, lambda t: b * (1.0 - np.asarray(t) / a),
                   lambda t: np.full(np.shape(t), -b / a) if np.ndim(t) else -b / a,
                   lambda t: np.zeros(np.shape(t)) if np.ndim(t) else 0.0,
                   name="linear", params={"a": a, "b": b})

    @classmethod
    def power(cls, a, b, p):
        """f(t) = b(1 - (t/a)^p); strictly concave for p > 1."""
        a, b, p = _positive(a, "a"), _positive(b, "b"), _positive(p, "p")
        return cls(a, lambda t: b * (1.0 - (np.asarray(t) / a) ** p),
                   lambda t: -b * p / a * (np.asarray(t) / a) ** (p - 1.0),
                   lambda t: -b * p * (p - 1.0) / a**2 * (np.asarray(t) / a) ** (p - 2.0),
                   name=f"power{p:g}", params={"a": a, "b": b, "p": p})

    @classmethod
    def quadratic(cls, a, b):
        return cls.power(a, b, 2.0)

    @classmethod
    def convex(cls, a, b, c):
        """f = b(s + c s²)/(1 + c) with s = 1 - t/a; strictly convex for c > 0."""
        a, b = _positive(a, "a"), _positive(b, "b")
        c = float(c)
        if c <= -0.5:
            raise ParameterError("convex profile needs c > -1/2 to stay decreasing")
        n = b / (1.0 + c)
        return cls(a, lambda t: n * ((1 - np.asarray(t) / a) + c * (1 - np.asarray(t) / a) ** 2),
                   lambda t: -n / a * (1.0 + 2.0 * c * (1 - np.asarray(t) / a)),
                   lambda t: 2.0 * n * c / a**2 + 0.0 * np.asarray(t),
                   name=f"convex{c:g}", params={"a": a, "b": b, "c": c})

    @classmethod
    def exponential(cls, a, b, k):
        """f = b(exp(k s) - 1)/(exp(k) - 1), s = 1 - t/a; convex for k > 0."""
        a, b, k = _positive(a, "a"), _positive(b, "b"), float(k)
        if k == 0.0:
            return cls.linear(a, b)
        n = b / np.expm1(k)
        s = lambda t: 1.0 - np.asarray(t) / a
        return cls(a, lambda t: n * np.expm1(k * s(t)),
                   lambda t: -n * k / a * np.exp(k * s(t)),
                   lambda t: n * k**2 / a**2 * np.exp(k * s(t)),
                   name=f"exp{k:g}", params={"a": a, "b": b, "k": k})

    @classmethod
    def cosine(cls, a, b):
        """f = b cos(πt/(2a)); strictly concave."""
        a, b = _positive(a, "a"), _positive(b, "b")
        w = np.pi / (2.0 * a)
        return cls(a, lambda t: b * np.cos(w * np.asarray(t)),
                   lambda t: -b * w * np.sin(w * np.asarray(t)),
                   lambda t: -b * w**2 * np.cos(w * np.asarray(t)),
                   name="cosine", params={"a": a, "b": b})

    @classmethod
    def polynomial(cls, coeffs, a):
        """Polynomial profile ``sum c_k t^k``, differentiated exactly."""
        P = Polynomial(np.asarray(coeffs, dtype=float))
        dP, d2P = P.deriv(1), P.deriv(2)
        return cls(a, P, dP, d2P, name="polynomial", params={"coeffs": list(map(float, coeffs))})

    @classmethod
    def from_spec(cls, kind, a, b, **extra):
        kind = kind.lower()
        if kind in ("linear", "ellipsoid", "e"):
            return cls.linear(a, b)
        if kind == "quadratic":
            return cls.quadratic(a, b)
        if kind == "power":
            return cls.power(a, b, extra.get("p", 2.0))
        if kind == "convex":
            return cls.convex(a, b, extra.get("c", 1.0))
        if kind in ("exp", "exponential"):
            return cls.exponential(a, b, extra.get("k", 1.0))
        if kind == "cosine":
            return cls.cosine(a, b)
        raise ParameterError(f"unknown profile kind {kind!r}")

    # -- evaluation --------------------------------------------------------

    def f(self, t):
        return self._f(t)

    def df(self, t):
        return self._df(t)

    def d2f(self, t):
        return self._d2f(t)

    def u(self, t):
        t = np.asarray(t, dtype=float)
        return TWO_PI / (self.f(t) - t * self.df(t))

    def du(self, t):
        t = np.asarray(t, dtype=float)
        g = self.f(t) - t * self.df(t)
        return TWO_PI * t * self.d2f(t) / g**2

    def scan_grid(self, n=200, margin=ENDPOINT_MARGIN):
        d = margin * self.a
        return np.linspace(d, self.a - d, n)


def _positive(x, name):
    x = float(x)
    if not x > 0:
        raise ParameterError(f"{name} must be positive")
    return x


def toric_reeb_array(profile: ToricProfile, X, closed=False):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = X[:, 0]
    inside = (t >= 0) & (t <= profile.a) if closed else (t > 0) & (t < profile.a)
    if not np.all(inside):
        raise DomainError(f"t={t[~inside][0]!r} outside (0, {profile.a})")
    u = profile.u(t)
    return np.column_stack([np.zeros_like(t), -u * profile.df(t), u])


def toric_reeb(profile: ToricProfile, p) -> TangentVector:
    """Reeb field ``u(t)(-f'(t) ∂θ1 + ∂θ2)`` at an interior point."""
    p = as_point(p)
    return TangentVector(p, toric_reeb_array(profile, p.array()[None, :])[0])


def toric_contact_form_array(profile, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = X[:, 0]
    return np.column_stack([np.zeros_like(t), t / TWO_PI, profile.f(t) / TWO_PI])


# -- frame PDE ---------------------------------------------------------------


def _angle_derivatives(func, X, h=1e-3):
    """∂θ1 and ∂θ2 of a periodic candidate by a 6th-order central stencil."""
    c = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
    out = []
    for axis in (1, 2):
        acc = 0.0
        for j, w in zip(range(-3, 4), c):
            if w == 0.0:
                continue
            Y = X.copy()
            Y[:, axis] += j * h
            acc = acc + w * np.asarray(func(Y), dtype=float)
        out.append(acc / h)
    return out


def frame_pde_residual(profile: ToricProfile, A_fields, B_fields, sample_points, h=1e-3):
    """Pointwise residuals of the six frame equations, shape ``(n, 6)``.

    Columns 0-2 are B_i minus their expressions from ``[R, X1] = X2``;
    columns 3-5 are A_i minus their expressions from ``[X2, R] = X1``.
    Candidate components are callables of an ``(n, 3)`` array.
    """
    X = np.atleast_2d(np.asarray(sample_points, dtype=float))
    t = X[:, 0]
    if np.any((t <= 0) | (t >= profile.a)):
        raise DomainError("frame equations are posed on 0 < t < a")
    u, du, fp, fpp = profile.u(t), profile.du(t), profile.df(t), profile.d2f(t)
    d_uf = du * fp + u * fpp
    A = [np.asarray(F(X), dtype=float) for F in A_fields]
    B = [np.asarray(F(X), dtype=float) for F in B_fields]
    dA = [_angle_derivatives(F, X, h) for F in A_fields]
    dB = [_angle_derivatives(F, X, h) for F in B_fields]
    D = lambda d: fp * d[0] - d[1]  # (f' ∂θ1 - ∂θ2)

    res = np.empty((X.shape[0], 6))
    res[:, 0] = B[0] + u * D(dA[0])
    res[:, 1] = B[1] - (d_uf * A[0] - u * D(dA[1]))
    res[:, 2] = B[2] - (-u * D(dA[2]) - du * A[0])
    res[:, 3] = A[0] - u * D(dB[0])
    res[:, 4] = A[1] - (-B[0] * d_uf + u * D(dB[1]))
    res[:, 5] = A[2] - (B[0] * du + u * D(dB[2]))
    return res


def frame_candidate_independent(profile, A_fields, B_fields, sample_points, tol=1e-10):
    """True iff R, X1, X2 are linearly independent at every sample point."""
    X = np.atleast_2d(np.asarray(sample_points, dtype=float))
    R = toric_reeb_array(profile, X)
    X1 = np.column_stack([np.asarray(F(X), dtype=float) * np.ones(len(X)) for F in A_fields])
    X2 = np.column_stack([np.asarray(F(X), dtype=float) * np.ones(len(X)) for F in B_fields])
    det = np.linalg.det(np.stack([R, X1, X2], axis=-1))
    return bool(np.all(np.abs(det) > tol))


def linear_mode_candidate(profile: ToricProfile, k1, k2, phase=0.0, contact=True):
    """Single-mode rotating candidate (A, B) for a linear profile.

    With ``φ = k1 θ1 + k2 θ2 + phase`` and ``ω = f' k1 - k2``::

        A = c cos φ + d sin φ,   B = u ω (c sin φ - d cos φ)

    For ``contact`` the directions are c = ∂t and d = (f ∂θ1 - t ∂θ2)/2π,
    which span ker λ₀; otherwise c = ∂t and d = ∂θ1. The frame equations
    hold iff (u ω)² = 1.
    """
    fp = float(profile.df(0.5 * profile.a))
    u = float(profile.u(0.5 * profile.a))
    om = fp * k1 - k2

    def dirs(t):
        one, zero = np.ones_like(t), np.zeros_like(t)
        d = (zero, profile.f(t) / TWO_PI, -t / TWO_PI) if contact else (zero, one, zero)
        return (one, zero, zero), d

    def make(i, kind):
        def field(X):
            phi = k1 * X[:, 1] + k2 * X[:, 2] + phase
            c, d = dirs(X[:, 0])
            if kind == "A":
                return c[i] * np.cos(phi) + d[i] * np.sin(phi)
            return u * om * (c[i] * np.sin(phi) - d[i] * np.cos(phi))
        return field

    return tuple(make(i, "A") for i in range(3)), tuple(make(i, "B") for i in range(3))


# -- mode scan ---------------------------------------------------------------


@dataclass(frozen=True)
class ModeScanResult:
    mode: tuple
    residual: np.ndarray
    max_residual: float
    admissible: bool
    #: max |f''| on the samples; an admissible mode forces this to vanish
    curvature_max: float = float("nan")


def _scan_chunk(modes, fp, inv_u2, tol, f2max):
    out = []
    for k1, k2 in modes:
        r = np.abs((fp * k1 - k2) ** 2 - inv_u2)
        mx = float(r.max())
        ok = mx < tol
        out.append(ModeScanResult((k1, k2), r, mx, ok, f2max if ok else float("nan")))
    return out


def mode_scan(profile: ToricProfile, k_max, t_samples=None, tol=1e-9, workers=None):
    """Evaluate the mode relation ``(f' k1 - k2)² = 1/u²`` for every mode.

    Parameters
    ----------
    k_max : int
        Modes with ``|k1|, |k2| <= k_max`` except (0, 0) are scanned.
    t_samples : array, optional
        Sample times; default 200 points of ``[δ, a - δ]`` with δ = 1e-3 a.
    tol : float
        Admissibility tolerance, relative to ``max(1, max 1/u²)``.

    Returns
    -------
    list of ModeScanResult, ordered by (k1, k2).
    """
    k_max = int(k_max)
    if k_max < 1:
        raise ParameterError("k_max must be at least 1")
    t = profile.scan_grid() if t_samples is None else np.asarray(t_samples, dtype=float)
    fp = profile.df(t) * np.ones_like(t)
    inv_u2 = (profile.f(t) - t * profile.df(t)) ** 2 / TWO_PI**2
    atol = tol * max(1.0, float(np.max(inv_u2)))
    f2max = float(np.max(np.abs(profile.d2f(t) * np.ones_like(t))))
    rng = range(-k_max, k_max + 1)
    modes = [(k1, k2) for k1 in rng for k2 in rng if (k1, k2) != (0, 0)]
    if k_max < 16:
        return _scan_chunk(modes, fp, inv_u2, atol, f2max)
    n_chunks = 2 * k_max + 1
    chunks = [modes[i::n_chunks] for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(lambda c: _scan_chunk(c, fp, inv_u2, atol, f2max), chunks))
    return sorted((r for part in parts for r in part), key=lambda r: r.mode)


def admissible_modes(results):
    return sorted(r.mode for r in results if r.admissible)


def scan_margin(results):
    """Smallest max-residual among the non-admissible modes."""
    vals = [r.max_residual for r in results if not r.admissible]
    return min(vals) if vals else float("inf")


def scan_to_csv(results, fh=None):
    """Write ``k1,k2,max_residual,admissible`` rows; returns the text if ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf)
    w.writerow(["k1", "k2", "max_residual", "admissible"])
    for r in results:
        w.writerow([r.mode[0], r.mode[1], f"{r.max_residual:.17g}", int(r.admissible)])
    return buf.getvalue() if fh is None else None


def linear_admissible_modes(a, b, k_max):
    """Exact integer enumeration of admissible modes for a linear profile.

    For f = b(1 - t/a) the relation reads ``(b k1/a + k2)² = b²/4π²``; it is
    solved here in rational form when a/b and b/2π allow, and otherwise by a
    tight float comparison. Used as the oracle for :func:`mode_scan`.
    """
    out = []
    target = b / TWO_PI
    for k1 in range(-k_max, k_max + 1):
        for k2 in range(-k_max, k_max + 1):
            if (k1, k2) == (0, 0):
                continue
            if abs(abs(b / a * k1 + k2) - target) <= 1e-12 * max(1.0, target):
                out.append((k1, k2))
    return out


def nonlinear_examples(a=2 * TWO_PI, b=2 * TWO_PI):
    """Ten strictly convex or strictly concave profiles on (0, a) with f(0) = b."""
    return [
        ToricProfile.power(a, b, 2.0), ToricProfile.power(a, b, 1.5), ToricProfile.power(a, b, 3.0),
        ToricProfile.convex(a, b, 0.5), ToricProfile.convex(a, b, 2.0), ToricProfile.convex(a, b, -0.3),
        ToricProfile.exponential(a, b, 1.0), ToricProfile.exponential(a, b, -1.0),
        ToricProfile.exponential(a, b, 3.0), ToricProfile.cosine(a, b),
    ]


# -- K = 1 locus ---------------------------------------------------------------


def k1_locus_check(a, b, tol=1e-12, return_both=False):
    """Decide whether E(a, b) lies on the K ≡ 1 locus.

    Two forms are computed: ``|K - 1| < tol`` with ``K = 16(π(a+b)/(2ab))²``
    and ``|π(a+b) - ab/2| < tol·ab/(2(s+1))`` with ``s = 2π(a+b)/(ab)``. The
    second threshold is the exact image of the first under ``K = s²``, so the
    two tests agree away from rounding.
    """
    from .models import ellipsoid_K

    K = ellipsoid_K(a, b)
    s = TWO_PI * (a + b) / (a * b)
    c1 = abs(K - 1.0) < tol
    c2 = abs(np.pi * (a + b) - 0.5 * a * b) < tol * a * b / (2.0 * (s + 1.0))
    return (c1, c2) if return_both else c1
