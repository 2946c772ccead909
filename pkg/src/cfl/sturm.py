"""Oscillation of the Cartan scalar I along Reeb lines.

When X2(K) = 0 the scalar I(t) = I∘φ(t) solves Ï + K(t) I = 0, so Sturm
comparison bounds the gaps between its zeros and the action of closed
orbits. Anything with ``times`` and ``scalar_at(name, t)`` can be analysed:
a :class:`~cfl.dynamics.Trajectory` or a :class:`ScalarPath` built from the
ODE directly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .calculus import DEFAULT_FD, directional_derivative_array
from .errors import HypothesisError, IdenticallyZero, ParameterError

ZERO_THRESHOLD = 1e-12
X2K_TOL = 1e-6
STENCIL_H = 1e-2
SAMPLES_PER_UNIT = 64


@dataclass
class ScalarPath:
    """I(t), J(t) = İ(t) and K(t) from a direct solve of Ï + K I = 0."""

    times: np.ndarray
    sol: object
    Kfunc: object

    def scalar_at(self, name, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if name == "K":
            return np.asarray(self.Kfunc(t), dtype=float) * np.ones_like(t)
        y = self.sol(t)
        if name == "I":
            return y[0]
        if name == "J":
            return y[1]
        raise ParameterError(f"unknown scalar {name!r}")


def _as_func(q):
    if callable(q):
        return lambda t: np.asarray(q(np.asarray(t, dtype=float)), dtype=float) * np.ones_like(t, dtype=float)
    c = float(q)
    return lambda t: np.full(np.shape(t), c)


def solve_sturm_ode(K, I0, J0, T, tol=1e-12) -> ScalarPath:
    """Integrate Ï = -K(t) I on [0, T] with I(0) = I0, İ(0) = J0."""
    Kf = _as_func(K)
    T = float(T)
    if not T > 0:
        raise ParameterError("window length must be positive")
    sol = solve_ivp(lambda t, y: [y[1], -Kf(np.array([t]))[0] * y[0]], (0.0, T), [float(I0), float(J0)],
                    method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=True)
    return ScalarPath(sol.t, sol.sol, Kf)


# -- ODE residual --------------------------------------------------------------


def _grid(t0, t1, per_unit=SAMPLES_PER_UNIT):
    n = max(int(np.ceil((t1 - t0) * per_unit)), 16)
    return np.linspace(t0, t1, n + 1)


def _chart_rows(traj, t):
    """Group the points of ``traj`` at times ``t`` by chart: {chart_id: coords}."""
    S = traj.state(t)
    if getattr(traj, "ambient", False):
        ids, X = traj.model.ambient.project_rows(S)
    else:
        ids, X = np.full(len(t), traj.chart_id), S
    return {int(c): X[ids == c] for c in np.unique(ids)}


def x2_of_K(model, traj, t, cfg=DEFAULT_FD):
    """|X2(K)| at the trajectory points at times ``t``."""
    out = []
    for ch, X in _chart_rows(traj, t).items():
        out.append(np.abs(directional_derivative_array(model, "X2", "K", X, ch, cfg).value))
    return np.concatenate(out)


def _second_derivative(f, t, h=STENCIL_H):
    """Five-point central stencil for f'' at ``t``."""
    return (-f(t - 2 * h) + 16 * f(t - h) - 30 * f(t) + 16 * f(t + h) - f(t + 2 * h)) / (12 * h * h)


def jacobi_residual(model, reeb_trajectory, cfg=DEFAULT_FD, x2k_tol=X2K_TOL, window=None):
    """max |Ï + K I| along ``reeb_trajectory``.

    The hypothesis X2(K) = 0 is checked at the sample points first when a
    model is given (``model=None`` skips it for a bare :class:`ScalarPath`).
    """
    tr = reeb_trajectory
    t0, t1 = (tr.times[0], tr.times[-1]) if window is None else map(float, window)
    h = min(STENCIL_H, (t1 - t0) / 8)
    t = _grid(t0 + 2 * h, t1 - 2 * h)
    if model is not None:
        x2k = float(np.max(x2_of_K(model, tr, t[:: max(1, len(t) // 64)], cfg)))
        if x2k > x2k_tol:
            raise HypothesisError(f"K is not constant along X2 (max |X2(K)| = {x2k:.3g})")
    I = lambda s: tr.scalar_at("I", s)
    res = _second_derivative(I, t, h) + tr.scalar_at("K", t) * I(t)
    return float(np.max(np.abs(res)))


# -- zeros and gaps --------------------------------------------------------------


@dataclass
class OscillationReport:
    zeros: list
    gaps: list
    inf_K: float
    sup_K: float
    bound_upper: float
    bound_lower_per_pair: float
    equal_value_checks: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        d = asdict(self)
        d["pass"] = self.passed
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    def zeros_csv(self):
        return "index,t\n" + "".join(f"{i},{z:.17g}\n" for i, z in enumerate(self.zeros))


def level_crossings(f, t0, t1, level=0.0, per_unit=SAMPLES_PER_UNIT, xtol=1e-14):
    """Times in [t0, t1] where ``f`` crosses ``level``, by sign change and brentq."""
    t = _grid(t0, t1, per_unit)
    v = f(t) - level
    out = []
    for i in np.nonzero(v[:-1] * v[1:] <= 0)[0]:
        a, b = t[i], t[i + 1]
        if v[i] == 0:
            z = a
        elif v[i + 1] == 0:
            continue
        else:
            z = brentq(lambda s: f(np.array([s]))[0] - level, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
        if not out or z - out[-1] > 1e-9:
            out.append(float(z))
    return out


def zero_gaps(model, reeb_trajectory, window=None, levels=(0.5, -0.5)) -> OscillationReport:
    """Zeros of I(t), their gaps, and both Sturm bounds.

    ``levels`` are fractions of max |I|; for each, the equal-value times
    t₁ < … < tₙ are checked against tₙ - t₁ > (n-2)π/√sup K.
    """
    tr = reeb_trajectory
    t0, t1 = (tr.times[0], tr.times[-1]) if window is None else map(float, window)
    I = lambda s: tr.scalar_at("I", s)
    t = _grid(t0, t1)
    Iv = I(t)
    amp = float(np.max(np.abs(Iv)))
    if amp < ZERO_THRESHOLD:
        raise IdenticallyZero(f"I vanishes identically on [{t0:g}, {t1:g}]")
    K = tr.scalar_at("K", t)
    inf_K, sup_K = float(K.min()), float(K.max())
    up = 2 * np.pi / np.sqrt(inf_K) if inf_K > 0 else np.inf
    low = np.pi / np.sqrt(sup_K) if sup_K > 0 else 0.0
    zeros = level_crossings(I, t0, t1)
    gaps = list(np.diff(zeros)) if len(zeros) > 1 else []
    rep = OscillationReport(zeros, [float(g) for g in gaps], inf_K, sup_K, float(up), float(low))
    if inf_K > 0:
        for i, g in enumerate(gaps):
            if not g < up:
                rep.violations.append({"kind": "gap", "index": i, "gap": float(g), "bound": float(up)})
    if sup_K > 0:
        for frac in (0.0, *levels):
            ts = level_crossings(I, t0, t1, frac * amp)
            n = len(ts)
            if n < 3:
                continue
            span, need = ts[-1] - ts[0], (n - 2) * low
            rep.equal_value_checks.append({"level": frac * amp, "n": n, "span": span, "bound": need,
                                           "holds": bool(span > need)})
            if not span > need:
                rep.violations.append({"kind": "equal-value", "level": frac * amp, "span": span, "bound": need})
    return rep


def action_lower_bound(T, K_max):
    """Check T ≥ π/√max K for a closed orbit; returns a dict with the slack."""
    K_max = float(K_max)
    if not K_max > 0:
        raise ParameterError("the action bound needs max K > 0")
    b = np.pi / np.sqrt(K_max)
    return {"T": float(T), "bound": float(b), "slack": float(T - b), "holds": bool(T >= b)}


# -- comparison ------------------------------------------------------------------


@dataclass
class ComparisonResult:
    found: bool
    phi2_zeros: list
    phi1_zeros: list
    intervals: list

    def __bool__(self):
        return self.found


def sturm_compare(q1, q2, phi2_zeros, tol=1e-12, per_unit=256) -> ComparisonResult:
    """Certify a zero of φ₁ strictly between consecutive zeros of φ₂.

    φ₁ solves ÿ + q₁ y = 0 from the first φ₂-zero with y = 0, ẏ = 1.
    ``q1`` and ``q2`` are callables or constants.
    """
    z = np.sort(np.asarray(phi2_zeros, dtype=float))
    if len(z) < 2:
        raise ParameterError("need at least two zeros of phi2")
    f1, f2 = _as_func(q1), _as_func(q2)
    t = _grid(z[0], z[-1], per_unit)
    d = f1(t) - f2(t)
    scale = max(1.0, float(np.max(np.abs(f2(t)))))
    if np.min(d) < -1e-12 * scale:
        raise HypothesisError(f"q1 < q2 somewhere on the interval (min q1-q2 = {np.min(d):.3g})")
    if np.max(d) <= 1e-12 * scale:
        raise HypothesisError("q1 and q2 coincide; the comparison needs q1 != q2")
    sol = solve_ivp(lambda s, y: [y[1], -f1(np.array([s]))[0] * y[0]], (z[0], z[-1]), [0.0, 1.0],
                    method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=True)
    phi1 = lambda s: sol.sol(np.atleast_1d(s))[0]
    zs = [s for s in level_crossings(phi1, z[0], z[-1], per_unit=per_unit) if s > z[0] + 1e-9]
    rows = []
    for a, b in zip(z[:-1], z[1:]):
        inside = [s for s in zs if a + 1e-9 < s < b - 1e-9]
        rows.append({"interval": [float(a), float(b)], "zeros": inside, "certified": bool(inside)})
    return ComparisonResult(all(r["certified"] for r in rows), z.tolist(), zs, rows)


# -- K < 0 -------------------------------------------------------------------------


def hyperbolic_growth(K_negative, I0, J0, T, tol=1e-13, samples=4096):
    """max |I| on [0, T] over |I(0)| + |J(0)| for Ï = -K I with constant K < 0."""
    K = float(K_negative)
    if not K < 0:
        raise ParameterError("hyperbolic growth needs a negative constant K")
    if I0 == 0 and J0 == 0:
        raise ParameterError("initial data must be nonzero")
    path = solve_sturm_ode(K, I0, J0, T, tol=tol)
    t = np.linspace(0.0, float(T), samples + 1)
    return float(np.max(np.abs(path.scalar_at("I", t))) / (abs(I0) + abs(J0)))


def energy_drift(K, I0, J0, T, tol=1e-12):
    """max |E(t) - E(0)| for E = İ² + K I² with constant K."""
    path = solve_sturm_ode(K, I0, J0, T, tol)
    t = _grid(0.0, float(T))
    I, J = path.scalar_at("I", t), path.scalar_at("J", t)
    E = J * J + float(K) * I * I
    return float(np.max(np.abs(E - E[0])))


__all__ = [
    "ScalarPath", "OscillationReport", "ComparisonResult", "solve_sturm_ode", "jacobi_residual", "x2_of_K",
    "zero_gaps", "level_crossings", "action_lower_bound", "sturm_compare", "hyperbolic_growth",
    "energy_drift",
]
