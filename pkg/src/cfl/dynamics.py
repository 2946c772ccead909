"""Reeb and X2 flows, the linearized Reeb flow, closed orbits and actions.

Flows are integrated with an adaptive 8(5,3) Runge-Kutta pair (DOP853) with
dense output. Models that publish an ambient representation (Katok) are
integrated there, which removes the coordinate poles; chart trajectories stop
with :class:`ChartExitError` when they reach a chart face.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import kernels
from .core import TWO_PI, ChartPoint, ClosedOrbitDescriptor, as_point
from .errors import ChartExitError, DomainError, NoReturnError, NonConvergence, ParameterError, SelfCheckError, StiffnessError

RTOL = 1e-9
ATOL = 1e-12
MIN_STEP = 1e-12


@dataclass
class Trajectory:
    """Integrated flow line.

    ``times`` increase strictly. ``coords`` are chart coordinates with angles
    unwrapped; :attr:`points` reduces angles modulo 2π. For ambient
    integrations ``states`` holds the R⁶ rows and ``chart_ids`` says which
    chart each row of ``coords`` refers to.
    """

    model: object
    field: str
    times: np.ndarray
    states: np.ndarray
    coords: np.ndarray
    chart_ids: np.ndarray
    sol: object
    tol: float
    ambient: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def chart_id(self):
        return int(self.chart_ids[0])

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    @property
    def points(self):
        dom = [self.model.chart(int(c)) for c in self.chart_ids]
        out = []
        for X, d, c in zip(self.coords, dom, self.chart_ids):
            Y = np.where(d.periodic, np.mod(X, TWO_PI), X)
            out.append(ChartPoint(int(c), tuple(Y)))
        return out

    def state(self, t):
        """Dense-output state at times ``t`` (rows)."""
        return np.atleast_2d(self.sol(np.atleast_1d(t)).T)

    def coords_at(self, t, chart_id=None):
        """Chart coordinates at times ``t``; returns ``(chart_id, (n, 3))``."""
        S = self.state(t)
        if self.ambient:
            return self.model.ambient.project(S, chart_id)
        return self.chart_id, S

    def scalar_at(self, name, t):
        """Scalar I, J or K along the trajectory at times ``t``."""
        S = self.state(t)
        if self.ambient:
            return self.model.ambient.scalars(S)["IJK".index(name)]
        return self.model.scalar_array(name, S, self.chart_id)

    def end_point(self):
        return self.points[-1]

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf)
        names = self.model.chart(self.chart_id).names
        w.writerow(["t", "chart_id", *names])
        for t, c, X in zip(self.times, self.chart_ids, self.coords):
            w.writerow([f"{t:.17g}", int(c), *(f"{x:.17g}" for x in X)])
        return buf.getvalue() if fh is None else None

    def to_json(self):
        return json.dumps({
            "model": self.model.name, "parameters": self.model.parameters, "field": self.field,
            "tol": self.tol, "times": self.times.tolist(), "chart_ids": self.chart_ids.tolist(),
            "coords": self.coords.tolist(),
        })


def _chart_exit_event(domain):
    idx = [i for i in range(3) if not domain.periodic[i] and np.isfinite(domain.lower[i])]
    if not idx or domain.closed:
        return None

    def ev(t, x):
        return min(min(x[i] - domain.lower[i], domain.upper[i] - x[i]) for i in idx)

    ev.terminal = True
    ev.direction = -1
    return ev


def _run(rhs, y0, T, tol, atol, events=None, max_step=np.inf):
    try:
        sol = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=tol, atol=atol, dense_output=True,
                        events=events, max_step=max_step)
    except ValueError as exc:
        raise StiffnessError(str(exc)) from exc
    if sol.status == -1:
        raise StiffnessError(f"integration failed: {sol.message}")
    steps = np.diff(sol.t)
    if steps.size and np.min(steps[:-1], initial=np.inf) < MIN_STEP:
        raise StiffnessError("adaptive step collapsed below 1e-12")
    return sol


def integrate_field(model, field_name, p0, T, tol=RTOL, atol=ATOL, use_ambient=None, reverse=False,
                    max_step=np.inf):
    """Integrate the flow of a frame field from ``p0`` over ``[0, T]``.

    Parameters
    ----------
    field_name : {"R", "X1", "X2"}
    reverse : bool
        Integrate ``-V`` instead of ``V`` (times still increase).
    use_ambient : bool, optional
        Default: use the ambient representation for the Reeb field when the
        model has one.
    """
    T = float(T)
    if not T > 0:
        raise ParameterError("integration time must be positive")
    p0 = as_point(p0)
    sign = -1.0 if reverse else 1.0
    if use_ambient is None:
        use_ambient = model.ambient is not None and field_name == "R"
    if use_ambient:
        if field_name != "R":
            raise ParameterError("ambient integration is available for the Reeb field only")
        amb = model.ambient
        y0 = amb.lift(model.check_domain(p0.array(), p0.chart_id), p0.chart_id)[0]
        sol = _run(lambda t, y: sign * amb.reeb(y[None, :])[0], y0, T, tol, atol, max_step=max_step)
        states = sol.y.T
        coords, ids = _project_rows(amb, states)
        return Trajectory(model, ("-" if reverse else "") + field_name, sol.t, states, coords, ids,
                          sol.sol, tol, ambient=True)

    ch = p0.chart_id
    x0 = model.check_domain(p0.array(), ch)[0]
    dom = model.chart(ch)
    ev = _chart_exit_event(dom)
    f = lambda t, x: sign * model.field_array(field_name, x[None, :], ch)[0]
    sol = _run(f, x0, T, tol, atol, events=[ev] if ev else None, max_step=max_step)
    if sol.status == 1:
        te = float(sol.t_events[0][0])
        raise ChartExitError(f"trajectory left chart {ch} of {model.name} at t={te:.6g}", te)
    ids = np.full(len(sol.t), ch)
    return Trajectory(model, ("-" if reverse else "") + field_name, sol.t, sol.y.T, sol.y.T.copy(), ids,
                      sol.sol, tol)


def _project_rows(amb, states):
    ids, coords = amb.project_rows(states)
    return coords, ids


def integrate_reeb(model, p0, T, tol=RTOL, atol=ATOL, **kw) -> Trajectory:
    """Reeb trajectory from ``p0`` over λ-time ``T``."""
    return integrate_field(model, "R", p0, T, tol, atol, **kw)


def integrate_many(model, seeds, T, tol=RTOL, workers=None, **kw):
    """Integrate many seeds concurrently over a shared model."""
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda p: integrate_reeb(model, p, T, tol, **kw), seeds))


# -- linearized flow ---------------------------------------------------------


@dataclass
class LinearizedPath:
    """Φ(t) on the (a, b) coordinates of η = x X1 + y X2, Φ(t)(a, b) = (y, x).

    ``matrices[k]`` solves Φ' = [[0, -K], [1, 0]] Φ with Φ(0) = Id.
    """

    times: np.ndarray
    matrices: np.ndarray
    K: np.ndarray
    a0: float = 1.0
    b0: float = 0.0
    error: float = 0.0

    @property
    def period(self):
        return float(self.times[-1] - self.times[0])

    @property
    def final(self):
        return self.matrices[-1]

    def det_error(self):
        return float(np.max(np.abs(np.linalg.det(self.matrices) - 1.0)))

    def solution(self):
        """(x(t), y(t)) for the initial data x(0) = b0, y(0) = a0."""
        v = self.matrices @ np.array([self.a0, self.b0])
        return v[:, 1], v[:, 0]


def linearized_from_K(Kfunc, T, tol=1e-11, a0=1.0, b0=0.0, backend=None, n_start=256):
    """Integrate Φ' = J0 diag(1, K(t)) Φ on [0, T] with the RK4 kernel."""
    T = float(T)
    if not T > 0:
        raise ParameterError("period must be positive")

    def mfunc(t):
        t = np.asarray(t, dtype=float)
        M = np.zeros(t.shape + (2, 2))
        M[..., 0, 1] = -np.asarray(Kfunc(t), dtype=float) * np.ones_like(t)
        M[..., 1, 0] = 1.0
        return M

    times, Y, err = kernels.solve_linear2_adaptive(mfunc, 0.0, T, tol=tol, n_start=n_start, backend=backend)
    K = mfunc(times)[:, 0, 1] * -1.0
    return LinearizedPath(times, Y, K, a0, b0, err)


def integrate_linearized(model, trajectory: Trajectory, a0=1.0, b0=0.0, tol=1e-11, backend=None):
    """Linearized Reeb flow along ``trajectory`` in the frame trivialization."""
    t0 = trajectory.times[0]
    Kfunc = lambda t: trajectory.scalar_at("K", t0 + np.asarray(t))
    return linearized_from_K(Kfunc, trajectory.duration, tol, a0, b0, backend)


# -- closed orbits -----------------------------------------------------------


def _section_value(model, traj_state, axis, value, ambient):
    """Signed distance to the section for state rows (periodic axes via sin)."""
    if ambient:
        _, X = model.ambient.project(traj_state, 0)
    else:
        X = traj_state
    dom = model.chart(0)
    d = X[:, axis] - value
    if dom.periodic[axis]:
        return np.sin(d), np.cos(d) > 0
    return d, np.ones_like(d, dtype=bool)


def first_return(model, p, axis, value, horizon, tol=RTOL, samples_per_unit=64, t_min=1e-3):
    """First crossing of ``{x[axis] = value}`` in the initial crossing direction.

    Located by sign-change detection on the dense output, then Brent
    bisection and one Newton polish. Returns ``(time, coords)``.
    """
    tr = integrate_reeb(model, p, horizon, tol)
    amb = tr.ambient
    n = max(256, int(samples_per_unit * horizon))
    ts = np.linspace(0.0, tr.times[-1], n + 1)
    g, ok = _section_value(model, tr.state(ts), axis, value, amb)
    # direction of the field through the section at the start
    R0 = model.field_array("R", np.atleast_2d(as_point(p).array()), as_point(p).chart_id)[0]
    sgn = np.sign(R0[axis]) or 1.0
    gfun = lambda t: _section_value(model, tr.state(t), axis, value, amb)[0][0]
    for k in range(n):
        if ts[k + 1] < t_min:
            continue
        g0, g1 = g[k] * sgn, g[k + 1] * sgn
        if g0 < 0 <= g1 and ok[k + 1]:
            lo = max(ts[k], t_min)
            if gfun(lo) * sgn > 0:
                continue
            tc = brentq(gfun, lo, ts[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            # Newton polish with the exact field at the interpolated point
            ch, X = tr.coords_at(tc, 0) if amb else (tr.chart_id, tr.state(tc))
            V = model.field_array("R", X, ch)[0]
            gv = gfun(tc)
            dg = V[axis] * (np.cos(X[0, axis] - value) if model.chart(0).periodic[axis] else 1.0)
            if dg != 0:
                tc = tc - gv / dg
            ch, X = tr.coords_at(tc, 0) if amb else (tr.chart_id, tr.state(tc))
            return tc, X[0]
    raise NoReturnError(f"no return to section x[{axis}]={value} within horizon {horizon}")


def _wrap(d, periodic):
    return np.where(periodic, (d + np.pi) % TWO_PI - np.pi, d)


def find_closed_orbit(model, seed, section, tol=1e-9, horizon=None, max_iter=20, fd_step=1e-6):
    """Newton iteration on the first-return map to a coordinate section.

    Parameters
    ----------
    seed : ChartPoint
        Starting guess; its ``section`` coordinate is reset onto the section.
    section : (axis, value)
        The hyperplane ``x[axis] = value`` of chart 0.
    tol : float
        Required ``|φ_T(p) - p|`` in chart coordinates (angles modulo 2π).
    """
    axis, value = int(section[0]), float(section[1])
    p = as_point(seed).array()
    p[axis] = value
    free = [i for i in range(3) if i != axis]
    per = np.array(model.chart(0).periodic)[free]
    if horizon is None:
        horizon = 4.0 * TWO_PI
    itol = min(tol * 1e-2, 1e-10)

    def F(q):
        x = p.copy()
        x[free] = q
        T, X = first_return(model, ChartPoint(0, tuple(x)), axis, value, horizon, itol)
        return _wrap(X[free] - q, per), T

    q = p[free].copy()
    for _ in range(max_iter):
        r, T = F(q)
        if np.max(np.abs(r)) < tol:
            x = p.copy()
            x[free] = q
            return ClosedOrbitDescriptor(ChartPoint(0, tuple(x)), float(T), False, "return-map fixed point")
        Jm = np.empty((2, 2))
        for j in range(2):
            dq = np.zeros(2)
            dq[j] = fd_step
            Jm[:, j] = (F(q + dq)[0] - F(q - dq)[0]) / (2 * fd_step)
        step = np.linalg.lstsq(Jm, -r, rcond=1e-10)[0]
        q = q + step
    raise NonConvergence(f"return-map Newton did not converge from {seed}")


# -- action ------------------------------------------------------------------


def _line_integral(tr, n):
    t = np.linspace(tr.times[0], tr.times[-1], n + 1)
    S = tr.state(t)
    mid = tr.state(0.5 * (t[1:] + t[:-1]))
    dS = np.diff(S, axis=0)
    if tr.ambient:
        return float(np.sum(tr.model.ambient.contact_form(mid, dS)))
    lam = tr.model.contact_form_array(mid, tr.chart_id)
    return float(np.sum(lam * dS))


def line_integral_of_lambda(tr: Trajectory, n=4096):
    """∫_γ λ by the midpoint chord rule at n and 2n segments plus Richardson."""
    a, b = _line_integral(tr, n), _line_integral(tr, 2 * n)
    return b + (b - a) / 3.0


def action(trajectory: Trajectory, tol=None, check=True):
    """Action of a Reeb trajectory: its elapsed λ-time.

    The line integral of λ is computed independently and must agree within
    ``10 * tol`` (``tol`` defaults to the integration tolerance).
    """
    T = trajectory.duration
    if check:
        tol = trajectory.tol if tol is None else tol
        integral = line_integral_of_lambda(trajectory)
        scale = max(1.0, abs(T))
        if abs(integral - T) > 10 * tol * scale:
            raise SelfCheckError(f"∫λ = {integral!r} disagrees with elapsed time {T!r}")
    return T


def orbit_trajectory(model, orbit: ClosedOrbitDescriptor, tol=RTOL):
    """Reeb trajectory over one period of a closed-orbit descriptor."""
    return integrate_reeb(model, orbit.initial_point, orbit.period, tol)


def closure_error(model, orbit: ClosedOrbitDescriptor, tol=RTOL):
    """|φ_T(p) - p| with angles compared modulo 2π."""
    tr = orbit_trajectory(model, orbit, tol)
    if tr.ambient:
        return float(np.max(np.abs(tr.states[-1] - tr.states[0])))
    per = np.array(model.chart(tr.chart_id).periodic)
    d = np.abs(_wrap(tr.coords[-1] - tr.coords[0], per))
    d[model.collapsed_axes(tr.coords[:1], tr.chart_id)[0]] = 0.0
    return float(np.max(d))


# -- systole of a surface of revolution ----------------------------------------


def min_curvature(profile, n=4001, edge=1e-6):
    """Minimum of K = -m''/m over (0, L), grid search refined by a bounded search."""
    from scipy.optimize import minimize_scalar

    r = np.linspace(edge, profile.length - edge, n)
    K = profile.K(r)
    i = int(np.argmin(K))
    lo, hi = r[max(i - 1, 0)], r[min(i + 1, n - 1)]
    res = minimize_scalar(profile.K, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, K[i])), float(res.x if res.fun <= K[i] else r[i])


def shortest_closed_geodesic(model, psi_seeds=None, horizon=12.0, tol=1e-9):
    """Shortest closed Reeb orbit of a revolution model found by shooting.

    Seeds start on the equator r = L/2 at θ = 0 with directions ψ; Newton on
    the return map to θ = 0 either converges or the seed is dropped. The
    meridian, which crosses the poles of the chart, enters with its closed
    length 2L.
    """
    L = model.profile.length
    if psi_seeds is None:
        psi_seeds = np.linspace(0.3, np.pi - 0.3, 7)
    found = [{"label": "meridian", "length": 2 * L, "seed": None, "analytic": True}]
    for psi in psi_seeds:
        try:
            o = find_closed_orbit(model, (L / 2, 0.0, float(psi)), (1, 0.0), tol=tol, horizon=horizon)
        except (ChartExitError, DomainError, NoReturnError, NonConvergence, ParameterError, StiffnessError):
            continue
        found.append({"label": "shooting", "length": o.period, "seed": float(psi),
                      "point": list(o.initial_point.coords), "analytic": False})
    best = min(found, key=lambda d: d["length"])
    return best, found


def toponogov_check(model, psi_seeds=None):
    """L_min against 2π/√K_min; positive slack means strict inequality."""
    K_min, r_min = min_curvature(model.profile)
    if not K_min > 0:
        raise ParameterError(f"profile is not positively curved (min K = {K_min:.3g})")
    best, found = shortest_closed_geodesic(model, psi_seeds)
    bound = TWO_PI / np.sqrt(K_min)
    L = best["length"]
    return {"L_min": L, "K_min": K_min, "r_K_min": r_min, "bound": float(bound), "slack": float(bound - L),
            "holds": bool(L <= bound * (1 + 1e-9)), "shortest": best, "orbits": found}
