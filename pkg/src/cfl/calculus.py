"""Finite-difference differential operators on chart-defined fields.

Derivatives are central differences along straight chart lines, refined over
``refinement_levels`` halvings of the step and (by default) combined with
Richardson extrapolation. Every result carries an error estimate: the
difference between the last two refinement levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FIELD_NAMES, ChartPoint, TangentVector, as_point
from .errors import DomainError, ParameterError


@dataclass(frozen=True)
class FDConfig:
    h: float = 1e-4
    refinement_levels: int = 3
    richardson: bool = True
    h_min: float = 1e-7

    def __post_init__(self):
        if not self.h > 0:
            raise ParameterError("finite-difference step must be positive")
        if self.refinement_levels < 2:
            raise ParameterError("refinement_levels must be at least 2")
        if not 0 < self.h_min <= self.h:
            raise ParameterError("h_min must lie in (0, h]")

    def with_h(self, h):
        return FDConfig(h=h, refinement_levels=self.refinement_levels,
                        richardson=self.richardson, h_min=min(self.h_min, h))


DEFAULT_FD = FDConfig()


@dataclass(frozen=True)
class Estimate:
    value: np.ndarray
    error: np.ndarray

    def __float__(self):
        return float(np.asarray(self.value).reshape(-1)[0])


def _stencil_steps(X, direction, cfg, domain):
    """Per-row base step, shrunk so that X +- h*direction stays in the chart."""
    n = X.shape[0]
    h = np.full(n, cfg.h)
    if domain is None:
        return h
    allowed = np.full(n, np.inf)
    for i in range(3):
        if domain.periodic[i]:
            continue
        comp = np.abs(direction[:, i])
        dist = np.minimum(X[:, i] - domain.lower[i], domain.upper[i] - X[:, i])
        with np.errstate(divide="ignore", invalid="ignore"):
            lim = np.where(comp > 0, dist / comp, np.inf)
        allowed = np.minimum(allowed, lim)
    h = np.minimum(h, 0.9 * allowed)
    if np.any(h < cfg.h_min) or np.any(~np.isfinite(h)):
        bad = X[np.argmin(np.where(np.isfinite(h), h, -np.inf))]
        raise DomainError(f"finite-difference stencil at {tuple(bad)} leaves the chart")
    return h


def derivative_along(func, X, V, cfg=DEFAULT_FD, domain=None):
    """Directional derivative of ``func`` along ``V`` at the rows of ``X``.

    ``func`` maps an ``(n, 3)`` array to ``(n,)`` or ``(n, k)``. ``V`` is an
    ``(n, 3)`` array of components (extended as constant-coefficient fields).
    Returns an :class:`Estimate` shaped like ``func(X)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = np.broadcast_to(np.atleast_2d(np.asarray(V, dtype=float)), X.shape)
    norm = np.linalg.norm(V, axis=1)
    safe = np.where(norm > 0, norm, 1.0)
    unit = V / safe[:, None]
    h0 = _stencil_steps(X, unit, cfg, domain)

    diffs = []
    for level in range(cfg.refinement_levels):
        h = h0 / 2.0**level
        step = unit * h[:, None]
        fp = np.asarray(func(X + step), dtype=float)
        fm = np.asarray(func(X - step), dtype=float)
        hb = h.reshape((-1,) + (1,) * (fp.ndim - 1))
        diffs.append((fp - fm) / (2.0 * hb))

    if cfg.richardson:
        table = [diffs[0]]
        diag = [diffs[0]]
        for j in range(1, len(diffs)):
            row = [diffs[j]]
            for k in range(1, j + 1):
                fac = 4.0**k
                row.append(row[k - 1] + (row[k - 1] - table[k - 1]) / (fac - 1.0))
            table = row
            diag.append(row[-1])
        value, prev = diag[-1], diag[-2]
    else:
        value, prev = diffs[0], diffs[1]

    nb = norm.reshape((-1,) + (1,) * (value.ndim - 1))
    return Estimate(value * nb, np.abs(value - prev) * nb)


# -- named fields -----------------------------------------------------------


def _field_func(model, field, chart_id):
    if callable(field):
        return field
    if isinstance(field, str):
        if field not in FIELD_NAMES:
            raise ValueError(f"unknown vector field {field!r}")
        return lambda Y: model.field_array(field, Y, chart_id)
    raise TypeError("field must be a name or a callable")


def _field_values(model, field, X, chart_id):
    if isinstance(field, TangentVector):
        return np.broadcast_to(field.components, X.shape)
    if isinstance(field, np.ndarray) and not callable(field):
        return np.broadcast_to(field, X.shape)
    return _field_func(model, field, chart_id)(X)


def _scalar_func(model, scalar, chart_id):
    if callable(scalar):
        return scalar
    return lambda Y: model.scalar_array(scalar, Y, chart_id)


def directional_derivative_array(model, field, scalar, X, chart_id=0, cfg=DEFAULT_FD):
    """Vectorised V(s) for a named (or callable) field and scalar."""
    X = model.check_domain(X, chart_id)
    V = _field_values(model, field, X, chart_id)
    return derivative_along(_scalar_func(model, scalar, chart_id), X, V, cfg,
                            model.chart(chart_id))


def directional_derivative(model, field, scalar, p, cfg=DEFAULT_FD):
    """V(s) at one chart point; returns an :class:`Estimate` of scalars."""
    p = as_point(p)
    est = directional_derivative_array(model, field, scalar, p.array()[None, :], p.chart_id, cfg)
    return Estimate(float(est.value[0]), float(est.error[0]))


def bracket_of(vfunc, wfunc, X, cfg=DEFAULT_FD, domain=None, V=None, W=None):
    """[V, W]^i = V(W^i) - W(V^i) for vector fields given as callables."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = vfunc(X) if V is None else V
    W = wfunc(X) if W is None else W
    dw = derivative_along(wfunc, X, V, cfg, domain)
    dv = derivative_along(vfunc, X, W, cfg, domain)
    return Estimate(dw.value - dv.value, dw.error + dv.error)


def lie_bracket_array(model, V, W, X, chart_id=0, cfg=DEFAULT_FD):
    X = model.check_domain(X, chart_id)
    return bracket_of(_field_func(model, V, chart_id), _field_func(model, W, chart_id), X, cfg,
                      model.chart(chart_id))


def lie_bracket(model, V, W, p, cfg=DEFAULT_FD):
    """[V, W] at ``p`` as a TangentVector; the error estimate is attached as ``.error``."""
    p = as_point(p)
    est = lie_bracket_array(model, V, W, p.array()[None, :], p.chart_id, cfg)
    out = TangentVector(p, est.value[0])
    object.__setattr__(out, "error", est.error[0])
    return out


def dlambda_array(model, v, w, X, chart_id=0, cfg=DEFAULT_FD):
    """dλ(v, w) for constant-coefficient extensions of ``v`` and ``w``.

    With constant coefficients [V, W] = 0, so dλ(v, w) = v(λ(W)) - w(λ(V)).
    """
    X = model.check_domain(X, chart_id)
    v = np.broadcast_to(np.atleast_2d(v), X.shape)
    w = np.broadcast_to(np.atleast_2d(w), X.shape)
    domain = model.chart(chart_id)
    lam_w = lambda Y: np.einsum("ij,ij->i", model.contact_form_array(Y, chart_id), w[: len(Y)])
    lam_v = lambda Y: np.einsum("ij,ij->i", model.contact_form_array(Y, chart_id), v[: len(Y)])
    a = derivative_along(lam_w, X, v, cfg, domain)
    b = derivative_along(lam_v, X, w, cfg, domain)
    return Estimate(a.value - b.value, a.error + b.error)


def dlambda(model, v: TangentVector, w: TangentVector, cfg=DEFAULT_FD):
    if v.base != w.base:
        raise ValueError("dλ needs vectors at a common base point")
    p: ChartPoint = v.base
    est = dlambda_array(model, v.components, w.components, p.array()[None, :], p.chart_id, cfg)
    return float(est.value[0])
