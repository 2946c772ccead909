"""Checks of the frame identities on a model.

Structure equations, their two Jacobi consequences, the rescaling and
covering transforms, and the K-transport ODE along X2 when J ≡ 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .calculus import DEFAULT_FD, FDConfig, directional_derivative_array, lie_bracket_array
from .core import ContactModel, FrameSample
from .errors import ModelError, ParameterError, PreconditionError

FD_TOL = 1e-5
ALGEBRAIC_TOL = 1e-12
#: residuals below this are already at the rounding floor; no h-refinement gain is expected
ROUNDOFF_FLOOR = 1e-11

STRUCTURE_IDS = ("[X2,R]=X1", "[X1,X2]=R+I*X1+J*X2", "[R,X1]=K*X2")
JACOBI_IDS = ("R(I)=J", "I*K+R(J)+X2(K)=0")


@dataclass(frozen=True)
class ResidualReport:
    relation_id: str
    points_tested: int
    max_residual: float
    mean_residual: float
    tolerance: float
    passed: bool

    @classmethod
    def from_residuals(cls, relation_id, residuals, tolerance):
        r = np.asarray(residuals, dtype=float)
        mx = float(np.max(r)) if r.size else 0.0
        return cls(relation_id, int(r.size), mx, float(np.mean(r)) if r.size else 0.0,
                   float(tolerance), bool(mx <= tolerance))

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _chunked(func, X, workers):
    """Evaluate ``func`` on row blocks of X, concurrently when workers > 1."""
    if not workers or workers <= 1 or len(X) < 2 * workers:
        return func(X)
    blocks = np.array_split(X, workers)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(func, blocks))
    return np.concatenate(parts, axis=-1)


def _require_frame(model):
    if not model.has_frame:
        raise ModelError(f"model {model.name} has no closed-form X1, X2; "
                         "frame-level checks are delegated to its Katok cover")


def structure_residuals(model, X, chart_id=0, cfg=DEFAULT_FD):
    """Per-point residual norms of the three bracket relations, shape (3, n)."""
    X = model.check_domain(X, chart_id)
    R, X1, X2 = model.frame_array(X, chart_id)
    I, J, K = model.scalars_array(X, chart_id)
    b1 = lie_bracket_array(model, "X2", "R", X, chart_id, cfg).value - X1
    b2 = (lie_bracket_array(model, "X1", "X2", X, chart_id, cfg).value
          - R - I[:, None] * X1 - J[:, None] * X2)
    b3 = lie_bracket_array(model, "R", "X1", X, chart_id, cfg).value - K[:, None] * X2
    return np.stack([np.linalg.norm(b, axis=1) for b in (b1, b2, b3)])


def jacobi_residuals(model, X, chart_id=0, cfg=DEFAULT_FD):
    """Per-point |R(I) - J| and |IK + R(J) + X2(K)|, shape (2, n)."""
    X = model.check_domain(X, chart_id)
    I, J, K = model.scalars_array(X, chart_id)
    RI = directional_derivative_array(model, "R", "I", X, chart_id, cfg).value
    RJ = directional_derivative_array(model, "R", "J", X, chart_id, cfg).value
    X2K = directional_derivative_array(model, "X2", "K", X, chart_id, cfg).value
    return np.stack([np.abs(RI - J), np.abs(I * K + RJ + X2K)])


def check_structure_equations(model, sample_points, cfg=DEFAULT_FD, tol=FD_TOL, chart_id=0, workers=None):
    """Three :class:`ResidualReport` objects for the bracket relations."""
    _require_frame(model)
    X = np.atleast_2d(sample_points)
    res = _chunked(lambda B: structure_residuals(model, B, chart_id, cfg), X, workers)
    return [ResidualReport.from_residuals(i, r, tol) for i, r in zip(STRUCTURE_IDS, res)]


def check_jacobi_relations(model, sample_points, cfg=DEFAULT_FD, tol=FD_TOL, chart_id=0, workers=None):
    """Two :class:`ResidualReport` objects for R(I) = J and IK + R(J) + X2(K) = 0."""
    _require_frame(model)
    X = np.atleast_2d(sample_points)
    res = _chunked(lambda B: jacobi_residuals(model, B, chart_id, cfg), X, workers)
    return [ResidualReport.from_residuals(i, r, tol) for i, r in zip(JACOBI_IDS, res)]


@dataclass(frozen=True)
class ConvergenceReport:
    relation_id: str
    residual_coarse: float
    residual_fine: float
    ratio: float
    at_floor: bool
    passed: bool


def check_convergence(model, sample_points, h=1e-2, chart_id=0, min_ratio=3.5, floor=ROUNDOFF_FLOOR):
    """Compare plain central differences at steps h and h/2.

    Richardson extrapolation is switched off so that the second-order
    truncation error is visible. Relations whose residual at step h is
    already below ``floor`` are exact for the stencil and are reported as
    ``at_floor`` (passing) instead of being held to a ratio.
    """
    _require_frame(model)
    X = np.atleast_2d(sample_points)
    coarse = FDConfig(h=h, refinement_levels=2, richardson=False, h_min=1e-9)
    fine = coarse.with_h(h / 2)
    out = []
    for ids, fn in ((STRUCTURE_IDS, structure_residuals), (JACOBI_IDS, jacobi_residuals)):
        rc = fn(model, X, chart_id, coarse).max(axis=1)
        rf = fn(model, X, chart_id, fine).max(axis=1)
        for rid, c, f in zip(ids, rc, rf):
            at_floor = c < floor
            ratio = c / f if f > 0 else np.inf
            out.append(ConvergenceReport(rid, float(c), float(f), float(ratio), bool(at_floor),
                                         bool(at_floor or ratio >= min_ratio)))
    return out


# -- algebraic transforms ----------------------------------------------------


def rescale_frame(sample: FrameSample, k) -> FrameSample:
    """Frame of the rescaled form kλ.

    R/k, X1/k, X2 with scalars (I, J/k, K/k²). For K = ±k² this gives
    K̃ = ±1; for other k it is the same algebra applied verbatim.
    """
    k = float(k)
    if not k > 0:
        raise ParameterError("rescaling factor must be positive")
    return FrameSample(sample.R / k, sample.X1 / k, sample.X2, sample.I, sample.J / k, sample.K / k**2)


def covering_transform(I, J, K, c):
    """Scalars of the lifted frame under a c-fold covering: (I, cJ, c²K)."""
    c = float(c)
    if not c > 0:
        raise ParameterError("covering factor must be positive")
    return I, c * J, c * c * K


class RescaledModel(ContactModel):
    """``model`` with contact form kλ and the rescaled frame."""

    def __init__(self, model: ContactModel, k):
        k = float(k)
        if not k > 0:
            raise ParameterError("rescaling factor must be positive")
        _require_frame(model)
        super().__init__(model.charts, {**model.parameters, "k": k}, ())
        self.base, self.k = model, k
        self.name = f"{model.name}*{k:g}"

    def _frame(self, X, chart_id):
        R, X1, X2 = self.base.frame_array(X, chart_id)
        return R / self.k, X1 / self.k, X2

    def _scalars(self, X, chart_id):
        I, J, K = self.base.scalars_array(X, chart_id)
        return I, J / self.k, K / self.k**2

    def _contact_form(self, X, chart_id):
        return self.k * self.base.contact_form_array(X, chart_id)


# -- K transport along X2 -----------------------------------------------------


def check_landsberg_ode(model, x2_flowline, cfg=DEFAULT_FD, tol=1e-8, j_tol=1e-8):
    """Residual of K(t) = K(0) exp(-∫₀ᵗ I) along an X2 flowline.

    Parameters
    ----------
    x2_flowline : Trajectory-like
        Has ``times`` (m,), ``coords`` (m, 3) and ``chart_id``.
    """
    _require_frame(model)
    t = np.asarray(x2_flowline.times, dtype=float)
    X = np.asarray(x2_flowline.coords, dtype=float)
    ch = getattr(x2_flowline, "chart_id", 0)
    I, J, K = model.scalars_array(X, ch)
    jmax = float(np.max(np.abs(J)))
    if jmax > j_tol:
        raise PreconditionError(f"J is not zero along the flowline (max |J| = {jmax:.3g})")
    if len(t) < 3:
        raise ValueError("flowline needs at least three samples")
    intI = cumulative_simpson(I, x=t, initial=0.0)
    res = np.abs(K - K[0] * np.exp(-intI))
    return ResidualReport.from_residuals("K=K0*exp(-int I)", res, tol)


def frame_sample_error(sample: FrameSample, other: FrameSample):
    """Largest difference between two frame samples (components and scalars)."""
    vec = max(np.max(np.abs(getattr(sample, n).components - getattr(other, n).components))
              for n in ("R", "X1", "X2"))
    sca = max(abs(getattr(sample, n) - getattr(other, n)) for n in ("I", "J", "K"))
    return float(max(vec, sca))


__all__ = [
    "ResidualReport", "ConvergenceReport", "check_structure_equations", "check_jacobi_relations",
    "check_convergence", "rescale_frame", "covering_transform", "RescaledModel",
    "check_landsberg_ode", "structure_residuals", "jacobi_residuals", "frame_sample_error",
]
