"""Frame-adapted metric, Levi-Civita connection and curvature.

The metric ``λ⊗λ + dλ(·, 𝕁·)`` makes ``R, X1, X2`` orthonormal, so all
tensors are stored by their frame coefficients. Index 0 is R, 1 is X1 and
2 is X2. The curvature convention is
``ℛ(V, W)U = ∇_V ∇_W U - ∇_W ∇_V U - ∇_[V,W] U``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import DEFAULT_FD, FDConfig, bracket_of, derivative_along, dlambda_array, directional_derivative_array
from .core import FIELD_NAMES, ChartPoint, TangentVector, as_point
from .errors import ModelError

_NAMES = FIELD_NAMES


def _require_frame(model):
    if not model.has_frame:
        raise ModelError(f"model {model.name} has no closed-form frame; geometry is unavailable")


def frame_coefficients(model, V, X, chart_id=0):
    """Coefficients of chart vectors V (n, 3) in the frame (R, X1, X2)."""
    _require_frame(model)
    F = np.stack(model.frame_array(X, chart_id), axis=-1)
    return np.linalg.solve(F, np.atleast_2d(V)[..., None])[..., 0]


def J_array(model, V, X, chart_id=0):
    """The almost complex structure 𝕁(αR + aX1 + bX2) = bX1 - aX2."""
    c = frame_coefficients(model, V, X, chart_id)
    _, X1, X2 = model.frame_array(X, chart_id)
    return c[:, 2:3] * X1 - c[:, 1:2] * X2


def metric_array(model, V, W, X, chart_id=0, cfg=DEFAULT_FD):
    """⟨v, w⟩ = λ(v)λ(w) + dλ(v, 𝕁w) with dλ by finite differences."""
    X = model.check_domain(X, chart_id)
    V = np.broadcast_to(np.atleast_2d(V), X.shape)
    W = np.broadcast_to(np.atleast_2d(W), X.shape)
    lam = model.contact_form_array(X, chart_id)
    lv, lw = (lam * V).sum(1), (lam * W).sum(1)
    JW = J_array(model, W, X, chart_id)
    return lv * lw + dlambda_array(model, V, JW, X, chart_id, cfg).value


def metric(model, v: TangentVector, w: TangentVector, cfg=DEFAULT_FD) -> float:
    if v.base != w.base:
        raise ValueError("metric needs vectors at a common base point")
    p = v.base
    return float(metric_array(model, v.components, w.components, p.array()[None, :], p.chart_id, cfg)[0])


# -- connection --------------------------------------------------------------


def connection_coefficients(I, J, K):
    """Γ[i, j, :] = frame coefficients of ∇_{e_i} e_j, shape (n, 3, 3, 3)."""
    I, J, K = (np.atleast_1d(np.asarray(s, dtype=float)) for s in (I, J, K))
    G = np.zeros(I.shape + (3, 3, 3))
    h = K / 2
    G[..., 0, 1, 2] = h
    G[..., 0, 2, 1] = -h
    G[..., 1, 0, 2] = -h
    G[..., 1, 1, 2] = -I
    G[..., 1, 2, 0] = h
    G[..., 1, 2, 1] = I
    G[..., 2, 0, 1] = 1 - h
    G[..., 2, 1, 0] = h - 1
    G[..., 2, 1, 2] = -J
    G[..., 2, 2, 1] = J
    return G


@dataclass(frozen=True)
class ConnectionTable:
    base: ChartPoint
    coefficients: np.ndarray  # (3, 3, 3)

    def entry(self, V, W):
        """Frame coefficients of ∇_V W for frame names V, W."""
        return self.coefficients[_NAMES.index(V), _NAMES.index(W)]

    def as_tangent(self, V, W, model):
        F = np.stack(model.frame_array(self.base.array(), self.base.chart_id), axis=-1)[0]
        return TangentVector(self.base, F @ self.entry(V, W))

    def compatibility_residual(self):
        """max |⟨∇_V W, U⟩ + ⟨W, ∇_V U⟩| over frame fields (V⟨W,U⟩ = 0)."""
        C = self.coefficients
        return float(np.max(np.abs(C + np.swapaxes(C, 1, 2))))


def connection_table(model, p, cfg=DEFAULT_FD) -> ConnectionTable:
    _require_frame(model)
    p = as_point(p)
    X = model.check_domain(p.array(), p.chart_id)
    I, J, K = model.scalars_array(X, p.chart_id)
    return ConnectionTable(p, connection_coefficients(I, J, K)[0])


# -- curvature ---------------------------------------------------------------

TABLE_ENTRIES = [(a, b, c) for (a, b) in ((0, 1), (0, 2), (1, 2)) for c in range(3)]


def curvature_from_scalars(I, J, K, RK, X1K, X2K, X2I, X1J):
    """Curvature tensor T[a, b, c, :] = coefficients of ℛ(e_a, e_b)e_c."""
    I, J, K, RK, X1K, X2K, X2I, X1J = (np.atleast_1d(np.asarray(s, dtype=float))
                                       for s in (I, J, K, RK, X1K, X2K, X2I, X1J))
    T = np.zeros(I.shape + (3, 3, 3, 3))
    K2 = K * K
    # (R, X1)
    T[..., 0, 1, 0, 1] = 0.75 * K2 - K
    T[..., 0, 1, 0, 2] = -0.5 * RK
    T[..., 0, 1, 1, 0] = -0.75 * K2 + K
    T[..., 0, 1, 1, 2] = -J - 0.5 * X1K + K * J
    T[..., 0, 1, 2, 0] = 0.5 * RK
    T[..., 0, 1, 2, 1] = J + 0.5 * X1K - K * J
    # (R, X2)
    T[..., 0, 2, 0, 1] = -0.5 * RK
    T[..., 0, 2, 0, 2] = -0.25 * K2
    T[..., 0, 2, 1, 0] = 0.5 * RK
    T[..., 0, 2, 1, 2] = I * (K - 1) + 0.5 * X2K
    T[..., 0, 2, 2, 0] = 0.25 * K2
    T[..., 0, 2, 2, 1] = -I * (K - 1) - 0.5 * X2K
    # (X1, X2)
    T[..., 1, 2, 0, 1] = -0.5 * X1K - J + K * J
    T[..., 1, 2, 0, 2] = -I + I * K + 0.5 * X2K
    T[..., 1, 2, 1, 0] = 0.5 * X1K - J * K + J
    T[..., 1, 2, 1, 2] = -0.25 * K2 + X2I - X1J + I * I + J * J
    T[..., 1, 2, 2, 0] = -I * (K - 1) - 0.5 * X2K
    T[..., 1, 2, 2, 1] = X1J - X2I + 0.25 * K2 - I * I - J * J
    for a, b in ((0, 1), (0, 2), (1, 2)):
        T[..., b, a, :, :] = -T[..., a, b, :, :]
    return T


def sectional_curvatures(T):
    """sec(R,X1), sec(R,X2), sec(X1,X2) as -⟨ℛ(V,W)V, W⟩."""
    return np.stack([-T[..., 0, 1, 0, 1], -T[..., 0, 2, 0, 2], -T[..., 1, 2, 1, 2]], axis=-1)


@dataclass(frozen=True)
class CurvatureSample:
    base: ChartPoint
    tensor: np.ndarray  # (3, 3, 3, 3)
    error: np.ndarray   # same shape; propagated finite-difference error
    sectional: tuple

    def entry(self, V, W, U):
        return self.tensor[_NAMES.index(V), _NAMES.index(W), _NAMES.index(U)]

    def entries(self):
        """The nine independent table entries keyed like ``"R(R,X1)X2"``."""
        return {f"R({_NAMES[a]},{_NAMES[b]}){_NAMES[c]}": self.tensor[a, b, c] for a, b, c in TABLE_ENTRIES}

    def antisymmetry_residual(self):
        return float(np.max(np.abs(self.tensor + np.swapaxes(self.tensor, 0, 1))))

    def bianchi_residual(self):
        return bianchi_residual(self.tensor)

    def pair_symmetry_residual(self):
        return pair_symmetry_residual(self.tensor)


def bianchi_residual(T):
    """max |ℛ(V,W)U + ℛ(W,U)V + ℛ(U,V)W| over frame triples."""
    S = T + np.transpose(T, (1, 2, 0, 3)) + np.transpose(T, (2, 0, 1, 3))
    return float(np.max(np.abs(S)))


def pair_symmetry_residual(T):
    """max |⟨ℛ(V,W)U, Z⟩ - ⟨ℛ(U,Z)V, W⟩| over frame quadruples."""
    return float(np.max(np.abs(T - np.transpose(T, (2, 3, 0, 1)))))


def derivative_scalars(model, X, chart_id=0, cfg=DEFAULT_FD):
    """R(K), X1(K), X2(K), X2(I), X1(J) with their error estimates."""
    pairs = (("R", "K"), ("X1", "K"), ("X2", "K"), ("X2", "I"), ("X1", "J"))
    vals, errs = [], []
    for V, s in pairs:
        e = directional_derivative_array(model, V, s, X, chart_id, cfg)
        vals.append(e.value)
        errs.append(e.error)
    return vals, errs


def curvature_array(model, X, chart_id=0, cfg=DEFAULT_FD):
    """Table curvature at rows of X: (tensor (n,3,3,3,3), error (n,3,3,3,3))."""
    _require_frame(model)
    X = model.check_domain(X, chart_id)
    I, J, K = model.scalars_array(X, chart_id)
    d, e = derivative_scalars(model, X, chart_id, cfg)
    T = curvature_from_scalars(I, J, K, *d)
    # linear propagation: each derivative enters with coefficient at most one
    E = np.abs(curvature_from_scalars(0 * I, 0 * J, 0 * K, *e))
    return T, E


def curvature(model, p, cfg=DEFAULT_FD) -> CurvatureSample:
    p = as_point(p)
    T, E = curvature_array(model, p.array()[None, :], p.chart_id, cfg)
    return CurvatureSample(p, T[0], E[0], tuple(sectional_curvatures(T[0])))


# -- independent oracle -------------------------------------------------------

ORACLE_INNER = FDConfig(h=1e-3, refinement_levels=3, richardson=True, h_min=1e-7)
ORACLE_OUTER = FDConfig(h=1e-3, refinement_levels=3, richardson=True, h_min=1e-7)


def _structure_functions(model, Y, chart_id, cfg):
    """c[a, b, :] with [e_a, e_b] = c_ab^k e_k, from finite-difference brackets."""
    fields = [lambda Z, i=i: model.frame_array(Z, chart_id)[i] for i in range(3)]
    F = np.stack(model.frame_array(Y, chart_id), axis=-1)
    c = np.zeros((Y.shape[0], 3, 3, 3))
    for a, b in ((0, 1), (0, 2), (1, 2)):
        br = bracket_of(fields[a], fields[b], Y, cfg).value
        coef = np.linalg.solve(F, br[..., None])[..., 0]
        c[:, a, b] = coef
        c[:, b, a] = -coef
    return c


def _koszul(c):
    """Γ_ab^k = ½(c_ab^k - c_bk^a + c_ka^b) for an orthonormal frame."""
    # transpose (0, 3, 1, 2) yields c_bk^a, (0, 2, 3, 1) yields c_ka^b
    return 0.5 * (c - np.transpose(c, (0, 3, 1, 2)) + np.transpose(c, (0, 2, 3, 1)))


def curvature_oracle_array(model, X, chart_id=0, inner=ORACLE_INNER, outer=ORACLE_OUTER):
    """Curvature from first principles: Koszul Christoffels plus nested differences."""
    _require_frame(model)
    X = model.check_domain(X, chart_id)
    n = X.shape[0]
    c = _structure_functions(model, X, chart_id, inner)
    G = _koszul(c)

    def G_flat(Y):
        return _koszul(_structure_functions(model, Y, chart_id, inner)).reshape(Y.shape[0], 27)

    E = model.frame_array(X, chart_id)
    dG = np.stack([derivative_along(G_flat, X, E[a], outer, model.chart(chart_id)).value.reshape(n, 3, 3, 3)
                   for a in range(3)], axis=1)  # dG[:, a, b, d, f] = e_a(Γ_bd^f)

    T = np.zeros((n, 3, 3, 3, 3))
    for a in range(3):
        for b in range(3):
            # ∇_a ∇_b e_d - ∇_b ∇_a e_d - ∇_[a,b] e_d
            T[:, a, b] = (dG[:, a, b] - dG[:, b, a]
                          + np.einsum("nde,nef->ndf", G[:, b], G[:, a])
                          - np.einsum("nde,nef->ndf", G[:, a], G[:, b])
                          - np.einsum("ne,nedf->ndf", c[:, a, b], G))
    return T


def curvature_numeric_oracle(model, p, cfg=None) -> CurvatureSample:
    p = as_point(p)
    inner = ORACLE_INNER if cfg is None else cfg
    T = curvature_oracle_array(model, p.array()[None, :], p.chart_id, inner, ORACLE_OUTER)[0]
    return CurvatureSample(p, T, np.zeros_like(T), tuple(sectional_curvatures(T)))


def connection_oracle_array(model, X, chart_id=0, cfg=ORACLE_INNER):
    """Christoffel coefficients from finite-difference brackets (for testing the table)."""
    X = model.check_domain(X, chart_id)
    return _koszul(_structure_functions(model, X, chart_id, cfg))
