"""Catalog of explicit contact 3-manifolds with closed-form canonical frames.

Each model publishes the contact form, the frame ``R, X1, X2`` and the scalars
``I, J, K`` of the structure equations

    [X2, R] = X1,   [X1, X2] = R + I X1 + J X2,   [R, X1] = K X2

as vectorised closed forms over chart coordinates.
"""

from __future__ import annotations

import numpy as np

from .core import (
    TWO_PI,
    ChartDomain,
    ChartPoint,
    ClosedOrbitDescriptor,
    ContactModel,
    FrameSample,
    TangentVector,
    as_point,
)
from .errors import DomainError, ModelError, ParameterError
from .toric import ToricProfile, toric_contact_form_array, toric_reeb_array

POLE_MARGIN = 1e-3
_INF = np.inf


def ellipsoid_K(a, b):
    """Constant K of the canonical frame on the boundary of E(a, b)."""
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise ParameterError("ellipsoid areas must be positive")
    return 16.0 * (np.pi * (a + b) / (2.0 * a * b)) ** 2


def _zeros(X):
    return np.zeros(X.shape[0])


def _stack(*cols):
    return np.column_stack(cols)


# ---------------------------------------------------------------------------


class DarbouxModel(ContactModel):
    """R³ with λ = dz + y dx.

    The frame ``X1 = ∂x - y ∂z``, ``X2 = ∂y - z ∂x + yz ∂z`` lies in ker λ
    for this sign of the form and gives I = y, J = K = 0.
    """

    name = "darboux"

    def __init__(self):
        dom = ChartDomain((-_INF,) * 3, (_INF,) * 3, sample_lower=(0, 0, 0), sample_upper=(1, 1, 1),
                          names=("x", "y", "z"))
        super().__init__([dom])

    def _frame(self, X, chart_id):
        x, y, z = X.T
        one, zero = np.ones_like(x), np.zeros_like(x)
        return (_stack(zero, zero, one), _stack(one, zero, -y), _stack(-z, one, y * z))

    def _scalars(self, X, chart_id):
        return X[:, 1].copy(), _zeros(X), _zeros(X)

    def _contact_form(self, X, chart_id):
        y = X[:, 1]
        return _stack(y, np.zeros_like(y), np.ones_like(y))


class TorusModel(ContactModel):
    """T³ with coordinates (θ, x, y) and λ = cos θ dx + sin θ dy."""

    name = "t3"
    constant_scalars = {"I": 0.0, "J": 0.0, "K": 0.0}

    def __init__(self):
        dom = ChartDomain((0, 0, 0), (TWO_PI,) * 3, periodic=(True, True, True),
                          sample_lower=(0, 0, 0), sample_upper=(TWO_PI,) * 3, names=("theta", "x", "y"))
        orbit = ClosedOrbitDescriptor(ChartPoint(0, (0.0, 0.0, 0.0)), TWO_PI, True, "theta=0 line")
        super().__init__([dom], known_orbits=[orbit])

    def _frame(self, X, chart_id):
        th = X[:, 0]
        c, s, zero = np.cos(th), np.sin(th), np.zeros_like(th)
        return (_stack(zero, c, s), _stack(zero, -s, c), _stack(np.ones_like(th), zero, zero))

    def _scalars(self, X, chart_id):
        return _zeros(X), _zeros(X), _zeros(X)

    def _contact_form(self, X, chart_id):
        th = X[:, 0]
        return _stack(np.zeros_like(th), np.cos(th), np.sin(th))


# ---------------------------------------------------------------------------


def _qmul_i(q):
    a, b, c, d = q
    return np.array([-b, a, d, -c])


def _qmul_j(q):
    a, b, c, d = q
    return np.array([-c, -d, a, b])


def _qmul_k(q):
    a, b, c, d = q
    return np.array([-d, c, -b, a])


class SphereModel(ContactModel):
    """Unit S³ ⊂ H with left-invariant frame R = qi, X1 = qj, X2 = qk/2 (K = 4).

    Chart: Hopf coordinates (η, ξ1, ξ2) with
    ``q = (cos η cos ξ1, cos η sin ξ1, sin η cos ξ2, sin η sin ξ2)``.
    """

    name = "s3"
    constant_scalars = {"I": 0.0, "J": 0.0, "K": 4.0}

    def __init__(self):
        dom = ChartDomain((0, 0, 0), (np.pi / 2, TWO_PI, TWO_PI), periodic=(False, True, True),
                          sample_lower=(0.1, 0, 0), sample_upper=(np.pi / 2 - 0.1, TWO_PI, TWO_PI),
                          names=("eta", "xi1", "xi2"))
        orbit = ClosedOrbitDescriptor(ChartPoint(0, (np.pi / 4, 0.0, 0.0)), TWO_PI, True, "Hopf fiber")
        super().__init__([dom], known_orbits=[orbit])

    @staticmethod
    def embed(X):
        e, x1, x2 = X.T
        return np.array([np.cos(e) * np.cos(x1), np.cos(e) * np.sin(x1),
                         np.sin(e) * np.cos(x2), np.sin(e) * np.sin(x2)])

    @staticmethod
    def _basis(X):
        e, x1, x2 = X.T
        de = np.array([-np.sin(e) * np.cos(x1), -np.sin(e) * np.sin(x1),
                       np.cos(e) * np.cos(x2), np.cos(e) * np.sin(x2)])
        z = np.zeros_like(e)
        d1 = np.array([-np.cos(e) * np.sin(x1), np.cos(e) * np.cos(x1), z, z])
        d2 = np.array([z, z, -np.sin(e) * np.sin(x2), np.sin(e) * np.cos(x2)])
        return de, d1, d2, np.cos(e) ** 2, np.sin(e) ** 2

    def _pullback(self, X, V):
        de, d1, d2, n1, n2 = self._basis(X)
        return _stack((V * de).sum(0), (V * d1).sum(0) / n1, (V * d2).sum(0) / n2)

    def _frame(self, X, chart_id):
        q = self.embed(X)
        return (self._pullback(X, _qmul_i(q)), self._pullback(X, _qmul_j(q)),
                self._pullback(X, 0.5 * _qmul_k(q)))

    def _scalars(self, X, chart_id):
        return _zeros(X), _zeros(X), np.full(X.shape[0], 4.0)

    def _contact_form(self, X, chart_id):
        qi = _qmul_i(self.embed(X))
        de, d1, d2, _, _ = self._basis(X)
        return _stack((qi * de).sum(0), (qi * d1).sum(0), (qi * d2).sum(0))


# ---------------------------------------------------------------------------


# Rotation taking the x-axis to the z-axis; chart 1 uses spherical
# coordinates of (Q x, Q v), so its poles sit on the equator of chart 0.
_Q1 = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])


def _sphere_embed(X):
    """Unit tangent bundle embedding (r, θ, ψ) -> (x, v) and moving frame."""
    r, th, psi = X.T
    sr, cr, st, ct = np.sin(r), np.cos(r), np.sin(th), np.cos(th)
    x = np.stack([sr * ct, sr * st, cr], axis=-1)
    er = np.stack([cr * ct, cr * st, -sr], axis=-1)
    et = np.stack([-st, ct, np.zeros_like(r)], axis=-1)
    v = np.cos(psi)[:, None] * er + np.sin(psi)[:, None] * et
    return x, v, er, et


def _sphere_coords(x, v):
    """Inverse of :func:`_sphere_embed` (valid off the poles)."""
    r = np.arccos(np.clip(x[:, 2], -1.0, 1.0))
    th = np.arctan2(x[:, 1], x[:, 0])
    X = np.column_stack([r, th, np.zeros_like(r)])
    _, _, er, et = _sphere_embed(X)
    psi = np.arctan2((v * et).sum(1), (v * er).sum(1))
    X[:, 2] = psi
    return X


def _sphere_tangent_basis(X):
    """Images of ∂r, ∂θ, ∂ψ in R⁶, shape (n, 6, 3)."""
    r, th, psi = X.T
    x, v, er, et = _sphere_embed(X)
    sr, cr = np.sin(r), np.cos(r)
    cp, sp = np.cos(psi)[:, None], np.sin(psi)[:, None]
    d_r = np.concatenate([er, -cp * x], axis=1)
    d_er_th = cr[:, None] * et
    d_et_th = -(sr[:, None] * x + cr[:, None] * er)
    d_th = np.concatenate([sr[:, None] * et, cp * d_er_th + sp * d_et_th], axis=1)
    d_psi = np.concatenate([np.zeros_like(x), np.cross(x, v)], axis=1)
    return np.stack([d_r, d_th, d_psi], axis=-1)


class KatokAmbient:
    """Katok Reeb data on the unit tangent bundle of S² inside R⁶.

    State rows are ``(x, v)`` with ``|x| = |v| = 1`` and ``x·v = 0``.
    """

    def __init__(self, a):
        self.a = float(a)

    def reeb(self, Y):
        Y = np.atleast_2d(Y)
        x, v = Y[:, :3], Y[:, 3:]
        ez = np.array([0.0, 0.0, 1.0])
        return np.concatenate([v + self.a * np.cross(ez, x), -x + self.a * np.cross(ez, v)], axis=1)

    def rho(self, Y):
        Y = np.atleast_2d(Y)
        Lz = np.cross(Y[:, :3], Y[:, 3:])[:, 2]
        return 1.0 + self.a * Lz

    def frame(self, Y):
        Y = np.atleast_2d(Y)
        x, v = Y[:, :3], Y[:, 3:]
        w = np.cross(x, v)
        s = np.sqrt(self.rho(Y))[:, None]
        X1 = s * np.concatenate([w, np.zeros_like(w)], axis=1)
        X2 = s * np.concatenate([np.zeros_like(w), w], axis=1)
        return self.reeb(Y), X1, X2

    def scalars(self, Y):
        Y = np.atleast_2d(Y)
        s = np.sqrt(self.rho(Y))
        I = 1.5 * self.a * Y[:, 5] / s
        J = -1.5 * self.a * Y[:, 2] / s
        return I, J, np.ones(Y.shape[0])

    def contact_form(self, Y, Ydot):
        """λ(Ẏ) = ⟨v, ẋ⟩/ρ."""
        Y, Ydot = np.atleast_2d(Y), np.atleast_2d(Ydot)
        return (Y[:, 3:] * Ydot[:, :3]).sum(1) / self.rho(Y)

    def lift(self, X, chart_id=0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x, v, _, _ = _sphere_embed(X)
        if chart_id == 1:
            x, v = x @ _Q1, v @ _Q1  # rows: Qᵀ applied
        return np.concatenate([x, v], axis=1)

    def project(self, Y, chart_id=None):
        """Chart coordinates of ambient rows; chart 0 unless near its poles."""
        Y = np.atleast_2d(Y)
        if chart_id is None:
            chart_id = 0 if np.all(np.abs(Y[:, 2]) < np.cos(0.05)) else 1
        x, v = Y[:, :3], Y[:, 3:]
        if chart_id == 1:
            x, v = x @ _Q1.T, v @ _Q1.T
        return chart_id, _sphere_coords(x, v)

    def project_rows(self, Y):
        """Per-row chart choice: returns ``(chart_ids, coords)``."""
        Y = np.atleast_2d(Y)
        ids = np.where(np.abs(Y[:, 2]) < np.cos(0.05), 0, 1)
        X = _sphere_coords(Y[:, :3], Y[:, 3:])
        if np.any(ids == 1):
            m = ids == 1
            X[m] = _sphere_coords(Y[m, :3] @ _Q1.T, Y[m, 3:] @ _Q1.T)
        return ids, X

    def normalize(self, Y):
        """Project a state back onto the unit tangent bundle."""
        Y = np.atleast_2d(Y).copy()
        x = Y[:, :3] / np.linalg.norm(Y[:, :3], axis=1, keepdims=True)
        v = Y[:, 3:] - (Y[:, 3:] * x).sum(1, keepdims=True) * x
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return np.concatenate([x, v], axis=1)


class KatokModel(ContactModel):
    """Unit tangent bundle of S² with the Katok form, |a| < 1.

    Chart 0 uses (r, θ, ψ) with r ∈ (ε, π - ε); chart 1 is the same chart
    for the sphere rotated so that its poles lie on the equator of chart 0.
    """

    name = "katok"
    constant_scalars = {"K": 1.0}

    def __init__(self, a=0.5, pole_margin=POLE_MARGIN):
        a = float(a)
        if not abs(a) < 1:
            raise ParameterError("Katok parameter must satisfy |a| < 1")
        eps = float(pole_margin)
        dom = ChartDomain((eps, 0, 0), (np.pi - eps, TWO_PI, TWO_PI), periodic=(False, True, True),
                          sample_lower=(0.15, 0, 0), sample_upper=(np.pi - 0.15, TWO_PI, TWO_PI),
                          names=("r", "theta", "psi"))
        # equatorial orbits: angular speed 1 + a eastward, 1 - a westward
        east = ClosedOrbitDescriptor(ChartPoint(0, (np.pi / 2, 0.0, np.pi / 2)), TWO_PI / (1 + a),
                                     False, "equator eastward")
        west = ClosedOrbitDescriptor(ChartPoint(0, (np.pi / 2, 0.0, -np.pi / 2)), TWO_PI / (1 - a),
                                     False, "equator westward")
        orbits = sorted([east, west], key=lambda o: o.period)
        super().__init__([dom, dom], parameters={"a": a}, known_orbits=orbits)
        self.a = a
        self.ambient = KatokAmbient(a)

    def _rho(self, X):
        return 1.0 + self.a * np.sin(X[:, 0]) * np.sin(X[:, 2])

    def _frame(self, X, chart_id):
        if chart_id == 1:
            return self._pull_ambient(X, self.ambient.frame)
        r, th, psi = X.T
        sr, cot = np.sin(r), np.cos(r) / np.sin(r)
        cp, sp = np.cos(psi), np.sin(psi)
        s = np.sqrt(self._rho(X))[:, None]
        R = _stack(cp, sp / sr + self.a, -cot * sp)
        H = _stack(-sp, cp / sr, -cot * cp)
        P = _stack(np.zeros_like(r), np.zeros_like(r), np.ones_like(r))
        return R, s * H, s * P

    def _pull_ambient(self, X, fields):
        Y = self.ambient.lift(X, 1)
        B = _sphere_tangent_basis(X)  # chart-1 basis in rotated ambient coords
        out = []
        for F in fields(Y):
            Fr = np.concatenate([F[:, :3] @ _Q1.T, F[:, 3:] @ _Q1.T], axis=1)
            BtB = np.einsum("nki,nkj->nij", B, B)
            rhs = np.einsum("nki,nk->ni", B, Fr)
            out.append(np.linalg.solve(BtB, rhs[..., None])[..., 0])
        return tuple(out)

    def _scalars(self, X, chart_id):
        if chart_id == 1:
            return self.ambient.scalars(self.ambient.lift(X, 1))
        r, psi = X[:, 0], X[:, 2]
        s = np.sqrt(self._rho(X))
        return (-1.5 * self.a * np.sin(r) * np.cos(psi) / s, -1.5 * self.a * np.cos(r) / s,
                np.ones_like(r))

    def _contact_form(self, X, chart_id):
        r, psi = X[:, 0], X[:, 2]
        if chart_id == 1:
            rho = self.ambient.rho(self.ambient.lift(X, 1))
        else:
            rho = self._rho(X)
        return _stack(np.cos(psi) / rho, np.sin(r) * np.sin(psi) / rho, np.zeros_like(r))


# ---------------------------------------------------------------------------


class RevolutionProfile:
    """Warping function m on (0, L) with closed-form m', m''."""

    def __init__(self, name, m, dm, d2m, length=np.pi, params=None):
        self.name = name
        self.m, self.dm, self.d2m = m, dm, d2m
        self.length = float(length)
        self.params = dict(params or {})
        grid = np.linspace(0, self.length, 401)[1:-1]
        if not np.all(m(grid) > 0):
            raise ParameterError(f"revolution profile {name} must be positive on (0, L)")

    @classmethod
    def round(cls):
        return cls("sin", np.sin, np.cos, lambda r: -np.sin(r))

    @classmethod
    def sin3(cls, c=0.05):
        """m = (sin r + c sin 3r)/(1 + 3c); positive on (0, π) for -1/3 < c < 1."""
        c = float(c)
        if not -1.0 / 3.0 < c < 1.0:
            raise ParameterError("sin3 profile needs -1/3 < c < 1")
        n = 1.0 + 3.0 * c
        return cls("sin3", lambda r: (np.sin(r) + c * np.sin(3 * r)) / n,
                   lambda r: (np.cos(r) + 3 * c * np.cos(3 * r)) / n,
                   lambda r: -(np.sin(r) + 9 * c * np.sin(3 * r)) / n, params={"c": c})

    def K(self, r):
        return -self.d2m(r) / self.m(r)


class RevolutionModel(ContactModel):
    """Unit tangent bundle of a surface of revolution dr² + m(r)² dθ².

    ``R = cos ψ ∂r + (sin ψ/m) ∂θ - (m'/m) sin ψ ∂ψ``, ``X2 = ∂ψ``,
    ``X1 = [X2, R]``, I = J = 0 and K = -m''/m.
    """

    name = "revolution"

    def __init__(self, profile="sin", c=0.05, pole_margin=POLE_MARGIN):
        if isinstance(profile, RevolutionProfile):
            prof = profile
        elif profile == "sin":
            prof = RevolutionProfile.round()
        elif profile == "sin3":
            prof = RevolutionProfile.sin3(c)
        else:
            raise ParameterError(f"unknown revolution profile {profile!r}")
        self.profile = prof
        L, eps = prof.length, float(pole_margin)
        dom = ChartDomain((eps, 0, 0), (L - eps, TWO_PI, TWO_PI), periodic=(False, True, True),
                          sample_lower=(0.15, 0, 0), sample_upper=(L - 0.15, TWO_PI, TWO_PI),
                          names=("r", "theta", "psi"))
        orbits = [ClosedOrbitDescriptor(ChartPoint(0, (L / 2, 0.0, 0.0)), 2 * L, True, "meridian")]
        r_eq = L / 2
        if abs(prof.dm(r_eq)) < 1e-14:
            orbits.insert(0, ClosedOrbitDescriptor(ChartPoint(0, (r_eq, 0.0, np.pi / 2)),
                                                   TWO_PI * float(prof.m(r_eq)), True, "equator"))
        params = {"m": prof.name, **prof.params}
        super().__init__([dom], parameters=params, known_orbits=orbits)

    def _frame(self, X, chart_id):
        r, psi = X[:, 0], X[:, 2]
        m, dm = self.profile.m(r), self.profile.dm(r)
        cp, sp = np.cos(psi), np.sin(psi)
        zero = np.zeros_like(r)
        R = _stack(cp, sp / m, -dm / m * sp)
        X1 = _stack(-sp, cp / m, -dm / m * cp)
        X2 = _stack(zero, zero, np.ones_like(r))
        return R, X1, X2

    def _scalars(self, X, chart_id):
        return _zeros(X), _zeros(X), self.profile.K(X[:, 0])

    def _contact_form(self, X, chart_id):
        r, psi = X[:, 0], X[:, 2]
        return _stack(np.cos(psi), self.profile.m(r) * np.sin(psi), np.zeros_like(r))


# ---------------------------------------------------------------------------


class EllipsoidModel(ContactModel):
    """Boundary of E(a, b) in toric coordinates (t, θ1, θ2).

    Only the Reeb field and the constant K are available; X1 and X2 are not
    known in closed form. Chart 1 is the closed box t ∈ [0, a], on which the
    Reeb formula also describes the two exceptional orbits.
    """

    name = "ellipsoid"
    has_frame = False

    def __init__(self, a=1.0, b=np.sqrt(2.0)):
        a, b = float(a), float(b)
        if not (a > 0 and b > 0):
            raise ParameterError("ellipsoid areas must be positive")
        self.profile = ToricProfile.linear(a, b)
        d = 1e-3 * a
        open_dom = ChartDomain((0, 0, 0), (a, TWO_PI, TWO_PI), periodic=(False, True, True),
                               sample_lower=(d, 0, 0), sample_upper=(a - d, TWO_PI, TWO_PI),
                               names=("t", "theta1", "theta2"))
        closed_dom = ChartDomain((0, 0, 0), (a, TWO_PI, TWO_PI), periodic=(False, True, True),
                                 sample_lower=(0, 0, 0), sample_upper=(a, TWO_PI, TWO_PI),
                                 names=("t", "theta1", "theta2"), closed=True)
        K = ellipsoid_K(a, b)
        short, long_ = sorted([(a, "gamma_plus", (a, 0.0, 0.0)), (b, "gamma_minus", (0.0, 0.0, 0.0))])
        orbits = [ClosedOrbitDescriptor(ChartPoint(1, p), T, True, lab) for T, lab, p in (short, long_)]
        super().__init__([open_dom, closed_dom], parameters={"a": a, "b": b}, known_orbits=orbits)
        self.constant_scalars = {"K": K}
        self.K = K

    def _reeb(self, X, chart_id):
        return toric_reeb_array(self.profile, X, closed=(chart_id == 1))

    def _contact_form(self, X, chart_id):
        return toric_contact_form_array(self.profile, X)

    def collapsed_axes(self, X, chart_id=0):
        X = np.atleast_2d(X)
        out = np.zeros(X.shape, dtype=bool)
        out[:, 1] = X[:, 0] <= 0.0
        out[:, 2] = X[:, 0] >= self.profile.a
        return out


# ---------------------------------------------------------------------------

MODEL_NAMES = ("darboux", "t3", "s3", "katok", "revolution", "ellipsoid")
_ALIASES = {"torus": "t3", "T3": "t3", "sphere": "s3", "S3": "s3", "r3": "darboux"}


def make_model(name, **params) -> ContactModel:
    """Build a catalog model by name.

    Parameters
    ----------
    name : str
        One of ``darboux, t3, s3, katok, revolution, ellipsoid``.
    **params
        ``a`` for katok; ``m`` (profile name) and ``c`` for revolution;
        ``a, b`` for ellipsoid.
    """
    key = _ALIASES.get(name, name).lower()
    try:
        if key == "darboux":
            return DarbouxModel()
        if key == "t3":
            return TorusModel()
        if key == "s3":
            return SphereModel()
        if key == "katok":
            return KatokModel(float(params.get("a", 0.5)))
        if key == "revolution":
            return RevolutionModel(params.get("m", "sin"), float(params.get("c", 0.05)))
        if key == "ellipsoid":
            return EllipsoidModel(float(params.get("a", 1.0)), float(params.get("b", np.sqrt(2.0))))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(str(exc)) from exc
    raise ParameterError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")


def evaluate_frame(model: ContactModel, p) -> FrameSample:
    """Closed-form frame and scalars at one chart point."""
    p = as_point(p)
    X = model.check_domain(p.array(), p.chart_id)
    if not model.has_frame:
        raise ModelError(f"model {model.name} has no closed-form frame fields")
    R, X1, X2 = model.frame_array(X, p.chart_id)
    I, J, K = model.scalars_array(X, p.chart_id)
    return FrameSample(TangentVector(p, R[0]), TangentVector(p, X1[0]), TangentVector(p, X2[0]),
                       float(I[0]), float(J[0]), float(K[0]))


def evaluate_contact_form(model: ContactModel, v: TangentVector) -> float:
    p = v.base
    X = model.check_domain(p.array(), p.chart_id)
    lam = model.contact_form_array(X, p.chart_id)[0]
    return float(lam @ v.components)


def frame_matrix_det(model, X, chart_id=0):
    R, X1, X2 = model.frame_array(X, chart_id)
    return np.linalg.det(np.stack([R, X1, X2], axis=-1))
