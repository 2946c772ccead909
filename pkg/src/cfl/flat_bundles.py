"""The K ≡ 0 case: monodromy of the T²-bundle over the circle.

Ĩ is a trigonometric polynomial on [0, l], so its integral is exact and
the ∫Ĩ = 0 obstruction does not depend on a tolerance.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ParameterError

LIOUVILLE_TOL = 1e-8


@dataclass(frozen=True)
class TrigPoly:
    """c + Σ aₖ cos(2πkθ/l) + bₖ sin(2πkθ/l), k = 1, 2, …"""

    const: float = 0.0
    cos: tuple = ()
    sin: tuple = ()

    def __call__(self, theta, period):
        th = np.asarray(theta, dtype=float)
        w = 2 * np.pi / period
        out = np.full(th.shape, float(self.const))
        for k, a in enumerate(self.cos, 1):
            out = out + a * np.cos(k * w * th)
        for k, b in enumerate(self.sin, 1):
            out = out + b * np.sin(k * w * th)
        return out

    def mean(self):
        """Exact mean over one period."""
        return float(self.const)

    def integral(self, period):
        return float(self.const) * float(period)

    def perturbed(self, eps, rng):
        """Every coefficient shifted by ``eps`` times a standard normal draw."""
        return TrigPoly(self.const + eps * rng.standard_normal(),
                        tuple(np.asarray(self.cos) + eps * rng.standard_normal(len(self.cos))),
                        tuple(np.asarray(self.sin) + eps * rng.standard_normal(len(self.sin))))

    @classmethod
    def random(cls, rng, degree=3, scale=0.5, zero_mean=False):
        c = 0.0 if zero_mean else scale * rng.standard_normal()
        return cls(c, tuple(scale * rng.standard_normal(degree)), tuple(scale * rng.standard_normal(degree)))

    _TERM = re.compile(r"([+-]?)\s*(\d*\.?\d*(?:[eE][+-]?\d+)?)\s*\*?\s*(cos|sin)?(?:\((\d*)\))?")

    @classmethod
    def parse(cls, text):
        """Parse e.g. ``"0.2 + 0.5cos(1) - 0.25*sin(2)"``; bare ``cos`` means ``cos(1)``."""
        s = text.replace(" ", "")
        if not s:
            raise ParameterError("empty trigonometric polynomial")
        const, cos, sin = 0.0, {}, {}
        pos = 0
        while pos < len(s):
            m = cls._TERM.match(s, pos)
            if not m or m.end() == pos or (not m.group(2) and not m.group(3)):
                raise ParameterError(f"cannot parse trigonometric polynomial {text!r} at {s[pos:]!r}")
            sign = -1.0 if m.group(1) == "-" else 1.0
            coef = sign * (float(m.group(2)) if m.group(2) else 1.0)
            if m.group(3):
                k = int(m.group(4) or 1)
                if k < 1:
                    raise ParameterError("harmonic index must be at least 1")
                tgt = cos if m.group(3) == "cos" else sin
                tgt[k] = tgt.get(k, 0.0) + coef
            elif m.group(4) is not None:
                raise ParameterError(f"unexpected parenthesis in {text!r}")
            else:
                const += coef
            pos = m.end()
        dense = lambda d: tuple(d.get(k, 0.0) for k in range(1, max(d, default=0) + 1))
        return cls(const, dense(cos), dense(sin))

    def to_dict(self):
        return {"const": self.const, "cos": list(self.cos), "sin": list(self.sin)}


@dataclass(frozen=True)
class MonodromyProblem:
    I_tilde: TrigPoly
    period: float

    def __post_init__(self):
        if not (np.isfinite(self.period) and self.period > 0):
            raise ParameterError("base period must be positive")
        if not isinstance(self.I_tilde, TrigPoly):
            raise ParameterError("I_tilde must be a TrigPoly")

    def matrix(self, theta):
        """M(θ) = [[0, -1], [1, -Ĩ(θ)]], shape (..., 2, 2)."""
        th = np.asarray(theta, dtype=float)
        M = np.zeros(th.shape + (2, 2))
        M[..., 0, 1] = -1.0
        M[..., 1, 0] = 1.0
        M[..., 1, 1] = -self.I_tilde(th, self.period)
        return M


def monodromy(problem: MonodromyProblem, tol=1e-12, backend=None):
    """Φ(l) for Φ' = M(θ)Φ, Φ(0) = Id, with the RK4 kernel."""
    _, Y, _ = kernels.solve_linear2_adaptive(problem.matrix, 0.0, problem.period, tol=tol, backend=backend)
    return Y[-1]


def det_identity_check(problem: MonodromyProblem, tol=1e-12, backend=None):
    """Compare det Φ(l) with exp(-∫Ĩ), the integral taken exactly."""
    Phi = monodromy(problem, tol, backend)
    det = float(np.linalg.det(Phi))
    expected = float(np.exp(-problem.I_tilde.integral(problem.period)))
    err = abs(det - expected)
    return {"det": det, "expected": expected, "error": err, "pass": err < LIOUVILLE_TOL,
            "monodromy": Phi.tolist()}


def integral_obstruction(problem: MonodromyProblem, tol=1e-12, backend=None):
    """True iff ∫Ĩ = 0 exactly; then |det Φ - 1| < 1e-8 is also asserted."""
    zero = problem.I_tilde.mean() == 0.0
    if zero:
        det = float(np.linalg.det(monodromy(problem, tol, backend)))
        if abs(det - 1.0) >= LIOUVILLE_TOL:
            raise AssertionError(f"zero-mean Ĩ but det Φ = {det!r}")
    return zero


# -- flat quotients ----------------------------------------------------------------


@dataclass(frozen=True)
class FlatQuotientDatum:
    label: str
    phi: tuple
    declared_order: object
    deck_description: str
    verified: dict = field(default_factory=dict, compare=False)

    def matrix(self):
        return np.array(self.phi, dtype=np.int64)

    def to_dict(self):
        return {"label": self.label, "phi": [list(r) for r in self.phi], "declared_order": self.declared_order,
                "deck_description": self.deck_description, "verified": self.verified}


def matrix_order(phi, max_n=24):
    """Smallest n ≥ 1 with φⁿ = Id in integer arithmetic, or None."""
    A = np.array(phi, dtype=np.int64)
    P = np.eye(2, dtype=np.int64)
    for n in range(1, max_n + 1):
        P = P @ A
        if np.array_equal(P, np.eye(2, dtype=np.int64)):
            return n
    return None


_CATALOG = (
    ("a", ((1, 0), (0, 1)), 1, "T³ itself, trivial monodromy"),
    ("b", ((-1, 0), (0, -1)), 2, "(θ, y, z) ↦ (θ + π, -y, -z)"),
    ("c", ((0, -1), (1, -1)), 3, "(θ, y, z) ↦ (θ + 2π/3, rotation of (y, z) by 2π/3)"),
    ("d", ((0, -1), (1, 0)), 4, "(θ, y, z) ↦ (θ + π/2, rotation of (y, z) by π/2)"),
    ("e", ((0, -1), (1, 1)), 6, "(θ, y, z) ↦ (θ + π/3, rotation of (y, z) by π/3)"),
    ("f", ((-1, 0), (1, -1)), "affine order 2",
     "Z2 x Z2 generated by (θ, y, z) ↦ (θ + π, -y, -z) and (θ, y, z) ↦ (-θ, y + π, -z + π)"),
)

CATALOG_TRACES = {"a": 2, "b": -2, "c": -1, "d": 0, "e": 1, "f": -2}


def quotient_catalog():
    """The six flat quotient data with det, trace and order checked.

    For (f) no order is claimed: its matrix has infinite order, and the
    recorded order refers to the deck group.
    """
    out = []
    for label, phi, order, deck in _CATALOG:
        A = np.array(phi, dtype=np.int64)
        det = int(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
        ver = {"det": det, "det_is_one": det == 1, "trace": int(np.trace(A)),
               "trace_ok": int(np.trace(A)) == CATALOG_TRACES[label]}
        n = matrix_order(phi)
        ver["matrix_order"] = n
        if isinstance(order, int):
            ver["order_ok"] = n == order
        out.append(FlatQuotientDatum(label, phi, order, deck, ver))
    return out


def catalog_json():
    return json.dumps({"catalog": [d.to_dict() for d in quotient_catalog()]}, ensure_ascii=False)


__all__ = [
    "TrigPoly", "MonodromyProblem", "FlatQuotientDatum", "monodromy", "det_identity_check",
    "integral_obstruction", "matrix_order", "quotient_catalog", "catalog_json", "LIOUVILLE_TOL",
]
