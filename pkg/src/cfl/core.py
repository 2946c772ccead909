"""Basic value types and the contact-model interface.

Every model works on arrays of chart coordinates with shape ``(n, 3)`` so that
finite-difference stencils and sample sweeps stay vectorised. The small
dataclasses here are the single-point views used at the public surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ModelError

TWO_PI = 2.0 * np.pi
FIELD_NAMES = ("R", "X1", "X2")
SCALAR_NAMES = ("I", "J", "K")


@dataclass(frozen=True)
class ChartPoint:
    chart_id: int
    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) != 3:
            raise ValueError("a chart point has exactly three coordinates")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *coords, chart_id=0):
        if len(coords) == 1:
            coords = tuple(coords[0])
        return cls(chart_id, coords)

    def array(self):
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class TangentVector:
    base: ChartPoint
    components: np.ndarray

    def __post_init__(self):
        comp = np.array(self.components, dtype=float).reshape(3)
        if not np.all(np.isfinite(comp)):
            raise ValueError("tangent vector components must be finite")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    def __add__(self, other):
        if other.base != self.base:
            raise ValueError("cannot add tangent vectors at different base points")
        return TangentVector(self.base, self.components + other.components)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return TangentVector(self.base, float(scalar) * self.components)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return TangentVector(self.base, self.components / float(scalar))


@dataclass(frozen=True)
class FrameSample:
    R: TangentVector
    X1: TangentVector
    X2: TangentVector
    I: float
    J: float
    K: float

    @property
    def base(self):
        return self.R.base

    def matrix(self):
        """Columns are the chart components of R, X1, X2."""
        return np.column_stack([self.R.components, self.X1.components, self.X2.components])


@dataclass(frozen=True)
class ClosedOrbitDescriptor:
    initial_point: ChartPoint
    period: float
    analytic: bool = False
    label: str = ""

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("closed orbit period must be positive")


@dataclass(frozen=True)
class ChartDomain:
    """Box domain of one chart.

    Non-periodic axes are open intervals ``(lower, upper)``; periodic axes
    are unconstrained. ``sample_lower``/``sample_upper`` bound the default
    sampling box (a compact subset kept away from coordinate singularities).
    """

    lower: tuple
    upper: tuple
    periodic: tuple = (False, False, False)
    sample_lower: tuple | None = None
    sample_upper: tuple | None = None
    names: tuple = ("x0", "x1", "x2")
    #: closed charts include their faces (used for boundary orbits of toric models)
    closed: bool = False

    def contains(self, X, margin=0.0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.all(np.isfinite(X), axis=1)
        for i in range(3):
            if self.periodic[i]:
                continue
            if self.closed:
                ok &= (X[:, i] >= self.lower[i] + margin) & (X[:, i] <= self.upper[i] - margin)
            else:
                ok &= (X[:, i] > self.lower[i] + margin) & (X[:, i] < self.upper[i] - margin)
        return ok

    def sampling_box(self):
        lo = self.sample_lower if self.sample_lower is not None else self.lower
        hi = self.sample_upper if self.sample_upper is not None else self.upper
        return np.array(lo, dtype=float), np.array(hi, dtype=float)

    def distance_to_boundary(self, X):
        """Smallest distance to a non-periodic face, per row (inf if none)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = np.full(X.shape[0], np.inf)
        for i in range(3):
            if self.periodic[i]:
                continue
            d = np.minimum(d, np.minimum(X[:, i] - self.lower[i], self.upper[i] - X[:, i]))
        return d


class ContactModel:
    """A contact 3-manifold described on one or more charts.

    Subclasses implement ``_frame``, ``_scalars``, ``_contact_form`` and (when
    the frame is unavailable) ``_reeb``. All of them take an ``(n, 3)``
    coordinate array and a chart id. Instances are immutable after
    construction.
    """

    name = "abstract"
    has_frame = True
    #: Scalars known to be constant: name -> value. Used for metadata checks.
    constant_scalars: dict = {}

    def __init__(self, charts: Sequence[ChartDomain], parameters=None, known_orbits=()):
        self.charts = tuple(charts)
        self.parameters = dict(parameters or {})
        self.known_orbits = tuple(known_orbits)

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.parameters.items())
        return f"{type(self).__name__}({params})"

    # -- domain handling -------------------------------------------------

    def chart(self, chart_id=0):
        try:
            return self.charts[chart_id]
        except IndexError:
            raise DomainError(f"model {self.name} has no chart {chart_id}") from None

    def check_domain(self, X, chart_id=0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        inside = self.chart(chart_id).contains(X)
        if not np.all(inside):
            bad = X[~inside][0]
            raise DomainError(f"point {tuple(bad)} outside chart {chart_id} of {self.name}")
        return X

    # -- array API ---------------------------------------------------------

    def frame_array(self, X, chart_id=0):
        """Return ``(R, X1, X2)`` as three ``(n, 3)`` arrays."""
        if not self.has_frame:
            raise ModelError(f"model {self.name} has no closed-form frame fields")
        return self._frame(np.atleast_2d(np.asarray(X, dtype=float)), chart_id)

    def field_array(self, name, X, chart_id=0):
        if name == "R" and not self.has_frame:
            return self.reeb_array(X, chart_id)
        fields = self.frame_array(X, chart_id)
        return fields[FIELD_NAMES.index(name)]

    def reeb_array(self, X, chart_id=0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.has_frame:
            return self._frame(X, chart_id)[0]
        return self._reeb(X, chart_id)

    def scalar_array(self, name, X, chart_id=0):
        """Return the scalar ``name`` ("I", "J" or "K") at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if name in self.constant_scalars and not self.has_frame:
            return np.full(X.shape[0], float(self.constant_scalars[name]))
        if not self.has_frame:
            raise ModelError(f"scalar {name} unavailable on model {self.name}")
        return self._scalars(X, chart_id)[SCALAR_NAMES.index(name)]

    def scalars_array(self, X, chart_id=0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return tuple(self.scalar_array(n, X, chart_id) for n in SCALAR_NAMES)

    def contact_form_array(self, X, chart_id=0):
        """Covector components of the contact form, shape ``(n, 3)``."""
        return self._contact_form(np.atleast_2d(np.asarray(X, dtype=float)), chart_id)

    # -- global representation (optional) ----------------------------------

    #: Models whose Reeb flow is best integrated in an ambient space set this
    #: to an object with ``lift``, ``project``, ``reeb`` and ``chart_for``.
    ambient = None

    # -- subclass hooks ----------------------------------------------------

    def _frame(self, X, chart_id):
        raise ModelError(f"model {self.name} has no closed-form frame fields")

    def _scalars(self, X, chart_id):
        raise ModelError(f"model {self.name} has no closed-form scalars")

    def _contact_form(self, X, chart_id):
        raise NotImplementedError

    def _reeb(self, X, chart_id):
        raise NotImplementedError

    def collapsed_axes(self, X, chart_id=0):
        """Boolean mask of coordinates that carry no information at ``X``.

        An angle whose circle collapses (e.g. on the boundary of a toric
        chart) is ignored when comparing points.
        """
        return np.zeros(np.atleast_2d(X).shape, dtype=bool)


def as_point(p, chart_id=0):
    """Coerce a ChartPoint, tuple or array into a ChartPoint."""
    if isinstance(p, ChartPoint):
        return p
    return ChartPoint(chart_id, tuple(np.asarray(p, dtype=float).ravel()))


def sample_points(model, n=200, seed=0, chart_id=0, box=None):
    """Scrambled Halton points in the model's sampling box, shape ``(n, 3)``."""
    from scipy.stats import qmc

    lo, hi = model.chart(chart_id).sampling_box() if box is None else map(np.asarray, box)
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    unit = sampler.random(n)
    return qmc.scale(unit, lo, hi)
