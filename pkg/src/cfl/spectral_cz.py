"""Conley-Zehnder index from the spectrum of the asymptotic operator.

For a closed Reeb orbit of period T with K(t) along it, the operator
``L_A v = -J0 v' - A(t) v`` with ``A = diag(1, K)`` acts on T-periodic plane
curves. Its eigenvalues are labelled ``τ_k`` in increasing order so that each
winding ``⌊k/2⌋`` carries exactly two labels, and ``CZ = max{k : τ_k < 0}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, toeplitz

from .core import TWO_PI
from .dynamics import LinearizedPath, integrate_linearized, orbit_trajectory
from .errors import DegenerateEigenfunction, InapplicableError, ParameterError, WindowTooSmall

J0 = np.array([[0.0, -1.0], [1.0, 0.0]])
DEFAULT_GRID = 256
DEFAULT_WINDOW = 6
ACTION_RTOL = 1e-9
# |τ| below this counts as a zero eigenvalue (degenerate orbits); eigen-solver
# round-off at the default sizes is around 1e-13
ZERO_TAU = 1e-9


@dataclass(frozen=True)
class AsymptoticProblem:
    """K sampled on the uniform grid ``t_j = j T / N``, j = 0..N-1."""

    period: float
    K_samples: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K_samples, dtype=float).ravel()
        if not self.period > 0:
            raise ParameterError("period must be positive")
        if not np.all(np.isfinite(K)) or K.size < 1:
            raise ParameterError("K samples must be finite")
        object.__setattr__(self, "K_samples", K)

    @classmethod
    def from_function(cls, Kfunc, T, n=DEFAULT_GRID):
        t = np.arange(n) * (T / n)
        return cls(float(T), np.asarray(Kfunc(t), dtype=float) * np.ones(n))

    @classmethod
    def constant(cls, K, T, n=DEFAULT_GRID):
        return cls(float(T), np.full(n, float(K)))

    @property
    def grid(self):
        n = self.K_samples.size
        return np.arange(n) * (self.period / n)


@dataclass(frozen=True)
class Eigenvalue:
    tau: float
    winding: int
    multiplicity: int
    labels: tuple = ()


@dataclass
class Spectrum:
    """Labelled eigenvalues within ``|winding| <= window``."""

    eigenvalues: list
    window: int
    meta: dict = field(default_factory=dict)

    def labelled(self):
        """List of (k, τ_k, winding) with one row per label."""
        rows = []
        for e in self.eigenvalues:
            for k in e.labels:
                rows.append((k, e.tau, e.winding))
        return sorted(rows)

    def tau(self, k):
        for kk, t, _ in self.labelled():
            if kk == k:
                return t
        raise KeyError(k)

    def taus(self):
        return np.array([t for _, t, _ in self.labelled()])

    def to_json(self):
        return json.dumps({"window": self.window, "eigenvalues": [
            {"tau": e.tau, "winding": e.winding, "multiplicity": e.multiplicity, "labels": list(e.labels)}
            for e in self.eigenvalues], **self.meta})


def _label(entries, window, check=True):
    """Assign labels 2w, 2w+1 per winding w in increasing τ; entries are (τ, w)."""
    by_w = {}
    for tau, w in entries:
        by_w.setdefault(w, []).append(tau)
    out = []
    for w in range(-window, window + 1):
        taus = sorted(by_w.get(w, []))
        if check and len(taus) != 2:
            raise WindowTooSmall(f"winding {w} carries {len(taus)} eigenvalues instead of 2")
        for j, t in enumerate(taus):
            out.append((t, w, 2 * w + j))
    out.sort(key=lambda r: (r[0], r[1]))
    return out


def _group(labelled, rtol=1e-9):
    """Merge equal (τ, winding) pairs into entries with multiplicity."""
    groups = []
    for tau, w, k in labelled:
        if groups and groups[-1][1] == w and abs(groups[-1][0] - tau) <= rtol * max(1.0, abs(tau)):
            groups[-1][2].append(k)
        else:
            groups.append([tau, w, [k]])
    return [Eigenvalue(float(t), int(w), len(ks), tuple(ks)) for t, w, ks in groups]


def constant_K_roots(K, T, m):
    """Roots of (1 + τ)(K + τ) = (2πm/T)² as (smaller, larger)."""
    om2 = (TWO_PI * m / T) ** 2
    s = 1.0 + K
    disc = np.sqrt((1.0 - K) ** 2 + 4.0 * om2)
    return 0.5 * (-s - disc), 0.5 * (-s + disc)


def constant_K_spectrum(K, T, window=DEFAULT_WINDOW) -> Spectrum:
    """Closed-form spectrum for constant K.

    Winding 0 carries -1 and -K. For m >= 1 the larger root of
    ``(1 + τ)(K + τ) = (2πm/T)²`` has winding +m and the smaller -m, each
    with multiplicity two.
    """
    K, T = float(K), float(T)
    if not T > 0:
        raise ParameterError("period must be positive")
    window = int(window)
    entries = [(-1.0, 0), (-K, 0)]
    for m in range(1, window + 1):
        lo, hi = constant_K_roots(K, T, m)
        entries += [(hi, m), (hi, m), (lo, -m), (lo, -m)]
    return Spectrum(_group(_label(entries, window)), window, {"method": "closed-form", "K": K, "T": T})


def _operator_matrix(problem: AsymptoticProblem, n_modes):
    """Hermitian Fourier-Galerkin matrix of L_A on modes |m| <= n_modes."""
    N = problem.K_samples.size
    Khat = np.fft.fft(problem.K_samples) / N
    M = n_modes
    size = 2 * M + 1
    ks = np.arange(size)
    # K̂_{m - m'} for 0 <= m - m' < size, zero past the Nyquist mode
    col = np.where(ks < (N + 1) // 2, Khat[ks % N], 0.0)
    col = np.where(ks == 0, Khat[0].real, col)
    Kt = toeplitz(col, np.conj(col))
    om = TWO_PI * np.arange(-M, M + 1) / problem.period
    H = np.zeros((2 * size, 2 * size), dtype=complex)
    H[0::2, 0::2] = -np.eye(size)
    H[1::2, 1::2] = -Kt
    H[0::2, 1::2] = np.diag(1j * om)
    H[1::2, 0::2] = np.diag(-1j * om)
    return H, om


def _eigenfunction(coeffs, E):
    """Real eigenfunction on a grid from complex Fourier coefficients (size, 2).

    ``E`` is the synthesis matrix exp(i t ω) of that grid.
    """
    v = E @ coeffs
    re, im = v.real, v.imag
    return re if np.linalg.norm(re) >= np.linalg.norm(im) else im


def _winding(v, tau, Kt, T):
    """Winding from the angle law 2π θ' = ⟨(A + τ)w, w⟩, w = v/|v|."""
    nv = np.linalg.norm(v, axis=1)
    if np.min(nv) < 1e-10 * max(1.0, np.max(nv)):
        raise DegenerateEigenfunction("eigenfunction vanishes on the grid; refine the grid")
    w = v / nv[:, None]
    rate = (1.0 + tau) * w[:, 0] ** 2 + (Kt + tau) * w[:, 1] ** 2
    # periodic trapezoid: spectrally accurate for smooth integrands
    total = np.mean(rate) * T / TWO_PI
    # independent check from the polar angle of v
    ang = np.unwrap(np.arctan2(v[:, 1], v[:, 0]))
    loop = np.append(ang, ang[0] + np.round((ang[-1] - ang[0]) / TWO_PI) * TWO_PI)
    turns = (loop[-1] - loop[0]) / TWO_PI
    return total, turns


def discretized_spectrum(problem: AsymptoticProblem, grid_size=None, window=DEFAULT_WINDOW,
                         quad_points=None) -> Spectrum:
    """Spectrum of L_A by Fourier-Galerkin discretization on the periodic grid.

    The operator is assembled on modes ``|m| < grid_size/2`` from the FFT of the
    sampled K. Windings follow from the angle law, cross-checked against the
    polar angle of each eigenfunction.
    """
    if grid_size is not None and grid_size != problem.K_samples.size:
        t = np.arange(grid_size) * (problem.period / grid_size)
        Kfine = np.interp(t, np.append(problem.grid, problem.period),
                          np.append(problem.K_samples, problem.K_samples[0]))
        if np.ptp(problem.K_samples) == 0:
            Kfine = np.full(grid_size, problem.K_samples[0])
        problem = AsymptoticProblem(problem.period, Kfine)
    N = problem.K_samples.size
    if N < 64:
        raise ParameterError("grid_size must be at least 64")
    window = int(window)
    if window < 1:
        raise ParameterError("window must be at least 1")
    M = (N - 1) // 2
    if M < window + 2:
        raise ParameterError("grid too coarse for the requested window")
    H, om = _operator_matrix(problem, M)
    T = problem.period
    nq = quad_points or max(4 * N, 512)
    tq = np.arange(nq) * (T / nq)
    # K on the quadrature grid from its truncated Fourier series
    Khat = np.fft.fft(problem.K_samples) / N
    kk = np.fft.fftfreq(N, d=1.0 / N)
    keep = np.abs(kk) < N / 2
    Kq = np.real(np.exp(1j * TWO_PI / T * np.outer(tq, kk[keep])) @ Khat[keep])

    # sorted eigenvalues carry nondecreasing windings, two per winding, so
    # the low windings occupy a central slice of the spectrum
    mid = 2 * M + 1
    half = 2 * (window + 2)
    lo, hi = max(0, mid - half), min(H.shape[0], mid + half)
    vals, vecs = eigh(H, subset_by_index=[lo, hi - 1])
    E = np.exp(1j * np.outer(tq, om))
    entries = []
    for j in range(len(vals)):
        tau = float(vals[j])
        coeffs = vecs[:, j].reshape(-1, 2)
        v = _eigenfunction(coeffs, E)
        total, turns = _winding(v, tau, Kq, T)
        w = int(np.round(total))
        if abs(total - w) > 1e-3 or abs(turns - w) > 1e-6:
            raise DegenerateEigenfunction(f"winding of τ={tau:.6g} is ill-determined ({total:.6g}, {turns:.6g})")
        if abs(w) <= window:
            entries.append((tau, w))
    spec = Spectrum(_group(_label(entries, window)), window,
                    {"method": "fourier-galerkin", "grid_size": N, "T": T})
    return spec


def cz_index(spectrum: Spectrum, zero_tol=ZERO_TAU) -> int:
    """max{k : τ_k < 0}; the window must contain a nonnegative τ above it.

    Eigenvalues with ``|τ| <= zero_tol`` are treated as exactly zero.
    """
    rows = spectrum.labelled()
    neg = [k for k, t, _ in rows if t < -zero_tol]
    if not neg:
        raise WindowTooSmall("no negative eigenvalue in the window")
    kmax = max(neg)
    if not any(k > kmax and t >= -zero_tol for k, t, _ in rows):
        raise WindowTooSmall("window has no nonnegative eigenvalue above the last negative one")
    if min(k for k, _, _ in rows) >= min(neg) and rows[0][1] >= 0:
        raise WindowTooSmall("window does not reach the negative part of the spectrum")
    return int(kmax)


# -- paths and classification ------------------------------------------------


def symplectic_path(model, orbit, tol=1e-11, backend=None) -> LinearizedPath:
    """Φ over one period of ``orbit`` in the frame trivialization."""
    tr = orbit_trajectory(model, orbit)
    return integrate_linearized(model, tr, tol=tol, backend=backend)


def asymptotic_problem(model, orbit, grid_size=DEFAULT_GRID) -> AsymptoticProblem:
    """K sampled along one period of ``orbit``."""
    tr = orbit_trajectory(model, orbit)
    t = np.arange(grid_size) * (orbit.period / grid_size)
    return AsymptoticProblem(orbit.period, tr.scalar_at("K", t))


CLASSES = ("elliptic", "positive-hyperbolic", "negative-hyperbolic", "degenerate")


def classify_orbit(path, band=1e-8):
    """Orbit type from the eigenvalues of Φ(T).

    ``path`` is a :class:`LinearizedPath` or a 2x2 matrix. Traces within
    ``band`` of 2 mean eigenvalue 1 (degenerate); traces at or below -2 give
    negative real eigenvalues.
    """
    P = path.final if isinstance(path, LinearizedPath) else np.asarray(path, dtype=float)
    tr = float(np.trace(P))
    if abs(tr - 2.0) <= band:
        return "degenerate"
    if abs(tr) < 2.0 - band:
        return "elliptic"
    if tr > 2.0:
        return "positive-hyperbolic"
    return "negative-hyperbolic"


@dataclass
class ActionIndexReport:
    T: float
    cz: int
    K_min: float
    K_max: float
    checks: list

    @property
    def passed(self):
        return all(c["holds"] for c in self.checks)

    def to_dict(self):
        return {"T": self.T, "cz": self.cz, "K_min": self.K_min, "K_max": self.K_max,
                "checks": self.checks, "pass": self.passed}


def check_action_index(T, cz, K_min, K_max) -> ActionIndexReport:
    """Compare the action with the index bounds that apply.

    * ``K_min >= 1``: T <= 2π ⌊(CZ+1)/2⌋
    * ``K_max <= 1``: T >= 2π ⌊CZ/2⌋
    * ``K_min > 0``:  T <= (2π/√K_min) ⌊(CZ+1)/2⌋
    """
    T, cz = float(T), int(cz)
    checks = []
    up = (cz + 1) // 2

    def add(kind, b, slack):
        b, slack = float(b), float(slack)
        # equality cases (degenerate orbits) must not fail on rounding
        checks.append({"bound": kind, "value": b, "holds": slack >= -ACTION_RTOL * max(1.0, abs(b)),
                       "slack": slack})

    if K_min >= 1:
        b = TWO_PI * up
        add("upper", b, b - T)
    if K_max <= 1:
        b = TWO_PI * (cz // 2)
        add("lower", b, T - b)
    if K_min > 0:
        b = TWO_PI / np.sqrt(K_min) * up
        add("scaled-upper", b, b - T)
    if not checks:
        raise InapplicableError("need K_min > 0 or K_max <= 1 on the orbit")
    return ActionIndexReport(T, cz, float(K_min), float(K_max), checks)


def orbit_index(model, orbit, grid_size=DEFAULT_GRID, window=DEFAULT_WINDOW):
    """Spectrum, CZ, classification and action-index report for one orbit."""
    prob = asymptotic_problem(model, orbit, grid_size)
    spec = discretized_spectrum(prob, window=window)
    cz = cz_index(spec)
    path = symplectic_path(model, orbit)
    K = prob.K_samples
    return {
        "T": orbit.period, "K_min": float(K.min()), "K_max": float(K.max()), "spectrum": spec, "cz": cz,
        "classification": classify_orbit(path), "monodromy": path.final,
        "action_index": check_action_index(orbit.period, cz, K.min(), K.max()),
    }
