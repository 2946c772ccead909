import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfl.dynamics import linearized_from_K
from cfl.errors import InapplicableError, ParameterError, WindowTooSmall
from cfl.models import ellipsoid_K, make_model
from cfl.spectral_cz import (
    AsymptoticProblem, Spectrum, check_action_index, classify_orbit, constant_K_roots, constant_K_spectrum,
    cz_index, discretized_spectrum, orbit_index,
)

TWO_PI = 2 * np.pi
K_ELL = ellipsoid_K(1, np.sqrt(2))


def rot(a):
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def test_paths_for_constant_K():
    np.testing.assert_allclose(linearized_from_K(lambda t: 1 + 0 * t, TWO_PI).final, np.eye(2), atol=1e-9)
    np.testing.assert_allclose(linearized_from_K(lambda t: 0 * t, TWO_PI).final, [[1, 0], [TWO_PI, 1]], atol=1e-9)
    np.testing.assert_allclose(linearized_from_K(lambda t: 4 + 0 * t, TWO_PI).final, np.eye(2), atol=1e-8)


def test_closed_form_K1():
    s = constant_K_spectrum(1.0, TWO_PI)
    assert s.tau(0) == s.tau(1) == -1.0
    assert s.tau(-2) == s.tau(-1) == pytest.approx(-2.0)
    assert s.tau(2) == s.tau(3) == pytest.approx(0.0, abs=1e-15)
    assert cz_index(s) == 1


def test_closed_form_roots_solve_dispersion():
    for K, T, m in [(K_ELL, 1.0, 1), (0.3, 2.0, 3), (-2.0, 5.0, 2)]:
        for tau in constant_K_roots(K, T, m):
            assert (1 + tau) * (K + tau) == pytest.approx((TWO_PI * m / T) ** 2, rel=1e-12)


def test_ellipsoid_closed_form():
    s = constant_K_spectrum(K_ELL, 1.0)
    assert s.tau(2) == pytest.approx(-0.655, abs=5e-3)
    assert cz_index(s) == 3
    assert cz_index(constant_K_spectrum(K_ELL, np.sqrt(2))) == 5


@pytest.mark.parametrize("K,T", [(1.0, TWO_PI), (0.0, TWO_PI), (K_ELL, 1.0), (K_ELL, np.sqrt(2)), (4.0, TWO_PI),
                                 (-0.5, 3.0)])
def test_discretized_matches_closed_form(K, T):
    a = constant_K_spectrum(K, T)
    b = discretized_spectrum(AsymptoticProblem.constant(K, T))
    assert [r[0] for r in a.labelled()] == [r[0] for r in b.labelled()]
    assert [r[2] for r in a.labelled()] == [r[2] for r in b.labelled()]
    np.testing.assert_allclose(a.taus(), b.taus(), atol=1e-6)
    assert cz_index(a) == cz_index(b)


def test_t3_spectrum():
    s = discretized_spectrum(AsymptoticProblem.constant(0.0, TWO_PI))
    assert sorted([s.tau(0), s.tau(1)]) == pytest.approx([-1.0, 0.0], abs=1e-9)
    assert cz_index(s) == 0


def test_perturbed_K1():
    f = lambda t: 1 + 0.1 * np.sin(t)
    s0 = constant_K_spectrum(1.0, TWO_PI)
    s = discretized_spectrum(AsymptoticProblem.from_function(f, TWO_PI))
    for (k0, t0, w0), (k, t, w) in zip(s0.labelled(), s.labelled()):
        assert (k0, w0) == (k, w)
        assert abs(t - t0) < 0.15
    fine = discretized_spectrum(AsymptoticProblem.from_function(f, TWO_PI, n=512))
    np.testing.assert_allclose(s.taus(), fine.taus(), atol=1e-10)
    # K oscillates around 1 with period 2π: the path lies in the second
    # Mathieu instability tongue, so Φ(T) is positive hyperbolic and CZ even
    cz = cz_index(s)
    path = linearized_from_K(f, TWO_PI)
    assert cz == 2
    assert classify_orbit(path) == "positive-hyperbolic"


def test_classify_examples():
    assert classify_orbit(rot(TWO_PI / np.sqrt(2))) == "elliptic"
    assert classify_orbit(np.diag([2.0, 0.5])) == "positive-hyperbolic"
    assert classify_orbit(np.diag([-2.0, -0.5])) == "negative-hyperbolic"
    assert classify_orbit(np.eye(2)) == "degenerate"


@given(st.floats(0.2, 4.0), st.floats(0.5, 8.0), st.floats(-0.3, 0.3), st.integers(1, 3))
def test_parity_rule(K0, T, eps, k):
    f = lambda t: K0 + eps * K0 * np.cos(TWO_PI * k * t / T)
    path = linearized_from_K(f, T)
    cls = classify_orbit(path, band=1e-6)
    if cls == "degenerate" or abs(abs(np.trace(path.final)) - 2) < 1e-6:
        return
    cz = cz_index(discretized_spectrum(AsymptoticProblem.from_function(f, T)))
    assert (cz % 2 == 0) == (cls == "positive-hyperbolic")


@given(st.floats(0.0, 3.0), st.floats(0.5, 6.0), st.floats(0.0, 1.0))
def test_monotone_in_K(K0, T, bump):
    f = lambda t: K0 + 0.5 * np.sin(TWO_PI * t / T)
    g = lambda t: f(t) + bump * (1 + np.cos(TWO_PI * t / T)) / 2
    a = discretized_spectrum(AsymptoticProblem.from_function(f, T)).taus()
    b = discretized_spectrum(AsymptoticProblem.from_function(g, T)).taus()
    assert np.all(b <= a + 1e-9)


def test_grid_and_window_invariance():
    f = lambda t: 2.0 + np.cos(t) + 0.3 * np.sin(3 * t)
    czs = {cz_index(discretized_spectrum(AsymptoticProblem.from_function(f, 5.0, n), window=w))
           for n in (128, 256, 512) for w in (4, 6, 8)}
    assert len(czs) == 1


def test_convergence_order():
    # smooth K: refinement of the grid sharpens the spectrum
    f = lambda t: 1.5 + 0.8 * np.sin(TWO_PI * t / 3.0)
    ref = discretized_spectrum(AsymptoticProblem.from_function(f, 3.0, 1024)).taus()
    e = [np.max(np.abs(discretized_spectrum(AsymptoticProblem.from_function(f, 3.0, n)).taus() - ref))
         for n in (64, 128)]
    assert e[1] <= e[0] / 4 or e[1] < 1e-12


def test_two_per_winding():
    s = discretized_spectrum(AsymptoticProblem.from_function(lambda t: 3 + np.sin(2 * t), 4.0))
    counts = {}
    for e in s.eigenvalues:
        counts[e.winding] = counts.get(e.winding, 0) + e.multiplicity
    assert set(counts.values()) == {2} and len(counts) == 2 * s.window + 1
    k = [r[0] for r in s.labelled()]
    t = [r[1] for r in s.labelled()]
    assert k == sorted(k) and np.all(np.diff(t) >= 0)


def test_orbit_indices():
    ell = make_model("ellipsoid")
    short, long_ = (orbit_index(ell, o) for o in ell.known_orbits)
    assert (short["cz"], long_["cz"]) == (3, 5)
    assert short["classification"] == long_["classification"] == "elliptic"
    assert short["action_index"].passed and long_["action_index"].passed
    t3 = orbit_index(make_model("t3"), make_model("t3").known_orbits[0])
    assert t3["cz"] == 0 and t3["action_index"].passed
    kat = make_model("katok", a=0.5)
    east = orbit_index(kat, kat.known_orbits[0])
    assert east["T"] == pytest.approx(4 * np.pi / 3)
    up = 2 * np.pi * ((east["cz"] + 1) // 2)
    assert 2 * np.pi * (east["cz"] // 2) <= east["T"] <= up
    assert east["action_index"].passed


def test_action_index_examples():
    r = check_action_index(1.0, 3, K_ELL, K_ELL)
    vals = {c["bound"]: c["value"] for c in r.checks}
    assert vals["upper"] == pytest.approx(4 * np.pi)
    assert vals["scaled-upper"] == pytest.approx(2 * TWO_PI / np.sqrt(K_ELL))
    assert vals["scaled-upper"] == pytest.approx(1.172, abs=1e-3)
    assert r.passed
    r = check_action_index(TWO_PI, 0, 0.0, 0.0)
    assert [c["bound"] for c in r.checks] == ["lower"] and r.passed
    assert not check_action_index(20.0, 1, 1.0, 1.0).passed
    with pytest.raises(InapplicableError):
        check_action_index(1.0, 1, -1.0, 2.0)


def test_errors():
    with pytest.raises(ParameterError):
        constant_K_spectrum(1.0, 0.0)
    with pytest.raises(ParameterError):
        AsymptoticProblem(1.0, [np.nan])
    with pytest.raises(WindowTooSmall):
        cz_index(Spectrum([], 1))
    s = constant_K_spectrum(1e4, 0.5, window=1)
    with pytest.raises(WindowTooSmall):
        cz_index(s)
