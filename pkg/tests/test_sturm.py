import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfl.dynamics import integrate_reeb
from cfl.errors import HypothesisError, IdenticallyZero, ParameterError
from cfl.models import make_model
from cfl.sturm import (
    action_lower_bound, energy_drift, hyperbolic_growth, jacobi_residual, level_crossings, solve_sturm_ode,
    sturm_compare, x2_of_K, zero_gaps,
)


@pytest.fixture(scope="module")
def katok_line():
    m = make_model("katok", a=0.5)
    return m, integrate_reeb(m, (1.0, 0.3, 0.7), 6 * np.pi)


def test_katok_jacobi_residual(katok_line):
    m, tr = katok_line
    assert np.max(x2_of_K(m, tr, np.linspace(0, 6 * np.pi, 20))) < 1e-6
    assert jacobi_residual(m, tr) < 1e-4


def test_katok_zero_gaps(katok_line):
    m, tr = katok_line
    rep = zero_gaps(m, tr)
    assert rep.passed and len(rep.gaps) >= 4
    np.testing.assert_allclose(rep.gaps, np.pi, atol=1e-5)
    assert rep.bound_upper == pytest.approx(2 * np.pi)
    assert all(c["holds"] for c in rep.equal_value_checks)
    d = json.loads(rep.to_json())
    assert d["pass"] is True and rep.zeros_csv().startswith("index,t\n")


def test_synthetic_variable_K():
    K = lambda t: 2.5 + 1.5 * np.sin(t)
    path = solve_sturm_ode(K, 1.0, 0.0, 40.0)
    rep = zero_gaps(None, path)
    assert rep.inf_K == pytest.approx(1.0, abs=1e-3) and rep.sup_K == pytest.approx(4.0, abs=1e-3)
    assert rep.passed
    assert all(np.pi / 2 < g < 2 * np.pi for g in rep.gaps)
    assert jacobi_residual(None, path) < 1e-6


@given(st.floats(0.3, 3.0), st.floats(0.0, 0.9), st.floats(-1, 1), st.floats(-1, 1))
def test_gap_bounds_property(K0, amp, I0, J0):
    if abs(I0) + abs(J0) < 1e-3:
        return
    K = lambda t: K0 * (1 + amp * np.cos(1.3 * t))
    rep = zero_gaps(None, solve_sturm_ode(K, I0, J0, 30.0))
    assert rep.passed
    for g in rep.gaps:
        assert np.pi / np.sqrt(rep.sup_K) - 1e-6 < g < rep.bound_upper


def test_identically_zero():
    t3 = make_model("t3")
    tr = integrate_reeb(t3, (0.3, 0.0, 0.0), 5.0)
    assert jacobi_residual(t3, tr) == 0.0
    with pytest.raises(IdenticallyZero):
        zero_gaps(t3, tr)


def test_darboux_residual_zero():
    d = make_model("darboux")
    tr = integrate_reeb(d, (0.0, 0.7, 0.0), 3.0)
    assert jacobi_residual(d, tr) < 1e-10


def test_hypothesis_checked():
    base = type(make_model("darboux"))

    class VaryingK(base):
        # K = y changes along X2 = ∂y
        def _scalars(self, X, chart_id):
            I, J, _ = super()._scalars(X, chart_id)
            return I, J, X[:, 1].copy()

    m = VaryingK()
    tr = integrate_reeb(m, (0.0, 0.7, 0.0), 2.0)
    assert np.max(x2_of_K(m, tr, np.linspace(0.1, 1.9, 10))) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(HypothesisError):
        jacobi_residual(m, tr)


def test_revolution_satisfies_hypothesis():
    m = make_model("revolution", m="sin3", c=0.2)
    tr = integrate_reeb(m, (1.0, 0.3, 0.7), 2.0)
    assert np.max(x2_of_K(m, tr, np.linspace(0, 2, 10))) < 1e-10
    with pytest.raises(IdenticallyZero):
        zero_gaps(m, tr)


def test_action_lower_bound():
    r = action_lower_bound(4 * np.pi / 3, 1.0)
    assert r["holds"] and r["bound"] == pytest.approx(np.pi)
    assert action_lower_bound(0.5, 16.0)["holds"] is False
    with pytest.raises(ParameterError):
        action_lower_bound(1.0, 0.0)


@pytest.mark.parametrize("a", [0.5, 0.7, 0.9, 0.99])
def test_katok_short_orbits_respect_bound(a):
    T = 2 * np.pi / (1 + a)
    assert action_lower_bound(T, 1.0)["holds"]


def test_sturm_compare_constant():
    r = sturm_compare(4.0, 1.0, [0.0, np.pi])
    assert r and r.phi1_zeros[0] == pytest.approx(np.pi / 2, abs=1e-9)


def test_sturm_compare_variable():
    q1 = lambda t: 1 + 0.5 * np.sin(t) ** 2
    r = sturm_compare(q1, 1.0, [0.0, np.pi, 2 * np.pi, 3 * np.pi])
    assert r.found and all(row["certified"] for row in r.intervals)


def test_sturm_compare_hypotheses():
    with pytest.raises(HypothesisError):
        sturm_compare(lambda t: 1 + 0.5 * np.sin(t), 1.0, [0.0, np.pi, 2 * np.pi])
    with pytest.raises(HypothesisError):
        sturm_compare(1.0, 1.0, [0.0, np.pi])
    with pytest.raises(ParameterError):
        sturm_compare(2.0, 1.0, [0.0])


@pytest.mark.parametrize("T", [5.0, 6.0])
def test_hyperbolic_growth(T):
    assert hyperbolic_growth(-1.0, 1.0, 0.0, T) == pytest.approx(np.cosh(T), rel=1e-6)


def test_hyperbolic_growth_mixed():
    # I = e^{-t}: max |I| is at t = 0
    assert hyperbolic_growth(-1.0, 1.0, -1.0, 5.0) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ParameterError):
        hyperbolic_growth(1.0, 1.0, 0.0, 5.0)
    with pytest.raises(ParameterError):
        hyperbolic_growth(-1.0, 0.0, 0.0, 5.0)


@given(st.floats(-2, 4), st.floats(-1, 1), st.floats(-1, 1))
def test_energy_conserved(K, I0, J0):
    assert energy_drift(K, I0, J0, 5.0) < 1e-8 * max(1.0, np.exp(2 * np.sqrt(max(-K, 0)) * 5.0))


def test_level_crossings_sine():
    z = level_crossings(np.sin, 0.1, 10.0)
    np.testing.assert_allclose(z, [np.pi, 2 * np.pi, 3 * np.pi], atol=1e-12)
