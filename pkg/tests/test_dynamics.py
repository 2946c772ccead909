from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfl.core import ChartPoint
from cfl.dynamics import (
    action, closure_error, find_closed_orbit, integrate_field, integrate_linearized, integrate_many,
    integrate_reeb, line_integral_of_lambda, linearized_from_K, orbit_trajectory,
)
from cfl.errors import ChartExitError, NoReturnError, ParameterError, SelfCheckError
from cfl.models import make_model

TWO_PI = 2 * np.pi


def test_t3_flow():
    tr = integrate_reeb(make_model("t3"), (0.0, 0.0, 0.0), 2.0 * np.pi)
    np.testing.assert_allclose(tr.state(np.pi)[0], [0.0, np.pi, 0.0], atol=1e-8)
    t = np.linspace(0, TWO_PI, 9)
    np.testing.assert_allclose(tr.state(t)[:, 1], t, atol=1e-8)


def test_round_sphere_returns():
    m = make_model("katok", a=0.0)
    tr = integrate_reeb(m, (np.pi / 2, 0.0, 0.0), TWO_PI)
    assert tr.ambient
    np.testing.assert_allclose(tr.states[-1], tr.states[0], atol=1e-6)


def test_ellipsoid_gamma_plus_period():
    m = make_model("ellipsoid")
    gp, gm = m.known_orbits
    assert gp.period == 1.0 and gm.period == pytest.approx(np.sqrt(2))
    for o in (gp, gm):
        assert closure_error(m, o) < 1e-6
        assert action(orbit_trajectory(m, o)) == pytest.approx(o.period)


def test_linearized_shear():
    p = linearized_from_K(lambda t: 0.0 * t, 3.0)
    np.testing.assert_allclose(p.final, [[1, 0], [3, 1]], atol=1e-12)
    tr = integrate_reeb(make_model("t3"), (0.2, 0.0, 0.0), 2.0)
    np.testing.assert_allclose(integrate_linearized(make_model("t3"), tr).final, [[1, 0], [2, 1]], atol=1e-10)


def test_linearized_harmonic():
    p = linearized_from_K(lambda t: 4.0 + 0 * t, np.pi / 2)
    np.testing.assert_allclose(p.final, -np.eye(2), atol=1e-9)
    # x(t) = b cos 2t + (a/2) sin 2t, y(t) = a cos 2t - 2b sin 2t
    a, b = 0.7, -0.3
    q = linearized_from_K(lambda t: 4.0 + 0 * t, 1.3, a0=a, b0=b)
    x, y = q.solution()
    t = q.times
    np.testing.assert_allclose(x, b * np.cos(2 * t) + a / 2 * np.sin(2 * t), atol=1e-9)
    np.testing.assert_allclose(y, a * np.cos(2 * t) - 2 * b * np.sin(2 * t), atol=1e-9)


def test_linearized_katok_period(katok):
    tr = integrate_reeb(katok, (1.0, 0.3, 0.7), TWO_PI)
    p = integrate_linearized(katok, tr)
    np.testing.assert_allclose(p.final, np.eye(2), atol=1e-8)


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_linearized_det_one(backend):
    pytest.importorskip("cfl._kernels") if backend == "cython" else None
    p = linearized_from_K(lambda t: 1.0 + 0.8 * np.sin(3 * t), 7.0, backend=backend)
    assert p.det_error() < 1e-8


def test_katok_closed_orbits(katok):
    east = find_closed_orbit(katok, ChartPoint(0, (np.pi / 2, 0.0, np.pi / 2)), (1, 0.0))
    west = find_closed_orbit(katok, ChartPoint(0, (np.pi / 2, 0.0, -np.pi / 2)), (1, 0.0), horizon=16.0)
    assert east.period == pytest.approx(4 * np.pi / 3, abs=1e-6)
    assert west.period == pytest.approx(4 * np.pi, abs=1e-6)
    assert action(orbit_trajectory(katok, east)) == pytest.approx(4 * np.pi / 3, abs=1e-6)


def test_t3_closed_orbit():
    o = find_closed_orbit(make_model("t3"), ChartPoint(0, (0.0, 0.0, 0.0)), (1, 0.0))
    assert o.period == pytest.approx(TWO_PI, abs=1e-9)
    assert action(orbit_trajectory(make_model("t3"), o)) == pytest.approx(TWO_PI, abs=1e-9)


def test_no_return():
    with pytest.raises(NoReturnError):
        find_closed_orbit(make_model("darboux"), ChartPoint(0, (0.0, 0.0, 0.0)), (2, 0.0), horizon=3.0)


def test_action_examples():
    tr = integrate_reeb(make_model("katok", a=0.3), (1.0, 0.2, 0.4), 1.5)
    assert action(tr) == 1.5
    assert line_integral_of_lambda(tr) == pytest.approx(1.5, abs=1e-8)
    # a dense output running at half speed makes ∫λ disagree with the elapsed time
    fake = replace(tr, sol=lambda t: tr.sol(0.5 * np.asarray(t)))
    with pytest.raises(SelfCheckError):
        action(fake)


def test_chart_exit():
    # X1 = ∂η on this S³ chart, which ends at η = π/2
    with pytest.raises(ChartExitError) as ei:
        integrate_field(make_model("s3"), "X1", (0.2, 0.0, 0.0), 5.0)
    assert ei.value.exit_time == pytest.approx(np.pi / 2 - 0.2, abs=1e-8)


def test_flow_property(katok):
    p0 = (1.1, 0.2, 0.5)
    s, t = 0.8, 1.7
    full = integrate_reeb(katok, p0, s + t)
    first = integrate_reeb(katok, p0, s)
    second = integrate_reeb(katok, first.points[-1], t)
    ch, X = second.coords_at(t, 0)
    ch2, Y = full.coords_at(s + t, 0)
    d = (X - Y + np.pi) % TWO_PI - np.pi
    assert np.max(np.abs(d)) < 1e-7


@given(st.floats(0.3, 2.8), st.floats(0, TWO_PI), st.floats(0, TWO_PI), st.floats(0.1, 3.0))
def test_reversibility(r, th, psi, T):
    m = make_model("katok", a=0.7)
    fwd = integrate_field(m, "R", (r, th, psi), T)
    end = ChartPoint(int(fwd.chart_ids[-1]), tuple(fwd.coords[-1]))
    back = integrate_field(m, "R", end, T, reverse=True)
    assert np.max(np.abs(back.states[-1] - fwd.states[0])) < 1e-8


def test_integrate_many_matches_serial(katok):
    seeds = [(1.0, 0.1 * k, 0.3) for k in range(8)]
    many = integrate_many(katok, seeds, 2.0, workers=4)
    for p, tr in zip(seeds, many):
        np.testing.assert_allclose(tr.states[-1], integrate_reeb(katok, p, 2.0).states[-1], atol=1e-12)


def test_trajectory_serialisation(katok):
    tr = integrate_reeb(katok, (1.0, 0.3, 0.7), 0.5)
    assert tr.to_csv().splitlines()[0].startswith("t,chart_id")
    import json
    assert json.loads(tr.to_json())["field"] == "R"


def test_parameter_errors():
    with pytest.raises(ParameterError):
        linearized_from_K(lambda t: t, -1.0)
