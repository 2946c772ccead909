import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfl.core import ChartPoint, TangentVector, sample_points
from cfl.errors import DomainError, ParameterError
from cfl.models import (
    MODEL_NAMES, EllipsoidModel, KatokModel, RevolutionModel, ellipsoid_K, evaluate_contact_form,
    evaluate_frame, frame_matrix_det, make_model,
)

FRAME_MODELS = [("darboux", {}), ("t3", {}), ("s3", {}), ("katok", {"a": 0.0}), ("katok", {"a": 0.5}),
                ("katok", {"a": -0.9}), ("revolution", {"m": "sin"}), ("revolution", {"m": "sin3", "c": 0.1})]


def test_darboux_sample():
    fs = evaluate_frame(make_model("darboux"), (0.0, 0.7, 0.0))
    assert (fs.I, fs.J, fs.K) == pytest.approx((0.7, 0.0, 0.0))
    np.testing.assert_allclose(fs.X1.components, [1.0, 0.0, -0.7], atol=1e-15)


def test_katok_samples():
    m = make_model("katok", a=0.5)
    fs = evaluate_frame(m, (np.pi / 2, 0.0, 0.0))
    assert m.ambient.rho(m.ambient.lift([[np.pi / 2, 0, 0]]))[0] == pytest.approx(1.0)
    assert (fs.I, fs.J, fs.K) == pytest.approx((-0.75, 0.0, 1.0), abs=1e-14)
    np.testing.assert_allclose(fs.R.components, [1.0, 0.5, 0.0], atol=1e-14)
    fs = evaluate_frame(m, (np.pi / 2, 0.0, np.pi / 2))
    assert m.ambient.rho(m.ambient.lift([[np.pi / 2, 0, np.pi / 2]]))[0] == pytest.approx(1.5)
    assert (fs.I, fs.J, fs.K) == pytest.approx((0.0, 0.0, 1.0), abs=1e-14)


def test_t3_scalars_vanish():
    m = make_model("t3")
    X = sample_points(m, 50)
    for s in m.scalars_array(X):
        assert np.all(s == 0)


def test_t3_contact_form():
    m = make_model("t3")
    p = ChartPoint(0, (np.pi / 3, 0.0, 0.0))
    assert evaluate_contact_form(m, evaluate_frame(m, p).R) == pytest.approx(1.0)
    assert evaluate_contact_form(m, TangentVector(p, [0, 1, 0])) == pytest.approx(0.5)


def test_toric_contact_form():
    m = EllipsoidModel(1.0, np.sqrt(2))
    p = ChartPoint(0, (0.5, 0.2, 0.1))
    assert evaluate_contact_form(m, TangentVector(p, [0, 1, 0])) == pytest.approx(0.5 / (2 * np.pi))
    m = EllipsoidModel(2.0, 3.0)
    p = ChartPoint(0, (1.0, 0.0, 0.0))
    assert evaluate_contact_form(m, TangentVector(p, [0, 1, 0])) == pytest.approx(1 / (2 * np.pi))


def test_ellipsoid_K_values():
    assert ellipsoid_K(np.pi, np.pi) == 16.0
    assert ellipsoid_K(4 * np.pi, 4 * np.pi) == pytest.approx(1.0, abs=1e-15)
    assert ellipsoid_K(1, np.sqrt(2)) == pytest.approx(2 * np.pi**2 * (1 + np.sqrt(2)) ** 2, rel=1e-14)
    assert ellipsoid_K(1, np.sqrt(2)) == pytest.approx(115.048, abs=1e-3)
    for bad in [(0, 1), (1, -1)]:
        with pytest.raises(ParameterError):
            ellipsoid_K(*bad)


def test_ellipsoid_K_high_precision():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    exact = 16 * (mp.pi * (1 + mp.sqrt(2)) / (2 * mp.sqrt(2))) ** 2
    assert float(exact) == pytest.approx(ellipsoid_K(1, np.sqrt(2)), rel=1e-15)


@pytest.mark.parametrize("name,kw", FRAME_MODELS)
def test_normalisation_and_independence(name, kw):
    m = make_model(name, **kw)
    for ch in range(len(m.charts)):
        X = sample_points(m, 100, seed=3, chart_id=ch)
        lam = m.contact_form_array(X, ch)
        R, X1, X2 = m.frame_array(X, ch)
        np.testing.assert_allclose((lam * R).sum(1), 1.0, atol=1e-12)
        np.testing.assert_allclose((lam * X1).sum(1), 0.0, atol=1e-12)
        np.testing.assert_allclose((lam * X2).sum(1), 0.0, atol=1e-12)
        assert np.all(np.abs(frame_matrix_det(m, X, ch)) > 1e-10)


def test_katok_zero_is_round():
    m = KatokModel(0.0)
    X = sample_points(m, 100)
    I, J, K = m.scalars_array(X)
    assert np.all(I == 0) and np.all(J == 0) and np.all(K == 1)


def test_revolution_sin_equals_katok_zero():
    X = sample_points(KatokModel(0.0), 100, seed=5)
    for F, G in zip(RevolutionModel("sin").frame_array(X), KatokModel(0.0).frame_array(X)):
        np.testing.assert_allclose(F, G, atol=1e-12)
    for s, t in zip(RevolutionModel("sin").scalars_array(X), KatokModel(0.0).scalars_array(X)):
        np.testing.assert_allclose(s, t, atol=1e-12)


def test_katok_charts_agree(katok):
    # the same point seen in both charts has the same ambient frame
    X = sample_points(katok, 40, seed=2)
    Y = katok.ambient.lift(X, 0)
    ch, X1 = katok.ambient.project(Y, 1)
    np.testing.assert_allclose(katok.ambient.lift(X1, 1), Y, atol=1e-12)
    for s0, s1 in zip(katok.scalars_array(X, 0), katok.scalars_array(X1, 1)):
        np.testing.assert_allclose(s0, s1, atol=1e-12)


def test_errors():
    with pytest.raises(ParameterError):
        make_model("katok", a=1.0)
    with pytest.raises(ParameterError):
        make_model("nope")
    with pytest.raises(ParameterError):
        make_model("revolution", m="sin3", c=2.0)
    with pytest.raises(ParameterError):
        make_model("ellipsoid", a=-1)
    with pytest.raises(DomainError):
        evaluate_frame(make_model("katok", a=0.5), (0.0, 0.0, 0.0))
    assert set(MODEL_NAMES) == {"darboux", "t3", "s3", "katok", "revolution", "ellipsoid"}


def test_ellipsoid_has_no_frame():
    m = make_model("ellipsoid")
    assert not m.has_frame and m.K == pytest.approx(ellipsoid_K(1, np.sqrt(2)))
    assert m.scalar_array("K", [[0.5, 0, 0]])[0] == pytest.approx(m.K)
    with pytest.raises(Exception):
        m.frame_array([[0.5, 0, 0]])
    assert [o.period for o in m.known_orbits] == pytest.approx([1.0, np.sqrt(2)])


@given(st.floats(-0.95, 0.95), st.floats(0.1, np.pi - 0.1), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_katok_K_is_one(a, r, th, psi):
    fs = evaluate_frame(KatokModel(a), (r, th, psi))
    assert fs.K == 1.0
    m = KatokModel(a)
    Y = m.ambient.lift([[r, th, psi]])
    assert fs.I == pytest.approx(1.5 * a * Y[0, 5] / np.sqrt(m.ambient.rho(Y)[0]), abs=1e-12)
