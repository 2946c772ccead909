import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfl.errors import ParameterError
from cfl.flat_bundles import (
    CATALOG_TRACES, MonodromyProblem, TrigPoly, catalog_json, det_identity_check, integral_obstruction,
    matrix_order, monodromy, quotient_catalog,
)

def backend_available(name):
    from cfl import kernels
    try:
        kernels.get_backend(name)
        return True
    except ImportError:
        return False


@pytest.mark.parametrize("backend", ["python", "cython"])
def test_zero_I_rotations(backend):
    if not backend_available(backend):
        pytest.skip("compiled kernel not built")
    np.testing.assert_allclose(monodromy(MonodromyProblem(TrigPoly(), 2 * np.pi), backend=backend),
                               np.eye(2), atol=1e-9)
    np.testing.assert_allclose(monodromy(MonodromyProblem(TrigPoly(), np.pi), backend=backend),
                               -np.eye(2), atol=1e-9)


def test_liouville_examples():
    r = det_identity_check(MonodromyProblem(TrigPoly(0.3), 2.0))
    assert r["det"] == pytest.approx(np.exp(-0.6), abs=1e-9) and r["pass"]
    assert r["expected"] == pytest.approx(0.548811636, abs=1e-9)
    r = det_identity_check(MonodromyProblem(TrigPoly(0.0, (), (1.0,)), 5.0))
    assert r["det"] == pytest.approx(1.0, abs=1e-9)
    r = det_identity_check(MonodromyProblem(TrigPoly(0.2, (0.5,)), 3.0))
    assert r["expected"] == pytest.approx(np.exp(-0.6), rel=1e-15)
    assert r["det"] == pytest.approx(np.exp(-0.6), abs=1e-9)


def test_obstruction_examples():
    assert integral_obstruction(MonodromyProblem(TrigPoly.parse("sin"), 2.0))
    p = MonodromyProblem(TrigPoly(0.3), 2.0)
    assert not integral_obstruction(p)
    assert np.linalg.det(monodromy(p)) < 1
    assert integral_obstruction(MonodromyProblem(TrigPoly.parse("0.5cos + 0.25sin(2)"), 4.0))


def test_random_liouville(rng):
    for _ in range(20):
        poly = TrigPoly.random(rng, degree=int(rng.integers(1, 5)))
        r = det_identity_check(MonodromyProblem(poly, float(rng.uniform(0.5, 8.0))))
        assert r["error"] < 1e-8


@given(st.integers(0, 2**32 - 1), st.floats(0.5, 6.0))
def test_zero_mean_property(seed, l):
    poly = TrigPoly.random(np.random.default_rng(seed), degree=3, zero_mean=True)
    assert integral_obstruction(MonodromyProblem(poly, l))


def test_continuity(rng):
    base = TrigPoly.random(rng, degree=3)
    P0 = monodromy(MonodromyProblem(base, 3.0))
    eps = 1e-4
    for _ in range(5):
        P1 = monodromy(MonodromyProblem(base.perturbed(eps, rng), 3.0))
        assert np.max(np.abs(P1 - P0)) <= 10 * eps * max(1.0, np.max(np.abs(P0)))


def test_backends_agree(rng):
    if not backend_available("cython"):
        pytest.skip("compiled kernel not built")
    p = MonodromyProblem(TrigPoly.random(rng, degree=4), 5.0)
    np.testing.assert_allclose(monodromy(p, backend="cython"), monodromy(p, backend="python"), atol=1e-12)


def test_parse():
    p = TrigPoly.parse("0.2 + 0.5cos(1) - 0.25*sin(2)")
    assert p == TrigPoly(0.2, (0.5,), (0.0, -0.25))
    assert TrigPoly.parse("cos") == TrigPoly(0.0, (1.0,), ())
    assert TrigPoly.parse("-1e-1 + 2 cos(3)").cos == (0.0, 0.0, 2.0)
    assert TrigPoly.parse("0.3").mean() == 0.3
    for bad in ("", "tan(1)", "cos(0)", "0.3(2)", "1 +* 2"):
        with pytest.raises(ParameterError):
            TrigPoly.parse(bad)


def test_evaluation_and_integral():
    p = TrigPoly(0.2, (0.5,), (0.0, -0.25))
    th = np.linspace(0, 3, 7)
    w = 2 * np.pi / 3
    np.testing.assert_allclose(p(th, 3.0), 0.2 + 0.5 * np.cos(w * th) - 0.25 * np.sin(2 * w * th))
    x = np.linspace(0, 3, 20001)
    assert np.trapezoid(p(x, 3.0), x) == pytest.approx(p.integral(3.0), abs=1e-8)


def test_problem_validation():
    with pytest.raises(ParameterError):
        MonodromyProblem(TrigPoly(), 0.0)
    with pytest.raises(ParameterError):
        MonodromyProblem(lambda t: t, 1.0)


def test_catalog():
    cat = {d.label: d for d in quotient_catalog()}
    assert set(cat) == set("abcdef")
    for label, n in {"a": 1, "b": 2, "c": 3, "d": 4, "e": 6}.items():
        d = cat[label]
        assert d.declared_order == n and d.verified["order_ok"]
        A = d.matrix()
        P = np.eye(2, dtype=np.int64)
        for k in range(1, n + 1):
            P = P @ A
            assert np.array_equal(P, np.eye(2, dtype=np.int64)) == (k == n)
    for label, d in cat.items():
        assert d.verified["det"] == 1
        assert d.verified["trace"] == CATALOG_TRACES[label]
    assert cat["f"].verified["matrix_order"] is None and "order_ok" not in cat["f"].verified
    assert "Z2 x Z2" in cat["f"].deck_description
    assert json.loads(catalog_json())["catalog"][3]["declared_order"] == 4


def test_matrix_order():
    assert matrix_order([[1, 1], [0, 1]]) is None
    assert matrix_order([[0, 1], [-1, 0]]) == 4
