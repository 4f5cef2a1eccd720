import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanval import measures as M
from meanval import quad
from meanval.errors import DimensionMismatch, NonIntegrable


def test_sin_half_period():
    est = quad.integrate(lambda x: np.sin(x[:, 0]), M.lebesgue(1), M.HyperRect([0], [math.pi]), 1e-12)
    assert est.value[0] == pytest.approx(2.0, abs=1e-12)
    assert est.method == "adaptive1d"


def test_gaussian_2d_tensor():
    est = quad.integrate(lambda x: np.exp(-(x ** 2).sum(axis=1)), M.lebesgue(2),
                         M.HyperRect([-8, -8], [8, 8]), 1e-10)
    assert est.method == "tensor"
    assert est.value[0] == pytest.approx(math.pi, abs=1e-9)


def test_unit_ball_volume_3d():
    est = quad.integrate(lambda x: np.ones(len(x)), M.lebesgue(3), M.Ball(np.zeros(3), 1.0), 1e-3)
    assert est.method == "montecarlo"
    assert abs(est.value[0] - 4 * math.pi / 3) <= est.abs_error


def test_ball_volume_4d_mc():
    est = quad.integrate(lambda x: np.ones(len(x)), M.lebesgue(4), M.Ball(np.zeros(4), 1.0), 1e-2)
    assert abs(est.value[0] - math.pi ** 2 / 2) <= est.abs_error


def test_dirac_is_exact():
    mu = M.Dirac([[0.0], [1.0], [9.0]], [1.0, 2.0, 3.0])
    est = quad.integrate(lambda x: x[:, 0] ** 2 + 1, mu, M.HyperRect([-1], [2]))
    assert est.method == "exact"
    assert est.value[0] == 1.0 + 2.0 * 2.0
    assert est.abs_error == 0.0


def test_complex_integrand():
    est = quad.integrate(lambda x: np.exp(1j * x[:, 0]), M.lebesgue(1), M.HyperRect([0], [math.pi]), 1e-12)
    assert est.value[0] == pytest.approx(2j, abs=1e-11)


def test_vector_integrand():
    est = quad.integrate([lambda x: x[:, 0], lambda x: np.ones(len(x))], M.lebesgue(1), M.HyperRect([0], [2]))
    np.testing.assert_allclose(est.value, [2.0, 2.0], atol=1e-12)


def test_sum_measure_splits():
    mu = M.lebesgue(1) + M.Dirac([[0.5]], [10.0])
    est = quad.integrate(lambda x: x[:, 0], mu, M.HyperRect([0], [1]), 1e-12)
    assert est.value[0] == pytest.approx(0.5 + 5.0, abs=1e-11)


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    r = M.HyperRect([0], [2])
    leb = M.lebesgue(1)
    f = lambda x: np.cos(x[:, 0])
    g = lambda x: x[:, 0] ** 3
    lhs = quad.integrate(lambda x: a * f(x) + b * g(x), leb, r, 1e-11).value[0]
    rhs = a * quad.integrate(f, leb, r, 1e-12).value[0] + b * quad.integrate(g, leb, r, 1e-12).value[0]
    assert lhs == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(-20, 20))
def test_translation_invariance_of_lebesgue(v):
    f = lambda x: np.exp(-x[:, 0] ** 2)
    base = quad.integrate(f, M.lebesgue(1), M.HyperRect([-1], [2]), 1e-12).value[0]
    shifted = quad.integrate(lambda x: f(x - v), M.lebesgue(1), M.translate(M.HyperRect([-1], [2]), [v]), 1e-12)
    assert shifted.value[0] == pytest.approx(base, abs=1e-10)


def test_mc_deterministic_across_threads(monkeypatch):
    f = lambda x: np.cos(x.sum(axis=1))
    r = M.Ball(np.zeros(4), 2.0)
    out = []
    for n in ("1", "3", "8"):
        monkeypatch.setenv("MEANVAL_THREADS", n)
        est = quad.integrate(f, M.lebesgue(4), r, 1e-3, seed=7)
        out.append((est.value[0], est.abs_error, est.evaluations))
    assert out[0] == out[1] == out[2]


def test_mc_seed_changes_estimate():
    f = lambda x: np.cos(x.sum(axis=1))
    r = M.Ball(np.zeros(4), 2.0)
    a = quad.integrate(f, M.lebesgue(4), r, 1e-2, seed=1).value[0]
    b = quad.integrate(f, M.lebesgue(4), r, 1e-2, seed=2).value[0]
    assert a != b


def test_sublevel_region():
    # {x^2 + y^2 <= 1} inside [-2, 2]^2
    r = M.Sublevel(lambda x: (x ** 2).sum(axis=1), 1.0, M.HyperRect([-2, -2], [2, 2]))
    est = quad.integrate(lambda x: np.ones(len(x)), M.lebesgue(2), r, 1e-2)
    assert abs(est.value[0] - math.pi) <= max(est.abs_error, 1e-2)


def test_product_measure_mixed():
    mu = M.ProductMeasure([M.lebesgue(1), M.Counting()])
    r = M.Product((M.HyperRect([0], [1]), M.FinitePrefix(3)))
    est = quad.integrate(lambda x: x[:, 0] * x[:, 1], mu, r, 1e-12)
    assert est.value[0] == pytest.approx(0.5 * (0 + 1 + 2 + 3))


def test_relative_tolerance():
    est = quad.integrate(lambda x: 1e6 * np.exp(-x[:, 0] ** 2), M.lebesgue(1), M.HyperRect([-10], [10]),
                         tol=0.0, rtol=1e-10)
    assert est.value[0] == pytest.approx(1e6 * math.sqrt(math.pi), rel=1e-9)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        quad.integrate(lambda x: x[:, 0], M.lebesgue(2), M.HyperRect([0], [1]))


def test_nonfinite_integral():
    with pytest.raises(NonIntegrable):
        quad.integrate(lambda x: np.full(len(x), np.inf), M.lebesgue(1), M.HyperRect([0], [1]))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("MEANVAL_THREADS", "2")
    assert quad.threads() == 2
