import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanval import measures as M
from meanval.errors import DimensionMismatch, NonIntegrable


def test_box_and_ball_basics():
    box = M.HyperRect([-1, 0], [1, 2])
    assert box.volume() == 4.0
    assert box.contains([[0, 1], [2, 1]]).tolist() == [True, False]
    ball = M.Ball([0, 0], 2.0)
    assert ball.volume() == pytest.approx(4 * math.pi)
    assert M.Ball([0, 0], 2.0, "sup").volume() == 16.0
    assert ball.contains([[1.9, 0], [1.5, 1.5]]).tolist() == [True, False]


def test_empty_box_rejected():
    with pytest.raises(ValueError):
        M.HyperRect([1.0], [0.0])


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        M.Union((M.HyperRect([0], [1]), M.HyperRect([0, 0], [1, 1])))
    with pytest.raises(DimensionMismatch):
        M.translate_renorm(M.cubes(2), [1.0])


# multiples of 1/8 keep the shifted comparisons exact
_q = st.integers(-40, 40).map(lambda k: k / 8)


@settings(max_examples=50, deadline=None)
@given(st.lists(_q, min_size=2, max_size=2), st.lists(_q, min_size=2, max_size=2))
def test_translate_membership(v, x):
    regions = [M.HyperRect([-1, -2], [3, 1]), M.Ball([0.5, 0], 2.0),
               M.Union((M.HyperRect([0, 0], [1, 1]), M.Ball([3, 3], 1.0)))]
    for r in regions:
        shifted = M.translate(r, v)
        assert bool(shifted.contains([np.add(x, v)])[0]) == bool(r.contains([x])[0])


def test_translation_preserves_lebesgue_volume():
    r = M.Union((M.HyperRect([0, 0], [2, 1]), M.HyperRect([1, 0], [3, 3])))
    leb = M.lebesgue(2)
    assert M.measure_of(leb, r).value == pytest.approx(7.0)
    assert M.measure_of(leb, M.translate(r, [7.5, -2.0])).value == pytest.approx(7.0)


def test_additivity_disjoint_union():
    leb = M.lebesgue(1)
    a, b = M.HyperRect([0], [1]), M.HyperRect([2], [5])
    g = M.gaussian(1)
    for mu in (leb, g):
        whole = M.measure_of(mu, M.Union((a, b)), 1e-10).value
        parts = M.measure_of(mu, a, 1e-10).value + M.measure_of(mu, b, 1e-10).value
        assert whole == pytest.approx(parts, abs=1e-9)


def test_difference_and_overlap():
    leb = M.lebesgue(1)
    d = M.Difference(M.HyperRect([0], [4]), M.HyperRect([1], [2]))
    assert M.measure_of(leb, d).value == pytest.approx(3.0)


def test_scaled_and_sum_measures():
    leb = M.lebesgue(1)
    box = M.HyperRect([0], [2])
    assert M.measure_of(3 * leb, box).value == pytest.approx(6.0)
    s = leb + M.Dirac([[0.5], [7.0]], [2.0, 5.0])
    assert M.measure_of(s, box).value == pytest.approx(4.0)


def test_gaussian_total_mass():
    g = M.gaussian(1)
    assert M.measure_of(g, M.HyperRect([-12], [12]), 1e-12).value == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_counting_prefix():
    c = M.Counting()
    assert M.measure_of(c, M.FinitePrefix(9)).value == 10.0


def test_nonintegrable_density():
    mu = M.Density(1, lambda x: 1 / np.abs(x[:, 0]))
    with np.errstate(divide="ignore"), pytest.raises(NonIntegrable):
        mu.weight(np.array([[0.0]]))


def test_negative_density_rejected():
    mu = M.Density(1, lambda x: x[:, 0])
    with pytest.raises(ValueError):
        mu.weight(np.array([[-1.0]]))


@pytest.mark.parametrize("u", [M.cubes(1), M.cubes(2), M.balls(2), M.dyadic_cubes(2)])
def test_validate_standard_sequences(u):
    rep = M.validate_renorm(M.lebesgue(u.dim), u, 6, probes=np.full((1, u.dim), 3.0))
    assert rep.ok
    assert np.all(np.diff(rep.masses) > 0)


def test_validate_reports_non_monotone():
    shrinking = M.RenormSequence(lambda n: M.HyperRect([-1.0 / (n + 1)], [1.0 / (n + 1)]), "shrink", 1)
    rep = M.validate_renorm(M.lebesgue(1), shrinking, 3, probes=[[5.0]])
    assert not rep.monotone_ok
    assert not rep.exhaustion_ok
    assert rep.positivity_ok


def test_validate_reports_zero_mass():
    rep = M.validate_renorm(M.Dirac([[100.0]]), M.cubes(1), 2)
    assert not rep.positivity_ok


def test_validate_counting_prefixes():
    rep = M.validate_renorm(M.Counting(), M.prefixes(), 10, probes=[[3.0]])
    assert rep.ok


def test_sin_oscillation_renorm_mass():
    u = M.sin_oscillation_renorm()
    for n in (1, 4, 9):
        assert M.measure_of(M.lebesgue(1), u(n)).value == pytest.approx(4 * math.pi * n + (n + 1) * math.pi)


@pytest.mark.parametrize("u", [M.cubes(2), M.balls(2)])
def test_symmetric_difference_decreases(u):
    leb = M.lebesgue(2)
    r = [M.symmetric_difference_ratio(leb, u, [1.0, 0.5], n, tol=1e-4) for n in (10, 20, 40)]
    assert r[0] > r[1] > r[2] > 0


def test_symmetric_difference_cube_exact():
    # [-n-1,n+1]^1 shifted by 1: delta has length 2
    r = M.symmetric_difference_ratio(M.lebesgue(1), M.cubes(1), [1.0], 9)
    assert r == pytest.approx(2 / 20)


def test_sample_region_stays_inside(rng):
    r = M.Union((M.Ball([0, 0], 1.0), M.HyperRect([3, 3], [4, 5])))
    pts = M.sample_region(r, rng, 500)
    assert pts.shape == (500, 2)
    assert r.contains(pts).all()


def test_product_region_split():
    p = M.Product((M.HyperRect([0], [1]), M.Ball([0, 0], 1.0)))
    assert p.dim == 3
    assert p.contains([[0.5, 0.1, 0.1], [0.5, 1.0, 1.0]]).tolist() == [True, False]
