import numpy as np
import pytest

from meanval import measures as M
from meanval.errors import InvalidRenorm
from meanval.meanvalue import ConvergenceCriteria
from meanval.products import (AdmissibleDomain, ApproximantSchedule, CylindricalFunction, ProductSpace,
                              check_admissible, product_renorm, verify_support, wmv_cylindrical,
                              wmv_uniform_limit)

CRIT = ConvergenceCriteria(1e-4, 5, 60)


@pytest.fixture(scope="module")
def space():
    return ProductSpace.iid(M.lebesgue(1), M.dyadic_cubes(1))


def test_factor_lookup(space):
    mu, u = space.factor(17)
    assert mu.dim == 1 and u.label.startswith("dyadic")
    with pytest.raises(IndexError):
        space.factor(-1)


def test_finite_space_index_error():
    s = ProductSpace([(M.lebesgue(1), M.cubes(1))])
    with pytest.raises(IndexError):
        s.factor(1)


def test_invalid_factor_rejected():
    shrink = M.RenormSequence(lambda n: M.HyperRect([-1.0 / (n + 1)], [1.0 / (n + 1)]), "shrink", 1)
    with pytest.raises(InvalidRenorm):
        ProductSpace([(M.lebesgue(1), shrink)])
    with pytest.raises(InvalidRenorm):
        ProductSpace([(M.lebesgue(2), M.cubes(1))])


def test_box_products_stay_boxes(space):
    u = product_renorm(space, [0, 3])
    r = u(2)
    assert isinstance(r, M.HyperRect) and r.dim == 2


def test_tensor_product_mean(space):
    f = CylindricalFunction((0, 1), lambda x: (1 + np.exp(-x[:, 0] ** 2)) * (2 + np.exp(-x[:, 1] ** 2)))
    res = wmv_cylindrical(space, f, CRIT, check_enlargement=True)
    assert res.converged
    assert res.value == pytest.approx(2.0, abs=1e-3)
    assert res.meta["enlargement_gap"] <= 1e-3


def test_support_enlargement_ignores_extra_coordinates(space):
    f = CylindricalFunction((1,), "cos(x0)")
    g = f.enlarged(space, [0, 4])
    assert g.support == (0, 1, 4)
    pts = np.array([[9.0, 0.3, -4.0]])
    assert g.bind(space)(pts)[0] == pytest.approx(np.cos(0.3))


def test_verify_support(space):
    assert verify_support(space, lambda p: np.sin(p[:, 2]), [2], 4)
    assert not verify_support(space, lambda p: np.sin(p[:, 2] + p[:, 0]), [2], 4)


def test_mixed_lebesgue_counting():
    s = ProductSpace([(M.lebesgue(1), M.cubes(1)), (M.Counting(), M.prefixes())])
    # gaussian bump vanishes on average; parity of the counting coordinate averages 1/2
    f = CylindricalFunction((0, 1), lambda x: np.exp(-x[:, 0] ** 2) + np.mod(x[:, 1], 2))
    res = wmv_cylindrical(s, f, ConvergenceCriteria(2e-3, 5, 1000))
    assert res.converged and res.value == pytest.approx(0.5, abs=1e-2)


def test_schedule_validation(space):
    f0 = CylindricalFunction((0,), "1")
    f1 = CylindricalFunction((1,), "1")
    with pytest.raises(ValueError):
        ApproximantSchedule(((f0, 0.1), (f1, 0.05)))
    with pytest.raises(ValueError):
        ApproximantSchedule(((f0, 0.1), (f0, 0.2)))


def _cos_schedule(space, count):
    # f_n = sum_{k<=n} 100^-k (1 + cos x_k); sup |f - f_n| <= 2 sum_{k>n} 100^-k
    terms = []
    for n in range(count):
        sup = tuple(range(n + 1))
        w = np.array([100.0 ** -k for k in sup])

        def kern(x, w=w):
            return (w * (1 + np.cos(x))).sum(axis=1)

        terms.append((CylindricalFunction(sup, kern), 2.0 / (99 * 100.0 ** n)))
    return ApproximantSchedule(tuple(terms))


def test_schedule_sup_check(space):
    sched = _cos_schedule(space, 4)
    assert sched.check_sup(space) <= 0


def test_uniform_limit(space):
    sched = _cos_schedule(space, 3)
    res = wmv_uniform_limit(space, sched, ConvergenceCriteria(5e-3, 2, 60))
    # 1 + cos averages to 1 on every factor, so the limit is 100/99
    assert res.converged
    assert res.value == pytest.approx(100 / 99, abs=5e-3)
    assert res.meta["abs_error"] >= res.spread


def test_interleave_same_target(space):
    a = _cos_schedule(space, 3)
    b = _cos_schedule(space, 3)
    mixed = ApproximantSchedule.interleave(space, a, b)
    assert len(mixed) == 6
    assert mixed.check_sup(space) <= 0


def test_admissible_diagonal_and_halfspace(space):
    diag = AdmissibleDomain(lambda p: np.ones(len(p), dtype=bool), declared_admissible=True)
    rep = check_admissible(space, diag, [0, 1], 3, np.zeros(2))
    assert rep.admissible_evidence and rep.ci_high < 1e-2
    half = AdmissibleDomain(lambda p: p[:, 0] >= 0)
    rep = check_admissible(space, half, [0], 3, np.zeros(1))
    assert rep.fraction == pytest.approx(0.5, abs=0.05)
    assert rep.ci_low < 0.5 < rep.ci_high or abs(rep.fraction - 0.5) < 0.05
