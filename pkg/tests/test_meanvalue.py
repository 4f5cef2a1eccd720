import math

import numpy as np
import pytest

from meanval import measures as M
from meanval.errors import UnboundedSublevel, ZeroMassRegion
from meanval.meanvalue import (CONVERGED, MAX_ITERATIONS, OSCILLATING, ConvergenceCriteria, average_over,
                               cesaro, classify_unconverged, homology_nullity, mv_check, partial_average,
                               run_sequence, window_spread, wmv, wmv_continuum, wmv_measure_sum)


def test_criteria_validation():
    with pytest.raises(ValueError):
        ConvergenceCriteria(eps=-1)
    with pytest.raises(ValueError):
        ConvergenceCriteria(window=1)
    with pytest.raises(ValueError):
        ConvergenceCriteria(window=10, n_max=3)


def test_window_spread_is_pairwise_max():
    rows = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    assert window_spread(rows) == 5.0


def test_constant_average_is_exact():
    res = wmv(lambda x: np.full(len(x), 2.5), M.lebesgue(1), M.cubes(1))
    assert res.status == CONVERGED
    assert res.value == pytest.approx(2.5, abs=1e-12)
    assert len(res.ns) == 5


def test_partial_average_matches_closed_form():
    # (1/2(n+1)) ∫ x^2 over [-(n+1), n+1] = (n+1)^2/3
    for n in (0, 3, 10):
        assert partial_average(lambda x: x[:, 0] ** 2, M.lebesgue(1), M.cubes(1), n) == pytest.approx(
            (n + 1) ** 2 / 3, rel=1e-6)


def test_zero_mass_region():
    with pytest.raises(ZeroMassRegion):
        average_over(lambda x: x[:, 0], M.Dirac([[50.0]]), M.HyperRect([0], [1]))


def test_complex_wmv():
    res = wmv(lambda x: np.exp(1j * x[:, 0]), M.lebesgue(1), M.dyadic_cubes(1), ConvergenceCriteria(1e-3, 5, 30))
    assert res.converged
    assert abs(res.value) < 1e-3
    assert "a_n_0_re" in res.csv_text().splitlines()[0]


def test_sin_along_cubes_vanishes():
    res = wmv("sin(x0)", M.lebesgue(1), M.cubes(1), ConvergenceCriteria(1e-3, 5, 400))
    assert res.converged and abs(res.value) < 1e-2


def test_oscillating_status():
    # averages of sign(sin(log(1+|x|))) oscillate along dyadic cubes
    f = lambda x: np.cos(np.log1p(np.abs(x[:, 0])))
    res = wmv(f, M.lebesgue(1), M.dyadic_cubes(1), ConvergenceCriteria(1e-4, 5, 60))
    assert res.status == OSCILLATING
    assert res.value is None


def test_classify_unconverged_drift_is_max_iterations():
    slow = (1.0 / np.sqrt(np.arange(1, 101))).reshape(-1, 1)
    assert classify_unconverged(slow, 1e-4) == MAX_ITERATIONS
    wave = np.sin(np.arange(100) * 0.7).reshape(-1, 1)
    assert classify_unconverged(wave, 1e-3) == OSCILLATING


def test_run_sequence_history_and_csv(tmp_path):
    res = run_sequence(lambda n: (np.array([1.0 / (n + 1)]), float(n + 1)), range(1000),
                       ConvergenceCriteria(1e-3, 3, 999))
    assert res.converged
    n, a, m = res.history[-1]
    assert a == pytest.approx(1 / (n + 1))
    path = tmp_path / "h.csv"
    res.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,mu_Un,a_n_0,spread"
    assert len(lines) == len(res.ns) + 1


def test_aitken_accelerates_geometric():
    crit = ConvergenceCriteria(1e-6, 3, 400)
    step = lambda n: (np.array([1.0 + 0.5 ** n]), 1.0)
    plain = run_sequence(step, range(401), crit)
    fast = run_sequence(step, range(401), crit, use_aitken=True)
    assert abs(fast.value - 1.0) < abs(plain.value - 1.0)


def test_cesaro_constant_and_alternating():
    res = cesaro(lambda k: np.ones_like(k, dtype=float), ConvergenceCriteria(1e-9, 5, 100))
    assert res.converged and res.value == 1.0
    alt = cesaro("(-1)^x0", ConvergenceCriteria(1e-3, 5, 10000))
    assert alt.converged and abs(alt.value) <= 1e-3


def test_cesaro_scalar_callable():
    res = cesaro(lambda k: 1.0 if int(k) % 3 == 0 else 0.0, ConvergenceCriteria(1e-3, 5, 20000))
    assert res.converged and res.value == pytest.approx(1 / 3, abs=2e-3)


def test_measure_sum_mixing():
    mu, nu = M.lebesgue(1), 3 * M.lebesgue(1)
    f = lambda x: 1.0 / (1.0 + x[:, 0] ** 2) + 0.25
    r = wmv_measure_sum(f, mu, nu, M.dyadic_cubes(1), ConvergenceCriteria(1e-4, 5, 60))
    assert r.big_theta == pytest.approx(0.25, abs=1e-9)
    assert r.value == pytest.approx(0.25, abs=1e-3)
    assert r.residual <= 1e-3


def test_continuum_gaussian_decay():
    t = np.geomspace(1, 1e6, 40)
    res = wmv_continuum(lambda x: np.exp(-x[:, 0] ** 2), M.lebesgue(1), lambda x: np.abs(x[:, 0]), t,
                        ConvergenceCriteria(1e-4, 5, 39), box=lambda s: 1.5 * s + 1)
    assert res.converged and abs(res.value) < 1e-4


def test_continuum_box_too_small():
    with pytest.raises(UnboundedSublevel):
        wmv_continuum(lambda x: x[:, 0], M.lebesgue(1), lambda x: np.abs(x[:, 0]), [1.0, 2.0, 4.0],
                      ConvergenceCriteria(1e-3, 2, 2), box=lambda s: 0.5 * s)


def test_homology_null_class():
    r = homology_nullity([0.0, 0.0], ConvergenceCriteria(1e-3, 5, 20))
    assert r.is_null and r.value == 0.0


def test_mv_check_detects_mismatch():
    cone = "indicator(abs(x1) <= abs(x0)*0.41421356237)"
    chk = mv_check(cone, M.lebesgue(2), [M.cubes(2), M.balls(2)], ConvergenceCriteria(1e-3, 5, 60), tol=1e-4)
    assert not chk.strong
    assert chk.labels == ["cubes2", "balls2-euclidean"]


def test_mv_check_requires_two():
    with pytest.raises(ValueError):
        mv_check("x0", M.lebesgue(1), [M.cubes(1)])
