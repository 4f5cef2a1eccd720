"""Asymptotic comparison of two measures along one renormalization sequence.

``theta = lim nu(U_n)/mu(U_n)`` and ``Theta = lim mu(U_n)/(mu+nu)(U_n) = 1/(1+theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ExcludedCase, ZeroMassRegion
from .measures import Measure, RenormSequence, measure_of
from .meanvalue import ConvergenceCriteria, window_spread

SMALL_O = "small_o"
BIG_O_ONLY = "big_O_only"
EQUIVALENT = "equivalent"
REVERSE_SMALL_O = "reverse_small_o"
UNDETERMINED = "undetermined"

INFINITE_RATIO = 1e9


@dataclass
class ComparisonResult:
    theta: Optional[float]
    big_theta: Optional[float]
    classification: str
    history: List[tuple]
    class_eps: float
    theta_history: List[tuple] = field(default_factory=list)

    def to_dict(self):
        return {
            "theta": None if self.theta is None else (self.theta if math.isfinite(self.theta) else "inf"),
            "big_theta": self.big_theta,
            "classification": self.classification,
            "class_eps": self.class_eps,
            "history": [[n, r] for n, r in self.history],
        }


def classify(big_theta: Optional[float], eps: float = 0.02) -> str:
    if big_theta is None:
        return UNDETERMINED
    if abs(big_theta - 0.5) <= eps:
        return EQUIVALENT
    if big_theta >= 1 - eps:
        return SMALL_O
    if big_theta <= eps:
        return REVERSE_SMALL_O
    return BIG_O_ONLY


def compare(mu: Measure, nu: Measure, u: RenormSequence, crit: Optional[ConvergenceCriteria] = None,
            tol: Optional[float] = None, seed: int = 0, *, class_eps: float = 0.02) -> ComparisonResult:
    """Estimate theta and Theta and classify ``nu`` against ``mu``.

    Ratios above 1e9 for ``window`` consecutive n, or a Theta sequence that
    settles below ``class_eps``, give ``theta = inf``.
    """
    crit = crit or ConvergenceCriteria()
    tol = 1e-9 if tol is None else tol
    ratios, thetas = [], []
    theta = big = None
    for n in range(crit.n_max + 1):
        r = u(n)
        a = measure_of(mu, r, tol, seed).value
        b = measure_of(nu, r, tol, seed).value
        if a <= 0 or b < 0 or a + b <= 0:
            raise ZeroMassRegion(f"mass of U_{n} is zero for the first measure")
        ratios.append((n, b / a))
        thetas.append((n, a / (a + b)))
        if len(ratios) < crit.window:
            continue
        rw = np.array([x[1] for x in ratios[-crit.window:]]).reshape(-1, 1)
        tw = np.array([x[1] for x in thetas[-crit.window:]]).reshape(-1, 1)
        if np.all(rw > INFINITE_RATIO):
            theta, big = math.inf, 0.0
            break
        t_ok = window_spread(tw) <= crit.eps
        if window_spread(rw) <= crit.eps:
            theta = float(rw[-1, 0])
            big = float(tw[-1, 0]) if t_ok else 1.0 / (1.0 + theta)
            break
        if t_ok:
            big = float(tw[-1, 0])
            theta = math.inf if big <= class_eps else 1.0 / big - 1.0
            break
    return ComparisonResult(theta, big, classify(big, class_eps), ratios, class_eps, thetas)


def composed_big_theta(a: float, b: float) -> float:
    """Theta(mu, rho) from Theta(mu, nu) = a and Theta(nu, rho) = b."""
    den = 2 * a * b - a - b + 1
    if den == 0:
        raise ExcludedCase("composition undefined for this pair of limits")
    return a * b / den


@dataclass
class CompositionReport:
    theta_mn: Optional[float]
    theta_nr: Optional[float]
    theta_mr: Optional[float]
    big_mn: Optional[float]
    big_nr: Optional[float]
    big_mr: Optional[float]
    theta_residual: float
    big_theta_residual: float
    tolerance: float

    @property
    def ok(self):
        return self.theta_residual <= self.tolerance and self.big_theta_residual <= self.tolerance

    def to_dict(self):
        return {k: (v if v is None or math.isfinite(v) else "inf") for k, v in self.__dict__.items()}


def _theta_residual(lhs, a, b):
    if lhs is None or a is None or b is None:
        return math.inf
    if math.isinf(a) or math.isinf(b):
        prod = math.inf
    else:
        prod = a * b
    if math.isinf(lhs) and math.isinf(prod):
        return 0.0
    if math.isinf(lhs) or math.isinf(prod):
        return math.inf
    return abs(lhs - prod) / max(1.0, abs(prod))


def check_composition(mu: Measure, nu: Measure, rho: Measure, u: RenormSequence, crit=None, tol=None,
                      seed: int = 0, *, class_eps: float = 0.02) -> CompositionReport:
    """Check ``theta(mu,rho) = theta(mu,nu) theta(nu,rho)`` and the matching Theta formula.

    The theta residual is relative when the product exceeds 1.  The pairs
    (0, inf) and (inf, 0) are excluded.
    """
    mn = compare(mu, nu, u, crit, tol, seed, class_eps=class_eps)
    nr = compare(nu, rho, u, crit, tol, seed, class_eps=class_eps)
    pair = (mn.classification, nr.classification)
    if pair in ((SMALL_O, REVERSE_SMALL_O), (REVERSE_SMALL_O, SMALL_O)):
        raise ExcludedCase(f"limits (theta(mu,nu), theta(nu,rho)) fall in the excluded case {pair}")
    mr = compare(mu, rho, u, crit, tol, seed, class_eps=class_eps)
    t_res = _theta_residual(mr.theta, mn.theta, nr.theta)
    if None in (mn.big_theta, nr.big_theta, mr.big_theta):
        b_res = math.inf
    else:
        b_res = abs(mr.big_theta - composed_big_theta(mn.big_theta, nr.big_theta))
    return CompositionReport(mn.theta, nr.theta, mr.theta, mn.big_theta, nr.big_theta, mr.big_theta,
                             t_res, b_res, class_eps)
