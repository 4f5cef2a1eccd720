"""Mean values on countable products of measured spaces.

A cylindrical function depends on finitely many factors; its mean value is
the ordinary weak mean value on the finite product of those factors, with
the product of the factors' (fixed) renormalization sequences.  Uniform
limits of cylindrical functions get the limit of their mean values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidRenorm, TermDiverged
from .measures import (
    Density,
    HyperRect,
    Measure,
    Product,
    ProductMeasure,
    RenormSequence,
    as_scalar_function,
    sample_region,
    validate_renorm,
)
from .meanvalue import (
    CONVERGED,
    MAX_ITERATIONS,
    ConvergenceCriteria,
    MeanValueResult,
    _unwrap,
    window_spread,
    wmv,
)
from .quad import as_integrand


class ProductSpace:
    """Countable family of ``(measure, renorm)`` factors, frozen at construction.

    Pass an explicit list, or ``default`` to repeat one factor for every
    index beyond the list (``ProductSpace.iid``).
    """

    def __init__(self, factors: Sequence[Tuple[Measure, RenormSequence]] = (), default=None,
                 validate_steps: int = 3, seed: int = 0):
        self._factors = tuple((m, u) for m, u in factors)
        self._default = default
        if not self._factors and default is None:
            raise ValueError("a product space needs at least one factor")
        checked = list(self._factors) + ([default] if default is not None else [])
        for m, u in checked:
            if m.dim != u.dim:
                raise InvalidRenorm(f"factor renorm {u.label!r} has dimension {u.dim}, measure {m.dim}")
            if validate_steps:
                rep = validate_renorm(m, u, validate_steps, seed, samples=200)
                if not (rep.positivity_ok and rep.monotone_ok):
                    raise InvalidRenorm(f"factor renorm {u.label!r} fails validation")

    @classmethod
    def iid(cls, measure: Measure, renorm: RenormSequence, **kw) -> "ProductSpace":
        return cls((), default=(measure, renorm), **kw)

    def factor(self, i: int) -> Tuple[Measure, RenormSequence]:
        if i < 0:
            raise IndexError(i)
        if i < len(self._factors):
            return self._factors[i]
        if self._default is None:
            raise IndexError(f"factor {i} not in this product space")
        return self._default

    def dims(self, support) -> List[int]:
        return [self.factor(i)[0].dim for i in support]


def _support(s) -> Tuple[int, ...]:
    s = tuple(sorted(set(int(i) for i in s)))
    if not s:
        raise ValueError("support must be a nonempty finite index set")
    return s


@dataclass(frozen=True)
class CylindricalFunction:
    """Function of the factors in ``support`` only.

    ``kernel`` takes an ``(N, k)`` array whose columns are the supported
    factors' coordinates in increasing index order; expression strings use
    ``x0..x{k-1}``.
    """

    support: Tuple[int, ...]
    kernel: object
    codim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "support", _support(self.support))

    def bind(self, space: ProductSpace):
        k = sum(space.dims(self.support))
        return as_integrand(self.kernel, k)

    def enlarged(self, space: ProductSpace, extra) -> "CylindricalFunction":
        """Same function written on a larger support (extra coordinates ignored)."""
        new = _support(set(self.support) | set(extra))
        dims = dict(zip(new, space.dims(new)))
        cols = []
        off = 0
        for i in new:
            if i in self.support:
                cols.extend(range(off, off + dims[i]))
            off += dims[i]
        g = self.bind(space)
        cols = np.array(cols)
        return CylindricalFunction(new, lambda pts: g(pts[:, cols]), self.codim)


def full_offsets(space: ProductSpace, count: int) -> np.ndarray:
    return np.cumsum([0] + [space.factor(i)[0].dim for i in range(count)])


def verify_support(space: ProductSpace, fn: Callable, support, count: int, samples: int = 256,
                   seed: int = 0, scale: float = 10.0) -> bool:
    """Spot-check that ``fn`` on full points (factors ``0..count-1``) ignores off-support coordinates."""
    support = _support(support)
    o = full_offsets(space, count)
    rng = np.random.Generator(np.random.Philox(seed))
    pts = scale * (2 * rng.random((samples, o[-1])) - 1)
    other = pts.copy()
    off = np.ones(o[-1], dtype=bool)
    for i in support:
        off[o[i]:o[i + 1]] = False
    other[:, off] = scale * (2 * rng.random((samples, int(off.sum()))) - 1)
    return bool(np.allclose(fn(pts), fn(other), rtol=0, atol=1e-12))


def product_measure(space: ProductSpace, support) -> Measure:
    support = _support(support)
    ms = [space.factor(i)[0] for i in support]
    if len(ms) == 1:
        return ms[0]
    pm = ProductMeasure(ms)
    return pm.as_density() or pm


def product_renorm(space: ProductSpace, support) -> RenormSequence:
    """``n -> product of the factors' n-th regions``; all-box products stay boxes."""
    support = _support(support)
    us = [space.factor(i)[1] for i in support]
    if len(us) == 1:
        return us[0]

    def gen(n):
        parts = [u(n) for u in us]
        if all(isinstance(p, HyperRect) for p in parts):
            return HyperRect(np.concatenate([p.lower for p in parts]), np.concatenate([p.upper for p in parts]))
        return Product(tuple(parts))

    return RenormSequence(gen, "x".join(u.label for u in us), sum(u.dim for u in us))


def wmv_cylindrical(space: ProductSpace, f: CylindricalFunction, crit=None, tol=None, seed: int = 0, *,
                    check_enlargement: bool = False) -> MeanValueResult:
    """WMV of a cylindrical function on the finite product of its support.

    With ``check_enlargement`` the value is recomputed on the support plus
    one fresh index and the gap is stored in ``meta['enlargement_gap']``.
    """
    crit = crit or ConvergenceCriteria()
    mu = product_measure(space, f.support)
    u = product_renorm(space, f.support)
    res = wmv(f.bind(space), mu, u, crit, tol, seed)
    res.meta["support"] = list(f.support)
    if check_enlargement:
        fresh = max(f.support) + 1
        g = f.enlarged(space, [fresh])
        other = wmv(g.bind(space), product_measure(space, g.support), product_renorm(space, g.support), crit, tol, seed)
        if res.value is not None and other.value is not None:
            res.meta["enlargement_gap"] = float(np.max(np.abs(np.asarray(res.value) - np.asarray(other.value))))
        else:
            res.meta["enlargement_gap"] = None
    return res


@dataclass(frozen=True)
class ApproximantSchedule:
    """Cylindrical approximants ``f_n`` with declared uniform errors ``eps_n`` to the target."""

    terms: Tuple[Tuple[CylindricalFunction, float], ...]

    def __post_init__(self):
        terms = tuple((f, float(e)) for f, e in self.terms)
        if not terms:
            raise ValueError("a schedule needs at least one term")
        errs = [e for _, e in terms]
        if any(e < 0 for e in errs) or any(b > a for a, b in zip(errs, errs[1:])):
            raise ValueError("schedule errors must be nonnegative and nonincreasing")
        for (f, _), (g, _) in zip(terms, terms[1:]):
            if not set(f.support) <= set(g.support):
                raise ValueError("schedule supports must be increasing")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    @staticmethod
    def interleave(space: ProductSpace, a: "ApproximantSchedule", b: "ApproximantSchedule") -> "ApproximantSchedule":
        """Alternate the terms of two schedules of one target."""
        out = []
        acc = set()
        for (fa, ea), (fb, eb) in zip(a.terms, b.terms):
            e = max(ea, eb)
            for f in (fa, fb):
                acc |= set(f.support)
                out.append((f.enlarged(space, acc), e))
        return ApproximantSchedule(tuple(out))

    def check_sup(self, space: ProductSpace, samples: int = 512, seed: int = 0, scale: float = 10.0) -> float:
        """Largest sampled excess of ``|f_{n+1} - f_n|`` over ``eps_n + eps_{n+1}``."""
        rng = np.random.Generator(np.random.Philox(seed))
        support = _support(self.terms[-1][0].support)
        dims = space.dims(support)
        pts = scale * (2 * rng.random((samples, sum(dims))) - 1)
        offs = dict(zip(support, np.cumsum([0] + dims)))

        def values(f):
            cols = np.concatenate([np.arange(offs[i], offs[i] + space.factor(i)[0].dim) for i in f.support])
            return f.bind(space)(pts[:, cols])

        worst = -math.inf
        for (f, e1), (g, e2) in zip(self.terms, self.terms[1:]):
            gap = float(np.max(np.abs(values(g) - values(f))))
            worst = max(worst, gap - (e1 + e2))
        return worst


def limit_of_terms(values: Callable[[int], MeanValueResult], errs: Sequence[float], crit: ConvergenceCriteria,
                   meta: Optional[dict] = None) -> MeanValueResult:
    """Detect the limit of per-term mean values with the window rule plus ``2 eps_N <= eps``."""
    count = len(errs)
    window = min(crit.window, count)
    ns, avgs, masses, spreads = [], [], [], []
    status = MAX_ITERATIONS
    for n in range(count):
        r = values(n)
        if not r.converged:
            raise TermDiverged(f"term {n} has no converged mean value (status {r.status})")
        ns.append(n)
        avgs.append(np.atleast_1d(r.value))
        masses.append(float(r.masses[-1]))
        s = window_spread(np.array(avgs[-window:])) if len(avgs) >= window else math.nan
        spreads.append(s)
        if s <= crit.eps and 2 * errs[n] <= crit.eps:
            status = CONVERGED
            break
    arr = np.array(avgs)
    spread = spreads[-1] if not math.isnan(spreads[-1]) else window_spread(arr)
    m = dict(meta or {})
    m.update(abs_error=float(spread + 2 * errs[len(ns) - 1]), terms_used=len(ns), eps=crit.eps)
    value = _unwrap(arr[-1]) if status == CONVERGED else None
    return MeanValueResult(value, status, np.array(ns), arr, np.array(masses), np.array(spreads, dtype=float),
                           float(spread), m)


def term_criteria(crit: ConvergenceCriteria) -> ConvergenceCriteria:
    """Per-term stopping rule: ten times tighter, so term bias stays below the schedule eps."""
    return ConvergenceCriteria(crit.eps / 10, crit.window, max(crit.n_max, 400))


def wmv_uniform_limit(space: ProductSpace, schedule: ApproximantSchedule, crit=None, tol=None,
                      seed: int = 0, *, term_crit: Optional[ConvergenceCriteria] = None) -> MeanValueResult:
    """Limit of ``WMV(f_n)`` over the schedule; ``meta['abs_error']`` is spread + 2 eps_N.

    Each term uses ``term_crit`` (default: eps/10) so that its own stopping
    bias does not show up as spread across terms.
    """
    crit = crit or ConvergenceCriteria()
    tc = term_crit or term_criteria(crit)
    errs = [e for _, e in schedule.terms]
    return limit_of_terms(lambda n: wmv_cylindrical(space, schedule.terms[n][0], tc, tol, seed), errs, crit,
                          {"kind": "uniform_limit", "term_eps": tc.eps})


@dataclass(frozen=True)
class AdmissibleDomain:
    """Membership predicate on full points (factors ``0..k-1`` concatenated)."""

    predicate: Callable[[np.ndarray], np.ndarray]
    declared_admissible: bool = False
    null_witness: Optional[Callable] = None


@dataclass
class AdmissibleReport:
    failures: float
    samples: int
    fraction: float
    ci_low: float
    ci_high: float

    @property
    def admissible_evidence(self) -> bool:
        return self.failures == 0


def _wilson(p, n, z=1.96):
    den = 1 + z * z / n
    c = (p + z * z / (2 * n)) / den
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, c - h), min(1.0, c + h)


def check_admissible(space: ProductSpace, domain: AdmissibleDomain, support, n: int, x, samples: int = 4096,
                     seed: int = 0) -> AdmissibleReport:
    """Splice product-measure samples of the n-th product region into ``x`` and count misses."""
    support = _support(support)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    count = max(support) + 1
    while full_offsets(space, count)[-1] < x.size:
        count += 1
    o = full_offsets(space, count)
    x = np.concatenate([x, np.zeros(o[-1] - x.size)])
    rng = np.random.Generator(np.random.Philox(seed))
    pts = np.tile(x, (samples, 1))
    w = np.ones(samples)
    for i in support:
        mu, u = space.factor(i)
        s = sample_region(u(n), rng, samples)
        pts[:, o[i]:o[i + 1]] = s
        if isinstance(mu, Density):
            w *= mu.weight(s)
    miss = ~np.asarray(domain.predicate(pts), dtype=bool)
    frac = float(w[miss].sum() / w.sum())
    lo, hi = _wilson(frac, samples)
    return AdmissibleReport(float(np.count_nonzero(miss)), samples, frac, lo, hi)
