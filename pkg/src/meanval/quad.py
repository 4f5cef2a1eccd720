"""Integration engine.

Deterministic paths use a globally adaptive Gauss-Kronrod (7/15) rule, in
tensor form for dimensions 2 and 3, on a box decomposition of the region.
Everything else goes through seeded Monte Carlo with a counter-based
generator, so a fixed seed gives bit-identical results for any thread count.
Discrete measures are summed exactly.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import exprlang
from .errors import BudgetExceeded, DimensionMismatch, NonIntegrable
from .measures import (
    Density,
    Measure,
    Product,
    ProductMeasure,
    Region,
    Sublevel,
    SumMeasure,
    sample_ball,
    split_product_region,
)

DEFAULT_BUDGET = 10_000_000
TENSOR_BUDGET = 5_000_000  # beyond this, 2-3 dimensional boxes fall back to Monte Carlo
CHUNK = 1 << 14
MIN_SAMPLES = 1 << 16
MAX_SAMPLES = 1 << 20
MC_Z = 3.0  # abs_error is this many standard errors

# Gauss-Kronrod 7/15 nodes on [-1, 1], ascending; Gauss nodes sit at odd indices.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

NODES15 = np.concatenate([-_XK, _XK[-2::-1]])
WK15 = np.concatenate([_WK, _WK[-2::-1]])
WG15 = np.zeros(15)
WG15[1::2] = np.concatenate([_WG, _WG[-2::-1]])


@dataclass(frozen=True)
class IntegralEstimate:
    value: np.ndarray
    abs_error: float
    evaluations: int
    method: str

    def __post_init__(self):
        object.__setattr__(self, "value", np.atleast_1d(np.asarray(self.value)))


# --- integrands -------------------------------------------------------------

class Integrand:
    """Batch integrand ``(N, m) -> (N, d)`` with complex outputs split into pairs."""

    def __init__(self, f, dim: int):
        self.dim = dim
        parts = list(f) if isinstance(f, (list, tuple)) else [f]
        self._fns = [_scalar_or_vector(p, dim) for p in parts]
        probe = np.zeros((1, dim))
        outs = [np.asarray(fn(probe)) for fn in self._fns]
        self.is_complex = any(np.iscomplexobj(o) for o in outs)
        self.out_dim = sum(o.reshape(1, -1).shape[1] for o in outs)

    def raw(self, pts: np.ndarray) -> np.ndarray:
        cols = []
        for fn in self._fns:
            v = np.asarray(fn(pts))
            cols.append(v.reshape(len(pts), -1))
        return np.hstack(cols) if len(cols) > 1 else cols[0]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        v = self.raw(pts)
        if self.is_complex:
            v = np.asarray(v, dtype=np.complex128)
            return np.concatenate([v.real, v.imag], axis=1)
        return np.asarray(v, dtype=np.float64)

    @property
    def real_dim(self):
        return 2 * self.out_dim if self.is_complex else self.out_dim

    def pack(self, v: np.ndarray):
        v = np.asarray(v, dtype=np.float64)
        if self.is_complex:
            return v[: self.out_dim] + 1j * v[self.out_dim:]
        return v


def _scalar_or_vector(f, dim):
    if isinstance(f, str):
        f = exprlang.parse(f, dim)
    if isinstance(f, exprlang.Expr):
        if exprlang.max_variable(f) >= dim:
            raise DimensionMismatch(f"expression uses x{exprlang.max_variable(f)} but dimension is {dim}")
        e = f
        return lambda pts: exprlang.evaluate(e, pts)
    if isinstance(f, (int, float, complex)):
        c = f
        return lambda pts: np.full(len(pts), c)
    if callable(f):
        return f
    raise TypeError(f"cannot integrate {f!r}")


def as_integrand(f, dim: int) -> Integrand:
    return f if isinstance(f, Integrand) else Integrand(f, dim)


# --- public entry point ----------------------------------------------------

def integrate(f, mu: Measure, r: Region, tol: float = 1e-8, seed: int = 0, *,
              rtol: float = 0.0, ref: Optional[int] = None, budget: int = DEFAULT_BUDGET,
              max_samples: int = MAX_SAMPLES) -> IntegralEstimate:
    """Estimate ``∫_r f dmu``.

    The stopping rule is ``abs_error <= max(tol, rtol * |value[ref]|)``; ``ref``
    defaults to the largest component.  Complex integrands return a complex
    value vector.
    """
    if mu.dim != r.dim:
        raise DimensionMismatch(f"measure of dimension {mu.dim} on region of dimension {r.dim}")
    g = as_integrand(f, r.dim)
    est = _integrate(g, mu, r, tol, rtol, ref, seed, budget, max_samples)
    if not np.all(np.isfinite(est.value)):
        raise NonIntegrable("integral estimate is not finite")
    return IntegralEstimate(g.pack(est.value), est.abs_error, est.evaluations, est.method)


def _target(tol, rtol, ref):
    def fn(value):
        v = np.abs(value)
        scale = v[ref] if ref is not None else (v.max() if v.size else 0.0)
        return max(tol, rtol * scale)
    return fn


def _integrate(g, mu, r, tol, rtol, ref, seed, budget, max_samples) -> IntegralEstimate:
    if isinstance(mu, SumMeasure):
        parts = [_integrate(g, t, r, tol / len(mu.terms), rtol, ref, seed, budget, max_samples) for t in mu.terms]
        return IntegralEstimate(sum(p.value for p in parts), sum(p.abs_error for p in parts),
                                sum(p.evaluations for p in parts), parts[0].method)
    if isinstance(mu, ProductMeasure):
        return _integrate_product(g, mu, r, tol, rtol, ref, seed, budget, max_samples)
    if mu.discrete:
        pts, w = mu.atoms(r)
        if len(pts) == 0:
            return IntegralEstimate(np.zeros(g.real_dim), 0.0, 1, "exact")
        vals = g(pts)
        return IntegralEstimate(w @ vals, 0.0, len(pts), "exact")
    if not isinstance(mu, Density):
        raise TypeError(f"unsupported measure {mu!r}")

    def h(pts):
        v = g(pts)
        return v if mu.is_lebesgue and mu.scale == 1.0 else v * mu.weight(pts)[:, None]

    return integrate_density(h, g.real_dim, r, _target(tol, rtol, ref), seed, budget, max_samples)


def integrate_density(h: Callable, d: int, r: Region, target: Callable, seed: int, budget: int,
                      max_samples: int) -> IntegralEstimate:
    """Integrate a weighted batch integrand ``h: (N, m) -> (N, d)`` against Lebesgue measure on r."""
    boxes = r.boxes()
    if boxes is not None and r.dim <= 3:
        if not boxes:
            return IntegralEstimate(np.zeros(d), 0.0, 1, "adaptive1d" if r.dim == 1 else "tensor")
        if r.dim == 1:
            return adaptive_boxes(h, d, boxes, target, budget)
        try:
            return adaptive_boxes(h, d, boxes, target, min(budget, TENSOR_BUDGET))
        except BudgetExceeded:
            pass
    return montecarlo(h, d, r, target, seed, budget, max_samples)


# --- adaptive Gauss-Kronrod ------------------------------------------------

_RULES = {}


def _rule(m):
    """Tensor nodes, full Kronrod weights, and per-axis weights with Gauss on that axis."""
    if m not in _RULES:
        grids = np.meshgrid(*([NODES15] * m), indexing="ij")
        nodes = np.stack([x.reshape(-1) for x in grids], axis=1)
        digits = [(np.arange(15 ** m) // 15 ** (m - 1 - k)) % 15 for k in range(m)]
        wk = np.prod([WK15[d] for d in digits], axis=0)
        mixed = np.stack([
            np.prod([(WG15 if j == k else WK15)[d] for j, d in enumerate(digits)], axis=0) for k in range(m)
        ], axis=1)
        _RULES[m] = (nodes, wk, mixed)
    return _RULES[m]


def _graded_cuts(lo, hi, base=2.0):
    """Breakpoints in [lo, hi] at 0 and ±base^k so features near the origin are resolved."""
    pts = [lo, hi]
    if lo < 0 < hi:
        pts.append(0.0)
    span = max(abs(lo), abs(hi))
    x = 0.5
    while x < span:
        for s in (-1.0, 1.0):
            if lo < s * x < hi:
                pts.append(s * x)
        x *= base
    return np.unique(pts)


def _initial_cells(boxes, max_evals=2_000_000):
    m = len(boxes[0][0])
    max_cells = max(len(boxes), max_evals // 15 ** m)
    base = 2.0
    while True:
        cuts = [[_graded_cuts(a, b, base) for a, b in zip(lo, hi)] for lo, hi in boxes]
        total = sum(math.prod(len(c) - 1 for c in cb) for cb in cuts)
        if total <= max_cells or base > 1e6:
            break
        base *= base
    if total > max_cells:
        return np.array([b[0] for b in boxes]), np.array([b[1] for b in boxes])
    los, his = [], []
    for cb in cuts:
        for combo in itertools.product(*[range(len(c) - 1) for c in cb]):
            los.append([cb[k][i] for k, i in enumerate(combo)])
            his.append([cb[k][i + 1] for k, i in enumerate(combo)])
    return np.array(los, dtype=np.float64), np.array(his, dtype=np.float64)


def _gk_boxes(h, d, lo, hi):
    """Kronrod estimate per box, error = sum of per-axis |K - G| gaps, and the worst axis."""
    m = lo.shape[1]
    nodes, wk, mixed = _rule(m)
    c = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = (c[:, None, :] + half[:, None, :] * nodes[None, :, :]).reshape(-1, m)
    vals = np.asarray(h(pts), dtype=np.float64).reshape(len(lo), len(wk), d)
    if not np.all(np.isfinite(vals)):
        raise NonIntegrable("integrand is not finite at a quadrature node")
    jac = np.prod(half, axis=1)[:, None]
    k = np.einsum("bnd,n->bd", vals, wk) * jac
    g = np.einsum("bnd,nk->bkd", vals, mixed) * jac[:, :, None]
    gaps = np.max(np.abs(k[:, None, :] - g), axis=2)
    return k, gaps.sum(axis=1), np.argmax(gaps, axis=1), len(pts)


def _split(lo, hi, axis):
    rows = np.arange(len(lo))
    mid = 0.5 * (lo[rows, axis] + hi[rows, axis])
    hi1 = hi.copy()
    hi1[rows, axis] = mid
    lo2 = lo.copy()
    lo2[rows, axis] = mid
    return np.concatenate([lo, lo2]), np.concatenate([hi1, hi])


def adaptive_boxes(h, d, boxes, target, budget=DEFAULT_BUDGET) -> IntegralEstimate:
    lo, hi = _initial_cells(boxes)
    m = lo.shape[1]
    method = "adaptive1d" if m == 1 else "tensor"
    vals, errs, axes, evals = _gk_boxes(h, d, lo, hi)
    while True:
        total = vals.sum(axis=0)
        err = float(errs.sum())
        if err <= target(total):
            return IntegralEstimate(total, err, evals, method)
        if evals >= budget:
            raise BudgetExceeded(f"evaluation budget {budget} reached with error {err:.3g}",
                                 IntegralEstimate(total, err, evals, method))
        order = np.argsort(-errs, kind="stable")
        cum = np.cumsum(errs[order])
        cut = int(np.searchsorted(cum, 0.5 * err)) + 1
        pick = np.zeros(len(errs), dtype=bool)
        pick[order[:cut]] = True
        clo, chi = _split(lo[pick], hi[pick], axes[pick])
        widths = chi - clo
        if np.any(widths <= 1e-13 * np.maximum(1.0, np.abs(clo))):
            raise BudgetExceeded("subdivision reached floating-point resolution",
                                 IntegralEstimate(total, err, evals, method))
        cv, ce, ca, n = _gk_boxes(h, d, clo, chi)
        evals += n
        lo = np.concatenate([lo[~pick], clo])
        hi = np.concatenate([hi[~pick], chi])
        vals = np.concatenate([vals[~pick], cv])
        errs = np.concatenate([errs[~pick], ce])
        axes = np.concatenate([axes[~pick], ca])


# --- Monte Carlo -------------------------------------------------------------

def threads() -> int:
    env = os.environ.get("MEANVAL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


class _Sampler:
    """Uniform sampler on a region's sampling domain with its Lebesgue volume."""

    def __init__(self, r: Region):
        self.r = r
        self.dim = r.dim
        self.parts = None
        self.filter = True
        ball = r.as_ball()
        if ball is not None:
            self.kind, self.ball, self.volume, self.filter = "ball", ball, ball.volume(), False
        elif isinstance(r, Product):
            self.kind = "product"
            self.parts = [_Sampler(p) for p in r.parts]
            self.volume = float(np.prod([p.volume for p in self.parts]))
            self.filter = any(p.filter for p in self.parts)
        else:
            lo, hi = r.bbox()
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise NonIntegrable("Monte Carlo needs a bounded region")
            self.kind, self.lo, self.hi = "box", lo, hi
            self.volume = float(np.prod(hi - lo))
            boxes = r.boxes()
            self.filter = not (boxes is not None and len(boxes) == 1
                               and np.allclose(boxes[0][0], lo) and np.allclose(boxes[0][1], hi))

    def draw(self, rng, k):
        if self.kind == "ball":
            return sample_ball(self.ball, rng, k)
        if self.kind == "product":
            return np.hstack([p.draw(rng, k) for p in self.parts])
        m = self.dim
        # Latin hypercube stratification per chunk
        u = (np.stack([rng.permutation(k) for _ in range(m)], axis=1) + rng.random((k, m))) / k
        return self.lo + u * (self.hi - self.lo)


def _chunk(h, d, sampler, seed, idx):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(idx,))))
    pts = sampler.draw(rng, CHUNK)
    vals = np.zeros((CHUNK, d))
    if sampler.filter:
        inside = sampler.r.contains(pts)
        if inside.any():
            vals[inside] = h(pts[inside])
        hits = int(np.count_nonzero(inside))
    else:
        vals = np.asarray(h(pts), dtype=np.float64).reshape(CHUNK, d)
        hits = CHUNK
    return vals.sum(axis=0), (vals * vals).sum(axis=0), hits


def _run_chunks(h, d, sampler, seed, start, stop):
    idx = list(range(start, stop))
    nt = threads()
    if nt > 1 and len(idx) > 1:
        with ThreadPoolExecutor(nt) as ex:
            return list(ex.map(lambda i: _chunk(h, d, sampler, seed, i), idx))
    return [_chunk(h, d, sampler, seed, i) for i in idx]


def montecarlo(h, d, r: Region, target, seed=0, budget=DEFAULT_BUDGET, max_samples=MAX_SAMPLES) -> IntegralEstimate:
    sampler = _Sampler(r)
    max_samples = max(MIN_SAMPLES, min(max_samples, budget))
    n_pilot = MIN_SAMPLES // CHUNK
    results = _run_chunks(h, d, sampler, seed, 0, n_pilot)
    if isinstance(r, Sublevel) or (sampler.kind == "box" and _has_sublevel(r)):
        hits = sum(x[2] for x in results)
        if hits < 1e-3 * n_pilot * CHUNK:
            raise BudgetExceeded(f"rejection rate above 0.999 for sublevel region ({hits} hits)")

    def summarize(res):
        n = len(res) * CHUNK
        s = np.zeros(d)
        s2 = np.zeros(d)
        for a, b, _ in res:  # fixed reduction order
            s = s + a
            s2 = s2 + b
        mean = s / n
        var = np.maximum(s2 / n - mean * mean, 0.0)
        value = sampler.volume * mean
        err = MC_Z * sampler.volume * float(np.sqrt(var.max() / n))
        return value, err, n

    value, err, n = summarize(results)
    if not (np.all(np.isfinite(value)) and math.isfinite(err)):
        raise NonIntegrable("Monte Carlo pilot produced a non-finite estimate")
    if err > target(value):
        need = int(math.ceil(n * (err / max(target(value), 1e-300)) ** 2))
        need = min(max(need, n), max_samples)
        n_chunks = int(math.ceil(need / CHUNK))
        if n_chunks > len(results):
            results = results + _run_chunks(h, d, sampler, seed, len(results), n_chunks)
            value, err, n = summarize(results)
    return IntegralEstimate(value, err, n, "montecarlo")


def _has_sublevel(r):
    if isinstance(r, Sublevel):
        return True
    for attr in ("inner", "a", "b"):
        if hasattr(r, attr) and _has_sublevel(getattr(r, attr)):
            return True
    return any(_has_sublevel(p) for p in getattr(r, "parts", ()))


# --- product measures ------------------------------------------------------

def _integrate_product(g, mu: ProductMeasure, r, tol, rtol, ref, seed, budget, max_samples):
    dens = mu.as_density()
    if dens is not None:
        return _integrate(g, dens, r, tol, rtol, ref, seed, budget, max_samples)
    parts = split_product_region(mu, r)
    if parts is None:
        raise DimensionMismatch("product measure with discrete factors needs a product region")
    o = mu.offsets
    disc = [i for i, f in enumerate(mu.factors) if f.discrete]
    cont = [i for i, f in enumerate(mu.factors) if not f.discrete]
    atoms = [mu.factors[i].atoms(parts[i]) for i in disc]
    if any(len(a[0]) == 0 for a in atoms):
        return IntegralEstimate(np.zeros(g.real_dim), 0.0, 1, "exact")
    combos = list(itertools.product(*[range(len(a[0])) for a in atoms]))
    if not cont:
        pts = np.zeros((len(combos), mu.dim))
        w = np.ones(len(combos))
        for j, i in enumerate(disc):
            idx = np.array([c[j] for c in combos])
            pts[:, o[i]:o[i + 1]] = atoms[j][0][idx]
            w *= atoms[j][1][idx]
        return IntegralEstimate(w @ g(pts), 0.0, len(pts), "exact")
    cmeasure = ProductMeasure([mu.factors[i] for i in cont]).as_density()
    cregion = Product(tuple(parts[i] for i in cont)) if len(cont) > 1 else parts[cont[0]]
    total, err, evals, method = np.zeros(g.real_dim), 0.0, 0, "exact"
    for combo in combos:
        fixed = np.zeros(mu.dim)
        weight = 1.0
        for j, i in enumerate(disc):
            fixed[o[i]:o[i + 1]] = atoms[j][0][combo[j]]
            weight *= atoms[j][1][combo[j]]

        def h(cpts, fixed=fixed, weight=weight):
            full = np.tile(fixed, (len(cpts), 1))
            col = 0
            for i in cont:
                k = o[i + 1] - o[i]
                full[:, o[i]:o[i + 1]] = cpts[:, col:col + k]
                col += k
            return weight * g(full) * cmeasure.weight(cpts)[:, None]

        est = integrate_density(h, g.real_dim, cregion, _target(tol / len(combos), rtol, ref), seed, budget, max_samples)
        total = total + est.value
        err += est.abs_error
        evals += est.evaluations
        method = est.method
    return IntegralEstimate(total, err, evals, method)
