"""Partial averages along renormalization sequences and their limits."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from . import _backend, exprlang
from .errors import ThetaDiverges, UnboundedSublevel, ZeroMassRegion
from .measures import Ball, HyperRect, Measure, Region, RenormSequence, Sublevel, as_scalar_function
from .quad import MAX_SAMPLES, as_integrand, _integrate, _target

CONVERGED = "Converged"
OSCILLATING = "Oscillating"
MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class ConvergenceCriteria:
    """Cauchy-window stopping rule: the last ``window`` averages lie within ``eps``."""

    eps: float = 1e-3
    window: int = 5
    n_max: int = 200

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError("eps must be nonnegative")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.window > self.n_max + 1:
            raise ValueError("window must not exceed the number of iterations")


@dataclass
class MeanValueResult:
    value: object
    status: str
    ns: np.ndarray
    averages: np.ndarray  # (len, d), complex when the integrand is
    masses: np.ndarray
    spreads: np.ndarray
    spread: float
    meta: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def history(self) -> List[tuple]:
        return [(int(n), _unwrap(a), float(m)) for n, a, m in zip(self.ns, self.averages, self.masses)]

    @property
    def last(self):
        """The final partial average, whatever the status."""
        return _unwrap(self.averages[-1])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.averages.shape[1]
        cplx = np.iscomplexobj(self.averages)
        cols = []
        for k in range(d):
            cols += [f"a_n_{k}_re", f"a_n_{k}_im"] if cplx else [f"a_n_{k}"]
        w.writerow(["n", "mu_Un"] + cols + ["spread"])
        for i, n in enumerate(self.ns):
            row = [int(n), repr(float(self.masses[i]))]
            for a in self.averages[i]:
                row += [repr(float(a.real)), repr(float(a.imag))] if cplx else [repr(float(a))]
            s = self.spreads[i]
            row.append("" if np.isnan(s) else repr(float(s)))
            w.writerow(row)
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def to_dict(self) -> dict:
        return {
            "value": _jsonable(self.value),
            "status": self.status,
            "spread": float(self.spread),
            "iterations": int(len(self.ns)),
            "last_average": _jsonable(self.last),
            "meta": {k: _jsonable(v) for k, v in self.meta.items()},
        }


def _unwrap(a):
    a = np.asarray(a)
    if a.size == 1:
        v = a.reshape(-1)[0]
        return complex(v) if np.iscomplexobj(a) else float(v)
    return a.copy()


def _jsonable(v):
    if v is None or isinstance(v, (bool, str, int)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return str(v)


# --- convergence detection ---------------------------------------------------

def _as_real_rows(avgs: np.ndarray) -> np.ndarray:
    return np.concatenate([avgs.real, avgs.imag], axis=1) if np.iscomplexobj(avgs) else avgs


def window_spread(rows: np.ndarray) -> float:
    """Maximum pairwise Euclidean distance among the rows."""
    r = _as_real_rows(np.asarray(rows))
    if len(r) < 2:
        return 0.0
    diff = r[:, None, :] - r[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=2)).max())


def _block_spread(rows):
    r = _as_real_rows(rows)
    return float(np.linalg.norm(r.max(axis=0) - r.min(axis=0)))


def classify_unconverged(avgs: np.ndarray, eps: float) -> str:
    """Oscillating when three trailing dyadic blocks keep a comparable spread
    above eps with bounded averages; otherwise MaxIterations."""
    n = len(avgs)
    if n < 16:
        return MAX_ITERATIONS
    b = [(n // 8, n // 4), (n // 4, n // 2), (n // 2, n)]
    s = [_block_spread(avgs[i:j]) for i, j in b]
    head = np.abs(_as_real_rows(avgs[: n // 2])).max()
    tail = np.abs(_as_real_rows(avgs[n // 2:])).max()
    bounded = tail <= 10.0 * (1.0 + head)
    if all(x > eps for x in s) and s[2] >= 0.75 * s[0] and bounded:
        return OSCILLATING
    return MAX_ITERATIONS


def aitken(avgs: np.ndarray):
    """Aitken delta-squared extrapolation of the last three averages (heuristic)."""
    a0, a1, a2 = avgs[-3], avgs[-2], avgs[-1]
    den = a2 - 2 * a1 + a0
    with np.errstate(all="ignore"):
        out = a2 - (a2 - a1) ** 2 / den
    return np.where(np.abs(den) > 1e-300, out, a2)


def run_sequence(step: Callable[[int], tuple], indices: Iterable[int], crit: ConvergenceCriteria,
                 *, use_aitken: bool = False, meta: Optional[dict] = None) -> MeanValueResult:
    """Drive ``step(n) -> (average vector, mass)`` until the window criterion holds."""
    ns, avgs, masses, spreads = [], [], [], []
    status = None
    for n in indices:
        a, m = step(n)
        ns.append(n)
        avgs.append(np.atleast_1d(a))
        masses.append(m)
        if len(avgs) >= crit.window:
            s = window_spread(np.array(avgs[-crit.window:]))
        else:
            s = math.nan
        spreads.append(s)
        if s <= crit.eps:
            status = CONVERGED
            break
    arr = np.array(avgs)
    if status is None:
        status = classify_unconverged(arr, crit.eps)
    spread = spreads[-1] if not math.isnan(spreads[-1]) else window_spread(arr)
    value = None
    if status == CONVERGED:
        value = _unwrap(aitken(arr) if use_aitken and len(arr) >= 3 else arr[-1])
    m = dict(meta or {})
    m.update(eps=crit.eps, window=crit.window, n_max=crit.n_max, accelerated=bool(use_aitken))
    return MeanValueResult(value, status, np.array(ns), arr, np.array(masses, dtype=float),
                           np.array(spreads, dtype=float), float(spread), m)


# --- partial averages --------------------------------------------------------

class _WithOne:
    """Integrand stacked with the constant 1 so the mass shares the sample set."""

    def __init__(self, g):
        self.g = g
        self.real_dim = g.real_dim + 1

    def __call__(self, pts):
        return np.hstack([self.g(pts), np.ones((len(pts), 1))])


def average_over(f, mu: Measure, region: Region, tol: float = 1e-4, seed: int = 0,
                 max_samples: int = MAX_SAMPLES):
    """``(average, mass, abs_error)`` of ``f`` over one region."""
    g = as_integrand(f, region.dim)
    joint = _WithOne(g)
    est = _integrate(joint, mu, region, 0.0, tol, joint.real_dim - 1, seed, 10_000_000, max_samples)
    mass = float(est.value[-1])
    if not mass > 0:
        raise ZeroMassRegion(f"measure of {region!r} is {mass}")
    avg = g.pack(est.value[:-1] / mass)
    return avg, mass, est.abs_error / mass


def partial_average(f, mu: Measure, u, n: int, tol: float = 1e-4, seed: int = 0):
    """``(1/mu(U_n)) ∫_{U_n} f dmu``; scalar for scalar integrands."""
    region = u(n) if isinstance(u, RenormSequence) else u
    avg, _, _ = average_over(f, mu, region, tol, seed)
    return _unwrap(avg)


def _default_tol(crit, tol):
    return crit.eps / 10 if tol is None else tol


def wmv(f, mu: Measure, u: RenormSequence, crit: Optional[ConvergenceCriteria] = None,
        tol: Optional[float] = None, seed: int = 0, *, aitken: bool = False, start: int = 0,
        max_samples: int = MAX_SAMPLES) -> MeanValueResult:
    """Weak mean value of ``f`` for ``mu`` along ``u``.

    ``tol`` is the relative quadrature tolerance per partial average
    (default ``eps/10``).  ``aitken=True`` extrapolates the final value; it is
    a heuristic and can invent limits for oscillating sequences.
    """
    crit = crit or ConvergenceCriteria()
    tol = _default_tol(crit, tol)
    g = as_integrand(f, u.dim)

    def step(n):
        avg, mass, _ = average_over(g, mu, u(n), tol, seed, max_samples)
        return avg, mass

    return run_sequence(step, range(start, crit.n_max + 1), crit, use_aitken=aitken,
                        meta={"renorm": u.label, "seed": seed, "tol": tol})


def cesaro(seq, crit: Optional[ConvergenceCriteria] = None, *, start_chunk: int = 1024) -> MeanValueResult:
    """Mean value for the counting measure on prefixes ``{0..n}``: running averages
    of ``seq`` with compensated summation.  ``seq`` maps an index array (or a
    single index) to terms; expression strings use ``x0`` for the index."""
    crit = crit or ConvergenceCriteria()
    if isinstance(seq, (str, exprlang.Expr)):
        fn = as_scalar_function(seq, 1)
        terms_of = lambda idx: fn(idx.astype(np.float64).reshape(-1, 1))
    else:
        terms_of = _vectorize_seq(seq)
    total = crit.n_max + 1
    size = min(start_chunk, total)
    terms = np.empty(0)
    while True:
        idx = np.arange(len(terms), size)
        terms = np.concatenate([terms, np.asarray(terms_of(idx), dtype=np.float64).reshape(-1)])
        avgs = _backend.running_mean(terms)
        spreads = _backend.window_spread(avgs, crit.window)
        hit = np.nonzero(spreads <= crit.eps)[0]
        if len(hit) or size == total:
            break
        size = min(2 * size, total)
    stop = int(hit[0]) + 1 if len(hit) else len(avgs)
    avgs, spreads = avgs[:stop], spreads[:stop]
    ns = np.arange(stop)
    rows = avgs.reshape(-1, 1)
    status = CONVERGED if len(hit) else classify_unconverged(rows, crit.eps)
    spread = float(spreads[-1]) if not np.isnan(spreads[-1]) else float(np.ptp(avgs))
    return MeanValueResult(float(avgs[-1]) if status == CONVERGED else None, status, ns, rows,
                           (ns + 1).astype(float), spreads, spread,
                           {"renorm": "prefixes", "eps": crit.eps, "window": crit.window,
                            "n_max": crit.n_max, "backend": _backend.NAME})


def _vectorize_seq(seq):
    def terms_of(idx):
        try:
            out = np.asarray(seq(idx), dtype=np.float64)
            if out.shape == idx.shape:
                return out
        except Exception:
            pass
        return np.array([float(seq(int(i))) for i in idx])
    return terms_of


# --- measure mixing ----------------------------------------------------------

@dataclass
class MeasureSumResult:
    value: object            # WMV for mu+nu computed directly
    mixed: object            # Θ·WMV_mu + (1−Θ)·WMV_nu
    big_theta: float
    residual: float
    direct: MeanValueResult
    parts: tuple

    def __iter__(self):
        return iter((self.value, self.big_theta))


def wmv_measure_sum(f, mu: Measure, nu: Measure, u: RenormSequence, crit=None, tol=None, seed=0) -> MeasureSumResult:
    """WMV for ``mu + nu`` directly and through the mixing formula with Θ(mu, nu)."""
    from .asymptotics import compare

    crit = crit or ConvergenceCriteria()
    cmp = compare(mu, nu, u, crit, tol, seed)
    if cmp.big_theta is None:
        raise ThetaDiverges("the mass ratio along the sequence does not settle")
    th = cmp.big_theta
    direct = wmv(f, mu + nu, u, crit, tol, seed)
    wm = wmv(f, mu, u, crit, tol, seed)
    wn = wmv(f, nu, u, crit, tol, seed)
    mixed = None
    pieces = []
    for w, r in ((th, wm), (1 - th, wn)):
        if r.value is None:
            if w > crit.eps:
                pieces = None
                break
            continue
        pieces.append(w * np.asarray(r.value))
    if pieces is not None:
        mixed = _unwrap(sum(pieces))
    residual = math.nan
    if mixed is not None and direct.value is not None:
        residual = float(np.max(np.abs(np.asarray(direct.value) - np.asarray(mixed))))
    return MeasureSumResult(direct.value, mixed, th, residual, direct, (wm, wn, cmp))


# --- continuum (sublevel) renormalization ------------------------------------

def wmv_continuum(f, mu: Measure, F, t_grid: Sequence[float], crit=None, tol=None, seed=0, *,
                  box) -> MeanValueResult:
    """Averages over sublevel sets ``{F <= t}`` on an increasing grid of t.

    ``box(t)`` returns the enclosing :class:`HyperRect` or a half-width
    (number), which is used as a centered cube.  A box that the sublevel
    set touches raises :class:`UnboundedSublevel`.
    """
    crit = crit or ConvergenceCriteria(n_max=len(t_grid) - 1)
    tol = _default_tol(crit, tol)
    t = np.asarray(t_grid, dtype=np.float64)
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    m = mu.dim
    Ffn = as_scalar_function(F, m)
    g = as_integrand(f, m)
    rng = np.random.Generator(np.random.Philox(seed))

    def region(k):
        b = box(t[k])
        if not isinstance(b, HyperRect):
            b = HyperRect(np.full(m, -float(b)), np.full(m, float(b)))
        r = Sublevel(Ffn, float(t[k]), b)
        if r.boundary_violations(rng) > 0:
            raise UnboundedSublevel(f"{{F <= {t[k]}}} reaches the faces of its bounding box")
        return r

    def step(k):
        avg, mass, _ = average_over(g, mu, region(k), tol, seed)
        return avg, mass

    res = run_sequence(step, range(min(len(t), crit.n_max + 1)), crit,
                       meta={"renorm": "sublevel", "seed": seed, "tol": tol})
    res.meta["t"] = t[: len(res.ns)].tolist()
    return res


# --- homology detector ---------------------------------------------------------

@dataclass
class HomologyResult:
    value: Optional[float]
    is_null: bool
    eps_null: float
    result: MeanValueResult

    def __iter__(self):
        return iter((self.value, self.is_null))


def homology_nullity(a, crit=None, tol: float = 1e-4, seed: int = 0,
                     max_samples: int = 1 << 17) -> HomologyResult:
    """Mean of ``|<a, x>| / (1 + |<a, x>|)`` over Euclidean balls of radius n+1.

    The class represented by ``a`` is null iff the mean vanishes; the verdict
    uses ``eps_null = 10 * tol``.
    """
    from .measures import balls, cubes, lebesgue

    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    d = a.size
    crit = crit or ConvergenceCriteria()

    def phi(pts):
        s = np.abs(pts @ a)
        return s / (1.0 + s)

    u = balls(d) if d > 1 else cubes(1)
    res = wmv(phi, lebesgue(d), u, crit, tol, seed, max_samples=max_samples)
    eps_null = 10.0 * tol
    value = res.value if res.value is not None else res.last
    return HomologyResult(res.value, bool(abs(value) <= eps_null), eps_null, res)


# --- strong mean value check ---------------------------------------------------

@dataclass
class MVCheck:
    strong: bool
    results: List[MeanValueResult]
    labels: List[str]
    max_gap: float

    @property
    def values(self):
        return [r.value for r in self.results]

    @property
    def value(self):
        return self.results[0].value if self.strong else None


def mv_check(f, mu: Measure, renorms: Sequence[RenormSequence], crit=None, tol=None, seed=0) -> MVCheck:
    """Compare the weak mean values over several sequences.

    ``strong=True`` only says the finitely many sequences tried agree within
    ``3*eps``; it is evidence, not proof.
    """
    if len(renorms) < 2:
        raise ValueError("mv_check needs at least two renormalization sequences")
    crit = crit or ConvergenceCriteria()
    results = [wmv(f, mu, u, crit, tol, seed) for u in renorms]
    gap = 0.0
    ok = all(r.converged for r in results)
    if ok:
        vals = [np.atleast_1d(np.asarray(r.value)) for r in results]
        gap = max(float(np.max(np.abs(x - y))) for x in vals for y in vals)
        ok = gap <= 3 * crit.eps
    else:
        gap = math.inf
    return MVCheck(bool(ok), results, [u.label for u in renorms], gap)
