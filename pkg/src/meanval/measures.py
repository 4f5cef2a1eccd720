"""Measures, regions and renormalization sequences.

Regions are immutable and answer four questions: membership of a batch of
points, a bounding box, their exact Lebesgue volume when known, and a
decomposition into disjoint boxes when one exists.  The integration engine
in :mod:`meanval.quad` picks its method from those answers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import exprlang
from .errors import DimensionMismatch, NonIntegrable

MAX_GRID_CELLS = 200_000


def _as_points(points, dim):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, dim) if dim > 1 or pts.size != 1 else pts.reshape(1, 1)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DimensionMismatch(f"expected points of dimension {dim}, got shape {np.shape(points)}")
    return pts


def as_scalar_function(fn, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Turn an expression string, :class:`~meanval.exprlang.Expr`, constant or
    callable into a batch function ``(N, dim) -> (N,)``."""
    if isinstance(fn, str):
        fn = exprlang.parse(fn, dim)
    if isinstance(fn, exprlang.Expr):
        if exprlang.max_variable(fn) >= dim:
            raise DimensionMismatch(f"expression uses x{exprlang.max_variable(fn)} but dimension is {dim}")
        e = fn
        return lambda pts: exprlang.evaluate(e, pts)
    if isinstance(fn, (int, float)):
        c = float(fn)
        return lambda pts: np.full(len(pts), c)
    if callable(fn):
        return fn
    raise TypeError(f"cannot interpret {fn!r} as a function")


# --- regions ---------------------------------------------------------------

class Region:
    dim: int

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def bbox(self):
        """``(lower, upper)`` arrays enclosing the region."""
        raise NotImplementedError

    def volume(self) -> Optional[float]:
        """Exact Lebesgue volume, or None when it is not known in closed form."""
        boxes = self.boxes()
        if boxes is None:
            return None
        return float(sum(np.prod(hi - lo) for lo, hi in boxes))

    def boxes(self):
        """Disjoint boxes ``[(lo, hi), ...]`` covering the region up to a null set, or None."""
        return None

    def as_ball(self) -> Optional["Ball"]:
        return None


@dataclass(frozen=True, eq=False)
class HyperRect(Region):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64)).copy()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64)).copy()
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("lower and upper must be vectors of equal length")
        if np.any(hi < lo):
            raise ValueError(f"empty box: lower {lo} exceeds upper {hi}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    def contains(self, points):
        pts = _as_points(points, self.dim)
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def bbox(self):
        return self.lower, self.upper

    def volume(self):
        return float(np.prod(self.upper - self.lower))

    def boxes(self):
        if np.any(self.upper <= self.lower):
            return []
        return [(self.lower, self.upper)]

    def __repr__(self):
        return f"HyperRect({self.lower.tolist()}, {self.upper.tolist()})"


_NORMS = ("euclidean", "sup")


@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: np.ndarray
    radius: float
    norm: str = "euclidean"

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=np.float64)).copy()
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {_NORMS}")

    @property
    def dim(self):
        return self.center.size

    def contains(self, points):
        d = _as_points(points, self.dim) - self.center
        if self.norm == "sup":
            return np.max(np.abs(d), axis=1) <= self.radius
        return np.einsum("ij,ij->i", d, d) <= self.radius * self.radius

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def volume(self):
        m = self.dim
        if self.norm == "sup" or m == 1:
            return (2.0 * self.radius) ** m
        return math.pi ** (m / 2) / math.gamma(m / 2 + 1) * self.radius ** m

    def boxes(self):
        if self.norm == "sup" or self.dim == 1:
            lo, hi = self.bbox()
            return [(lo, hi)]
        return None

    def as_ball(self):
        return self if (self.norm == "euclidean" and self.dim > 1) else None

    def __repr__(self):
        return f"Ball({self.center.tolist()}, {self.radius}, {self.norm!r})"


@dataclass(frozen=True, eq=False)
class Sublevel(Region):
    """``{x in box : F(x) <= t}``; the box must enclose the whole sublevel set."""

    F: Callable
    t: float
    box: HyperRect

    def __post_init__(self):
        object.__setattr__(self, "_F", as_scalar_function(self.F, self.box.dim))

    @property
    def dim(self):
        return self.box.dim

    def contains(self, points):
        pts = _as_points(points, self.dim)
        inside = self.box.contains(pts)
        out = np.zeros(len(pts), dtype=bool)
        if inside.any():
            out[inside] = np.asarray(self._F(pts[inside])) <= self.t
        return out

    def bbox(self):
        return self.box.bbox()

    def boundary_violations(self, rng, samples=4096) -> int:
        """Count sampled points on the box faces where ``F <= t``."""
        lo, hi = self.box.bbox()
        m = self.dim
        pts = lo + rng.random((samples, m)) * (hi - lo)
        face_dim = rng.integers(0, m, samples)
        side = rng.integers(0, 2, samples).astype(bool)
        rows = np.arange(samples)
        pts[rows, face_dim] = np.where(side, hi[face_dim], lo[face_dim])
        return int(np.count_nonzero(np.asarray(self._F(pts)) <= self.t))


@dataclass(frozen=True, eq=False)
class FinitePrefix(Region):
    """``{0, 1, ..., n}`` inside the naturals."""

    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("prefix length must be nonnegative")

    dim = 1

    def contains(self, points):
        x = _as_points(points, 1)[:, 0]
        return (x >= 0) & (x <= self.n) & (np.floor(x) == x)

    def bbox(self):
        return np.array([0.0]), np.array([float(self.n)])

    def volume(self):
        return 0.0

    def boxes(self):
        return []

    def __repr__(self):
        return f"FinitePrefix({self.n})"


@dataclass(frozen=True, eq=False)
class Translate(Region):
    inner: Region
    v: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=np.float64)).copy()
        if v.size != self.inner.dim:
            raise DimensionMismatch(f"translation of dimension {v.size} for a region of dimension {self.inner.dim}")
        v.flags.writeable = False
        object.__setattr__(self, "v", v)

    @property
    def dim(self):
        return self.inner.dim

    def contains(self, points):
        return self.inner.contains(_as_points(points, self.dim) - self.v)

    def bbox(self):
        lo, hi = self.inner.bbox()
        return lo + self.v, hi + self.v

    def volume(self):
        return self.inner.volume()

    def boxes(self):
        b = self.inner.boxes()
        return None if b is None else [(lo + self.v, hi + self.v) for lo, hi in b]

    def as_ball(self):
        b = self.inner.as_ball()
        return None if b is None else Ball(b.center + self.v, b.radius, b.norm)


@dataclass(frozen=True, eq=False)
class Scale(Region):
    inner: Region
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")

    @property
    def dim(self):
        return self.inner.dim

    def contains(self, points):
        return self.inner.contains(_as_points(points, self.dim) / self.factor)

    def bbox(self):
        lo, hi = self.inner.bbox()
        return lo * self.factor, hi * self.factor

    def volume(self):
        v = self.inner.volume()
        return None if v is None else v * self.factor ** self.dim

    def boxes(self):
        b = self.inner.boxes()
        return None if b is None else [(lo * self.factor, hi * self.factor) for lo, hi in b]

    def as_ball(self):
        b = self.inner.as_ball()
        return None if b is None else Ball(b.center * self.factor, b.radius * self.factor, b.norm)


def _grid_boxes(region: Region, leaves):
    """Disjoint cells of the grid spanned by the leaf boxes that lie in ``region``."""
    if not leaves:
        return []
    m = region.dim
    cuts = [np.unique(np.concatenate([[lo[k], hi[k]] for lo, hi in leaves])) for k in range(m)]
    if math.prod(len(c) - 1 for c in cuts) > MAX_GRID_CELLS:
        return None
    lows = np.array(list(itertools.product(*[c[:-1] for c in cuts])), dtype=np.float64).reshape(-1, m)
    highs = np.array(list(itertools.product(*[c[1:] for c in cuts])), dtype=np.float64).reshape(-1, m)
    keep = np.all(highs > lows, axis=1)
    lows, highs = lows[keep], highs[keep]
    if len(lows) == 0:
        return []
    inside = region.contains(0.5 * (lows + highs))
    return [(lo, hi) for lo, hi in zip(lows[inside], highs[inside])]


@dataclass(frozen=True, eq=False)
class Union(Region):
    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("union of no regions")
        if len({p.dim for p in parts}) != 1:
            raise DimensionMismatch("union parts have different dimensions")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return self.parts[0].dim

    def contains(self, points):
        pts = _as_points(points, self.dim)
        out = np.zeros(len(pts), dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out

    def bbox(self):
        boxes = [p.bbox() for p in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def boxes(self):
        leaves = []
        for p in self.parts:
            b = p.boxes()
            if b is None:
                return None
            leaves.extend(b)
        return _grid_boxes(self, leaves)

    def as_ball(self):
        return self.parts[0].as_ball() if len(self.parts) == 1 else None


@dataclass(frozen=True, eq=False)
class Difference(Region):
    a: Region
    b: Region

    def __post_init__(self):
        if self.a.dim != self.b.dim:
            raise DimensionMismatch("difference of regions with different dimensions")

    @property
    def dim(self):
        return self.a.dim

    def contains(self, points):
        pts = _as_points(points, self.dim)
        return self.a.contains(pts) & ~self.b.contains(pts)

    def bbox(self):
        return self.a.bbox()

    def boxes(self):
        ba, bb = self.a.boxes(), self.b.boxes()
        if ba is None or bb is None:
            return None
        return _grid_boxes(self, list(ba) + list(bb))


@dataclass(frozen=True, eq=False)
class Product(Region):
    """Cartesian product; coordinates are the parts' coordinates in order."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "_offsets", np.cumsum([0] + [p.dim for p in self.parts]))

    @property
    def dim(self):
        return int(self._offsets[-1])

    def split(self, points):
        pts = _as_points(points, self.dim)
        o = self._offsets
        return [pts[:, o[i]:o[i + 1]] for i in range(len(self.parts))]

    def contains(self, points):
        chunks = self.split(points)
        out = np.ones(len(chunks[0]) if chunks else 0, dtype=bool)
        for p, c in zip(self.parts, chunks):
            out &= p.contains(c)
        return out

    def bbox(self):
        b = [p.bbox() for p in self.parts]
        return np.concatenate([x[0] for x in b]), np.concatenate([x[1] for x in b])

    def volume(self):
        vols = [p.volume() for p in self.parts]
        return None if any(v is None for v in vols) else float(np.prod(vols))

    def boxes(self):
        per_part = [p.boxes() for p in self.parts]
        if any(b is None for b in per_part):
            return None
        if math.prod(len(b) for b in per_part) > MAX_GRID_CELLS:
            return None
        return [
            (np.concatenate([c[0] for c in combo]), np.concatenate([c[1] for c in combo]))
            for combo in itertools.product(*per_part)
        ]


def translate(region: Region, v) -> Region:
    """Translate a region, resolving boxes and balls to concrete shapes."""
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.size != region.dim:
        raise DimensionMismatch(f"translation of dimension {v.size} for a region of dimension {region.dim}")
    if isinstance(region, HyperRect):
        return HyperRect(region.lower + v, region.upper + v)
    if isinstance(region, Ball):
        return Ball(region.center + v, region.radius, region.norm)
    return Translate(region, v)


# --- measures --------------------------------------------------------------

class Measure:
    """Base class; ``mu + nu`` and ``k * mu`` build new measures."""

    dim: int
    scale: float = 1.0
    discrete = False

    def scaled(self, k: float) -> "Measure":
        raise NotImplementedError

    def __mul__(self, k):
        if not isinstance(k, (int, float)) or not k > 0:
            return NotImplemented
        return self.scaled(float(k))

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Measure):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch("cannot add measures of different dimensions")
        return SumMeasure(_terms(self) + _terms(other))


def _terms(m):
    return list(m.terms) if isinstance(m, SumMeasure) else [m]


class Density(Measure):
    """Absolutely continuous measure ``scale * density(x) dx`` on R^m.

    ``density=None`` is Lebesgue measure (times ``scale``).
    """

    def __init__(self, dim: int, density=None, scale: float = 1.0, name: str = ""):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.dim = int(dim)
        self.density = density
        self.scale = float(scale)
        self.name = name or ("lebesgue" if density is None else "density")
        self._fn = None if density is None else as_scalar_function(density, self.dim)

    @property
    def is_lebesgue(self):
        return self._fn is None

    def weight(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if self._fn is None:
            return np.full(len(pts), self.scale)
        w = np.asarray(self._fn(pts), dtype=np.float64)
        if not np.all(np.isfinite(w)):
            raise NonIntegrable(f"density of {self.name} is not finite at a sampled point")
        if np.any(w < 0):
            raise ValueError(f"density of {self.name} is negative at a sampled point")
        return self.scale * w

    def scaled(self, k):
        return Density(self.dim, self.density, self.scale * k, self.name)

    def __repr__(self):
        return f"Density({self.dim}, {self.name!r}, scale={self.scale})"


def lebesgue(dim: int = 1) -> Density:
    return Density(dim)


def gaussian(dim: int = 1, scale: float = 1.0) -> Density:
    """Density ``exp(-|x|^2)``; total mass ``scale * pi^(dim/2)``."""
    return Density(dim, lambda p: np.exp(-np.einsum("ij,ij->i", p, p)), scale, "gaussian")


class Dirac(Measure):
    """Finite combination ``sum_i w_i delta_{p_i}``."""

    discrete = True

    def __init__(self, points, weights=None, scale: float = 1.0):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1 or len(pts) == 0:
            raise ValueError("Dirac points must be a nonempty (k, m) array with m >= 1")
        w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape != (len(pts),):
            raise ValueError("one weight per point is required")
        if np.any(~(w > 0)):
            raise ValueError("Dirac weights must be strictly positive")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("Dirac points must be pairwise distinct")
        self.points, self.weights = pts, w
        self.dim = pts.shape[1]
        self.scale = float(scale)

    def atoms(self, region: Region):
        inside = region.contains(self.points)
        return self.points[inside], self.scale * self.weights[inside]

    def scaled(self, k):
        return Dirac(self.points, self.weights, self.scale * k)

    def __repr__(self):
        return f"Dirac({self.points.tolist()}, {self.weights.tolist()}, scale={self.scale})"


class Counting(Measure):
    """Counting measure on the naturals (dimension 1)."""

    discrete = True
    dim = 1

    def __init__(self, scale: float = 1.0):
        self.scale = float(scale)

    def atoms(self, region: Region):
        lo, hi = region.bbox()
        if not (np.isfinite(lo[0]) and np.isfinite(hi[0])):
            raise NonIntegrable("counting measure needs a bounded region")
        ks = np.arange(max(0, math.ceil(lo[0])), math.floor(hi[0]) + 1, dtype=np.float64).reshape(-1, 1)
        ks = ks[region.contains(ks)] if len(ks) else ks
        return ks, np.full(len(ks), self.scale)

    def scaled(self, k):
        return Counting(self.scale * k)

    def __repr__(self):
        return f"Counting(scale={self.scale})"


class SumMeasure(Measure):
    def __init__(self, terms: Sequence[Measure]):
        terms = list(terms)
        if not terms or len({t.dim for t in terms}) != 1:
            raise DimensionMismatch("sum of measures needs terms of one dimension")
        self.terms = terms
        self.dim = terms[0].dim
        self.discrete = all(t.discrete for t in terms)

    def scaled(self, k):
        return SumMeasure([t.scaled(k) for t in self.terms])

    def __repr__(self):
        return " + ".join(repr(t) for t in self.terms)


class ProductMeasure(Measure):
    """Finite product of factor measures; coordinates concatenated in order."""

    def __init__(self, factors: Sequence[Measure]):
        self.factors = list(factors)
        if not self.factors:
            raise ValueError("product of no measures")
        self.offsets = np.cumsum([0] + [f.dim for f in self.factors])
        self.dim = int(self.offsets[-1])
        self.discrete = all(f.discrete for f in self.factors)

    def as_density(self) -> Optional[Density]:
        """The product as one density when every factor is a :class:`Density`."""
        if not all(isinstance(f, Density) for f in self.factors):
            return None
        scale = float(np.prod([f.scale for f in self.factors]))
        if all(f.is_lebesgue for f in self.factors):
            return Density(self.dim, None, scale, "lebesgue")
        factors, offsets = self.factors, self.offsets

        def weight(pts):
            w = np.ones(len(pts))
            for i, f in enumerate(factors):
                if not f.is_lebesgue:
                    w = w * f._fn(pts[:, offsets[i]:offsets[i + 1]])
            return w

        return Density(self.dim, weight, scale, "product")

    def scaled(self, k):
        first = self.factors[0].scaled(k)
        return ProductMeasure([first] + self.factors[1:])

    def __repr__(self):
        return " x ".join(repr(f) for f in self.factors)


@dataclass(frozen=True)
class Mass:
    """A measure value with an absolute error estimate."""

    value: float
    abs_error: float = 0.0

    def __float__(self):
        return float(self.value)


def split_product_region(mu: ProductMeasure, region: Region) -> List[Region]:
    if isinstance(region, Product) and [p.dim for p in region.parts] == [f.dim for f in mu.factors]:
        return list(region.parts)
    if isinstance(region, HyperRect):
        o = mu.offsets
        return [HyperRect(region.lower[o[i]:o[i + 1]], region.upper[o[i]:o[i + 1]]) for i in range(len(mu.factors))]
    return None


def measure_of(mu: Measure, r: Region, tol: float = 1e-9, seed: int = 0) -> Mass:
    """``mu(r)`` with an absolute error estimate.

    Exact for Lebesgue measure on regions of known volume, for discrete
    measures, and for products of those; otherwise integrates the density.
    """
    if mu.dim != r.dim:
        raise DimensionMismatch(f"measure of dimension {mu.dim} on region of dimension {r.dim}")
    if isinstance(mu, SumMeasure):
        parts = [measure_of(t, r, tol / len(mu.terms), seed) for t in mu.terms]
        return Mass(sum(p.value for p in parts), sum(p.abs_error for p in parts))
    if mu.discrete and not isinstance(mu, ProductMeasure):
        _, w = mu.atoms(r)
        return _checked(Mass(float(np.sum(w))))
    if isinstance(mu, ProductMeasure):
        parts = split_product_region(mu, r)
        if parts is not None:
            masses = [measure_of(f, p, tol, seed) for f, p in zip(mu.factors, parts)]
            value = float(np.prod([m.value for m in masses]))
            rel = sum(m.abs_error / m.value for m in masses if m.value > 0)
            return _checked(Mass(value, abs(value) * rel))
        dens = mu.as_density()
        if dens is None:
            raise DimensionMismatch("product measure with discrete factors needs a product region")
        mu = dens
    if isinstance(mu, Density) and mu.is_lebesgue:
        vol = r.volume()
        if vol is not None:
            return _checked(Mass(mu.scale * vol))
    from .quad import integrate

    est = integrate(1.0, mu, r, tol=tol, seed=seed)
    return _checked(Mass(float(est.value[0]), est.abs_error))


def _checked(m: Mass) -> Mass:
    if not np.isfinite(m.value) or m.value > 1e300:
        raise NonIntegrable(f"measure estimate diverged ({m.value})")
    return m


# --- sampling inside regions ---------------------------------------------

def sample_region(region: Region, rng: np.random.Generator, k: int, max_tries: int = 50) -> np.ndarray:
    """Up to ``k`` points drawn uniformly (Lebesgue) in ``region``.

    Lebesgue-null regions such as :class:`FinitePrefix` fall back to their
    integer points.
    """
    if isinstance(region, FinitePrefix):
        return rng.integers(0, region.n + 1, size=(k, 1)).astype(np.float64)
    ball = region.as_ball()
    if ball is not None:
        return sample_ball(ball, rng, k)
    if isinstance(region, Product):
        return np.hstack([sample_region(p, rng, k, max_tries)[:k] for p in region.parts])
    boxes = region.boxes()
    if boxes:
        vols = np.array([np.prod(hi - lo) for lo, hi in boxes])
        idx = rng.choice(len(boxes), size=k, p=vols / vols.sum())
        lows = np.array([boxes[i][0] for i in idx])
        highs = np.array([boxes[i][1] for i in idx])
        return lows + rng.random((k, region.dim)) * (highs - lows)
    lo, hi = region.bbox()
    got = []
    have = 0
    for _ in range(max_tries):
        pts = lo + rng.random((4 * k, region.dim)) * (hi - lo)
        pts = pts[region.contains(pts)]
        got.append(pts)
        have += len(pts)
        if have >= k:
            break
    return np.vstack(got)[:k] if got else np.empty((0, region.dim))


def sample_ball(ball: Ball, rng: np.random.Generator, k: int) -> np.ndarray:
    m = ball.dim
    g = rng.standard_normal((k, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = ball.radius * rng.random(k) ** (1.0 / m)
    return ball.center + g * r[:, None]


# --- renormalization sequences ----------------------------------------------

@dataclass(frozen=True)
class RenormSequence:
    """An increasing sequence of regions ``U_n`` exhausting the space."""

    generator: Callable[[int], Region]
    label: str
    dim: int

    def __call__(self, n: int) -> Region:
        r = self.generator(int(n))
        if r.dim != self.dim:
            raise DimensionMismatch(f"renormalization {self.label!r} produced a region of dimension {r.dim}")
        return r

    region = __call__


def cubes(dim: int = 1) -> RenormSequence:
    """``K_n = [-n-1, n+1]^dim``."""
    return RenormSequence(lambda n: HyperRect(np.full(dim, -n - 1.0), np.full(dim, n + 1.0)), f"cubes{dim}", dim)


def balls(dim: int = 2, norm: str = "euclidean", center=None) -> RenormSequence:
    """``L_n``: balls of radius ``n+1`` around ``center`` (default the origin)."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=np.float64)
    return RenormSequence(lambda n: Ball(c, n + 1.0, norm), f"balls{dim}-{norm}", dim)


def dyadic_cubes(dim: int = 1, base: float = 2.0) -> RenormSequence:
    """``[-base^n, base^n]^dim``: a geometrically growing compact exhaustion."""
    return RenormSequence(
        lambda n: HyperRect(np.full(dim, -base ** n), np.full(dim, base ** n)), f"dyadic{dim}-{base:g}", dim
    )


def prefixes() -> RenormSequence:
    """``[0, n] ∩ N`` for the counting measure."""
    return RenormSequence(FinitePrefix, "prefixes", 1)


def sin_oscillation_renorm() -> RenormSequence:
    """``U'_n = [-2 pi n, 2 pi n] ∪ ⋃_{j=0..n} [2(n+j) pi, (2(n+j)+1) pi]``.

    Along it the averages of ``sin`` tend to ``2/(5 pi)`` instead of 0.
    """

    def gen(n):
        parts = [HyperRect([2 * (n + j) * math.pi], [(2 * (n + j) + 1) * math.pi]) for j in range(n + 1)]
        if n > 0:
            parts.insert(0, HyperRect([-2 * math.pi * n], [2 * math.pi * n]))
        return Union(tuple(parts))

    return RenormSequence(gen, "sin-oscillation", 1)


def translate_renorm(u: RenormSequence, v) -> RenormSequence:
    """``(U_n + v)_n``."""
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.size != u.dim:
        raise DimensionMismatch(f"translation of dimension {v.size} for a sequence of dimension {u.dim}")
    if not np.any(v):
        return u
    return RenormSequence(lambda n: translate(u(n), v), f"{u.label}+{v.tolist()}", u.dim)


# --- validation -------------------------------------------------------------

@dataclass
class RenormReport:
    masses: List[float]
    positive_finite: List[bool]
    monotonicity_violations: List[int]
    uncovered_probes: Optional[np.ndarray] = None
    samples_per_step: int = 0
    notes: List[str] = field(default_factory=list)

    @property
    def positivity_ok(self):
        return all(self.positive_finite)

    @property
    def monotone_ok(self):
        return not any(self.monotonicity_violations)

    @property
    def exhaustion_ok(self):
        return self.uncovered_probes is None or len(self.uncovered_probes) == 0

    @property
    def ok(self):
        return self.positivity_ok and self.monotone_ok and self.exhaustion_ok


def validate_renorm(mu: Measure, u: RenormSequence, n_max: int, seed: int = 0, probes=None,
                    samples: int = 1000, tol: float = 1e-9) -> RenormReport:
    """Check positivity/finiteness, sampled monotonicity and probe exhaustion.

    Violations are reported, never raised.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if mu.dim != u.dim:
        raise DimensionMismatch(f"measure of dimension {mu.dim} with a sequence of dimension {u.dim}")
    rng = np.random.Generator(np.random.Philox(seed))
    masses, pos, viol = [], [], []
    regions = [u(n) for n in range(n_max + 1)]
    for n, r in enumerate(regions):
        try:
            m = measure_of(mu, r, tol, seed).value
        except NonIntegrable:
            m = math.inf
        masses.append(m)
        pos.append(bool(0 < m < math.inf))
    for n in range(n_max):
        pts = sample_region(regions[n], rng, samples)
        viol.append(int(np.count_nonzero(~regions[n + 1].contains(pts))) if len(pts) else 0)
    uncovered = None
    if probes is not None:
        p = _as_points(probes, u.dim)
        uncovered = p[~regions[-1].contains(p)]
    return RenormReport(masses, pos, viol, uncovered, samples)


def symmetric_difference_ratio(mu: Measure, u: RenormSequence, v, n: int, tol: float = 1e-6,
                               seed: int = 0) -> float:
    """``mu(U_n Δ (U_n + v)) / mu(U_n)``."""
    a = u(n)
    b = translate(a, v)
    delta = Union((Difference(a, b), Difference(b, a)))
    base = measure_of(mu, a, tol, seed).value
    if not np.any(np.asarray(v, dtype=np.float64)):
        return 0.0
    return measure_of(mu, delta, tol * max(base, 1.0), seed).value / base
