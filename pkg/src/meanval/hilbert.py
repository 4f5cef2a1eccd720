"""Heuristic Lebesgue mean on a separable Hilbert space (coordinate model).

Points are finitely supported real sequences.  A schedule of cylindrical
approximants ``f_n`` factors through orthogonal projections onto an
increasing flag of finite-dimensional subspaces; each ``f_n`` is averaged
over cubes ``[-n-1, n+1]^{d_n}`` in flag coordinates, then the limit over
the schedule is taken.

The value depends on the orthonormal frame used for the flag.  Transforms
that carry the flag along (the default) leave it unchanged; see
:func:`unitary_transform` with ``carry_flag=False`` for a function whose
value changes with the frame.

Translation uses ``f_v(x) = f(x + v)``; the finite-dimensional translation
helpers in :mod:`meanval.measures` use ``f(x - v)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import FlagNotContained, NotOrthogonal, SupportEscapesFlag
from .measures import as_scalar_function, cubes, lebesgue
from .meanvalue import ConvergenceCriteria, MeanValueResult, wmv
from .products import limit_of_terms, term_criteria
from .quad import as_integrand

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class HilbertModel:
    """Coordinate model: finitely supported sequences with the l2 pairing."""

    def inner(self, x, y) -> float:
        x, y = _pad_pair(x, y)
        return float(x @ y)

    def basis(self, k: int, length: Optional[int] = None) -> np.ndarray:
        e = np.zeros(max(length or 0, k + 1))
        e[k] = 1.0
        return e


def _pad(v, n):
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size > n:
        if np.any(v[n:]):
            return None
        return v[:n]
    return np.concatenate([v, np.zeros(n - v.size)])


def _pad_pair(x, y):
    n = max(np.size(x), np.size(y))
    return _pad(x, n), _pad(y, n)


@dataclass(frozen=True, eq=False)
class AffineSupport:
    """``base + span(directions)`` with orthonormal directions and base orthogonal to them."""

    base: np.ndarray
    directions: np.ndarray  # (k, D), orthonormal rows

    @classmethod
    def make(cls, base, directions) -> "AffineSupport":
        dirs = np.atleast_2d(np.asarray(directions, dtype=np.float64)) if np.size(directions) else np.zeros((0, 0))
        D = max(np.size(base), dirs.shape[1] if dirs.size else 0)
        b = _pad(base, D)
        basis = _orthonormal_rows(np.array([_pad(d, D) for d in dirs]) if dirs.size else np.zeros((0, D)))
        b = b - basis.T @ (basis @ b) if len(basis) else b
        return cls(b, basis)

    @classmethod
    def coords(cls, indices: Sequence[int], length: Optional[int] = None, base=None) -> "AffineSupport":
        D = max(length or 0, max(indices) + 1 if len(indices) else 0, np.size(base) if base is not None else 0)
        dirs = np.zeros((len(indices), D))
        for r, i in enumerate(indices):
            dirs[r, i] = 1.0
        return cls.make(np.zeros(D) if base is None else base, dirs)

    @property
    def dim(self) -> int:
        return len(self.directions)

    @property
    def ambient(self) -> int:
        return self.base.size


def _orthonormal_rows(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the row span (Gram-Schmidt with re-orthogonalisation)."""
    out = []
    for v in m:
        w = v.astype(np.float64).copy()
        for _ in range(2):
            for q in out:
                w -= (q @ w) * q
        n = np.linalg.norm(w)
        if n > tol * max(1.0, np.linalg.norm(v)):
            out.append(w / n)
    D = m.shape[1] if m.ndim == 2 else 0
    return np.array(out) if out else np.zeros((0, D))


def build_flag(supports: Sequence[AffineSupport]) -> List[AffineSupport]:
    """Increasing flag: term k is the affine hull of term k-1 and input k."""
    out: List[AffineSupport] = []
    for s in supports:
        if not out:
            out.append(AffineSupport.make(s.base, s.directions))
            continue
        prev = out[-1]
        D = max(prev.ambient, s.ambient)
        pb, sb = _pad(prev.base, D), _pad(s.base, D)
        rows = [_pad(d, D) for d in prev.directions] + [_pad(d, D) for d in s.directions] + [sb - pb]
        out.append(AffineSupport.make(pb, np.array(rows)))
    return out


@dataclass(frozen=True, eq=False)
class CylApprox:
    """Schedule ``(kernel_n, d_n, eps_n)``; ``f_n(x) = kernel_n(frame[:, :d_n].T @ x)``.

    ``frame`` is an orthonormal ``D x D`` matrix whose leading columns span
    the flag (identity by default).
    """

    terms: Tuple[Tuple[object, int, float], ...]
    frame: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        terms = tuple((k, int(d), float(e)) for k, d, e in self.terms)
        if not terms:
            raise ValueError("a schedule needs at least one term")
        ds = [d for _, d, _ in terms]
        es = [e for _, _, e in terms]
        if any(d < 1 for d in ds) or any(b < a for a, b in zip(ds, ds[1:])):
            raise ValueError("term dimensions must be positive and nondecreasing")
        if any(e < 0 for e in es) or any(b > a for a, b in zip(es, es[1:])):
            raise ValueError("term errors must be nonnegative and nonincreasing")
        D = max(ds)
        frame = np.eye(D) if self.frame is None else np.asarray(self.frame, dtype=np.float64)
        if frame.shape[0] != frame.shape[1] or frame.shape[0] < D:
            raise ValueError("frame must be square and cover every term dimension")
        _check_orthogonal(frame)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "frame", frame)

    @property
    def ambient(self) -> int:
        return self.frame.shape[0]

    def kernel(self, n: int) -> Callable[[np.ndarray], np.ndarray]:
        k, d, _ = self.terms[n]
        return as_integrand(k, d)

    def full(self, n: int) -> Callable[[np.ndarray], np.ndarray]:
        """``f_n`` on ambient points ``(N, D)``."""
        k = self.kernel(n)
        F = self.frame[:, : self.terms[n][1]]
        return lambda x: k(_pad_points(x, self.ambient) @ F)

    def flag(self) -> List[AffineSupport]:
        return [AffineSupport.make(np.zeros(self.ambient), self.frame[:, :d].T) for _, d, _ in self.terms]

    def flag_indices(self) -> set:
        F = self.frame[:, : self.terms[-1][1]]
        return set(np.nonzero(np.any(np.abs(F) > 1e-14, axis=1))[0].tolist())

    def replace(self, terms, frame=None, **meta) -> "CylApprox":
        m = dict(self.meta)
        m.update(meta)
        return CylApprox(tuple(terms), self.frame if frame is None else frame, m)


def _pad_points(x, D):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] == D:
        return x
    if x.shape[1] > D:
        return x[:, :D]
    return np.hstack([x, np.zeros((len(x), D - x.shape[1]))])


def _check_orthogonal(q):
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise NotOrthogonal("matrix must be square")
    err = float(np.max(np.abs(q.T @ q - np.eye(len(q))))) if q.size else 0.0
    if err > ORTHO_TOL:
        raise NotOrthogonal(f"|q^T q - I|_max = {err:.3g} exceeds {ORTHO_TOL}")


def wmv_hilbert(model: HilbertModel, approx: CylApprox, crit=None, tol=None, seed: int = 0, *,
                term_crit: Optional[ConvergenceCriteria] = None) -> MeanValueResult:
    """Cube mean of each approximant in flag coordinates, then the schedule limit.

    Terms use ``term_crit`` (default: eps/10), as in the product case.
    """
    crit = crit or ConvergenceCriteria()
    tc = term_crit or term_criteria(crit)
    errs = [e for _, _, e in approx.terms]
    cache = {}

    def term(n):
        if n not in cache:
            d = approx.terms[n][1]
            cache[n] = wmv(approx.kernel(n), lebesgue(d), cubes(d), tc, tol, seed)
        return cache[n]

    res = limit_of_terms(term, errs, crit, {"kind": "hilbert"})
    res.meta["flag_dims"] = [d for _, d, _ in approx.terms[: len(res.ns)]]
    res.meta["frame"] = approx.frame.tolist()
    res.meta.update({k: v for k, v in approx.meta.items() if k not in res.meta})
    return res


def scale_transform(approx: CylApprox, alpha: int) -> CylApprox:
    """``f_alpha(x) = f(alpha x)`` for a positive integer alpha."""
    if isinstance(alpha, bool) or not float(alpha).is_integer() or alpha < 1:
        raise ValueError("scale factor must be a positive integer")
    a = float(alpha)
    if a == 1:
        return approx
    terms = []
    for n, (_, d, e) in enumerate(approx.terms):
        k = approx.kernel(n)
        terms.append((lambda y, k=k: k(a * y), d, e))
    return approx.replace(terms, scale=int(alpha))


def translate_transform(approx: CylApprox, v) -> CylApprox:
    """``f_v(x) = f(x + v)``: term n is shifted by the projection of v onto its flag space."""
    D = approx.ambient
    vv = _pad(v, D)
    if vv is None:
        raise SupportEscapesFlag("translation has coordinates beyond the model's ambient dimension")
    F = approx.frame[:, : approx.terms[-1][1]]
    if np.linalg.norm(vv - F @ (F.T @ vv)) > 1e-9 * max(1.0, np.linalg.norm(vv)):
        raise SupportEscapesFlag("translation is not contained in the span of the flag")
    if not np.any(vv):
        return approx
    terms = []
    for n, (_, d, e) in enumerate(approx.terms):
        k = approx.kernel(n)
        shift = approx.frame[:, :d].T @ vv
        terms.append((lambda y, k=k, s=shift: k(y + s), d, e))
    return approx.replace(terms, translation=vv.tolist())


def unitary_transform(approx: CylApprox, q, carry_flag: bool = True) -> CylApprox:
    """``(f o u)`` for an orthogonal ``q`` acting on the leading coordinates.

    With ``carry_flag`` the flag becomes ``u^{-1}(F_n)`` (frame ``q^T F``) and
    kernels are composed numerically.  Without it the original frame is kept
    and each term is widened to contain ``u^{-1}(F_n)``.
    """
    q = np.asarray(q, dtype=np.float64)
    _check_orthogonal(q)
    k = len(q)
    D = max(approx.ambient, k)
    Q = np.eye(D)
    Q[:k, :k] = q
    old = np.eye(D)
    old[: approx.ambient, : approx.ambient] = approx.frame
    fulls = [approx.full(n) for n in range(len(approx.terms))]
    terms = []
    if carry_flag:
        frame = Q.T @ old
        for n, (_, d, e) in enumerate(approx.terms):
            Fn = frame[:, :d]
            terms.append((lambda y, f=fulls[n], Fn=Fn: f(y @ Fn.T @ Q.T), d, e))
        return approx.replace(terms, frame=frame, unitary=q.tolist(), flag_carried=True)
    if not np.allclose(approx.frame, np.eye(approx.ambient)):
        raise ValueError("keeping the flag is only supported for the coordinate frame")
    for n, (_, d, e) in enumerate(approx.terms):
        dn = max(d, k)
        terms.append((lambda y, f=fulls[n], dn=dn: f(_pad_points(y, D) @ Q.T), dn, e))
    return approx.replace(terms, frame=np.eye(D), unitary=q.tolist(), flag_carried=False)


def restrict(approx: CylApprox, subspace_dims) -> CylApprox:
    """Restriction to the coordinate subspace ``subspace_dims``; the schedule is unchanged."""
    dims = set(int(i) for i in subspace_dims)
    missing = approx.flag_indices() - dims
    if missing:
        raise FlagNotContained(f"flag uses coordinates {sorted(missing)} outside the subspace")
    return approx.replace(approx.terms, restricted_to=sorted(dims))


def rotation(theta: float, i: int = 0, j: int = 1, size: int = 2) -> np.ndarray:
    """Givens rotation by ``theta`` in the (i, j) plane."""
    q = np.eye(size)
    c, s = np.cos(theta), np.sin(theta)
    q[i, i], q[i, j], q[j, i], q[j, j] = c, -s, s, c
    return q


def random_rotation(size: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(size)."""
    z = rng.standard_normal((size, size))
    qm, r = np.linalg.qr(z)
    qm = qm * np.sign(np.diag(r))
    if np.linalg.det(qm) < 0:
        qm[:, 0] = -qm[:, 0]
    return qm
