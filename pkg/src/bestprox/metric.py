"""Points, point sets and the Euclidean metric.

Computes the gap d(A, B) between two sets, nearest points, and the
proximity sets A0 / B0 (members of one set that realize the gap against
some partner in the other).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence, Union

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class GeometryError(ValueError):
    """Invalid geometric input (dimension mismatch, empty set, ...)."""


class BracketError(GeometryError):
    """A 1-D search on an unbounded range found no bracketing minimum."""


@dataclass(frozen=True)
class SearchConfig:
    tol_value: float = 1e-9
    tol_param: float = 1e-12
    tol_membership: float = 1e-9
    grid_n: int = 1024
    max_bracket_doublings: int = 64

    def __post_init__(self):
        for name in ("tol_value", "tol_param", "tol_membership"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.grid_n < 2:
            raise ValueError("grid_n must be at least 2")
        if self.max_bracket_doublings < 1:
            raise ValueError("max_bracket_doublings must be at least 1")


@dataclass(frozen=True)
class Point:
    coords: tuple

    def __init__(self, *coords):
        if len(coords) == 1 and hasattr(coords[0], "__iter__"):
            coords = tuple(coords[0])
        values = tuple(float(c) for c in coords)
        if not values:
            raise GeometryError("a point needs at least one coordinate")
        if not all(math.isfinite(c) for c in values):
            raise GeometryError(f"non-finite coordinate in {values}")
        object.__setattr__(self, "coords", values)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __iter__(self) -> Iterator[float]:
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __repr__(self) -> str:
        return "Point(" + ", ".join(repr(c) for c in self.coords) + ")"

    def norm(self) -> float:
        return math.hypot(*self.coords)


def _check_dims(p: Point, q: Point) -> None:
    if p.dim != q.dim:
        raise GeometryError(f"dimension mismatch: {p.dim} vs {q.dim}")


def distance(p: Point, q: Point) -> float:
    """Euclidean distance; raises GeometryError on a dimension mismatch."""
    _check_dims(p, q)
    return math.hypot(*(a - b for a, b in zip(p.coords, q.coords)))


def _dot(a, b) -> float:
    return math.fsum(x * y for x, y in zip(a, b))


@dataclass(frozen=True)
class FiniteSet:
    points: tuple

    kind = "finite"

    def __init__(self, points: Sequence):
        pts = tuple(p if isinstance(p, Point) else Point(p) for p in points)
        if not pts:
            raise GeometryError("finite set must be nonempty")
        if len({p.dim for p in pts}) != 1:
            raise GeometryError("finite set mixes dimensions")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points[0].dim

    @property
    def bounded(self) -> bool:
        return True

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, target: Point) -> tuple[int, Point, float]:
        best = None
        for i, p in enumerate(self.points):
            d = distance(target, p)
            if best is None or d < best[2]:
                best = (i, p, d)
        return best

    def contains(self, p: Point, tol: float) -> bool:
        return self.nearest(p)[2] <= tol


@dataclass(frozen=True)
class Param1D:
    """The set {base + t*direction : lo <= t <= hi}; hi may be math.inf."""

    base: Point
    direction: Point
    lo: float = 0.0
    hi: float = math.inf

    kind = "param1d"

    def __post_init__(self):
        _check_dims(self.base, self.direction)
        if self.direction.norm() == 0.0:
            raise GeometryError("direction must be nonzero")
        if not math.isfinite(self.lo):
            raise GeometryError("lo must be finite")
        if math.isnan(self.hi) or self.hi == -math.inf or self.lo > self.hi:
            raise GeometryError(f"invalid parameter range [{self.lo}, {self.hi}]")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.hi)

    def member(self, t: float) -> Point:
        return Point(b + t * d for b, d in zip(self.base.coords, self.direction.coords))

    def param_of(self, p: Point) -> float:
        """Unclamped parameter of the orthogonal projection of p onto the line."""
        _check_dims(p, self.base)
        rel = [a - b for a, b in zip(p.coords, self.base.coords)]
        return _dot(rel, self.direction.coords) / _dot(self.direction.coords, self.direction.coords)

    def clamp(self, t: float) -> float:
        return min(max(t, self.lo), self.hi)

    def nearest(self, target: Point) -> tuple[float, Point, float]:
        # distance to an affine segment is convex in t: clamped projection is exact
        t = self.clamp(self.param_of(target))
        p = self.member(t)
        return t, p, distance(target, p)

    def contains(self, p: Point, tol: float) -> bool:
        return self.nearest(p)[2] <= tol

    def truncate(self, hi: float) -> "Param1D":
        return Param1D(self.base, self.direction, self.lo, min(self.hi, hi))

    def grid(self, n: int) -> list[float]:
        if not self.bounded:
            raise GeometryError("cannot grid an unbounded set; truncate it first")
        if n == 1 or self.hi == self.lo:
            return [self.lo]
        span = self.hi - self.lo
        return [self.lo + span * i / (n - 1) for i in range(n)]


PointSet = Union[FiniteSet, Param1D]


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float,
                   max_iter: int = 200) -> tuple[float, float]:
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def bracket_upper(f: Callable[[float], float], lo: float, cfg: SearchConfig) -> float:
    """Walk outward from lo by doubling steps until f stops decreasing."""
    prev = f(lo)
    step = max(1.0, abs(lo))
    for _ in range(cfg.max_bracket_doublings):
        t = lo + step
        val = f(t)
        if val >= prev:
            return t
        prev = val
        step *= 2.0
    raise BracketError("no bracketing minimum")


def minimize_1d(f: Callable[[float], float], lo: float, hi: float,
                cfg: SearchConfig, grid_n: int | None = None) -> tuple[float, float]:
    """Coarse grid then golden-section refinement; ties go to the smallest t."""
    if not math.isfinite(hi):
        hi = bracket_upper(f, lo, cfg)
    n = grid_n or cfg.grid_n
    if hi == lo:
        return lo, f(lo)
    ts = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    vals = [f(t) for t in ts]
    i = min(range(n), key=lambda k: (vals[k], k))
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, n - 1)]
    t_ref, v_ref = golden_section(f, a, b, cfg.tol_param)
    if v_ref < vals[i]:
        return t_ref, v_ref
    return ts[i], vals[i]


def _check_pair(A: PointSet, B: PointSet) -> None:
    if A.dim != B.dim:
        raise GeometryError(f"dimension mismatch: {A.dim} vs {B.dim}")


def nearest_in_set(target: Point, A: PointSet, cfg: SearchConfig = SearchConfig()) -> tuple[Point, float]:
    _check_dims(target, A.points[0] if isinstance(A, FiniteSet) else A.base)
    _, p, d = A.nearest(target)
    return p, d


def set_distance(A: PointSet, B: PointSet, cfg: SearchConfig = SearchConfig()) -> float:
    """The gap d(A, B) = inf d(x, y) over x in A, y in B."""
    _check_pair(A, B)
    if isinstance(A, FiniteSet):
        return min(B.nearest(p)[2] for p in A.points)
    if isinstance(B, FiniteSet):
        return min(A.nearest(q)[2] for q in B.points)
    _, val = minimize_1d(lambda t: B.nearest(A.member(t))[2], A.lo, A.hi, cfg)
    return val


@dataclass(frozen=True)
class ProximalSubset:
    """A0 or B0: explicit points for finite sets, parameter intervals otherwise."""

    parent: PointSet
    partner: PointSet
    points: tuple = ()
    intervals: tuple = ()

    @property
    def empty(self) -> bool:
        return not self.points and not self.intervals

    def contains(self, p: Point, tol: float) -> bool:
        if isinstance(self.parent, FiniteSet):
            return any(distance(p, q) <= tol for q in self.points)
        _, d = nearest_in_set(p, self.parent)
        if d > tol:
            return False
        t = self.parent.clamp(self.parent.param_of(p))
        return any(a - tol <= t <= b + tol for a, b in self.intervals)

    def witness(self, p: Point) -> Point:
        return self.partner.nearest(p)[1]


@dataclass(frozen=True)
class ProximityStructure:
    gap: float
    a0: ProximalSubset
    b0: ProximalSubset
    witnesses: tuple = field(default=())

    def is_degenerate(self) -> bool:
        return self.gap == 0.0


def _proximal_part(X: PointSet, Y: PointSet, gap: float, cfg: SearchConfig):
    witnesses = []
    if isinstance(X, FiniteSet):
        members = []
        for p in X.points:
            _, q, d = Y.nearest(p)
            if abs(d - gap) <= cfg.tol_value:
                members.append(p)
                witnesses.append((p, q))
        return ProximalSubset(X, Y, points=tuple(members)), witnesses

    if not X.bounded:
        raise GeometryError("proximity sets of an unbounded ray need a truncation")

    def excess(t):
        return Y.nearest(X.member(t))[2] - gap

    ts = X.grid(cfg.grid_n)
    inside = [excess(t) <= cfg.tol_value for t in ts]

    def edge(t_in, t_out):
        # bisect the boundary between a member and a non-member parameter
        for _ in range(200):
            if abs(t_out - t_in) <= cfg.tol_param:
                break
            mid = 0.5 * (t_in + t_out)
            if excess(mid) <= cfg.tol_value:
                t_in = mid
            else:
                t_out = mid
        return t_in

    intervals = []
    i = 0
    while i < len(ts):
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(ts) and inside[j + 1]:
            j += 1
        a = ts[i] if i == 0 else edge(ts[i], ts[i - 1])
        b = ts[j] if j == len(ts) - 1 else edge(ts[j], ts[j + 1])
        intervals.append((a, b))
        for t in sorted({a, 0.5 * (a + b), b}):
            p = X.member(t)
            witnesses.append((p, Y.nearest(p)[1]))
        i = j + 1
    return ProximalSubset(X, Y, intervals=tuple(intervals)), witnesses


def proximity_sets(A: PointSet, B: PointSet, cfg: SearchConfig = SearchConfig(),
                   gap: float | None = None) -> ProximityStructure:
    """Gap plus A0 and B0; a closed-form gap may be supplied to skip the search."""
    _check_pair(A, B)
    if gap is None:
        gap = set_distance(A, B, cfg)
    a0, wa = _proximal_part(A, B, gap, cfg)
    b0, _ = _proximal_part(B, A, gap, cfg)
    return ProximityStructure(gap=gap, a0=a0, b0=b0, witnesses=tuple(wa))
