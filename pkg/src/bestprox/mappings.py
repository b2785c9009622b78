"""Non-self maps T: A -> B, auxiliary maps S, and Geraghty functions beta."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

from .metric import Point, PointSet, distance


class DomainError(ValueError):
    pass


class GapInconsistency(ValueError):
    pass


# --- closed-form point maps -------------------------------------------------

@dataclass(frozen=True)
class IdentityMap:
    descriptor = "identity"

    def __call__(self, p: Point) -> Point:
        return p

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class AffineMap:
    """p -> matrix @ p + offset."""

    matrix: tuple
    offset: tuple

    descriptor = "affine"

    def __init__(self, matrix: Sequence[Sequence[float]], offset: Sequence[float]):
        m = tuple(tuple(float(v) for v in row) for row in matrix)
        c = tuple(float(v) for v in offset)
        if len(m) != len(c) or any(len(row) != len(c) for row in m):
            raise ValueError("affine map needs a square matrix matching the offset")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", c)

    def __call__(self, p: Point) -> Point:
        if p.dim != len(self.offset):
            raise DomainError(f"affine map expects dim {len(self.offset)}, got {p.dim}")
        return Point(sum(a * x for a, x in zip(row, p.coords)) + c
                     for row, c in zip(self.matrix, self.offset))

    def params(self) -> dict:
        return {"matrix": [list(r) for r in self.matrix], "offset": list(self.offset)}


@dataclass(frozen=True)
class ExpNegMap:
    """Replaces coordinate `axis` by exp(-value); other coordinates pass through."""

    axis: int = 1

    descriptor = "exp_neg"

    def __call__(self, p: Point) -> Point:
        c = list(p.coords)
        c[self.axis] = math.exp(-c[self.axis])
        return Point(c)

    def params(self) -> dict:
        return {"axis": self.axis}


@dataclass(frozen=True)
class TableMap:
    """Explicit finite map; lookups fall back to the nearest key within tol."""

    keys: tuple
    values: tuple
    tol: float = 1e-9

    descriptor = "table"

    def __init__(self, pairs: Sequence, tol: float = 1e-9):
        ks, vs = [], []
        for x, y in pairs:
            ks.append(x if isinstance(x, Point) else Point(x))
            vs.append(y if isinstance(y, Point) else Point(y))
        if not ks:
            raise ValueError("table map needs at least one entry")
        object.__setattr__(self, "keys", tuple(ks))
        object.__setattr__(self, "values", tuple(vs))
        object.__setattr__(self, "tol", tol)

    def __call__(self, p: Point) -> Point:
        for k, v in zip(self.keys, self.values):
            if k == p:
                return v
        i = min(range(len(self.keys)), key=lambda j: distance(p, self.keys[j]))
        if distance(p, self.keys[i]) <= self.tol:
            return self.values[i]
        raise DomainError(f"{p} is not in the table domain")

    def params(self) -> dict:
        return {"table": [[list(k.coords), list(v.coords)] for k, v in zip(self.keys, self.values)]}


MAP_KINDS = {cls.descriptor: cls for cls in (IdentityMap, AffineMap, ExpNegMap, TableMap)}


def describe(fn) -> str:
    if isinstance(fn, AffineMap):
        return f"affine: {fn.matrix} p + {fn.offset}"
    if isinstance(fn, ExpNegMap):
        return f"exp_neg on axis {fn.axis}"
    if isinstance(fn, TableMap):
        return f"table: {len(fn.keys)} entries"
    return getattr(fn, "descriptor", "callable")


@dataclass(frozen=True)
class NonSelfMap:
    fn: Callable[[Point], Point]
    domain: PointSet
    codomain: PointSet

    @property
    def descriptor(self) -> str:
        return describe(self.fn)

    def __call__(self, p: Point) -> Point:
        return self.fn(p)


@dataclass(frozen=True)
class AuxiliaryMap:
    fn: Callable[[Point], Point] = IdentityMap()
    claims_injective: bool = True
    claims_subseq_convergent: bool = True

    @property
    def descriptor(self) -> str:
        return describe(self.fn)

    @property
    def is_identity(self) -> bool:
        return isinstance(self.fn, IdentityMap)

    def __call__(self, p: Point) -> Point:
        return self.fn(p)


# --- Geraghty functions -----------------------------------------------------

class GammaStatus(str, Enum):
    GUARANTEED = "GuaranteedInGamma"
    UNVERIFIED = "Unverified"


@dataclass(frozen=True)
class GeraghtyFunction:
    fn: Callable[[float], float] = field(compare=False)
    gamma_status: GammaStatus = GammaStatus.UNVERIFIED
    kind: str = "user"
    params: dict = field(default_factory=dict, hash=False)

    def __call__(self, t: float) -> float:
        return self.fn(t)

    @property
    def descriptor(self) -> str:
        if self.params:
            inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
            return f"{self.kind}({inner})"
        return self.kind


def _require_unit(k: float) -> float:
    k = float(k)
    if not 0.0 < k < 1.0:
        raise ValueError(f"k must lie in (0, 1), got {k}")
    return k


def _constant(k):
    return lambda t: k


def _reciprocal_linear(t):
    # beta(0) is irrelevant to every condition (it multiplies d = 0); 0 keeps beta < 1
    return 1.0 / (1.0 + t) if t > 0 else 0.0


def _scaled_exp(k):
    return lambda t: k * math.exp(-t)


def make_beta(kind: str, **params) -> GeraghtyFunction:
    """Library Geraghty functions; all are members of the class Gamma.

    kind is one of "constant" (k), "reciprocal_linear" or "scaled_exp" (k).
    """
    if kind == "constant":
        k = _require_unit(params["k"])
        return GeraghtyFunction(_constant(k), GammaStatus.GUARANTEED, kind, {"k": k})
    if kind == "reciprocal_linear":
        if params:
            raise ValueError("reciprocal_linear takes no parameters")
        return GeraghtyFunction(_reciprocal_linear, GammaStatus.GUARANTEED, kind, {})
    if kind == "scaled_exp":
        k = _require_unit(params["k"])
        return GeraghtyFunction(_scaled_exp(k), GammaStatus.GUARANTEED, kind, {"k": k})
    raise ValueError(f"unknown beta kind {kind!r}")


# --- bundle and the per-point operations ------------------------------------

@dataclass(frozen=True)
class MappingBundle:
    T: NonSelfMap
    S: AuxiliaryMap = AuxiliaryMap()
    beta: GeraghtyFunction | None = None


def apply_T(x: Point, bundle: MappingBundle, tol: float = 1e-9) -> Point:
    T = bundle.T
    if not T.domain.contains(x, tol):
        raise DomainError(f"{x} lies outside the domain set A")
    y = T(x)
    if not T.codomain.contains(y, tol):
        raise DomainError(f"codomain violation: T{x} = {y} lies outside B")
    return y


def apply_S(x: Point, bundle: MappingBundle, tol: float = 1e-9) -> Point:
    A, B = bundle.T.domain, bundle.T.codomain
    sides = [X for X in (A, B) if X.contains(x, tol)]
    if not sides:
        raise DomainError(f"{x} lies outside both A and B")
    y = bundle.S(x)
    for X, name in ((A, "A"), (B, "B")):
        if X in sides and not X.contains(y, tol):
            raise DomainError(f"S does not preserve {name}: S{x} = {y}")
    return y


def d_star(x: Point, bundle: MappingBundle, gap: float, tol_value: float = 1e-9) -> float:
    """d(Sx, STx) - gap, clamped to zero inside (-tol_value, 0)."""
    sx = bundle.S(x)
    stx = bundle.S(apply_T(x, bundle))
    raw = distance(sx, stx) - gap
    if raw < -tol_value:
        raise GapInconsistency(f"gap inconsistency: d(Sx, STx) - gap = {raw} at {x}")
    return max(raw, 0.0)
