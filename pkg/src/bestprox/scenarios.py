"""Built-in instances and the JSON instance-file format.

Three built-ins are provided: the registration toy model, its degenerate
Kannan-type variant, and the two-ray counterexample whose auxiliary map
is not subsequentially convergent.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .mappings import (
    AffineMap, AuxiliaryMap, ExpNegMap, GammaStatus, GeraghtyFunction, IdentityMap,
    MappingBundle, NonSelfMap, TableMap, MAP_KINDS, make_beta,
)
from .metric import (
    FiniteSet, Param1D, Point, PointSet, ProximityStructure, SearchConfig,
    proximity_sets, set_distance,
)


class InstanceError(ValueError):
    """Schema violation or failed structural check in an instance."""


@dataclass(frozen=True)
class InstanceBundle:
    A: PointSet
    B: PointSet
    maps: MappingBundle
    gap: float | None = None  # closed form; overrides the numeric search
    flags: dict = field(default_factory=dict, hash=False)
    truncation: float | None = None
    provenance: str = "api"

    @property
    def dim(self) -> int:
        return self.A.dim

    @property
    def T(self) -> NonSelfMap:
        return self.maps.T

    @property
    def S(self) -> AuxiliaryMap:
        return self.maps.S

    @property
    def beta(self) -> GeraghtyFunction | None:
        return self.maps.beta

    def gap_value(self, cfg: SearchConfig = SearchConfig()) -> float:
        if self.gap is not None:
            return self.gap
        return set_distance(self.search_set(self.A), self.search_set(self.B), cfg)

    def search_set(self, X: PointSet) -> PointSet:
        """X cut down to the recorded truncation, for grids and samplers."""
        if isinstance(X, Param1D) and not X.bounded and self.truncation is not None:
            return X.truncate(self.truncation)
        return X

    def sample(self, X: PointSet, n: int) -> list[Point]:
        X = self.search_set(X)
        if isinstance(X, FiniteSet):
            return list(X.points)
        return [X.member(t) for t in X.grid(n)]

    def proximity(self, cfg: SearchConfig = SearchConfig()) -> ProximityStructure:
        return proximity_sets(self.search_set(self.A), self.search_set(self.B), cfg,
                              gap=self.gap_value(cfg))

    def with_identity_aux(self) -> "InstanceBundle":
        return replace(self, maps=replace(self.maps, S=AuxiliaryMap(IdentityMap())))

    def with_beta(self, beta: GeraghtyFunction | None) -> "InstanceBundle":
        return replace(self, maps=replace(self.maps, beta=beta))

    def validate(self, cfg: SearchConfig = SearchConfig(), n: int = 65) -> "InstanceBundle":
        tol = cfg.tol_membership
        if self.A.dim != self.B.dim:
            raise InstanceError(f"dimension mismatch: A has dim {self.A.dim}, B has dim {self.B.dim}")
        if self.T.domain != self.A or self.T.codomain != self.B:
            raise InstanceError("T must map A into B")
        for x in self.sample(self.A, n):
            try:
                y = self.T(x)
            except ValueError as exc:
                raise InstanceError(f"T undefined at {x}: {exc}") from exc
            if y.dim != self.dim or not self.B.contains(y, tol):
                raise InstanceError(f"codomain violation: T{x} = {y} lies outside B")
        for X, name in ((self.A, "A"), (self.B, "B")):
            for x in self.sample(X, n):
                try:
                    y = self.S(x)
                except ValueError as exc:
                    raise InstanceError(f"S undefined at {x}: {exc}") from exc
                if not X.contains(y, tol):
                    raise InstanceError(f"side violation: S{x} = {y} lies outside {name}")
        if self.beta is not None:
            for t in [0.0] + [10.0 ** k for k in range(-6, 7)]:
                if not 0.0 <= self.beta(t) < 1.0:
                    raise InstanceError(f"beta({t}) = {self.beta(t)} outside [0, 1)")
        return self


def _vertical_segment(x: float, lo: float = 0.0, hi: float = 1.0) -> Param1D:
    return Param1D(Point(x, 0.0), Point(0.0, 1.0), lo, hi)


def registration_model(delta: float, kappa: float) -> InstanceBundle:
    """A = {(0,t)}, B = {(delta,s)}, t, s in [0,1]; T(0,t) = (delta, kappa t); S = Id."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    A, B = _vertical_segment(0.0), _vertical_segment(delta)
    T = NonSelfMap(AffineMap([[0.0, 0.0], [0.0, kappa]], [delta, 0.0]), A, B)
    inst = InstanceBundle(
        A, B, MappingBundle(T, AuxiliaryMap(IdentityMap()), make_beta("constant", k=kappa)),
        gap=float(delta),
        flags={"a0_closed": True, "b0_closed": True, "s_subseq_convergent": True},
        provenance=f"scenario:registration(delta={delta!r}, kappa={kappa!r})",
    )
    return inst.validate()


def kannan_degenerate_model(delta: float, beta: float = 0.5) -> InstanceBundle:
    """Same sets as the registration model with the constant map T(0,t) = (delta, 0)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    A, B = _vertical_segment(0.0), _vertical_segment(delta)
    T = NonSelfMap(AffineMap([[0.0, 0.0], [0.0, 0.0]], [delta, 0.0]), A, B)
    inst = InstanceBundle(
        A, B, MappingBundle(T, AuxiliaryMap(IdentityMap()), make_beta("constant", k=beta)),
        gap=float(delta),
        flags={"a0_closed": True, "b0_closed": True, "s_subseq_convergent": True},
        provenance=f"scenario:kannan-degenerate(delta={delta!r})",
    )
    return inst.validate()


def necessity_counterexample(t_max: float = 100.0) -> InstanceBundle:
    """Rays A = {0} x [0,inf), B = {1} x [0,inf); T(0,x) = (1, 2x+1); S(x,y) = (x, exp(-y)).

    The rays stay unbounded for the iteration; t_max bounds grids and samplers.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    A = _vertical_segment(0.0, hi=math.inf)
    B = _vertical_segment(1.0, hi=math.inf)
    T = NonSelfMap(AffineMap([[0.0, 0.0], [0.0, 2.0]], [1.0, 1.0]), A, B)
    S = AuxiliaryMap(ExpNegMap(axis=1), claims_injective=True, claims_subseq_convergent=False)
    inst = InstanceBundle(
        A, B, MappingBundle(T, S, make_beta("constant", k=math.exp(-1.0))),
        gap=1.0,
        flags={"a0_closed": True, "b0_closed": True, "s_subseq_convergent": False,
               "unbounded": True},
        truncation=float(t_max),
        provenance=f"scenario:counterexample(t_max={t_max!r})",
    )
    return inst.validate()


SCENARIOS = {
    "registration": (registration_model, {"delta": 0.5, "kappa": 0.5},
                     "translation offset delta with vertical scaling kappa; unique anchor (0,0)"),
    "kannan-degenerate": (kannan_degenerate_model, {"delta": 0.5},
                          "constant map T(0,t) = (delta, 0); Kannan-type condition holds trivially"),
    "counterexample": (necessity_counterexample, {"t_max": 100.0},
                       "two rays with S(x,y) = (x, exp(-y)); no best proximity point"),
}


def build_scenario(name: str, **params) -> InstanceBundle:
    if name not in SCENARIOS:
        raise KeyError(name)
    factory, defaults, _ = SCENARIOS[name]
    kwargs = dict(defaults)
    kwargs.update({k: v for k, v in params.items() if v is not None and k in defaults})
    return factory(**kwargs)


# --- file format ------------------------------------------------------------

def _num(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _nums(p) -> list:
    return [_num(c) for c in p]


def _set_to_dict(X: PointSet) -> dict:
    if isinstance(X, FiniteSet):
        return {"kind": "finite", "points": [_nums(p) for p in X.points]}
    return {"kind": "param1d", "base": _nums(X.base), "dir": _nums(X.direction),
            "lo": _num(X.lo), "hi": _num(X.hi)}


def _encode(obj):
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    return obj


def _map_to_dict(fn) -> dict:
    if isinstance(fn, TableMap):
        return {"table": _encode(fn.params()["table"])}
    if fn.descriptor not in MAP_KINDS:
        raise InstanceError(f"map {fn!r} has no file representation")
    return {"descriptor": fn.descriptor, "params": _encode(fn.params())}


def instance_to_dict(inst: InstanceBundle) -> dict:
    d = {
        "dim": inst.dim,
        "A": _set_to_dict(inst.A),
        "B": _set_to_dict(inst.B),
        "T": _map_to_dict(inst.T.fn),
        "S": dict(_map_to_dict(inst.S.fn), flags={
            "injective": inst.S.claims_injective,
            "subseq_convergent": inst.S.claims_subseq_convergent}),
        "flags": dict(inst.flags),
        "provenance": inst.provenance,
    }
    if inst.beta is not None:
        if inst.beta.gamma_status is not GammaStatus.GUARANTEED:
            raise InstanceError("only library beta functions can be saved")
        d["beta"] = {"kind": inst.beta.kind, "params": _encode(inst.beta.params)}
    if inst.gap is not None:
        d["gap"] = _num(inst.gap)
    if inst.truncation is not None:
        d["truncation"] = _num(inst.truncation)
    return d


class _Reader:
    """Schema checks with dotted field paths in every error."""

    def num(self, v, path: str) -> float:
        if not isinstance(v, str):
            raise InstanceError(f"{path}: expected a decimal string, got {type(v).__name__}")
        try:
            return float(v)
        except ValueError:
            raise InstanceError(f"{path}: {v!r} is not a decimal number") from None

    def point(self, v, path: str, dim: int) -> Point:
        if not isinstance(v, list) or len(v) != dim:
            raise InstanceError(f"{path}: expected a list of {dim} decimal strings")
        return Point(self.num(c, f"{path}[{i}]") for i, c in enumerate(v))

    def obj(self, d, key: str, path: str):
        if not isinstance(d, dict) or key not in d:
            raise InstanceError(f"{path}: missing field {key!r}")
        return d[key]

    def pointset(self, d, path: str, dim: int) -> PointSet:
        kind = self.obj(d, "kind", path)
        if kind == "finite":
            pts = self.obj(d, "points", path)
            if not isinstance(pts, list) or not pts:
                raise InstanceError(f"{path}.points: expected a nonempty list")
            return FiniteSet([self.point(p, f"{path}.points[{i}]", dim) for i, p in enumerate(pts)])
        if kind == "param1d":
            return Param1D(self.point(self.obj(d, "base", path), f"{path}.base", dim),
                           self.point(self.obj(d, "dir", path), f"{path}.dir", dim),
                           self.num(self.obj(d, "lo", path), f"{path}.lo"),
                           self.num(d.get("hi", "inf"), f"{path}.hi"))
        raise InstanceError(f"{path}.kind: expected 'finite' or 'param1d', got {kind!r}")

    def pointmap(self, d, path: str, dim: int):
        if not isinstance(d, dict):
            raise InstanceError(f"{path}: expected an object")
        if "table" in d:
            rows = d["table"]
            if not isinstance(rows, list) or not rows:
                raise InstanceError(f"{path}.table: expected a nonempty list of [x, Tx] pairs")
            pairs = []
            for i, row in enumerate(rows):
                if not isinstance(row, list) or len(row) != 2:
                    raise InstanceError(f"{path}.table[{i}]: expected [x, Tx]")
                pairs.append((self.point(row[0], f"{path}.table[{i}][0]", dim),
                               self.point(row[1], f"{path}.table[{i}][1]", dim)))
            return TableMap(pairs)
        tag = self.obj(d, "descriptor", path)
        params = d.get("params", {})
        if tag == "identity":
            return IdentityMap()
        if tag == "affine":
            m = self.obj(params, "matrix", f"{path}.params")
            c = self.obj(params, "offset", f"{path}.params")
            if not isinstance(m, list) or len(m) != dim:
                raise InstanceError(f"{path}.params.matrix: expected {dim} rows")
            matrix = [[self.num(v, f"{path}.params.matrix[{i}][{j}]") for j, v in enumerate(row)]
                      for i, row in enumerate(m)]
            offset = self.point(c, f"{path}.params.offset", dim)
            try:
                return AffineMap(matrix, offset.coords)
            except ValueError as exc:
                raise InstanceError(f"{path}.params: {exc}") from None
        if tag == "exp_neg":
            axis = params.get("axis", 1)
            if not isinstance(axis, int) or not 0 <= axis < dim:
                raise InstanceError(f"{path}.params.axis: expected an integer in [0, {dim})")
            return ExpNegMap(axis)
        raise InstanceError(f"{path}.descriptor: unknown map {tag!r} (known: {sorted(MAP_KINDS)})")


def instance_from_dict(d: dict, provenance: str = "dict",
                       cfg: SearchConfig = SearchConfig()) -> InstanceBundle:
    r = _Reader()
    dim = r.obj(d, "dim", "$")
    if not isinstance(dim, int) or dim < 1:
        raise InstanceError("$.dim: expected a positive integer")
    A = r.pointset(r.obj(d, "A", "$"), "A", dim)
    B = r.pointset(r.obj(d, "B", "$"), "B", dim)
    T = NonSelfMap(r.pointmap(r.obj(d, "T", "$"), "T", dim), A, B)
    sd = d.get("S", {"descriptor": "identity"})
    sflags = sd.get("flags", {}) if isinstance(sd, dict) else {}
    S = AuxiliaryMap(r.pointmap(sd, "S", dim),
                     claims_injective=bool(sflags.get("injective", True)),
                     claims_subseq_convergent=bool(sflags.get("subseq_convergent", True)))
    beta = None
    if "beta" in d:
        bd = d["beta"]
        kind = r.obj(bd, "kind", "beta")
        params = {k: r.num(v, f"beta.params.{k}") for k, v in bd.get("params", {}).items()}
        try:
            beta = make_beta(kind, **params)
        except (ValueError, KeyError) as exc:
            raise InstanceError(f"beta: {exc}") from None
    flags = d.get("flags", {})
    if not isinstance(flags, dict) or not all(isinstance(v, bool) for v in flags.values()):
        raise InstanceError("flags: expected an object of booleans")
    flags = dict(flags)
    flags.setdefault("s_subseq_convergent", S.claims_subseq_convergent)
    gap = r.num(d["gap"], "gap") if "gap" in d else None
    trunc = r.num(d["truncation"], "truncation") if "truncation" in d else None
    inst = InstanceBundle(A, B, MappingBundle(T, S, beta), gap=gap, flags=flags,
                          truncation=trunc, provenance=d.get("provenance", provenance))
    return inst.validate(cfg)


def save_instance(inst: InstanceBundle, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def load_instance(path, cfg: SearchConfig = SearchConfig()) -> InstanceBundle:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(d, dict):
        raise InstanceError(f"{path}: top level must be an object")
    d.setdefault("provenance", str(path))
    return instance_from_dict(d, str(path), cfg)
