"""Sampled checks of the contraction conditions.

A check can only falsify a universally quantified condition, never prove
it, so verdicts are NotFalsified / Falsified / Vacuous. Every violation
carries the points it was found at and can be replayed from scratch.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .iterate import proximal_candidates
from .mappings import GammaStatus, GeraghtyFunction, d_star
from .metric import FiniteSet, Param1D, Point, PointSet, SearchConfig, distance
from .scenarios import InstanceBundle

MAX_WITNESSES = 10
RATIO_FLOOR = 1e-9


class Verdict(str, Enum):
    NOT_FALSIFIED = "NotFalsified"
    FALSIFIED = "Falsified"
    FALSIFIED_AT_HORIZON = "Falsified-at-horizon"
    VACUOUS = "Vacuous"


@dataclass(frozen=True)
class Violation:
    points: dict
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def to_dict(self) -> dict:
        return {"points": {k: list(p.coords) if isinstance(p, Point) else p
                           for k, p in self.points.items()},
                "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin}


@dataclass(frozen=True)
class ConditionReport:
    condition_id: str
    n_samples: int
    n_applicable: int
    violations: tuple
    verdict: Verdict
    worst_margin: float | None = None
    n_violations: int = 0
    ratio_range: tuple | None = None
    notes: tuple = ()
    parameter: str = ""

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "parameter": self.parameter,
            "verdict": self.verdict.value,
            "n_samples": self.n_samples,
            "n_applicable": self.n_applicable,
            "n_violations": self.n_violations,
            "worst_margin": self.worst_margin,
            "ratio_range": list(self.ratio_range) if self.ratio_range else None,
            "violations": [v.to_dict() for v in self.violations[:MAX_WITNESSES]],
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ProximalPairSampler:
    """Chooses base points x in A; "exhaustive" takes every point of a finite set."""

    strategy: str = "grid"
    n: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("grid", "random", "exhaustive"):
            raise ValueError(f"unknown sampling strategy {self.strategy!r}")
        if self.n < 1:
            raise ValueError("sample count must be positive")

    def points(self, X: PointSet) -> list[Point]:
        if isinstance(X, FiniteSet):
            pts = list(X.points)
            if self.strategy == "exhaustive" or self.n >= len(pts):
                return pts
            if self.strategy == "grid":
                idx = np.linspace(0, len(pts) - 1, self.n).round().astype(int)
                return [pts[i] for i in dict.fromkeys(idx.tolist())]
            rng = np.random.default_rng(self.seed)
            return [pts[i] for i in sorted(rng.choice(len(pts), self.n, replace=False).tolist())]
        if self.strategy == "exhaustive":
            raise ValueError("exhaustive sampling needs a finite set")
        if self.strategy == "grid":
            return [X.member(t) for t in X.grid(self.n)]
        rng = np.random.default_rng(self.seed)
        return [X.member(float(t)) for t in rng.uniform(X.lo, X.hi, self.n)]

    def premise_points(self, inst: InstanceBundle, cfg: SearchConfig) -> list[tuple[Point, Point]]:
        """(x, u) with |d(Su, STx) - gap| <= tol_value; all such u for finite A."""
        gap = inst.gap_value(cfg)
        out = []
        for x in self.points(inst.search_set(inst.A)):
            for u in proximal_candidates(x, inst, cfg, cfg.tol_value, gap):
                out.append((x, u))
        return out

    def describe(self) -> str:
        seed = f", seed={self.seed}" if self.strategy == "random" else ""
        return f"{self.strategy}(n={self.n}{seed})"


def _report(condition_id: str, n_samples: int, n_applicable: int, violations: list,
            worst: float | None, ratios: list, notes: list, parameter: str = "") -> ConditionReport:
    if n_applicable == 0:
        verdict = Verdict.VACUOUS
    elif violations:
        verdict = Verdict.FALSIFIED
    else:
        verdict = Verdict.NOT_FALSIFIED
    # largest margins first, sample order on ties
    ordered = sorted(violations, key=lambda v: -v.margin)
    return ConditionReport(
        condition_id=condition_id,
        n_samples=n_samples,
        n_applicable=n_applicable,
        violations=tuple(ordered),
        verdict=verdict,
        worst_margin=worst,
        n_violations=len(violations),
        ratio_range=(min(ratios), max(ratios)) if ratios else None,
        notes=tuple(notes),
        parameter=parameter,
    )


def _beta_notes(beta: GeraghtyFunction) -> list[str]:
    if beta.gamma_status is GammaStatus.GUARANTEED:
        return []
    return ["beta is user-supplied: membership in Gamma is not verified"]


def _pairwise(condition_id: str, premise: list, inequality: Callable, cfg: SearchConfig,
              guard: Callable | None = None, parameter: str = "", notes=()) -> ConditionReport:
    """Run `inequality` over all ordered pairs of premise tuples.

    inequality(a, b) -> (lhs, rhs, ratio_or_None, points_dict).
    """
    n_samples = len(premise) ** 2
    applicable = 0
    violations, ratios = [], []
    worst = None
    for a, b in itertools.product(premise, repeat=2):
        if guard is not None and not guard(a, b):
            continue
        applicable += 1
        lhs, rhs, ratio, pts = inequality(a, b)
        margin = lhs - rhs
        worst = margin if worst is None else max(worst, margin)
        if ratio is not None:
            ratios.append(ratio)
        if margin > cfg.tol_value:
            violations.append(Violation(pts, lhs, rhs))
    return _report(condition_id, n_samples, applicable, violations, worst, ratios,
                   list(notes), parameter)


def _constant_fn(value: float) -> GeraghtyFunction:
    return GeraghtyFunction(lambda t: value, GammaStatus.GUARANTEED, "constant", {"k": value})


# --- non-self conditions on premise pairs -----------------------------------

def _s_geraghty_terms(inst, beta):
    S = inst.S

    def inequality(a, b):
        (x, u), (y, v) = a, b
        dsx = distance(S(x), S(y))
        lhs = distance(S(u), S(v))
        rhs = beta(dsx) * dsx
        ratio = lhs / dsx if dsx > RATIO_FLOOR else None
        return lhs, rhs, ratio, {"x": x, "y": y, "u": u, "v": v}
    return inequality


def _s_kannan_terms(inst, beta, gap, cfg):
    S = inst.S
    ds_cache = {}

    def dstar(p):
        if p not in ds_cache:
            ds_cache[p] = d_star(p, inst.maps, gap, cfg.tol_value)
        return ds_cache[p]

    def inequality(a, b):
        (x, u), (y, v) = a, b
        lhs = distance(S(u), S(v))
        rhs = beta(distance(S(x), S(y))) * (dstar(x) + dstar(y))
        return lhs, rhs, None, {"x": x, "y": y, "u": u, "v": v}
    return inequality


def _resolve_beta(inst: InstanceBundle, beta: GeraghtyFunction | None) -> GeraghtyFunction:
    beta = beta if beta is not None else inst.beta
    if beta is None:
        raise ValueError("no beta supplied and the instance carries none")
    return beta


def check_s_proximal_geraghty(inst: InstanceBundle, beta: GeraghtyFunction | None = None,
                              sampler: ProximalPairSampler = ProximalPairSampler(),
                              cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(Su,Sv) <= beta(d(Sx,Sy)) d(Sx,Sy) whenever d(Su,STx) = d(Sv,STy) = gap."""
    beta = _resolve_beta(inst, beta)
    premise = sampler.premise_points(inst, cfg)
    return _pairwise("s-proximal-geraghty", premise, _s_geraghty_terms(inst, beta), cfg,
                     parameter=beta.descriptor, notes=_beta_notes(beta))


def check_s_proximal_kannan_geraghty(inst: InstanceBundle, beta: GeraghtyFunction | None = None,
                                     sampler: ProximalPairSampler = ProximalPairSampler(),
                                     cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(Su,Sv) <= beta(d(Sx,Sy)) [d*(Sx,STx) + d*(Sy,STy)] on premise pairs."""
    beta = _resolve_beta(inst, beta)
    gap = inst.gap_value(cfg)
    premise = sampler.premise_points(inst, cfg)
    return _pairwise("s-proximal-kannan-geraghty", premise,
                     _s_kannan_terms(inst, beta, gap, cfg), cfg,
                     parameter=beta.descriptor, notes=_beta_notes(beta))


def check_proximal_contraction_first_kind(inst: InstanceBundle, alpha: float,
                                          sampler: ProximalPairSampler = ProximalPairSampler(),
                                          cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(u1,u2) <= alpha d(x1,x2) whenever d(u_i, T x_i) = gap."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    plain = inst.with_identity_aux()
    premise = sampler.premise_points(plain, cfg)
    return _pairwise("proximal-contraction", premise,
                     _s_geraghty_terms(plain, _constant_fn(alpha)), cfg,
                     parameter=f"alpha={alpha!r}")


def check_proximal_kannan(inst: InstanceBundle, alpha: float,
                          sampler: ProximalPairSampler = ProximalPairSampler(),
                          cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(u,v) <= alpha [d*(x,Tx) + d*(y,Ty)] with alpha in [0, 1/2)."""
    if not 0.0 <= alpha < 0.5:
        raise ValueError(f"alpha must lie in [0, 1/2), got {alpha}")
    plain = inst.with_identity_aux()
    gap = plain.gap_value(cfg)
    premise = sampler.premise_points(plain, cfg)
    return _pairwise("proximal-kannan", premise,
                     _s_kannan_terms(plain, _constant_fn(alpha), gap, cfg), cfg,
                     parameter=f"alpha={alpha!r}")


def check_weak_proximal_kannan(inst: InstanceBundle, alpha: float,
                               sampler: ProximalPairSampler = ProximalPairSampler(),
                               cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """As check_proximal_kannan, tested only where d*(x,Tx) / r <= d(x,y), r = alpha/(1-alpha)."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    r = alpha / (1.0 - alpha)
    plain = inst.with_identity_aux()
    gap = plain.gap_value(cfg)
    premise = sampler.premise_points(plain, cfg)

    def guard(a, b):
        (x, _), (y, _) = a, b
        return d_star(x, plain.maps, gap, cfg.tol_value) / r <= distance(x, y) + cfg.tol_value

    return _pairwise("weak-proximal-kannan", premise,
                     _s_kannan_terms(plain, _constant_fn(alpha), gap, cfg), cfg,
                     guard=guard, parameter=f"alpha={alpha!r}, r={r!r}")


# --- self-map conditions ----------------------------------------------------

def _self_points(X: PointSet | Sequence[Point], sampler: ProximalPairSampler) -> list[Point]:
    if isinstance(X, (FiniteSet, Param1D)):
        return sampler.points(X)
    return list(X)


def check_geraghty_self(f: Callable[[Point], Point], X, beta: GeraghtyFunction,
                        sampler: ProximalPairSampler = ProximalPairSampler(),
                        cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(fx, fy) <= beta(d(x,y)) d(x,y)."""
    pts = [(p, f(p)) for p in _self_points(X, sampler)]

    def inequality(a, b):
        (x, fx), (y, fy) = a, b
        dxy = distance(x, y)
        lhs = distance(fx, fy)
        return lhs, beta(dxy) * dxy, (lhs / dxy if dxy > RATIO_FLOOR else None), {"x": x, "y": y}
    return _pairwise("geraghty-self", pts, inequality, cfg,
                     parameter=beta.descriptor, notes=_beta_notes(beta))


def check_kannan_geraghty_self(f: Callable[[Point], Point], X, beta: GeraghtyFunction,
                               sampler: ProximalPairSampler = ProximalPairSampler(),
                               cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(fx, fy) <= beta(d(x,y)) * (d(x,fx) + d(y,fy)) / 2."""
    pts = [(p, f(p)) for p in _self_points(X, sampler)]

    def inequality(a, b):
        (x, fx), (y, fy) = a, b
        rhs = beta(distance(x, y)) * 0.5 * (distance(x, fx) + distance(y, fy))
        return distance(fx, fy), rhs, None, {"x": x, "y": y}
    return _pairwise("kannan-geraghty-self", pts, inequality, cfg,
                     parameter=beta.descriptor, notes=_beta_notes(beta))


def check_s_contraction_self(f: Callable[[Point], Point], S: Callable[[Point], Point], X,
                             k: float, sampler: ProximalPairSampler = ProximalPairSampler(),
                             cfg: SearchConfig = SearchConfig()) -> ConditionReport:
    """d(S f x, S f y) <= k d(Sx, Sy) with k in (0, 1)."""
    if not 0.0 < k < 1.0:
        raise ValueError(f"k must lie in (0, 1), got {k}")
    pts = [(p, f(p)) for p in _self_points(X, sampler)]

    def inequality(a, b):
        (x, fx), (y, fy) = a, b
        dsx = distance(S(x), S(y))
        lhs = distance(S(fx), S(fy))
        return lhs, k * dsx, (lhs / dsx if dsx > RATIO_FLOOR else None), {"x": x, "y": y}
    return _pairwise("s-contraction-self", pts, inequality, cfg, parameter=f"k={k!r}")


# --- subsequential convergence ----------------------------------------------

def probe_subsequential_convergence(S: Callable[[Point], Point], probes: Sequence[Sequence[Point]],
                                    tol: float = 1e-9, escape_factor: float = 1e6) -> ConditionReport:
    """Finite-horizon search for sequences whose S-images settle while the
    sequence itself has no cluster point.

    Over the second half of each probe, {S x_n} counts as Cauchy when its
    diameter is below tol; {x_n} has no cluster when every pair of its points
    is farther apart than escape_factor * tol.
    """
    radius = escape_factor * tol
    violations = []
    applicable = 0
    worst = None
    for k, seq in enumerate(probes):
        if len(seq) < 4:
            continue
        applicable += 1
        tail = list(seq[len(seq) // 2:])
        images = [S(p) for p in tail]
        diam = max(distance(a, b) for a, b in itertools.combinations(images, 2))
        sep = min(distance(a, b) for a, b in itertools.combinations(tail, 2))
        # margin > 0 means both failure signatures are present
        margin = min(tol - diam, sep - radius)
        worst = margin if worst is None else max(worst, margin)
        if diam < tol and sep > radius:
            violations.append(Violation({"probe": k, "tail_start": len(seq) // 2,
                                         "last_point": seq[-1], "last_image": images[-1]},
                                        lhs=sep, rhs=radius))
    notes = ["finite-horizon evidence, not a proof"]
    if applicable == 0:
        verdict = Verdict.VACUOUS
    elif violations:
        verdict = Verdict.FALSIFIED_AT_HORIZON
    else:
        verdict = Verdict.NOT_FALSIFIED
    return ConditionReport("subseq-convergence", len(probes), applicable, tuple(violations),
                           verdict, worst, len(violations), None, tuple(notes),
                           parameter=f"tol={tol!r}, escape_radius={radius!r}")


def default_probes(inst: InstanceBundle, horizon: int = 200) -> list[list[Point]]:
    """Escaping probe x_n = member(lo + n) along an unbounded ray; for bounded
    sets x_n = member(lo + (hi - lo)/(n + 1)); finite sets cycle their points."""
    A = inst.A
    if isinstance(A, FiniteSet):
        return [[A.points[n % len(A.points)] for n in range(1, horizon + 1)]]
    if not A.bounded:
        return [[A.member(A.lo + n) for n in range(1, horizon + 1)]]
    return [[A.member(A.lo + (A.hi - A.lo) / (n + 1)) for n in range(1, horizon + 1)]]


# --- replay -----------------------------------------------------------------

def replay_violation(report: ConditionReport, violation: Violation, inst: InstanceBundle,
                     beta: GeraghtyFunction | None = None, alpha: float | None = None,
                     cfg: SearchConfig = SearchConfig()) -> float:
    """Recompute a pair-condition violation from its points; returns lhs - rhs.

    The premise d(Su, STx) = gap is re-verified before the inequality.
    """
    cid = report.condition_id
    pts = violation.points
    x, y, u, v = pts["x"], pts["y"], pts["u"], pts["v"]
    aux = inst if cid.startswith("s-") else inst.with_identity_aux()
    gap = aux.gap_value(cfg)
    S, T = aux.S, aux.T
    for p, q in ((u, x), (v, y)):
        if abs(distance(S(p), S(T(q))) - gap) > cfg.tol_value:
            raise AssertionError(f"premise fails on replay at u={p}, x={q}")
    if cid in ("s-proximal-geraghty", "proximal-contraction"):
        b = _resolve_beta(aux, beta) if alpha is None else _constant_fn(alpha)
        dsx = distance(S(x), S(y))
        return distance(S(u), S(v)) - b(dsx) * dsx
    if cid in ("s-proximal-kannan-geraghty", "proximal-kannan", "weak-proximal-kannan"):
        b = _resolve_beta(aux, beta) if alpha is None else _constant_fn(alpha)
        ds = [distance(S(p), S(T(p))) - gap for p in (x, y)]
        return distance(S(u), S(v)) - b(distance(S(x), S(y))) * sum(max(d, 0.0) for d in ds)
    raise ValueError(f"no replay for condition {cid!r}")


CONDITIONS = (
    "s-proximal-geraghty",
    "s-proximal-kannan-geraghty",
    "proximal-contraction",
    "proximal-kannan",
    "weak-proximal-kannan",
    "subseq-convergence",
)
