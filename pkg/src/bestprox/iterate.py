"""The proximal iteration d(S x_{n+1}, S T x_n) = gap, its diagnostics, and a
brute-force best-proximity oracle."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

from .mappings import GammaStatus, GeraghtyFunction, d_star
from .metric import FiniteSet, Param1D, Point, SearchConfig, distance, minimize_1d
from .scenarios import InstanceBundle


class StepFailed(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class IterationConfig:
    max_iters: int = 10_000
    tol_step: float = 1e-10
    tol_residual: float = 1e-9
    divergence_radius: float = 1e12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        for name in ("tol_step", "tol_residual", "divergence_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"
    STEP_FAILED = "StepFailed"


def _proximal_target(x: Point, inst: InstanceBundle) -> tuple[Point, Point]:
    tx = inst.T(x)
    return tx, inst.S(tx)


def proximal_candidates(x: Point, inst: InstanceBundle, cfg: SearchConfig, tol: float,
                        gap: float | None = None) -> list[Point]:
    """Every u in A with |d(Su, STx) - gap| <= tol that the search can certify.

    Finite A: all members in index order. Param1D A: at most one point; the
    gap partner of Tx is tried first, then a grid/golden search over the
    parameter with ties resolved toward the smallest parameter.
    """
    if gap is None:
        gap = inst.gap_value(cfg)
    tx, stx = _proximal_target(x, inst)
    S, A = inst.S, inst.A

    def resid(u):
        return abs(distance(S(u), stx) - gap)

    if isinstance(A, FiniteSet):
        return [u for u in A.points if resid(u) <= tol]

    _, partner, _ = A.nearest(tx)
    if resid(partner) <= tol:
        return [partner]
    t, val = minimize_1d(lambda s: resid(A.member(s)), A.lo, A.hi, cfg)
    return [A.member(t)] if val <= tol else []


def proximal_step(x: Point, inst: InstanceBundle, cfg: SearchConfig = SearchConfig(),
                  icfg: IterationConfig = IterationConfig(), gap: float | None = None) -> Point:
    if isinstance(inst.A, FiniteSet):
        if gap is None:
            gap = inst.gap_value(cfg)
        _, stx = _proximal_target(x, inst)
        # closest residual wins, lowest index on ties
        best = min(inst.A.points, key=lambda u: abs(distance(inst.S(u), stx) - gap))
        if abs(distance(inst.S(best), stx) - gap) <= icfg.tol_residual:
            return best
        raise StepFailed(f"no point of A realizes the gap against ST{x}")
    found = proximal_candidates(x, inst, cfg, icfg.tol_residual, gap)
    if not found:
        raise StepFailed(f"no point of A realizes the gap against ST{x}")
    return found[0]


@dataclass(frozen=True)
class TraceRow:
    n: int
    x: Point
    sx: Point
    stx: Point
    residual: float
    step: float | None = None  # d(S x_n, S x_{n+1})
    raw_step: float | None = None  # d(x_n, x_{n+1})
    link_residual: float | None = None  # |d(S x_{n+1}, S T x_n) - gap|
    ratio: float | None = None
    raw_ratio: float | None = None


@dataclass(frozen=True)
class IterationTrace:
    rows: tuple
    status: Status
    gap: float
    config: IterationConfig
    notes: tuple = ()

    @property
    def final(self) -> Point:
        return self.rows[-1].x

    @property
    def iterations(self) -> int:
        return self.rows[-1].n

    def params(self, axis: int = 1) -> list[float]:
        return [r.x[axis] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = self.rows[0].x.dim
        w.writerow(["n"] + [f"x{i}" for i in range(dim)] + ["residual", "step", "ratio"])
        for r in self.rows:
            w.writerow([r.n] + [repr(c) for c in r.x] +
                       [repr(r.residual), "" if r.step is None else repr(r.step),
                        "" if r.ratio is None else repr(r.ratio)])
        return buf.getvalue()

    def summary(self) -> dict:
        ratios = [r.ratio for r in self.rows if r.ratio is not None]
        return {
            "status": self.status.value,
            "final_point": list(self.final.coords),
            "iterations": self.iterations,
            "final_residual": self.rows[-1].residual,
            "sup_ratio": max(ratios) if ratios else None,
            "gap": self.gap,
            "notes": list(self.notes),
        }


def _escaped(p: Point, radius: float) -> bool:
    return max(abs(c) for c in p) > radius


def in_proximity_set(x: Point, inst: InstanceBundle, gap: float, cfg: SearchConfig) -> bool:
    if not inst.A.contains(x, cfg.tol_membership):
        return False
    return inst.B.nearest(x)[2] - gap <= cfg.tol_value


def run_iteration(x0: Point, inst: InstanceBundle, cfg: SearchConfig = SearchConfig(),
                  icfg: IterationConfig = IterationConfig()) -> IterationTrace:
    """Iterate proximal steps from x0 until a terminal status.

    Convergence needs the residual d*(x_n) and both step lengths, in S-image
    space and raw, under their tolerances. S-image steps alone shrink on the
    counterexample while the raw iterates run off to infinity.
    """
    gap = inst.gap_value(cfg)
    if not in_proximity_set(x0, inst, gap, cfg):
        raise PreconditionError(f"start point {x0} is not in A0")
    notes = []
    if inst.beta is not None and inst.beta.gamma_status is not GammaStatus.GUARANTEED:
        notes.append("beta is user-supplied; membership in Gamma unverified")
    bundle = inst.maps
    S = inst.S
    rows = []
    x = x0
    prev_step = prev_raw = None
    status = Status.MAX_ITERS
    n = 0
    while True:
        sx, tx = S(x), inst.T(x)
        stx = S(tx)
        res = d_star(x, bundle, gap, cfg.tol_value)
        if n >= icfg.max_iters:
            rows.append(TraceRow(n, x, sx, stx, res))
            break
        try:
            nxt = proximal_step(x, inst, cfg, icfg, gap)
        except StepFailed as exc:
            rows.append(TraceRow(n, x, sx, stx, res))
            notes.append(str(exc))
            status = Status.STEP_FAILED
            break
        step = distance(sx, S(nxt))
        raw = distance(x, nxt)
        link = abs(distance(S(nxt), stx) - gap)
        ratio = step / prev_step if prev_step is not None and prev_step > icfg.tol_step else None
        raw_ratio = raw / prev_raw if prev_raw is not None and prev_raw > icfg.tol_step else None
        rows.append(TraceRow(n, x, sx, stx, res, step, raw, link, ratio, raw_ratio))
        if res <= icfg.tol_residual and step <= icfg.tol_step and raw <= icfg.tol_step:
            status = Status.CONVERGED
            break
        x, prev_step, prev_raw = nxt, step, raw
        n += 1
        if _escaped(x, icfg.divergence_radius):
            rows.append(TraceRow(n, x, S(x), S(inst.T(x)), d_star(x, bundle, gap, cfg.tol_value)))
            status = Status.DIVERGED
            break
    return IterationTrace(tuple(rows), status, gap, icfg, tuple(notes))


@dataclass(frozen=True)
class BoundCheck:
    n: int
    ratio: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class Diagnostics:
    ratio_series: tuple
    raw_ratio_series: tuple
    sup_ratio: float | None
    raw_sup_ratio: float | None
    bound_checks: tuple = ()
    raw_bound_checks: tuple = ()
    vacuous: bool = False

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.bound_checks)

    @property
    def raw_all_pass(self) -> bool:
        return all(c.passed for c in self.raw_bound_checks)


def convergence_diagnostics(trace: IterationTrace, beta: GeraghtyFunction | None = None,
                            kind: str = "geraghty", rel_slack: float = 1e-12) -> Diagnostics:
    """Step-ratio series with optional per-step bound checks.

    kind="geraghty" bounds s_n / s_{n-1} by beta(s_{n-1}); kind="kannan" by
    beta / (1 - beta). Ratios exist only where the previous step exceeds tol_step.
    """
    if kind not in ("geraghty", "kannan"):
        raise ValueError(f"unknown diagnostic kind {kind!r}")
    rows = trace.rows
    series, raw_series, checks, raw_checks = [], [], [], []
    for prev, row in zip(rows, rows[1:]):
        if row.ratio is not None:
            series.append((row.n, row.ratio))
        if row.raw_ratio is not None:
            raw_series.append((row.n, row.raw_ratio))
        if beta is None:
            continue
        for ratio, prev_len, out in ((row.ratio, prev.step, checks),
                                     (row.raw_ratio, prev.raw_step, raw_checks)):
            if ratio is None:
                continue
            b = beta(prev_len)
            bound = b / (1.0 - b) if kind == "kannan" else b
            out.append(BoundCheck(row.n, ratio, bound, ratio <= bound * (1 + rel_slack)))
    return Diagnostics(
        ratio_series=tuple(series),
        raw_ratio_series=tuple(raw_series),
        sup_ratio=max((r for _, r in series), default=None),
        raw_sup_ratio=max((r for _, r in raw_series), default=None),
        bound_checks=tuple(checks),
        raw_bound_checks=tuple(raw_checks),
        vacuous=not series,
    )


def brute_force_best_proximity(inst: InstanceBundle, cfg: SearchConfig = SearchConfig(),
                               tol_residual: float = 1e-9, grid_n: int | None = None,
                               form: str = "auxiliary") -> list[tuple[Point, float]]:
    """All grid/enumerated x in A whose residual is within tol_residual.

    form="auxiliary" uses d(Sx, STx) - gap; form="plain" uses d(x, Tx) - gap.
    Evaluates the maps directly and never touches the iteration code path.
    """
    if form not in ("auxiliary", "plain"):
        raise ValueError(f"unknown residual form {form!r}")
    gap = inst.gap_value(cfg)
    S = inst.S if form == "auxiliary" else (lambda p: p)
    hits = []
    for x in candidate_points(inst, grid_n or cfg.grid_n):
        r = distance(S(x), S(inst.T(x))) - gap
        if r <= tol_residual:
            hits.append((x, max(r, 0.0)))
    hits.sort(key=lambda h: h[1])
    return hits


def candidate_points(inst: InstanceBundle, grid_n: int) -> list[Point]:
    A = inst.search_set(inst.A)
    if isinstance(A, FiniteSet):
        return list(A.points)
    assert isinstance(A, Param1D)
    return [A.member(t) for t in A.grid(grid_n)]


def min_residual(inst: InstanceBundle, cfg: SearchConfig = SearchConfig(),
                 grid_n: int | None = None, form: str = "auxiliary") -> tuple[Point, float]:
    gap = inst.gap_value(cfg)
    S = inst.S if form == "auxiliary" else (lambda p: p)
    best = None
    for x in candidate_points(inst, grid_n or cfg.grid_n):
        r = distance(S(x), S(inst.T(x))) - gap
        if best is None or r < best[1]:
            best = (x, r)
    return best
