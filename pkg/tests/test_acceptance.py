"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Run with pytest for the PASS/FAIL summary, or directly as a script.
"""
import json
import math
import sys
import time

import numpy as np
import pytest

from bestprox.cli import main
from bestprox.conditions import (
    ProximalPairSampler, Verdict, check_s_proximal_geraghty, check_s_proximal_kannan_geraghty,
    probe_subsequential_convergence,
)
from bestprox.iterate import (
    IterationConfig, Status, brute_force_best_proximity, convergence_diagnostics, proximal_step,
    run_iteration,
)
from bestprox.mappings import make_beta
from bestprox.metric import Point, SearchConfig, distance
from bestprox.scenarios import kannan_degenerate_model, necessity_counterexample, registration_model

from helpers import random_finite_instance

CFG = SearchConfig()
criterion = pytest.mark.criterion


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@criterion("1", "registration iterates t_n = kappa^n, limit (0,0), B-side point (delta,0)")
def test_registration_exactness():
    with Clock() as clock:
        inst = registration_model(0.5, 0.5)
        # tol_step below the smallest normal spacing keeps the run going past n = 50
        trace = run_iteration(Point(0, 1), inst, CFG, IterationConfig(tol_step=1e-16))
    assert trace.status is Status.CONVERGED
    ts = trace.params()
    assert len(ts) > 50
    for n in range(51):
        assert abs(ts[n] - 0.5 ** n) <= 1e-10 * 0.5 ** n
    assert distance(trace.final, Point(0, 0)) <= 1e-15
    tx = inst.T(trace.final)
    assert distance(tx, Point(0.5, 0)) <= 1e-15
    assert clock.elapsed < 1.0


@criterion("2", "S-proximal Geraghty ratio equals kappa on a 50x50 premise grid")
def test_geraghty_ratio_exactness():
    with Clock() as clock:
        inst = registration_model(0.5, 0.5)
        rep = check_s_proximal_geraghty(inst, sampler=ProximalPairSampler("grid", 50))
    assert rep.n_applicable == 2500
    lo, hi = rep.ratio_range
    assert abs(lo - 0.5) <= 1e-12 and abs(hi - 0.5) <= 1e-12
    assert clock.elapsed < 5.0


@criterion("3", "brute force on 10^4 grid finds one point, equal to the iteration limit")
def test_uniqueness():
    inst = registration_model(0.5, 0.5)
    hits = brute_force_best_proximity(inst, CFG, grid_n=10_000)
    assert len(hits) == 1
    limit = run_iteration(Point(0, 1), inst).final
    assert distance(hits[0][0], limit) <= 1e-8


@criterion("4", "degenerate Kannan model: NotFalsified with beta=0.5, one step to (0,0)")
def test_degenerate_kannan():
    inst = kannan_degenerate_model(0.5)
    rep = check_s_proximal_kannan_geraghty(inst, make_beta("constant", k=0.5))
    assert rep.verdict is Verdict.NOT_FALSIFIED
    for t0 in np.linspace(0, 1, 11):
        x0 = Point(0, float(t0))
        assert proximal_step(x0, inst) == Point(0, 0)
        trace = run_iteration(x0, inst)
        assert trace.status is Status.CONVERGED
        assert trace.rows[min(1, len(trace.rows) - 1)].x == Point(0, 0)
        assert trace.iterations == (0 if t0 == 0 else 1)


COUNTEREXAMPLE_BUDGET = []


@criterion("5a", "counterexample: S-proximal Geraghty with beta=1/e NotFalsified on 10^3 pairs")
def test_counterexample_geraghty_one_over_e():
    with Clock() as clock:
        inst = necessity_counterexample(100.0)
        # 32 grid points on [0, 100] give 1024 ordered premise pairs
        rep = check_s_proximal_geraghty(inst, make_beta("constant", k=math.exp(-1)),
                                        ProximalPairSampler("grid", 32))
    COUNTEREXAMPLE_BUDGET.append(clock.elapsed)
    assert rep.n_applicable >= 1000
    assert rep.verdict is Verdict.NOT_FALSIFIED, (
        f"{rep.n_violations} violations, worst margin {rep.worst_margin:.4g}, "
        f"first witness {rep.violations[0].to_dict() if rep.violations else None}")


@criterion("5b", "counterexample: x_n=(0,n) probe to horizon 200 is Falsified-at-horizon")
def test_counterexample_probe():
    with Clock() as clock:
        inst = necessity_counterexample(100.0)
        probe = [Point(0, n) for n in range(200)]
        rep = probe_subsequential_convergence(inst.S, [probe])
    COUNTEREXAMPLE_BUDGET.append(clock.elapsed)
    assert rep.verdict is Verdict.FALSIFIED_AT_HORIZON


@criterion("5c", "counterexample: iteration from (0,0) Diverges with t_n = 2^n - 1 exactly")
def test_counterexample_divergence():
    with Clock() as clock:
        trace = run_iteration(Point(0, 0), necessity_counterexample(100.0))
    COUNTEREXAMPLE_BUDGET.append(clock.elapsed)
    assert trace.status is Status.DIVERGED
    ts = trace.params()
    assert len(ts) > 30
    for n in range(31):
        assert ts[n] == 2 ** n - 1


@criterion("5d", "counterexample: oracle best proximity set empty at tol 1e-6 on [0,100]")
def test_counterexample_oracle(tmp_path):
    with Clock() as clock:
        code = main(["oracle", "--scenario", "counterexample", "--t-max", "100",
                     "--tol-residual", "1e-6", "--out", str(tmp_path)])
        res = json.loads((tmp_path / "oracle.json").read_text())
    COUNTEREXAMPLE_BUDGET.append(clock.elapsed)
    assert code == 0
    assert res["best_proximity"]["count"] == 0
    assert res["best_proximity"]["points"] == []
    assert sum(COUNTEREXAMPLE_BUDGET) < 5.0


@criterion("6", "200 random finite instances agree with the brute-force oracle")
def test_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    icfg = IterationConfig(max_iters=500)
    tally = {"checked": 0, "multi": 0, "steps": 0}
    with Clock() as clock:
        for _ in range(200):
            inst = random_finite_instance(rng)
            beta = make_beta("constant", k=float(inst.beta.params["k"]))
            rep = check_s_proximal_geraghty(inst, beta, ProximalPairSampler("exhaustive"))
            oracle = [p for p, _ in brute_force_best_proximity(inst, CFG, icfg.tol_residual)]
            if len(oracle) >= 2:
                tally["multi"] += 1
                assert rep.verdict in (Verdict.FALSIFIED, Verdict.VACUOUS)
            if rep.verdict is not Verdict.NOT_FALSIFIED:
                continue
            for x0 in inst.proximity(CFG).a0.points:
                trace = run_iteration(x0, inst, CFG, icfg)
                if trace.status is not Status.CONVERGED:
                    continue
                tally["checked"] += 1
                tally["steps"] += trace.iterations
                assert len(oracle) == 1
                assert distance(trace.final, oracle[0]) <= 10 * icfg.tol_residual
    # the property must not hold vacuously
    assert tally["checked"] >= 100 and tally["steps"] >= 200 and tally["multi"] >= 20, tally
    assert clock.elapsed < 60.0


@criterion("7", "Kannan step ratios respect beta/(1-beta) on converging built-in runs")
def test_kannan_step_bound():
    inst = kannan_degenerate_model(0.5)
    n_ratios = 0
    for t0 in np.linspace(0.05, 1, 20):
        trace = run_iteration(Point(0, float(t0)), inst)
        assert trace.status is Status.CONVERGED
        diag = convergence_diagnostics(trace, inst.beta, kind="kannan")
        assert diag.all_pass
        n_ratios += len(diag.bound_checks)
    assert n_ratios > 0


ACCEPTANCE_COMMANDS = [
    ["solve", "--scenario", "registration", "--x0", "0,1", "--tol-step", "1e-16"],
    ["verify", "--scenario", "registration", "--condition", "s-proximal-geraghty",
     "--samples", "50"],
    ["verify", "--scenario", "kannan-degenerate", "--condition", "s-proximal-kannan-geraghty",
     "--beta-const", "0.5"],
    ["verify", "--scenario", "counterexample", "--condition", "s-proximal-geraghty",
     "--beta-const", repr(math.exp(-1)), "--samples", "32",
     "--condition", "subseq-convergence"],
    ["solve", "--scenario", "counterexample", "--x0", "0,0"],
    ["oracle", "--scenario", "counterexample", "--tol-residual", "1e-6"],
    ["oracle", "--scenario", "registration", "--grid-n", "10000"],
    ["solve", "--scenario", "kannan-degenerate", "--x0", "0,0.5"],
]


@criterion("8", "replaying each acceptance command from its manifest is bitwise identical")
@pytest.mark.parametrize("argv", ACCEPTANCE_COMMANDS, ids=lambda a: "-".join(a[:3]))
def test_replay(tmp_path, argv):
    first = tmp_path / "first"
    code = main(argv + ["--out", str(first)])
    assert code in (0, 2, 3)
    again = tmp_path / "again"
    assert main(["replay", str(first / "manifest.json"), "--out", str(again)]) == code
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in again.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (again / name).read_bytes(), name


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
