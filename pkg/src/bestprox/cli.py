"""bestprox command line: solve | verify | oracle | scenario | replay.

All results go to files under --out; stdout carries one JSON summary.
"""
from __future__ import annotations

import argparse
import difflib
import hashlib
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .conditions import (
    CONDITIONS, ProximalPairSampler, Verdict, check_proximal_contraction_first_kind,
    check_proximal_kannan, check_s_proximal_geraghty, check_s_proximal_kannan_geraghty,
    check_weak_proximal_kannan, default_probes, probe_subsequential_convergence,
)
from .iterate import (
    IterationConfig, PreconditionError, Status, brute_force_best_proximity, min_residual,
    run_iteration,
)
from .mappings import make_beta
from .metric import GeometryError, Point, SearchConfig
from .scenarios import SCENARIOS, InstanceError, build_scenario, load_instance

EXIT_OK = 0
EXIT_FALSIFIED = 2
EXIT_DIVERGED = 3
EXIT_MAX_ITERS = 4
EXIT_STEP_FAILED = 5
EXIT_USAGE = 64
EXIT_DATA = 65

STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.DIVERGED: EXIT_DIVERGED,
    Status.MAX_ITERS: EXIT_MAX_ITERS,
    Status.STEP_FAILED: EXIT_STEP_FAILED,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--tol-value", type=float, default=SearchConfig.tol_value)
    g.add_argument("--tol-param", type=float, default=SearchConfig.tol_param)
    g.add_argument("--tol-membership", type=float, default=SearchConfig.tol_membership)
    g.add_argument("--grid-n", type=int, default=SearchConfig.grid_n)
    g.add_argument("--max-bracket-doublings", type=int, default=SearchConfig.max_bracket_doublings)
    g.add_argument("--tol-step", type=float, default=IterationConfig.tol_step)
    g.add_argument("--tol-residual", type=float, default=IterationConfig.tol_residual)
    g.add_argument("--max-iters", type=int, default=IterationConfig.max_iters)
    g.add_argument("--divergence-radius", type=float, default=IterationConfig.divergence_radius)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="bestprox-out", help="output directory")
    src = p.add_argument_group("instance")
    src.add_argument("--scenario", help="built-in scenario name")
    src.add_argument("--instance", help="path to an instance JSON file")
    src.add_argument("--delta", type=float)
    src.add_argument("--kappa", type=float)
    src.add_argument("--t-max", type=float)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="bestprox", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="run the proximal iteration")
    p.add_argument("--x0", required=True, help='start point, e.g. "0,1"')

    p = sub.add_parser("verify", parents=[common], help="check contraction conditions")
    p.add_argument("--condition", action="append", choices=CONDITIONS, required=True)
    p.add_argument("--beta-const", type=float, help="constant beta overriding the instance's")
    p.add_argument("--alpha", type=float, default=0.25,
                   help="constant for the proximal-contraction / Kannan conditions")
    p.add_argument("--sampler", choices=("grid", "random", "exhaustive"), default="grid")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--horizon", type=int, default=200)

    sub.add_parser("oracle", parents=[common], help="brute-force best proximity set")

    p = sub.add_parser("scenario", help="list built-in scenarios")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def _configs(args) -> tuple[SearchConfig, IterationConfig]:
    try:
        return (SearchConfig(args.tol_value, args.tol_param, args.tol_membership,
                             args.grid_n, args.max_bracket_doublings),
                IterationConfig(args.max_iters, args.tol_step, args.tol_residual,
                                args.divergence_radius))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _instance(args, cfg: SearchConfig):
    if bool(args.scenario) == bool(args.instance):
        raise UsageError("give exactly one of --scenario or --instance")
    if args.instance:
        return load_instance(args.instance, cfg)
    if args.scenario not in SCENARIOS:
        hint = difflib.get_close_matches(args.scenario, SCENARIOS, n=1)
        extra = f"; did you mean {hint[0]!r}?" if hint else ""
        raise UsageError(f"unknown scenario {args.scenario!r}{extra}")
    return build_scenario(args.scenario, delta=args.delta, kappa=args.kappa, t_max=args.t_max)


def _parse_point(text: str) -> Point:
    try:
        return Point(float(c) for c in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad point {text!r}: {exc}") from None


def _config_echo(args, cfg, icfg) -> dict:
    return {"search": asdict(cfg), "iteration": asdict(icfg), "seed": args.seed}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, Point):
        return list(o.coords)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


class _Outputs:
    def __init__(self, out: str):
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        (self.dir / name).write_text(text)
        self.written[name] = hashlib.sha256(text.encode()).hexdigest()

    def manifest(self, command: str, argv: list[str], inst, args, cfg, icfg) -> None:
        man = {
            "command": command,
            "argv": argv,
            "instance": inst.provenance if inst is not None else None,
            "config": _config_echo(args, cfg, icfg),
            "version": __version__,
            "outputs": dict(sorted(self.written.items())),
        }
        (self.dir / "manifest.json").write_text(_dump(man))


def _strip_out(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


def cmd_solve(args, argv) -> int:
    cfg, icfg = _configs(args)
    inst = _instance(args, cfg)
    x0 = _parse_point(args.x0)
    try:
        trace = run_iteration(x0, inst, cfg, icfg)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    out = _Outputs(args.out)
    summary = trace.summary()
    summary["instance"] = inst.provenance
    out.write("trace.csv", trace.to_csv())
    out.write("summary.json", _dump(summary))
    out.manifest("solve", argv, inst, args, cfg, icfg)
    print(_dump(summary), end="")
    return STATUS_EXIT[trace.status]


def _verify_one(cond: str, inst, args, cfg):
    sampler = ProximalPairSampler(args.sampler, args.samples, args.seed)
    beta = make_beta("constant", k=args.beta_const) if args.beta_const is not None else None
    if cond == "s-proximal-geraghty":
        return check_s_proximal_geraghty(inst, beta, sampler, cfg)
    if cond == "s-proximal-kannan-geraghty":
        return check_s_proximal_kannan_geraghty(inst, beta, sampler, cfg)
    if cond == "proximal-contraction":
        return check_proximal_contraction_first_kind(inst, args.alpha, sampler, cfg)
    if cond == "proximal-kannan":
        return check_proximal_kannan(inst, args.alpha, sampler, cfg)
    if cond == "weak-proximal-kannan":
        return check_weak_proximal_kannan(inst, args.alpha, sampler, cfg)
    return probe_subsequential_convergence(inst.S, default_probes(inst, args.horizon),
                                           tol=cfg.tol_value)


def cmd_verify(args, argv) -> int:
    cfg, icfg = _configs(args)
    inst = _instance(args, cfg)
    out = _Outputs(args.out)
    summary = {"instance": inst.provenance, "reports": {}}
    code = EXIT_OK
    for cond in args.condition:
        try:
            report = _verify_one(cond, inst, args, cfg)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out.write(f"report-{cond}.json", _dump(report.to_dict()))
        summary["reports"][cond] = {"verdict": report.verdict.value,
                                    "n_applicable": report.n_applicable,
                                    "n_violations": report.n_violations,
                                    "worst_margin": report.worst_margin}
        if report.verdict in (Verdict.FALSIFIED, Verdict.FALSIFIED_AT_HORIZON):
            code = EXIT_FALSIFIED
    out.write("summary.json", _dump(summary))
    out.manifest("verify", argv, inst, args, cfg, icfg)
    print(_dump(summary), end="")
    return code


def cmd_oracle(args, argv) -> int:
    cfg, icfg = _configs(args)
    inst = _instance(args, cfg)
    out = _Outputs(args.out)
    result = {"instance": inst.provenance, "gap": inst.gap_value(cfg),
              "tol_residual": icfg.tol_residual, "grid_n": cfg.grid_n}
    for form, key in (("plain", "best_proximity"), ("auxiliary", "auxiliary_best_proximity")):
        hits = brute_force_best_proximity(inst, cfg, icfg.tol_residual, form=form)
        best = min_residual(inst, cfg, form=form)
        result[key] = {"points": [list(p.coords) for p, _ in hits],
                       "residuals": [r for _, r in hits],
                       "count": len(hits),
                       "min_residual": best[1],
                       "min_residual_at": list(best[0].coords)}
    out.write("oracle.json", _dump(result))
    out.manifest("oracle", argv, inst, args, cfg, icfg)
    summary = {k: result[k] for k in ("instance", "gap")}
    summary["best_proximity_count"] = result["best_proximity"]["count"]
    summary["auxiliary_best_proximity_count"] = result["auxiliary_best_proximity"]["count"]
    summary["best_proximity"] = result["best_proximity"]["points"][:10]
    print(_dump(summary), end="")
    return EXIT_OK


def cmd_scenario(args, argv) -> int:
    listing = [{"name": name, "defaults": defaults, "description": doc}
               for name, (_, defaults, doc) in SCENARIOS.items()]
    if args.json:
        print(_dump(listing), end="")
    else:
        for item in listing:
            params = ", ".join(f"{k}={v}" for k, v in item["defaults"].items())
            print(f"{item['name']:<18} {params:<24} {item['description']}")
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    man = json.loads(Path(args.manifest).read_text())
    code = main(man["argv"] + ["--out", args.out])
    fresh = json.loads((Path(args.out) / "manifest.json").read_text())["outputs"]
    same = fresh == man["outputs"]
    print(_dump({"replayed": man["command"], "identical": same, "exit_code": code}), end="")
    return code if same else EXIT_DATA


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "oracle": cmd_oracle,
            "scenario": cmd_scenario, "replay": cmd_replay}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required: solve | verify | oracle | scenario | replay")
        return COMMANDS[args.command](args, _strip_out(argv))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, GeometryError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
