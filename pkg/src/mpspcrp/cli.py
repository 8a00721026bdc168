"""Command-line entry point.

Exit codes: 0 success, 1 bad input, 2 plan validation failure, 3 infeasible,
4 resource cap reached.  Failures print one line ``error: <kind>: <message>``
on stderr.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from . import __version__
from .bench import SUITES, BenchConfig, run_bench, write_reports
from .core import InstanceError, MovePlan, PlanFormatError, validate_plan
from .heuristics import HeuristicRun, Infeasible, hr1, hr2
from .instances import CATALOG, GenerationFailed, ParseError, UnknownFamily, family, generate, parse, serialize, tiny_instance
from .milp import (
    InfeasibleFixing,
    InvalidPlan,
    ModelTooLarge,
    build_crp_loading_model,
    build_model,
    build_mpsp_model,
    check_assignment,
    emit_lp,
    emit_warm_start,
    plan_to_assignment,
    read_solution,
    solve_hierarchical,
)
from .milp.hierarchical import StageFailed, solve_hierarchical_external
from .milp.model import parse_var_name
from .milp.solver import ENV_VAR, SolverError, default_command
from .oracle import BOUND, EXHAUSTED, InstanceTooLarge, SearchLimits, exact_optimum

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_RESOURCE = 4


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _load_instance(path: str):
    try:
        return parse(Path(path))
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, "input", f"no such file {path}") from None
    except ParseError as exc:
        raise CliError(EXIT_INPUT, "input", f"{path}: {exc}") from None


def _load_plan(path: str) -> MovePlan:
    try:
        return MovePlan.from_text(Path(path).read_text())
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, "input", f"no such file {path}") from None
    except PlanFormatError as exc:
        raise CliError(EXIT_INVALID, "validation", f"{path}: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        from .instances import write_atomic

        write_atomic(Path(path), text)


def _summary(label: str, plan: MovePlan, extra: str = "") -> None:
    print(
        f"{label} objective={plan.objective} yard_relocs={plan.yard_relocations} "
        f"ship_relocs={plan.ship_relocations}{extra}"
    )


# -- commands --------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.list:
        for name, preset in CATALOG.items():
            H, W = preset.yard
            R, C = preset.ship
            print(f"{name} group={preset.group} ports={preset.ports} yard={H}x{W} ship={R}x{C} containers~{preset.containers}")
        return EXIT_OK
    if args.tiny:
        inst = tiny_instance(args.seed, max_containers=args.max_containers, ports=tuple(args.ports or (2, 3)))
    elif args.family:
        try:
            params = family(args.family, (args.seed,))[0]
        except UnknownFamily:
            raise CliError(EXIT_INPUT, "input", f"unknown family {args.family}") from None
        try:
            inst = generate(params)
        except GenerationFailed as exc:
            raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc)) from None
    else:
        raise CliError(EXIT_INPUT, "input", "give --family NAME, --tiny or --list")
    if args.out:
        serialize(inst, Path(args.out))
        print(f"instance containers={inst.size} ports={inst.ports} written={args.out}", file=sys.stderr)
    else:
        serialize(inst, sys.stdout)
    return EXIT_OK


def _finish_heuristic(run: HeuristicRun, args, extra: str = "") -> int:
    if args.plan:
        _write(args.plan, run.best_plan.to_text())
    _summary(run.method, run.best_plan, extra)
    return EXIT_OK


def cmd_hr1(args) -> int:
    inst = _load_instance(args.instance)
    try:
        run = hr1(inst)
    except Infeasible as exc:
        raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc)) from None
    return _finish_heuristic(run, args)


def cmd_hr2(args) -> int:
    inst = _load_instance(args.instance)
    try:
        run = hr2(inst, rounds=args.rounds, time_budget=args.time_budget, seed=args.seed, workers=args.workers)
    except Infeasible as exc:
        raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc)) from None
    return _finish_heuristic(run, args, f" rounds={run.rounds_executed} best_round={run.best_round}")


def cmd_oracle(args) -> int:
    inst = _load_instance(args.instance)
    limits = SearchLimits(args.max_nodes, args.time_budget, args.tops_only, args.max_containers)
    try:
        res = exact_optimum(inst, limits)
    except InstanceTooLarge as exc:
        raise CliError(EXIT_RESOURCE, "resource", str(exc)) from None
    if res.plan is None:
        raise CliError(EXIT_RESOURCE, "resource", f"search stopped after {res.nodes} nodes without a plan")
    if args.plan:
        _write(args.plan, res.plan.to_text())
    _summary("ORACLE", res.plan, f" status={res.status} nodes={res.nodes}")
    if res.status in (BOUND, EXHAUSTED):
        print(f"error: resource: search limit reached, objective {res.objective} is an upper bound", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


def _fixed_from(path: str) -> frozenset:
    values, _ = read_solution(Path(path).read_text())
    return frozenset(parse_var_name(n) for n, v in values.items() if v == 1 and n[0] in "wu")


def cmd_emit_lp(args) -> int:
    inst = _load_instance(args.instance)
    try:
        if args.stage == "integrated":
            model = build_model(inst, big_M=args.big_m, max_variables=args.max_variables)
        elif args.stage == "mpsp":
            model = build_mpsp_model(inst)
        else:
            if not args.fixed:
                raise CliError(EXIT_INPUT, "input", "the crp stage needs --fixed with a w/u valuation")
            model = build_crp_loading_model(inst, _fixed_from(args.fixed))
    except ModelTooLarge as exc:
        raise CliError(EXIT_RESOURCE, "resource", str(exc)) from None
    except InfeasibleFixing as exc:
        raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc)) from None
    if args.out:
        emit_lp(model, args.out)
    else:
        emit_lp(model, sys.stdout)
    print(f"LP variables={model.variable_count} constraints={model.constraint_count} M={model.big_M}", file=sys.stderr)
    return EXIT_OK


def cmd_warmstart(args) -> int:
    inst = _load_instance(args.instance)
    plan = _load_plan(args.plan)
    try:
        model = build_model(inst, max_variables=args.max_variables)
    except ModelTooLarge as exc:
        raise CliError(EXIT_RESOURCE, "resource", str(exc)) from None
    try:
        assignment = plan_to_assignment(inst, plan, model)
    except InvalidPlan as exc:
        raise CliError(EXIT_INVALID, "validation", str(exc)) from None
    report = check_assignment(model, assignment)
    if not report.feasible:
        raise CliError(EXIT_INFEASIBLE, "infeasible", f"valuation violates {report.violations[0]}")
    if args.out:
        emit_warm_start(assignment, args.out)
    else:
        emit_warm_start(assignment, sys.stdout)
    if args.lp:
        emit_lp(model, args.lp)
    print(f"START objective={report.objective} nonzeros={len(assignment.ones)} rows_checked={report.rows_checked}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _load_instance(args.instance)
    plan = _load_plan(args.plan)
    report = validate_plan(inst, plan)
    if report.ok:
        print(f"ok objective={report.objective} yard_relocs={report.yard_relocations} ship_relocs={report.ship_relocations}")
        return EXIT_OK
    for v in report.violations:
        print(v)
    raise CliError(EXIT_INVALID, "validation", f"{len(report.violations)} violations, first {report.violations[0]}")


def cmd_hier(args) -> int:
    inst = _load_instance(args.instance)
    command = args.solver_cmd or default_command()
    try:
        if command:
            with tempfile.TemporaryDirectory() as tmp:
                start = hr1(inst).best_plan
                res = solve_hierarchical_external(inst, command, tmp, start, args.time_budget)
        else:
            limits = SearchLimits(args.max_nodes, args.time_budget, False, args.max_containers)
            res = solve_hierarchical(inst, limits)
    except InstanceTooLarge as exc:
        raise CliError(EXIT_RESOURCE, "resource", f"{exc}; pass --solver-cmd for larger instances") from None
    except (InfeasibleFixing, StageFailed) as exc:
        raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc)) from None
    except SolverError as exc:
        raise CliError(EXIT_INPUT, "solver", str(exc)) from None
    if args.plan:
        _write(args.plan, res.plan.to_text())
    print(f"HIER mpsp_objective={res.mpsp_objective} crp_objective={res.crp_loading_objective} total={res.total} status={res.status}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = BenchConfig(
        suite=args.suite,
        seeds=args.seeds,
        hr2_rounds=args.hr2_rounds,
        hr2_seed=args.hr2_seed,
        hr2_time_budget=args.hr2_time_budget,
        max_variables=args.max_variables,
        solver_cmd=args.solver_cmd or default_command(),
        artifacts=args.artifacts,
        timing=not args.no_timing,
        families=tuple(args.family or ()),
    )
    result = run_bench(config, workers=args.workers)
    man = write_reports(result, args.out, args.markdown)
    for note in result.notes:
        print(f"strict-gap {note}")
    print(f"bench suite={config.suite} records={len(result.records)} report={args.out} manifest={man}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpspcrp", description="Stowage planning with yard relocations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--family", help="family preset such as 1A or 16B")
    p.add_argument("--tiny", action="store_true", help="a small random instance for exact solving")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-containers", type=int, default=5)
    p.add_argument("--ports", type=int, nargs="+", help="port counts to draw from (tiny only)")
    p.add_argument("--out", help="instance file to write (stdout if omitted)")
    p.add_argument("--list", action="store_true", help="list family presets")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("hr1", help="run the deterministic heuristic")
    p.add_argument("instance")
    p.add_argument("--plan", help="plan file to write")
    p.set_defaults(func=cmd_hr1)

    p = sub.add_parser("hr2", help="run the randomized heuristic")
    p.add_argument("instance")
    p.add_argument("--plan")
    p.add_argument("--rounds", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-budget", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_hr2)

    p = sub.add_parser("oracle", help="solve a tiny instance exactly")
    p.add_argument("instance")
    p.add_argument("--plan")
    p.add_argument("--max-nodes", type=int, default=5_000_000)
    p.add_argument("--time-budget", type=float, default=300.0)
    p.add_argument("--max-containers", type=int, default=8)
    p.add_argument("--tops-only", action="store_true", help="retrieve only stack tops")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("emit-lp", help="write the binary model in LP format")
    p.add_argument("instance")
    p.add_argument("--out")
    p.add_argument("--big-m", type=int)
    p.add_argument("--max-variables", type=int, default=50_000_000)
    p.add_argument("--stage", choices=("integrated", "mpsp", "crp"), default="integrated")
    p.add_argument("--fixed", help="solution or start file whose w/u ones are frozen (crp stage)")
    p.set_defaults(func=cmd_emit_lp)

    p = sub.add_parser("warmstart", help="translate a plan into a warm-start file")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("--out")
    p.add_argument("--lp", help="also write the paired LP file")
    p.add_argument("--max-variables", type=int, default=50_000_000)
    p.set_defaults(func=cmd_warmstart)

    p = sub.add_parser("validate", help="replay a plan and report violations")
    p.add_argument("instance")
    p.add_argument("plan")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("hier", help="solve ship side first, then the yards")
    p.add_argument("instance")
    p.add_argument("--plan")
    p.add_argument("--solver-cmd", help=f"solver template with {{lp}} {{start}} {{sol}}; default ${ENV_VAR}")
    p.add_argument("--max-nodes", type=int, default=5_000_000)
    p.add_argument("--time-budget", type=float, default=300.0)
    p.add_argument("--max-containers", type=int, default=8)
    p.set_defaults(func=cmd_hier)

    p = sub.add_parser("bench", help="run the comparison matrix")
    p.add_argument("--suite", choices=SUITES, default="small")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--out", required=True, help="CSV report")
    p.add_argument("--markdown", help="also write a Markdown table")
    p.add_argument("--artifacts", help="directory for instances, plans, LP and start files")
    p.add_argument("--family", action="append", help="restrict to these families (repeatable)")
    p.add_argument("--hr2-rounds", type=int, default=10000)
    p.add_argument("--hr2-seed", type=int, default=0)
    p.add_argument("--hr2-time-budget", type=float)
    p.add_argument("--max-variables", type=int, default=2_000_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--solver-cmd", help=f"solver template; default ${ENV_VAR}")
    p.add_argument("--no-timing", action="store_true", help="leave time_s empty so reports are reproducible byte for byte")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except InstanceError as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
