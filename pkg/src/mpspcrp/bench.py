"""Comparison matrix over generated instances: records, CSV, Markdown and manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .core import Instance, MovePlan
from .heuristics import Infeasible, hr1, hr2
from .instances import dumps, family, family_names, generate, tiny_instance, write_atomic
from .milp import (
    ModelTooLarge,
    build_model,
    check_assignment,
    emit_lp,
    emit_warm_start,
    parse_solution,
    plan_to_assignment,
    solve_hierarchical,
)
from .milp.solver import SolverError, run_solver
from .milp.warmstart import InconsistentSolution
from .oracle import BOUND, OPTIMAL, InstanceTooLarge, SearchLimits, exact_optimum

CSV_HEADER = ("instance", "method", "objective", "yard_relocs", "ship_relocs", "time_s", "status")
SUCCESS = ("optimal", "feasible", "emitted")
SUITES = ("small", "families", "paper-large", "real-scale")
METHODS = {
    "small": ("HR1", "HR2", "ORACLE", "HIER", "LP-EMIT"),
    "families": ("HR1", "HR2", "LP-EMIT"),
    "paper-large": ("HR1", "HR2", "LP-EMIT"),
    "real-scale": ("HR1", "HR2"),
}


@dataclass(frozen=True)
class BenchRecord:
    instance: str
    method: str
    objective: int | None
    yard_relocs: int | None
    ship_relocs: int | None
    time_s: float | None
    status: str

    def __post_init__(self) -> None:
        if (self.objective is not None) != (self.status in SUCCESS):
            raise ValueError(f"objective must be present exactly for successful records, got {self.status}")

    def cells(self, timing: bool = True) -> list[str]:
        def fmt(v):
            return "" if v is None else str(v)

        t = "" if self.time_s is None or not timing else f"{self.time_s:.3f}"
        return [self.instance, self.method, fmt(self.objective), fmt(self.yard_relocs), fmt(self.ship_relocs), t, self.status]


@dataclass(frozen=True)
class BenchConfig:
    suite: str = "small"
    seeds: int = 5
    hr2_rounds: int = 10000
    hr2_seed: int = 0
    hr2_time_budget: float | None = None
    oracle_nodes: int = 5_000_000
    oracle_time: float = 120.0
    max_variables: int = 2_000_000
    tiny_containers: int = 7
    solver_cmd: str | None = None
    artifacts: str | None = None
    timing: bool = True
    families: tuple[str, ...] = field(default_factory=tuple)

    def methods(self) -> tuple[str, ...]:
        base = METHODS[self.suite]
        return base + ("EXT-SOLVER",) if self.solver_cmd else base


def suite_cases(config: BenchConfig) -> list[tuple[str, str, int]]:
    """``(instance id, family, seed)`` in report order."""
    if config.suite not in SUITES:
        raise ValueError(f"unknown suite {config.suite!r}")
    seeds = range(config.seeds)
    if config.suite == "small":
        return [(f"tiny-{s}", "tiny", s) for s in seeds]
    if config.families:
        names = list(config.families)
    elif config.suite == "families":
        names = family_names("A") + family_names("B")
    else:
        names = family_names(config.suite)
    return [(f"{name}-s{s}", name, s) for name in names for s in seeds]


def make_instance(fam: str, seed: int, config: BenchConfig) -> Instance:
    if fam == "tiny":
        return tiny_instance(seed, max_containers=config.tiny_containers, ports=(3, 4))
    return generate(family(fam, (seed,))[0])


def _timed(fn: Callable):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _plan_record(iid: str, method: str, plan: MovePlan, secs: float, status: str) -> BenchRecord:
    return BenchRecord(iid, method, plan.objective, plan.yard_relocations, plan.ship_relocations, secs, status)


class _Artifacts:
    def __init__(self, root: str | None, iid: str):
        self.dir = None if root is None else Path(root) / iid
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path | None:
        return None if self.dir is None else self.dir / name

    def write(self, name: str, text: str) -> None:
        p = self.path(name)
        if p is not None:
            write_atomic(p, text)
            self.written.append(p)


def run_case(case: tuple[str, str, int], config: BenchConfig) -> tuple[list[BenchRecord], list[str]]:
    iid, fam, seed = case
    inst = make_instance(fam, seed, config)
    art = _Artifacts(config.artifacts, iid)
    art.write("instance.txt", dumps(inst))
    methods = config.methods()
    records: list[BenchRecord] = []
    base: MovePlan | None = None

    try:
        run, secs = _timed(lambda: hr1(inst))
        base = run.best_plan
        records.append(_plan_record(iid, "HR1", base, secs, "feasible"))
        art.write("hr1.plan", base.to_text())
    except Infeasible:
        records.append(BenchRecord(iid, "HR1", None, None, None, None, "infeasible"))

    if "HR2" in methods and base is not None:
        run, secs = _timed(lambda: hr2(inst, config.hr2_rounds, config.hr2_time_budget, config.hr2_seed))
        records.append(_plan_record(iid, "HR2", run.best_plan, secs, "feasible"))
        art.write("hr2.plan", run.best_plan.to_text())

    optimum = None
    if "ORACLE" in methods:
        limits = SearchLimits(max_nodes=config.oracle_nodes, time_budget=config.oracle_time, max_containers=12)
        try:
            res, secs = _timed(lambda: exact_optimum(inst, limits))
            if res.plan is None:
                records.append(BenchRecord(iid, "ORACLE", None, None, None, secs, "exhausted"))
            else:
                status = "optimal" if res.status == OPTIMAL else "feasible"
                records.append(_plan_record(iid, "ORACLE", res.plan, secs, status))
                art.write("oracle.plan", res.plan.to_text())
                if res.status == OPTIMAL:
                    optimum = res.objective
        except InstanceTooLarge:
            records.append(BenchRecord(iid, "ORACLE", None, None, None, None, "too-large"))

    if "HIER" in methods:
        limits = SearchLimits(max_nodes=config.oracle_nodes, time_budget=config.oracle_time, max_containers=12)
        try:
            h, secs = _timed(lambda: solve_hierarchical(inst, limits))
            status = "optimal" if h.status == OPTIMAL else "feasible"
            records.append(BenchRecord(iid, "HIER", h.total, h.crp_loading_objective, h.mpsp_objective, secs, status))
            art.write("hier.plan", h.plan.to_text())
        except InstanceTooLarge:
            records.append(BenchRecord(iid, "HIER", None, None, None, None, "too-large"))

    if ("LP-EMIT" in methods or "EXT-SOLVER" in methods) and base is not None:
        records.extend(_emit_and_solve(iid, inst, base, config, art, methods))

    notes = []
    hier = next((r for r in records if r.method == "HIER" and r.status == "optimal"), None)
    if hier is not None and optimum is not None and hier.objective > optimum:
        notes.append(f"{iid}: hierarchical {hier.objective} > integrated {optimum}")
    return records, notes


def _emit_and_solve(iid, inst, base, config, art, methods) -> list[BenchRecord]:
    out = []
    start = time.perf_counter()
    try:
        model = build_model(inst, max_variables=config.max_variables)
    except ModelTooLarge:
        out.append(BenchRecord(iid, "LP-EMIT", None, None, None, None, "too-large"))
        return out
    with tempfile.TemporaryDirectory() as tmp:
        lp_path = art.path("model.lp") or Path(tmp) / "model.lp"
        start_path = art.path("start.txt") or Path(tmp) / "start.txt"
        emit_lp(model, str(lp_path))
        assignment = plan_to_assignment(inst, base, model)
        report = check_assignment(model, assignment)
        emit_warm_start(assignment, str(start_path))
        if art.dir is not None:
            art.written.extend([lp_path, start_path])
        secs = time.perf_counter() - start
        if "LP-EMIT" in methods:
            if report.feasible:
                out.append(BenchRecord(iid, "LP-EMIT", report.objective, base.yard_relocations, base.ship_relocations, secs, "emitted"))
            else:
                out.append(BenchRecord(iid, "LP-EMIT", None, None, None, secs, "infeasible-start"))
        if "EXT-SOLVER" in methods:
            t0 = time.perf_counter()
            try:
                listing = run_solver(config.solver_cmd, str(lp_path), str(start_path))
                obj, plan = parse_solution(model, listing)
                out.append(_plan_record(iid, "EXT-SOLVER", plan, time.perf_counter() - t0, "feasible"))
                art.write("solver.plan", plan.to_text())
            except (SolverError, InconsistentSolution):
                out.append(BenchRecord(iid, "EXT-SOLVER", None, None, None, time.perf_counter() - t0, "solver-error"))
    return out


def _run_case_args(args):
    return run_case(*args)


@dataclass
class BenchResult:
    records: list[BenchRecord]
    notes: list[str]
    config: BenchConfig


def run_bench(config: BenchConfig, workers: int = 1) -> BenchResult:
    """Run every case; results come back in case order whatever the worker count."""
    cases = suite_cases(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_case_args, [(c, config) for c in cases]))
    else:
        outputs = [run_case(c, config) for c in cases]
    records = [r for recs, _ in outputs for r in recs]
    notes = [n for _, ns in outputs for n in ns]
    return BenchResult(records, notes, config)


def to_csv(records: list[BenchRecord], timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.cells(timing))
    return buf.getvalue()


def read_csv(text: str) -> list[BenchRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("unexpected CSV header")

    def num(s, cast):
        return None if s == "" else cast(s)

    return [
        BenchRecord(i, m, num(o, int), num(y, int), num(s, int), num(t, float), st)
        for i, m, o, y, s, t, st in rows[1:]
    ]


def to_markdown(records: list[BenchRecord], timing: bool = True) -> str:
    """One row per instance, an O.F./Time column pair per method."""
    methods: list[str] = []
    by_inst: dict[str, dict[str, BenchRecord]] = {}
    for r in records:
        if r.method not in methods:
            methods.append(r.method)
        by_inst.setdefault(r.instance, {})[r.method] = r
    head = ["Instance"]
    for m in methods:
        head += [f"{m} O.F.", f"{m} Time"] if timing else [f"{m} O.F."]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for iid, row in by_inst.items():
        cells = [iid]
        for m in methods:
            r = row.get(m)
            of = "" if r is None else (str(r.objective) if r.objective is not None else r.status)
            cells.append(of)
            if timing:
                cells.append("" if r is None or r.time_s is None else f"{r.time_s:.2f}")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def manifest(result: BenchResult, files: list[Path]) -> dict:
    cfg = asdict(result.config)
    cfg.pop("solver_cmd")
    cfg["solver"] = bool(result.config.solver_cmd)
    cases = suite_cases(result.config)
    root = Path(result.config.artifacts) if result.config.artifacts else None
    return {
        "tool": "mpspcrp",
        "version": __version__,
        "python": platform.python_version(),
        "config": cfg,
        "instances": [{"id": iid, "family": fam, "seed": s} for iid, fam, s in cases],
        "hierarchical_gaps": result.notes,
        "files": {
            (os.path.relpath(p, root) if root is not None and _under(p, root) else p.name): _sha256(p)
            for p in sorted(files)
        },
    }


def _under(p: Path, root: Path) -> bool:
    try:
        p.resolve().relative_to(root.resolve())
        return True
    except ValueError:
        return False


def write_reports(result: BenchResult, out: str, markdown: str | None = None) -> Path:
    """Write the CSV, optional Markdown, and a manifest covering every artifact; returns the manifest path."""
    timing = result.config.timing
    out_path = Path(out)
    write_atomic(out_path, to_csv(result.records, timing))
    files = [out_path]
    if markdown:
        write_atomic(Path(markdown), to_markdown(result.records, timing))
        files.append(Path(markdown))
    if result.config.artifacts:
        files += [p for p in Path(result.config.artifacts).rglob("*") if p.is_file()]
    man_path = out_path.with_name(out_path.stem + ".manifest.json")
    write_atomic(man_path, json.dumps(manifest(result, files), indent=2, sort_keys=True) + "\n")
    return man_path


__all__ = [
    "BenchConfig",
    "BenchRecord",
    "BenchResult",
    "CSV_HEADER",
    "SUITES",
    "make_instance",
    "manifest",
    "read_csv",
    "run_bench",
    "run_case",
    "suite_cases",
    "to_csv",
    "to_markdown",
    "write_reports",
]
