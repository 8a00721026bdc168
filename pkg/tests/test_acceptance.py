"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS|FAIL`` line and the lines are repeated
in the terminal summary.
"""

from __future__ import annotations

import os
import random
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

from helpers import expected_variables, random_plan
from mpspcrp.core import MovePlan, RetrieveLoad, ShipRelocate, StabilityFix, Unload, YardRelocate, validate_plan
from mpspcrp.heuristics import hr1, hr2
from mpspcrp.instances import family, family_names, generate, tiny_instance
from mpspcrp.milp import ModelShape, build_model, check_assignment, plan_to_assignment, solve_hierarchical
from mpspcrp.milp.model import constraint_count, variable_count
from mpspcrp.oracle import OPTIMAL, exact_optimum, exhaustive_check

SMALL_FAMILIES = family_names("A")[:8] + family_names("B")[:8]


def test_oracle_matches_exhaustive_enumeration(verdict):
    start = time.perf_counter()
    mismatches = []
    for seed in range(50):
        inst = tiny_instance(seed, 5, ports=(2, 3))
        result = exact_optimum(inst)
        full = exhaustive_check(inst)
        if result.status != OPTIMAL or result.objective != full:
            mismatches.append(seed)
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    assert verdict(1, ok, f"{50 - len(mismatches)}/50 equal, {elapsed:.1f}s total (limit 60s)"), mismatches


def test_heuristics_are_ordered_against_the_oracle(verdict):
    ordered = 0
    matched = 0
    for seed in range(50):
        inst = tiny_instance(seed, 8, ports=(3, 4))
        best = exact_optimum(inst).objective
        h2 = hr2(inst, rounds=10_000, seed=0).best_objective
        h1 = hr1(inst).best_objective
        ordered += best <= h2 <= h1
        matched += h2 == best
    ok = ordered == 50 and matched >= 5
    detail = f"ORACLE<=HR2<=HR1 in {ordered}/50, HR2 optimal in {matched}/50 ({2 * matched}%, target 30%, floor 10%)"
    assert verdict(2, ok, detail)


def test_hierarchical_total_bounds_the_joint_optimum(verdict):
    bounded = 0
    strict = []
    for seed in range(20):
        inst = tiny_instance(seed, 7, ports=(4,))
        total = solve_hierarchical(inst).total
        best = exact_optimum(inst).objective
        bounded += total >= best
        if total > best:
            strict.append(f"{seed}:{total}>{best}")
    detail = f"{bounded}/20 bounded, strict gaps {len(strict)} ({', '.join(strict) or 'none'}; expected at least 1)"
    assert verdict(3, bounded == 20, detail)


def test_heuristic_warm_starts_are_feasible(verdict):
    failures = []
    for k in range(100):
        name = SMALL_FAMILIES[k % len(SMALL_FAMILIES)]
        seed = k // len(SMALL_FAMILIES)
        inst = generate(family(name, [seed])[0])
        plan = hr1(inst).best_plan
        assignment = plan_to_assignment(inst, plan)
        report = check_assignment(assignment.model, assignment)
        if report.violations or report.objective != plan.objective:
            failures.append(f"{name}-s{seed}")
    assert verdict(4, not failures, f"{100 - len(failures)}/100 with zero violations and matching objective"), failures


def test_model_sizes_match_enumeration(verdict):
    bad = []
    for seed in range(20):
        inst = tiny_instance(1000 + seed, 6, ports=(2, 3, 4))
        model = build_model(inst)
        listed = list(model.variables())
        rows = sum(1 for _ in model.rows())
        if not (len(listed) == len(set(listed)) == len(expected_variables(inst)) == model.variable_count):
            bad.append(f"vars@{seed}")
        if rows != model.constraint_count:
            bad.append(f"rows@{seed}")
    # The 1A preset with ten containers in each of its three yards.
    reference = ModelShape(4, 4, 5, ((4, 3, 10),) * 3)
    nv, nc = variable_count(reference), constraint_count(reference)
    within = 57_080 / 3 <= nv <= 57_080 * 3 and 30_373 / 3 <= nc <= 30_373 * 3
    detail = f"20 instances {'agree' if not bad else 'disagree: ' + ', '.join(bad)}; 1A shape {nv} vars / {nc} rows"
    assert verdict(5, not bad and within, detail)


def test_heuristic_scales(verdict):
    big = generate(family("16A")[0])
    start = time.perf_counter()
    plan = hr1(big).best_plan
    valid = validate_plan(big, plan).ok
    big_time = time.perf_counter() - start
    slow = []
    worst = 0.0
    for name in family_names("A") + family_names("B"):
        inst = generate(family(name)[0])
        t0 = time.perf_counter()
        p = hr1(inst).best_plan
        spent = time.perf_counter() - t0
        worst = max(worst, spent)
        if spent > 5 or not validate_plan(inst, p).ok:
            slow.append(name)
    ok = valid and big_time <= 600 and not slow
    detail = f"16A ({big.size} containers) {big_time:.2f}s valid={valid}; slowest A/B family {worst:.3f}s"
    assert verdict(6, ok, detail), slow


def _perturb(move):
    """Point the move at the wrong container; every move kind checks the id at its source slot."""
    return replace(move, container=move.container + 1000)


def _raise_target(move):
    if isinstance(move, RetrieveLoad):
        return replace(move, r=move.r + 1)
    if isinstance(move, YardRelocate):
        return replace(move, l=move.l + 1)
    if isinstance(move, (ShipRelocate, StabilityFix)):
        return replace(move, r2=move.r2 + 1)
    assert isinstance(move, Unload)
    return replace(move, r=move.r + 1)


def test_single_move_faults_are_caught(verdict):
    plans = []
    seed = 0
    while len(plans) < 20:
        inst = tiny_instance(seed, 7, ports=(3, 4))
        plan = random_plan(inst, random.Random(seed))
        seed += 1
        if validate_plan(inst, plan).ok:
            plans.append((inst, plan))
    kinds = {type(m).__name__ for _, p in plans for m in p}
    total = caught = 0
    for inst, plan in plans:
        moves = list(plan)
        for k in range(len(moves)):
            for variant in (
                moves[:k] + moves[k + 1 :],
                moves[:k] + [_perturb(moves[k])] + moves[k + 1 :],
                moves[:k] + [_raise_target(moves[k])] + moves[k + 1 :],
            ):
                total += 1
                caught += not validate_plan(inst, MovePlan(tuple(variant))).ok
    detail = f"{caught}/{total} faulty plans rejected across move kinds {sorted(kinds)}"
    assert verdict(7, caught == total, detail)


def _run_pipeline(root: Path, hash_seed: str) -> None:
    env = dict(os.environ, PYTHONHASHSEED=hash_seed)
    root.mkdir()

    def cli(*args):
        subprocess.run([sys.executable, "-m", "mpspcrp.cli", *args], check=True, env=env, capture_output=True)

    inst = root / "2B.txt"
    cli("gen", "--family", "2B", "--seed", "3", "--out", str(inst))
    cli("hr2", str(inst), "--rounds", "300", "--seed", "4", "--plan", str(root / "2B.plan"))
    cli("warmstart", str(inst), str(root / "2B.plan"), "--out", str(root / "2B.start"), "--lp", str(root / "2B.lp"))
    cli("bench", "--suite", "small", "--seeds", "4", "--hr2-rounds", "300", "--no-timing",
        "--out", str(root / "small.csv"), "--artifacts", str(root / "art"))


def test_runs_are_byte_identical(verdict, tmp_path):
    first, second = tmp_path / "one", tmp_path / "two"
    _run_pipeline(first, "1")
    _run_pipeline(second, "2")
    # The manifests name their own run directory, so they are left out.
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file() and not p.name.endswith(".json"))
    other = sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file() and not p.name.endswith(".json"))
    differing = [str(p) for p in files if (first / p).read_bytes() != (second / p).read_bytes()]
    suffixes = sorted({p.suffix for p in files})
    ok = files == other and not differing and {".txt", ".plan", ".lp", ".start", ".csv"} <= set(suffixes)
    detail = f"{len(files)} files compared ({', '.join(suffixes)}), {len(differing)} differ"
    assert verdict(8, ok, detail), differing
