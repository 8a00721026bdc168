"""Two-stage decomposition: stow the ship first, then plan the yards around it."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

from ..core import Instance, MovePlan, RetrieveLoad, ShipRelocate, ShipState, StabilityFix, Unload
from ..oracle import OPTIMAL, SearchLimits, crp_stage, mpsp_stage, ship_pattern
from .check import check_assignment
from .lp import emit_lp
from .model import InfeasibleFixing, VarKey, build_crp_loading_model, build_model, build_mpsp_model, parse_var_name, var_name, var_sort_key
from .solver import run_solver
from .warmstart import HEADER, InconsistentSolution, parse_solution, plan_to_assignment, read_solution


@dataclass(frozen=True)
class HierarchicalResult:
    mpsp_objective: int
    crp_loading_objective: int
    fixed: frozenset[VarKey]
    plan: MovePlan
    status: str = OPTIMAL

    @property
    def total(self) -> int:
        return self.mpsp_objective + self.crp_loading_objective


class StageFailed(RuntimeError):
    pass


def ship_valuation(instance: Instance, plan: MovePlan | Sequence) -> frozenset[VarKey]:
    """The w and u variables at 1 for the ship side of ``plan``.

    Yard coordinates are ignored, so stowage schedules that retrieve
    containers freely are accepted.
    """
    dest = instance.destinations
    P = instance.ports
    ship = ShipState.empty(instance.ship_tiers, instance.ship_stacks, dest)
    ones: set[VarKey] = set()
    legs: dict[int, tuple[int, int, int]] = {}
    buffer: list[tuple[int, int, int]] = []
    port = 1

    def end(n: int, a: int) -> None:
        o, r, c = legs.pop(n)
        ones.add(("w", o, dest[n], a, r, c))

    def settle(p: int) -> None:
        for n, r2, c2 in sorted(buffer, key=lambda e: (e[1], e[2])):
            ship.push(c2, n, p)
            legs[n] = (p, r2, c2)
        buffer.clear()

    def close(p: int) -> None:
        settle(p)
        if p < P:
            for c, col in enumerate(ship.columns, 1):
                for r in range(1, len(col) + 1):
                    ones.add(("u", p, r, c))

    for m in plan:
        while m.port > port:
            close(port)
            port += 1
        if isinstance(m, Unload):
            ship.pop(m.c)
            end(m.container, m.port)
        elif isinstance(m, ShipRelocate):
            ship.pop(m.c)
            end(m.container, m.port)
            buffer.append((m.container, m.r2, m.c2))
        elif isinstance(m, RetrieveLoad):
            settle(m.port)
            ship.push(m.c, m.container, m.port)
            legs[m.container] = (m.port, m.r, m.c)
        elif isinstance(m, StabilityFix):
            settle(m.port)
            ship.pop(m.c)
            end(m.container, m.port)
            ship.push(m.c2, m.container, m.port)
            legs[m.container] = (m.port, m.r2, m.c2)
    while port <= P:
        close(port)
        port += 1
    for n in list(legs):
        end(n, dest[n])
    return frozenset(ones)


def solve_hierarchical(
    instance: Instance,
    limits: SearchLimits = SearchLimits(),
    verify: bool = True,
) -> HierarchicalResult:
    """Minimize ship relocations, freeze the resulting stowage, then minimize yard relocations.

    Both stages are solved exactly by the built-in search, so this is meant
    for tiny instances.  With ``verify`` the frozen w/u valuation is checked
    against the ship-side rows and the final plan against the yard-side model
    with that valuation fixed.
    """
    first = mpsp_stage(instance, limits)
    if first.plan is None:
        raise StageFailed("stage one found no stowage schedule")
    fixed = ship_valuation(instance, first.plan)
    if verify:
        report = check_assignment(build_mpsp_model(instance), fixed)
        if not report.feasible:
            raise InfeasibleFixing(f"stage-one schedule violates {report.violations[0]}")
    pattern = ship_pattern(instance, first.plan)
    second = crp_stage(instance, pattern, limits)
    if second.plan is None:
        raise StageFailed("stage two found no yard plan for the frozen stowage")
    if verify:
        stage_two = build_crp_loading_model(instance, fixed)
        full = plan_to_assignment(instance, second.plan)
        report = check_assignment(stage_two, full.restricted(stage_two))
        if not report.feasible:
            raise StageFailed(f"stage-two plan breaks the frozen stowage: {report.violations[0]}")
        if ship_valuation(instance, second.plan) != fixed:
            raise StageFailed("stage-two plan changed the ship-side valuation")
    status = first.status if first.status != OPTIMAL else second.status
    return HierarchicalResult(first.objective, second.objective, fixed, second.plan, status)


def _solver_ones(text: str, model) -> frozenset[VarKey]:
    values, _ = read_solution(text)
    ones = set()
    for name, val in values.items():
        key = parse_var_name(name)
        if val == 1 and model.has_variable(key):
            ones.add(key)
    return frozenset(ones)


def solve_hierarchical_external(
    instance: Instance,
    command: str,
    workdir: str,
    start: MovePlan | None = None,
    timeout: float | None = None,
) -> HierarchicalResult:
    """Both stages through an external solver command template.

    Stage one may be warm-started from the ship side of ``start``; stage two
    gets an empty start.  The combined valuation is turned back into a plan
    through the integrated model, so it must satisfy every row.
    """
    stage_one = build_mpsp_model(instance)
    lp1 = os.path.join(workdir, "stage1.lp")
    st1 = os.path.join(workdir, "stage1.start")
    emit_lp(stage_one, lp1)
    lines = [HEADER]
    if start is not None:
        lines += [f"{var_name(k)} 1" for k in sorted(ship_valuation(instance, start), key=var_sort_key)]
    with open(st1, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    fixed = _solver_ones(run_solver(command, lp1, st1, timeout), stage_one)
    report = check_assignment(stage_one, fixed)
    if not report.feasible:
        raise InfeasibleFixing(f"stage-one solution violates {report.violations[0]}")
    stage_two = build_crp_loading_model(instance, fixed)
    lp2 = os.path.join(workdir, "stage2.lp")
    st2 = os.path.join(workdir, "stage2.start")
    emit_lp(stage_two, lp2)
    with open(st2, "w") as fh:
        fh.write(HEADER + "\n")
    yard = _solver_ones(run_solver(command, lp2, st2, timeout), stage_two)
    full = build_model(instance, max_variables=None)
    listing = "\n".join(f"{var_name(k)} 1" for k in sorted(fixed | yard, key=var_sort_key))
    try:
        _, plan = parse_solution(full, listing)
    except InconsistentSolution as exc:
        raise StageFailed(f"stage solutions do not combine into a plan: {exc}") from None
    ship = report.objective
    return HierarchicalResult(ship, plan.objective - ship, fixed, plan, "Feasible")


__all__ = ["HierarchicalResult", "StageFailed", "ship_valuation", "solve_hierarchical", "solve_hierarchical_external"]
