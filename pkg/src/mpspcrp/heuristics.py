"""Constructive stowage heuristics.

HR1 loads yard tops farthest-destination first and puts each container on the
stack whose nearest destination is the tightest one not earlier than its own;
when no such stack exists it picks the stack whose nearest destination is the
latest, postponing the forced shift as long as possible.  HR2 replaces that
fallback with a uniform random choice and keeps the best of many rounds.

Neither heuristic relocates containers in the yards.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from .core import (
    Instance,
    MovePlan,
    RetrieveLoad,
    ShipRelocate,
    ShipState,
    StabilityFix,
    Unload,
)

StackScore = tuple[int, ...]


class NoCapacity(RuntimeError):
    """Every ship stack is at the height limit."""


class Infeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class HeuristicRun:
    method: str
    best_plan: MovePlan
    best_objective: int
    seed: int | None = None
    rounds: int = 0
    time_budget: float | None = None
    rounds_executed: int = 0
    best_round: int = 0


def score_stacks(ship: ShipState, P: int, limit: int) -> StackScore:
    """Nearest destination per stack; ``P + 1`` when empty, 0 at the height limit."""
    cap = min(limit, ship.tiers)
    out = []
    for col, mins in zip(ship.columns, ship.minima):
        if len(col) >= cap:
            out.append(0)
        elif not col:
            out.append(P + 1)
        else:
            out.append(mins[-1])
    return tuple(out)


def _fitting(scores: Sequence[int], dest: int) -> int | None:
    best = None
    for c, s in enumerate(scores):
        if s >= dest and (best is None or s < scores[best]):
            best = c
    return None if best is None else best + 1


def select_stack_hr1(scores: Sequence[int], dest: int) -> int:
    """Stack index (1-based) chosen by the deterministic rule.

    >>> select_stack_hr1((4, 4, 5, 3), 5)
    3
    >>> select_stack_hr1((4, 4, 5, 3), 6)
    3
    >>> select_stack_hr1((6, 6), 2)
    1
    """
    c = _fitting(scores, dest)
    if c is not None:
        return c
    best = None
    for idx, s in enumerate(scores):
        if s > 0 and (best is None or s > scores[best]):
            best = idx
    if best is None:
        raise NoCapacity("all stacks are at the height limit")
    return best + 1


def select_stack_hr2(scores: Sequence[int], dest: int, rng: random.Random) -> int:
    c = _fitting(scores, dest)
    if c is not None:
        return c
    open_stacks = [idx for idx, s in enumerate(scores) if s > 0]
    if not open_stacks:
        raise NoCapacity("all stacks are at the height limit")
    return open_stacks[rng.randrange(len(open_stacks))] + 1


Chooser = Callable[[Sequence[int], int], int]


def construct(instance: Instance, choose: Chooser, bound: int | None = None) -> MovePlan | None:
    """Build a plan with the HR1 skeleton and stack rule ``choose``.

    Returns None as soon as the relocation count reaches ``bound``.
    """
    P = instance.ports
    dest = instance.destinations
    ship = ShipState.empty(instance.ship_tiers, instance.ship_stacks, dest)
    moves: list = []
    cost = 0

    def place(n: int, limit: int) -> int:
        scores = score_stacks(ship, P, limit)
        try:
            c = choose(scores, dest[n])
        except NoCapacity:
            raise Infeasible(f"no stack below the height limit {limit} for container {n}") from None
        return c

    for p in range(1, P + 1):
        limit = instance.limit(p)
        if p > 1:
            lifted: list[tuple[int, int, int]] = []  # (container, tier, stack)
            slots: list[int] = []
            for c in range(1, ship.stacks + 1):
                col = ship.columns[c - 1]
                mins = ship.minima[c - 1]
                while col and mins[-1] == p:
                    r = len(col)
                    n = ship.pop(c)
                    if dest[n] == p:
                        moves.append(Unload(p, n, r, c))
                    else:
                        slots.append(len(moves))
                        moves.append(None)
                        lifted.append((n, r, c))
            cost += len(lifted)
            if bound is not None and cost >= bound:
                return None
            order = sorted(range(len(lifted)), key=lambda k: (-dest[lifted[k][0]], k))
            for k in order:
                n, r, c = lifted[k]
                c2 = place(n, limit)
                r2 = ship.height(c2) + 1
                ship.push(c2, n, p)
                moves[slots[k]] = ShipRelocate(p, n, r, c, r2, c2)
        if p == P:
            break
        cols = [list(col) for col in instance.yard(p).columns]
        remaining = sum(len(col) for col in cols)
        while remaining:
            best_i = 0
            best_key = None
            for i, col in enumerate(cols):
                if col:
                    n = col[-1]
                    key = (dest[n], -n)
                    if best_key is None or key > best_key:
                        best_key, best_i = key, i
            col = cols[best_i]
            n = col.pop()
            c = place(n, limit)
            r = ship.height(c) + 1
            moves.append(RetrieveLoad(p, n, best_i + 1, len(col) + 1, r, c))
            ship.push(c, n, p)
            remaining -= 1
        for c in range(1, ship.stacks + 1):
            while ship.height(c) > limit:
                r = ship.height(c)
                n = ship.pop(c)
                c2 = place(n, limit)
                r2 = ship.height(c2) + 1
                moves.append(StabilityFix(p, n, r, c, r2, c2))
                ship.push(c2, n, p)
                cost += 1
                if bound is not None and cost >= bound:
                    return None
    return MovePlan(tuple(moves))


def hr1(instance: Instance) -> HeuristicRun:
    plan = construct(instance, select_stack_hr1)
    assert plan is not None
    return HeuristicRun("HR1", plan, plan.objective)


def round_seed(seed: int, k: int) -> int:
    return seed ^ k


def _hr2_round(instance: Instance, seed: int, k: int, bound: int | None) -> MovePlan | None:
    rng = random.Random(round_seed(seed, k))
    return construct(instance, lambda scores, d: select_stack_hr2(scores, d, rng), bound)


def _hr2_batch(args) -> list[tuple[int, MovePlan | None]]:
    instance, seed, ks, bound = args
    out = []
    for k in ks:
        plan = _hr2_round(instance, seed, k, bound)
        if plan is not None and plan.objective < bound:
            bound = plan.objective
        out.append((k, plan))
        if bound == 0:
            break
    return out


def hr2(
    instance: Instance,
    rounds: int = 10000,
    time_budget: float | None = None,
    seed: int = 0,
    workers: int = 1,
) -> HeuristicRun:
    """Best of HR1 and ``rounds`` randomized constructions.

    Round ``k`` (1-based) draws from ``random.Random(seed ^ k)``.  A round is
    abandoned once it can no longer beat the incumbent, and the search stops
    early at objective 0.  Ties keep the earlier round, with HR1 as round 0.
    """
    start = time.perf_counter()
    incumbent = hr1(instance).best_plan
    best_round = 0
    executed = 0
    if incumbent.objective > 0 and rounds > 0:
        if workers > 1:
            incumbent, best_round, executed = _hr2_parallel(instance, rounds, time_budget, seed, workers, incumbent, start)
        else:
            for k in range(1, rounds + 1):
                if time_budget is not None and time.perf_counter() - start >= time_budget:
                    break
                plan = _hr2_round(instance, seed, k, incumbent.objective)
                executed = k
                if plan is not None and plan.objective < incumbent.objective:
                    incumbent, best_round = plan, k
                    if plan.objective == 0:
                        break
    return HeuristicRun("HR2", incumbent, incumbent.objective, seed, rounds, time_budget, executed, best_round)


def _hr2_parallel(instance, rounds, time_budget, seed, workers, incumbent, start):
    # Batches are reduced in round order, so the result does not depend on
    # which worker finishes first.
    best_round = 0
    executed = 0
    batch = max(1, min(500, rounds // (workers * 4) or 1))
    ks = list(range(1, rounds + 1))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pos = 0
        while pos < len(ks):
            if time_budget is not None and time.perf_counter() - start >= time_budget:
                break
            chunks = [ks[pos + w * batch : pos + (w + 1) * batch] for w in range(workers)]
            chunks = [c for c in chunks if c]
            pos += sum(len(c) for c in chunks)
            bound = incumbent.objective
            results = pool.map(_hr2_batch, [(instance, seed, c, bound) for c in chunks])
            for chunk_result in results:
                for k, plan in chunk_result:
                    executed = max(executed, k)
                    if plan is not None and plan.objective < incumbent.objective:
                        incumbent, best_round = plan, k
            if incumbent.objective == 0:
                break
    return incumbent, best_round, executed


__all__ = [
    "HeuristicRun",
    "Infeasible",
    "NoCapacity",
    "StackScore",
    "construct",
    "hr1",
    "hr2",
    "round_seed",
    "score_stacks",
    "select_stack_hr1",
    "select_stack_hr2",
]
