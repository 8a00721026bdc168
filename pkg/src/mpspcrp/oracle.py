"""Exact depth-first branch-and-bound over the plan space accepted by the validator.

At each port the decisions are, in order:

1. unloading, which is forced: every stack holding a container for this port is
   lifted top-down, blockers going to the buffer;
2. the ship stack (below the height limit) of every buffered container, one at
   a time in any order;
3. per loading period, the container to retrieve (any container with its
   blockers relocated to chosen stacks, or only tops) and its ship stack;
4. once the yard is empty, the target of every container still above the
   height limit, again one at a time in any order.

Children are tried in lexicographic order of the moves they emit and the
incumbent is replaced only by strictly cheaper plans, so the result is the
first optimal plan in that order.  Nodes are pruned when the cost so far
reaches the incumbent or when the same state was reached no more cheaply.
States are compared by destinations only, because two containers with the
same destination are interchangeable for every future cost.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

from .core import (
    Instance,
    MovePlan,
    RetrieveLoad,
    ShipRelocate,
    ShipState,
    StabilityFix,
    Unload,
    YardRelocate,
    validate_plan,
)
from .heuristics import hr1

OPTIMAL = "Optimal"
BOUND = "Bound"
EXHAUSTED = "Exhausted"

# Ship layout at each departure: per stack, bottom-first (destination, port where the leg began).
Pattern = Mapping[int, tuple[tuple[tuple[int, int], ...], ...]]


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int = 5_000_000
    time_budget: float = 300.0
    tops_only: bool = False
    max_containers: int = 8

    def __post_init__(self) -> None:
        if self.max_nodes <= 0 or self.time_budget <= 0:
            raise ValueError("search budgets must be positive")


@dataclass(frozen=True)
class OracleResult:
    status: str
    objective: int | None
    plan: MovePlan | None
    lower_bound: int = 0
    nodes: int = 0


class _Abort(Exception):
    pass


def _move_key(m) -> tuple:
    return (m.code, *m.values())


class _Search:
    def __init__(
        self,
        instance: Instance,
        *,
        tops_only: bool = False,
        yard_free: bool = False,
        pattern: Pattern | None = None,
        prune: bool = True,
        max_nodes: int | None = None,
        deadline: float | None = None,
        bound: float = float("inf"),
    ):
        self.inst = instance
        self.P = instance.ports
        self.C = instance.ship_stacks
        self.dest = instance.destinations
        self.limit = {p: instance.limit(p) for p in range(1, self.P + 1)}
        self.tops_only = tops_only
        self.yard_free = yard_free
        self.pattern = pattern
        self.prune = prune
        self.max_nodes = max_nodes
        self.deadline = deadline
        self.best_cost = bound
        self.best_moves: list | None = None
        self.table: dict = {}
        self.nodes = 0
        self.aborted = False
        self.origin_pos = {}
        for o, yard in enumerate(instance.yards, 1):
            for i, col in enumerate(yard.columns, 1):
                for j, n in enumerate(col, 1):
                    self.origin_pos[n] = (i, j)

    # -- driver ---------------------------------------------------------------

    def run(self) -> None:
        try:
            self._arrive(1, tuple(() for _ in range(self.C)), 0, None)
        except _Abort:
            self.aborted = True

    def _enter(self, key, cost: int) -> bool:
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise _Abort
        if self.deadline is not None and self.nodes % 1024 == 0 and time.perf_counter() > self.deadline:
            raise _Abort
        if not self.prune:
            return True
        if cost >= self.best_cost:
            return False
        prev = self.table.get(key)
        if prev is not None and prev <= cost:
            return False
        self.table[key] = cost
        return True

    def _leaf(self, cost: int, trail) -> None:
        if cost < self.best_cost:
            self.best_cost = cost
            moves = []
            while trail is not None:
                chunk, trail = trail
                moves.append(chunk)
            self.best_moves = [m for chunk in reversed(moves) for m in chunk]

    def _ship_key(self, ship) -> tuple:
        dest = self.dest
        return tuple(tuple(dest[n] for n in col) for col in ship)

    def _allowed(self, p: int, n: int, r: int, c: int) -> bool:
        if self.pattern is None:
            return True
        col = self.pattern[p][c - 1]
        return r <= len(col) and col[r - 1] == (self.dest[n], p)

    # -- phases ---------------------------------------------------------------

    def _arrive(self, p: int, ship, cost: int, trail) -> None:
        dest = self.dest
        seq: list = []
        lifted: list[int] = []
        if p > 1:
            cols = [list(col) for col in ship]
            for c, col in enumerate(cols, 1):
                while col and any(dest[n] == p for n in col):
                    r = len(col)
                    n = col.pop()
                    if dest[n] == p:
                        seq.append(Unload(p, n, r, c))
                    else:
                        seq.append((n, r, c))
                        lifted.append(n)
            ship = tuple(tuple(col) for col in cols)
            cost += len(lifted)
        if p == self.P:
            self._leaf(cost, (tuple(seq), trail) if seq else trail)
            return
        if self.yard_free:
            yard = tuple(sorted(self.inst.yard(p).containers))
        else:
            yard = self.inst.yard(p).columns
        buffer = tuple(sorted(lifted, key=lambda n: (dest[n], n)))
        self._reload(p, ship, yard, buffer, tuple(seq), (), cost, trail)

    def _yard_key(self, yard) -> tuple:
        dest = self.dest
        if self.yard_free:
            return tuple(dest[n] for n in yard)
        return tuple(tuple(dest[n] for n in col) for col in yard)

    def _reload(self, p, ship, yard, buffer, seq, placed, cost, trail) -> None:
        if not buffer:
            if seq:
                where = {n: (r2, c2) for n, r2, c2 in placed}
                chunk = tuple(
                    m if isinstance(m, Unload) else ShipRelocate(p, m[0], m[1], m[2], *where[m[0]]) for m in seq
                )
                trail = (chunk, trail)
            self._load(p, ship, yard, cost, trail)
            return
        key = (p, 0, self._yard_key(yard), self._ship_key(ship), tuple(self.dest[n] for n in buffer))
        if not self._enter(key, cost):
            return
        limit = self.limit[p]
        options = []
        seen = set()
        for n in buffer:
            d = self.dest[n]
            if d in seen:
                continue
            seen.add(d)
            for c in range(self.C):
                r = len(ship[c]) + 1
                if r <= limit and self._allowed(p, n, r, c + 1):
                    options.append((n, r, c + 1))
        options.sort()
        for n, r, c in options:
            new_ship = ship[: c - 1] + (ship[c - 1] + (n,),) + ship[c:]
            rest = tuple(x for x in buffer if x != n)
            self._reload(p, new_ship, yard, rest, seq, placed + ((n, r, c),), cost, trail)

    def _load(self, p, ship, yard, cost, trail) -> None:
        if not any(yard):
            self._fix(p, ship, cost, trail)
            return
        key = (p, 1, self._yard_key(yard), self._ship_key(ship))
        if not self._enter(key, cost):
            return
        limit = self.limit[p]
        targets = [c + 1 for c in range(self.C) if len(ship[c]) < limit]
        children = []
        for yard_moves, n, i, j, new_yard in self._retrievals(p, yard):
            for c in targets:
                r = len(ship[c - 1]) + 1
                if not self._allowed(p, n, r, c):
                    continue
                chunk = yard_moves + (RetrieveLoad(p, n, i, j, r, c),)
                children.append((tuple(_move_key(m) for m in chunk), chunk, new_yard, n, c, len(yard_moves)))
        children.sort(key=lambda ch: ch[0])
        for _, chunk, new_yard, n, c, relocs in children:
            new_ship = ship[: c - 1] + (ship[c - 1] + (n,),) + ship[c:]
            self._load(p, new_ship, new_yard, cost + relocs, (chunk, trail))

    def _retrievals(self, p, yard):
        """Yield (relocation moves, container, stack, tier, yard after retrieval)."""
        if self.yard_free:
            seen = set()
            for idx, n in enumerate(yard):
                d = self.dest[n]
                if d in seen:
                    continue
                seen.add(d)
                i, j = self.origin_pos[n]
                yield (), n, i, j, yard[:idx] + yard[idx + 1 :]
            return
        H = self.inst.yard(p).tiers
        W = len(yard)
        for i, col in enumerate(yard, 1):
            if not col:
                continue
            first = len(col) - 1 if self.tops_only else 0
            for pos in range(first, len(col)):
                n = col[pos]
                blockers = col[pos + 1 :][::-1]
                if not blockers:
                    new_yard = yard[: i - 1] + (col[:pos],) + yard[i:]
                    yield (), n, i, pos + 1, new_yard
                    continue
                others = [k for k in range(1, W + 1) if k != i]
                for choice in product(others, repeat=len(blockers)):
                    heights = [len(c) for c in yard]
                    ok = True
                    moves = []
                    for b, k in zip(blockers, choice):
                        if heights[k - 1] >= H:
                            ok = False
                            break
                        heights[k - 1] += 1
                        moves.append(YardRelocate(p, b, i, heights[i - 1], k, heights[k - 1]))
                        heights[i - 1] -= 1
                    if not ok:
                        continue
                    cols = [list(c) for c in yard]
                    for b, k in zip(blockers, choice):
                        cols[i - 1].pop()
                        cols[k - 1].append(b)
                    cols[i - 1].pop()
                    yield tuple(moves), n, i, pos + 1, tuple(tuple(c) for c in cols)

    def _fix(self, p, ship, cost, trail) -> None:
        limit = self.limit[p]
        over = [c for c in range(self.C) if len(ship[c]) > limit]
        if not over:
            self._arrive(p + 1, ship, cost, trail)
            return
        key = (p, 2, self._ship_key(ship))
        if not self._enter(key, cost):
            return
        children = []
        for c in over:
            n = ship[c][-1]
            r = len(ship[c])
            for c2 in range(self.C):
                r2 = len(ship[c2]) + 1
                if r2 <= limit and self._allowed(p, n, r2, c2 + 1):
                    children.append(StabilityFix(p, n, r, c + 1, r2, c2 + 1))
        children.sort(key=_move_key)
        for m in children:
            cols = list(ship)
            cols[m.c - 1] = cols[m.c - 1][:-1]
            cols[m.c2 - 1] = cols[m.c2 - 1] + (m.container,)
            self._fix(p, tuple(cols), cost + 1, ((m,), trail))


def _check_size(instance: Instance, cap: int) -> None:
    if instance.size > cap:
        raise InstanceTooLarge(f"{instance.size} containers exceed the search cap of {cap}")


def exact_optimum(instance: Instance, limits: SearchLimits = SearchLimits()) -> OracleResult:
    _check_size(instance, limits.max_containers)
    upper = hr1(instance).best_plan
    search = _Search(
        instance,
        tops_only=limits.tops_only,
        max_nodes=limits.max_nodes,
        deadline=time.perf_counter() + limits.time_budget,
        bound=upper.objective + 1,
    )
    search.run()
    if search.best_moves is not None:
        plan = MovePlan(tuple(search.best_moves))
    else:
        plan = None
    if not search.aborted:
        assert plan is not None, "search space contains the HR1 plan"
        return OracleResult(OPTIMAL, plan.objective, plan, plan.objective, search.nodes)
    if plan is None:
        plan = upper
    return OracleResult(BOUND, plan.objective, plan, 0, search.nodes)


def exhaustive_check(instance: Instance, cap: int = 5) -> int:
    """Minimum objective by unpruned enumeration; meant for certifying the pruned search."""
    _check_size(instance, cap)
    search = _Search(instance, prune=False)
    search.run()
    assert search.best_moves is not None
    return int(search.best_cost)


def ship_pattern(instance: Instance, plan: MovePlan | Sequence) -> dict[int, tuple]:
    """Departure layout of every port, replaying only the ship side of ``plan``.

    Each stack is a bottom-first tuple of ``(destination, boarding port)``.
    Yard coordinates in the plan are ignored.
    """
    dest = instance.destinations
    ship = ShipState.empty(instance.ship_tiers, instance.ship_stacks, dest)
    buffer: list[tuple[int, int, int, int]] = []
    out: dict[int, tuple] = {}
    port = 1

    def settle(p: int) -> None:
        for n, r2, c2, _ in sorted(buffer, key=lambda e: (e[1], e[2])):
            ship.push(c2, n, p)
        buffer.clear()

    def close(p: int) -> None:
        settle(p)
        out[p] = tuple(tuple((dest[n], ship.boarded[n]) for n in col) for col in ship.columns)

    for m in plan:
        while m.port > port:
            close(port)
            port += 1
        if isinstance(m, Unload):
            ship.pop(m.c)
        elif isinstance(m, ShipRelocate):
            ship.pop(m.c)
            buffer.append((m.container, m.r2, m.c2, m.port))
        elif isinstance(m, RetrieveLoad):
            settle(m.port)
            ship.push(m.c, m.container, m.port)
        elif isinstance(m, StabilityFix):
            settle(m.port)
            ship.pop(m.c)
            ship.push(m.c2, m.container, m.port)
    while port < instance.ports:
        close(port)
        port += 1
    return out


@dataclass(frozen=True)
class StageResult:
    status: str
    objective: int | None
    plan: MovePlan | None


def mpsp_stage(instance: Instance, limits: SearchLimits = SearchLimits()) -> StageResult:
    """Ship-side optimum with free access to yard containers.

    The returned plan retrieves containers straight from their initial slots
    in any order, so it is a stowage schedule rather than a valid plan; its
    objective counts ship shifts and stability fixes only.
    """
    _check_size(instance, limits.max_containers)
    upper = hr1(instance).best_plan
    search = _Search(
        instance,
        yard_free=True,
        max_nodes=limits.max_nodes,
        deadline=time.perf_counter() + limits.time_budget,
        bound=upper.ship_relocations + 1,
    )
    search.run()
    if search.best_moves is None:
        return StageResult(EXHAUSTED, None, None)
    plan = MovePlan(tuple(search.best_moves))
    return StageResult(BOUND if search.aborted else OPTIMAL, plan.ship_relocations, plan)


def crp_stage(instance: Instance, pattern: Pattern, limits: SearchLimits = SearchLimits()) -> StageResult:
    """Minimum yard relocations among plans whose departures reproduce ``pattern``."""
    _check_size(instance, limits.max_containers)
    search = _Search(
        instance,
        tops_only=limits.tops_only,
        pattern=pattern,
        max_nodes=limits.max_nodes,
        deadline=time.perf_counter() + limits.time_budget,
    )
    search.run()
    if search.best_moves is None:
        return StageResult(EXHAUSTED, None, None)
    plan = MovePlan(tuple(search.best_moves))
    return StageResult(BOUND if search.aborted else OPTIMAL, plan.yard_relocations, plan)


def certify(result: OracleResult, instance: Instance) -> bool:
    return result.plan is not None and validate_plan(instance, result.plan).ok


__all__ = [
    "BOUND",
    "EXHAUSTED",
    "OPTIMAL",
    "InstanceTooLarge",
    "OracleResult",
    "SearchLimits",
    "StageResult",
    "crp_stage",
    "exact_optimum",
    "exhaustive_check",
    "mpsp_stage",
    "ship_pattern",
]
