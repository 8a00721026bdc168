"""Translation between move plans and model valuations, and the warm-start file format."""

from __future__ import annotations

import re
from collections import defaultdict
from typing import IO, Iterable

from ..core import (
    Instance,
    JourneyState,
    MovePlan,
    RetrieveLoad,
    ShipRelocate,
    ShipState,
    StabilityFix,
    Unload,
    YardRelocate,
    validate_plan,
)
from ..instances import write_atomic
from .check import Assignment, check_assignment
from .model import MilpModel, VarKey, build_model, parse_var_name, var_name

HEADER = "MPSPCRP-START v1"


class InvalidPlan(ValueError):
    pass


class InconsistentSolution(ValueError):
    pass


def plan_to_assignment(instance: Instance, plan: MovePlan, model: MilpModel | None = None) -> Assignment:
    """The valuation that describes ``plan`` in the integrated model."""
    report = validate_plan(instance, plan)
    if not report.ok:
        raise InvalidPlan(f"plan fails validation: {report.violations[0]}")
    if model is None:
        model = build_model(instance, max_variables=None)
    dest = instance.destinations
    P = instance.ports
    ones: set[VarKey] = set()
    legs: dict[int, tuple[int, int, int]] = {}  # container -> (start port, r, c)

    def snapshot(o: int, t: int, columns) -> None:
        for i, col in enumerate(columns, 1):
            for j, n in enumerate(col, 1):
                ones.add(("b", i, j, n, t, o))

    def end_leg(n: int, port: int) -> None:
        s, r, c = legs.pop(n)
        ones.add(("w", s, dest[n], port, r, c))

    def depart(o: int) -> None:
        for c, col in enumerate(state.ship.columns, 1):
            for r in range(1, len(col) + 1):
                ones.add(("u", o, r, c))

    state = JourneyState.initial(instance)
    for o in range(1, P):
        snapshot(o, 1, instance.yard(o).columns)

    def close() -> None:
        pending = [(n, r2, c2) for n, r2, c2 in state.buffer]
        state.close_port()
        for n, r2, c2 in pending:
            legs[n] = (state.port - 1, r2, c2)
            ones.add(("q", state.port - 1, dest[n], r2, c2))

    for m in plan:
        while state.port < m.port:
            p = state.port
            close()
            if p < P:
                depart(p)
        o = state.port
        if state.stage == "unload" and not isinstance(m, (Unload, ShipRelocate)):
            pending = list(state.buffer)
            state.settle_buffer()
            for n, r2, c2 in pending:
                legs[n] = (o, r2, c2)
                ones.add(("q", o, dest[n], r2, c2))
        kind = type(m)
        if kind is Unload:
            end_leg(m.container, o)
        elif kind is ShipRelocate:
            end_leg(m.container, o)
        elif kind is StabilityFix:
            end_leg(m.container, o)
            legs[m.container] = (o, m.r2, m.c2)
            ones.add(("q", o, dest[m.container], m.r2, m.c2))
        t = state.period + 1
        if kind is YardRelocate:
            ones.add(("x", m.i, m.j, m.k, m.l, m.container, t, o))
        elif kind is RetrieveLoad:
            T = instance.yard(o).count
            n = m.container
            ones.add(("y", m.i, m.j, n, t, o))
            for s in range(t + 1, T + 1):
                ones.add(("v", n, s, o))
            for s in range(t, T + 1):
                ones.add(("z", n, s, m.r, m.c))
            legs[n] = (o, m.r, m.c)
        state.apply(m)
        if kind is RetrieveLoad and t < instance.yard(o).count:
            snapshot(o, t + 1, state.yards[o - 1].columns)
    while not state.finished:
        p = state.port
        close()
        if p < P:
            depart(p)
    for n in list(legs):
        end_leg(n, dest[n])
    return Assignment(model, ones)


# -- warm-start files --------------------------------------------------------------


def emit_warm_start(assignment: Assignment, sink: str | IO[str] | None = None) -> str:
    """``MPSPCRP-START v1`` followed by one ``name 1`` line per nonzero, in model order."""
    lines = [HEADER]
    lines.extend(f"{var_name(key)} 1" for key in assignment.nonzero())
    text = "\n".join(lines) + "\n"
    if sink is not None:
        if isinstance(sink, str):
            write_atomic(sink, text)
        else:
            sink.write(text)
    return text


def read_warm_start(text: str) -> dict[str, int]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ValueError(f"missing {HEADER!r} header")
    out: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value'")
        out[parts[0]] = int(parts[1])
    return out


_PAIR = re.compile(r"([bvxyzqwu]\([0-9,]+\))\s+(-?[0-9.eE+-]+)")
_OBJ = re.compile(r"objective(?:\s+value)?\s*[:=]?\s*(-?[0-9.eE+-]+)", re.IGNORECASE)


def read_solution(text: str) -> tuple[dict[str, int], int | None]:
    """Pull ``name value`` pairs out of a solver's solution listing.

    Accepts the warm-start dialect, ``name value`` columns with extra fields
    (index, reduced cost) and an optional ``objective value`` line.  Values
    are rounded to the nearest integer.
    """
    values: dict[str, int] = {}
    declared = None
    for line in text.splitlines():
        if line.strip() == HEADER:
            continue
        m = _OBJ.search(line)
        if m and declared is None and not _PAIR.search(line):
            declared = round(float(m.group(1)))
            continue
        m = _PAIR.search(line)
        if m:
            try:
                values[m.group(1)] = round(float(m.group(2)))
            except ValueError:
                raise InconsistentSolution(f"unreadable value in line {line!r}") from None
    return values, declared


# -- solutions back to plans --------------------------------------------------------


def parse_solution(model: MilpModel, text: str) -> tuple[int, MovePlan]:
    """Rebuild the plan described by a solver solution of the integrated model.

    Raises InconsistentSolution when the valuation violates a row, when it
    describes a schedule outside the move vocabulary (such as a shift no
    unloading forces), or when a declared objective disagrees.
    """
    values, declared = read_solution(text)
    ones: set[VarKey] = set()
    for name, val in values.items():
        if val not in (0, 1):
            raise InconsistentSolution(f"{name} has non-binary value {val}")
        try:
            key = parse_var_name(name)
        except ValueError:
            raise InconsistentSolution(f"unknown variable {name}") from None
        if not model.has_variable(key):
            raise InconsistentSolution(f"unknown variable {name}")
        if val:
            ones.add(key)
    report = check_assignment(model, ones)
    if not report.feasible:
        raise InconsistentSolution(f"valuation violates {len(report.violations)} rows, first {report.violations[0]}")
    if declared is not None and declared != report.objective:
        raise InconsistentSolution(f"declared objective {declared} but valuation gives {report.objective}")
    plan = _rebuild(model.instance, ones)
    check = validate_plan(model.instance, plan)
    if not check.ok:
        raise InconsistentSolution(f"valuation has no plan in the move vocabulary: {check.violations[0]}")
    if plan.objective != report.objective:
        raise InconsistentSolution(f"plan has {plan.objective} relocations, valuation {report.objective}")
    return report.objective, plan


def _rebuild(instance: Instance, ones: Iterable[VarKey]) -> MovePlan:
    P = instance.ports
    dest = instance.destinations
    ends: dict[int, dict[tuple[int, int], int]] = defaultdict(dict)  # port -> slot -> dest
    reloads: dict[int, list[tuple[int, int, int]]] = defaultdict(list)  # port -> (d, r, c)
    retrieve: dict[tuple[int, int], tuple[int, int, int]] = {}  # (o, t) -> (n, i, j)
    relocs: dict[tuple[int, int], list[tuple[int, int, int, int, int]]] = defaultdict(list)
    final: dict[int, tuple[int, int]] = {}
    for key in ones:
        fam = key[0]
        if fam == "w":
            _, o, d, a, r, c = key
            ends[a][(r, c)] = d
        elif fam == "q":
            _, o, d, r, c = key
            reloads[o].append((d, r, c))
        elif fam == "y":
            _, i, j, n, t, o = key
            retrieve[(o, t)] = (n, i, j)
        elif fam == "x":
            _, i, j, k, l, n, t, o = key
            relocs[(o, t)].append((j, i, k, l, n))
        elif fam == "z":
            _, n, t, r, c = key
            if t == instance.yard(instance.origin(n)).count:
                final[n] = (r, c)

    ship = ShipState.empty(instance.ship_tiers, instance.ship_stacks, dest)
    moves: list = []
    for p in range(1, P + 1):
        limit = instance.limit(p) if p < P else instance.ship_tiers
        ending = ends.get(p, {})
        # which q slots can take a container before loading starts
        staying = {
            (r, c)
            for c, col in enumerate(ship.columns, 1)
            for r in range(1, len(col) + 1)
            if (r, c) not in ending
        }
        early = set()
        for d, r, c in sorted(reloads.get(p, []), key=lambda e: (e[1], e[2])):
            if r == 1 or (r - 1, c) in staying or (r - 1, c) in early:
                early.add((r, c))
        open_slots: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for d, r, c in reloads.get(p, []):
            open_slots[d].append((r, c))
        for d in open_slots:
            open_slots[d].sort(key=lambda rc: ((rc not in early), rc))

        # unloading stage: strip the top segment of every stack whose legs end here
        deferred: list[int] = []
        buffer: list[tuple[int, int, int]] = []
        for c in range(1, ship.stacks + 1):
            col = ship.columns[c - 1]
            seg = 0
            while seg < len(col) and (len(col) - seg, c) in ending:
                seg += 1
            base = len(col) - seg
            for r in range(base + 1, len(col) + 1):
                if ending[(r, c)] != dest[col[r - 1]]:
                    raise InconsistentSolution(f"slot ({r},{c}) holds a container for {dest[col[r - 1]]}, leg says {ending[(r, c)]}")
            lowest_o = next((r for r in range(base + 1, len(col) + 1) if dest[col[r - 1]] == p), None)
            while lowest_o is not None and len(col) >= lowest_o:
                r = len(col)
                n = col[-1]
                d = dest[n]
                ship.pop(c)
                if d == p:
                    moves.append(Unload(p, n, r, c))
                    continue
                slots = [s for s in open_slots.get(d, []) if s in early]
                if not slots:
                    raise InconsistentSolution(f"no reload slot for shifted container {n} at port {p}")
                r2, c2 = slots[0]
                open_slots[d].remove((r2, c2))
                moves.append(ShipRelocate(p, n, r, c, r2, c2))
                buffer.append((n, r2, c2))
            deferred.extend(col[base:])
        for n, r2, c2 in sorted(buffer, key=lambda e: (e[1], e[2])):
            ship.push(c2, n, p)
        if p == P:
            break

        # loading stage
        T = instance.yard(p).count
        for t in range(1, T + 1):
            for j, i, k, l, n in sorted(relocs.get((p, t), []), reverse=True):
                moves.append(YardRelocate(p, n, i, j, k, l))
            if (p, t) not in retrieve:
                raise InconsistentSolution(f"no retrieval in period {t} of port {p}")
            n, i, j = retrieve[(p, t)]
            r, c = final[n]
            moves.append(RetrieveLoad(p, n, i, j, r, c))
            ship.push(c, n, p)

        # stability fixes for legs that end here without an unloading reason
        pending = list(deferred)
        while pending:
            progress = False
            for n in list(pending):
                c = next(c for c, col in enumerate(ship.columns, 1) if n in col)
                col = ship.columns[c - 1]
                if col[-1] != n:
                    continue
                d = dest[n]
                target = None
                for r2, c2 in open_slots.get(d, []):
                    if c2 != c and ship.height(c2) == r2 - 1:
                        target = (r2, c2)
                        break
                if target is None:
                    continue
                r = len(col)
                open_slots[d].remove(target)
                ship.pop(c)
                ship.push(target[1], n, p)
                moves.append(StabilityFix(p, n, r, c, target[0], target[1]))
                pending.remove(n)
                progress = True
            if not progress:
                raise InconsistentSolution(f"legs ending at port {p} cannot be scheduled as stability fixes")
    return MovePlan(tuple(moves))


__all__ = [
    "HEADER",
    "InconsistentSolution",
    "InvalidPlan",
    "emit_warm_start",
    "parse_solution",
    "plan_to_assignment",
    "read_solution",
    "read_warm_start",
]
