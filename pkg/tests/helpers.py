"""Shared test utilities: a random walk over legal plans and small fixtures."""

from __future__ import annotations

import itertools
import random

from mpspcrp.core import (
    Instance,
    MovePlan,
    RetrieveLoad,
    ShipRelocate,
    ShipState,
    StabilityFix,
    Unload,
    YardRelocate,
)


def random_plan(instance: Instance, rng: random.Random) -> MovePlan:
    """A uniformly wandering legal plan: random retrieval order, random targets."""
    P = instance.ports
    R = instance.ship_tiers
    dest = instance.destinations
    ship = ShipState.empty(R, instance.ship_stacks, dest)
    moves: list = []
    for p in range(1, P + 1):
        limit = instance.limit(p) if p < P else R
        if p > 1:
            lifted = []
            for c in range(1, ship.stacks + 1):
                col = ship.columns[c - 1]
                while col and ship.minima[c - 1][-1] == p:
                    r = len(col)
                    n = ship.pop(c)
                    if dest[n] == p:
                        moves.append(Unload(p, n, r, c))
                    else:
                        lifted.append((len(moves), n, r, c))
                        moves.append(None)
            extra = [0] * ship.stacks
            placed = []
            for slot, n, r, c in lifted:
                open_ = [k for k in range(ship.stacks) if ship.height(k + 1) + extra[k] < limit]
                k = rng.choice(open_)
                extra[k] += 1
                r2 = ship.height(k + 1) + extra[k]
                moves[slot] = ShipRelocate(p, n, r, c, r2, k + 1)
                placed.append((r2, k + 1, n))
            for r2, c2, n in sorted(placed):
                ship.push(c2, n, p)
        if p == P:
            break
        spec = instance.yard(p)
        cols = [list(col) for col in spec.columns]
        while any(cols):
            i = rng.choice([k for k, col in enumerate(cols) if col])
            col = cols[i]
            depth = rng.randrange(len(col))
            target = col[depth]
            while col[-1] != target:
                n = col.pop()
                room = [k for k, other in enumerate(cols) if k != i and len(other) < spec.tiers]
                k = rng.choice(room)
                moves.append(YardRelocate(p, n, i + 1, len(col) + 1, k + 1, len(cols[k]) + 1))
                cols[k].append(n)
            col.pop()
            open_ = [c for c in range(1, ship.stacks + 1) if ship.height(c) < limit]
            c = rng.choice(open_)
            moves.append(RetrieveLoad(p, target, i + 1, depth + 1, ship.height(c) + 1, c))
            ship.push(c, target, p)
        for c in range(1, ship.stacks + 1):
            while ship.height(c) > limit:
                r = ship.height(c)
                n = ship.pop(c)
                open_ = [k for k in range(1, ship.stacks + 1) if k != c and ship.height(k) < limit]
                c2 = rng.choice(open_)
                moves.append(StabilityFix(p, n, r, c, ship.height(c2) + 1, c2))
                ship.push(c2, n, p)
    return MovePlan(tuple(moves))


def expected_variables(inst):
    """Index sets written out directly from the variable definitions."""
    P, R, C = inst.ports, inst.ship_tiers, inst.ship_stacks
    out = set()
    for n in inst.containers:
        o = inst.origin(n)
        y = inst.yard(o)
        slots = [(i, j) for i in range(1, y.stacks + 1) for j in range(1, y.tiers + 1)]
        for t in range(1, y.count + 1):
            out.add(("v", n, t, o))
            for i, j in slots:
                out.add(("b", i, j, n, t, o))
                out.add(("y", i, j, n, t, o))
                for k, l in slots:
                    out.add(("x", i, j, k, l, n, t, o))
            for r in range(1, R + 1):
                for c in range(1, C + 1):
                    out.add(("z", n, t, r, c))
    for o, d in itertools.combinations(range(1, P + 1), 2):
        for r in range(1, R + 1):
            for c in range(1, C + 1):
                out.add(("q", o, d, r, c))
                for a in range(o + 1, d + 1):
                    out.add(("w", o, d, a, r, c))
    for o in range(1, P):
        for r in range(1, R + 1):
            for c in range(1, C + 1):
                out.add(("u", o, r, c))
    return out
