"""The integrated binary model, built lazily family by family.

Variables are keyed by tuples ``(family, *index)`` and named
``family(i1,i2,...)``::

    b(i,j,n,t,o)  container n at yard slot (i,j) at the start of period t
    v(n,t,o)      n left the yard in a period before t
    x(i,j,k,l,n,t,o)  n relocated from (i,j) to (k,l) in period t
    y(i,j,n,t,o)  n retrieved from (i,j) in period t
    z(n,t,r,c)    n aboard at (r,c) from period t on
    q(o,d,r,c)    a shifted container for d put back at (r,c) in port o
    w(o,d,a,r,c)  a leg from o to a at (r,c) of a container for d
    u(o,r,c)      (r,c) occupied when leaving o

Row families are numbered 0..23.  Family 0 fixes the initial yard layout;
families 1..23 follow the printed formulation with two repairs: the period
counter reads ``sum_n v(n,t) = t - 1`` and the relocation guard of family 7
is keyed on the retrieval ``y`` rather than the occupancy ``b``.  Periods are
local to each port, ``T_o = N_o``.  Row indices are the quantifier tuples in
printed order with the port last; rows are produced in lexicographic index
order within a family, and variables in lexicographic order within a
family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from ..core import Instance, derive_flow

VAR_FAMILIES = ("b", "v", "x", "y", "z", "q", "w", "u")
_RANK = {f: k for k, f in enumerate(VAR_FAMILIES)}
YARD_SIDE = ("b", "v", "x", "y", "z", "q")
SHIP_SIDE = ("w", "u")

VarKey = tuple  # ("x", i, j, k, l, n, t, o)

SENSES = ("<=", ">=", "=")


class ModelTooLarge(ValueError):
    pass


class InfeasibleFixing(ValueError):
    pass


def var_name(key: VarKey) -> str:
    return f"{key[0]}({','.join(map(str, key[1:]))})"


def parse_var_name(name: str) -> VarKey:
    fam, sep, rest = name.partition("(")
    if not sep or not rest.endswith(")") or fam not in _RANK:
        raise ValueError(f"not a model variable name: {name!r}")
    try:
        return (fam, *(int(v) for v in rest[:-1].split(",")))
    except ValueError:
        raise ValueError(f"not a model variable name: {name!r}") from None


def var_sort_key(key: VarKey) -> tuple:
    return (_RANK[key[0]], key[1:])


@dataclass(frozen=True)
class Row:
    family: int
    index: tuple[int, ...]
    terms: tuple[tuple[VarKey, int], ...]
    sense: str
    rhs: int

    @property
    def name(self) -> str:
        return "eq" + "_".join(map(str, (self.family, *self.index)))

    def holds(self, lhs: int) -> bool:
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class _Yard:
    o: int
    W: int
    H: int
    T: int
    omega: tuple[int, ...]
    start: Mapping[int, tuple[int, int]]


@dataclass(frozen=True)
class ModelShape:
    """Dimensions that determine the model size: ``yards`` holds ``(H, W, N)`` per origin port."""

    ports: int
    ship_tiers: int
    ship_stacks: int
    yards: tuple[tuple[int, int, int], ...]
    stability_rows: int = 0

    @classmethod
    def of(cls, instance: Instance) -> "ModelShape":
        R = instance.ship_tiers
        rows = sum(1 for o in range(1, instance.ports) if instance.limit(o) < R)
        return cls(
            instance.ports,
            R,
            instance.ship_stacks,
            tuple((y.tiers, y.stacks, y.count) for y in instance.yards),
            rows,
        )


def family_variable_counts(shape: ModelShape) -> dict[str, int]:
    P, R, C = shape.ports, shape.ship_tiers, shape.ship_stacks
    out = dict.fromkeys(VAR_FAMILIES, 0)
    for H, W, N in shape.yards:
        T = N
        out["b"] += W * H * N * T
        out["v"] += N * T
        out["x"] += (W * H) ** 2 * N * T
        out["y"] += W * H * N * T
        out["z"] += N * T * R * C
    out["q"] = R * C * P * (P - 1) // 2
    out["w"] = R * C * (P - 1) * P * (P + 1) // 6
    out["u"] = R * C * (P - 1)
    return out


def family_constraint_counts(shape: ModelShape) -> dict[int, int]:
    P, R, C = shape.ports, shape.ship_tiers, shape.ship_stacks
    out = dict.fromkeys(range(24), 0)
    for o, (H, W, N) in enumerate(shape.yards, 1):
        T = N
        Tm = max(T - 1, 0)
        out[0] += N
        out[1] += N * T
        out[2] += W * H * T
        out[3] += W * (H - 1) * T
        out[4] += N * W * H * Tm
        out[5] += N * Tm
        out[6] += W * W * H * H * T
        out[7] += N * W * T
        out[8] += N * W * H * H * T
        out[9] += W * (H - 1) * T
        out[10] += T
        out[11] += N * Tm
        out[12] += N * Tm
        out[13] += R * C * T
        out[14] += N * R * C * Tm
        out[15] += R * C * (P - o)
        out[16] += N
        out[17] += (R - 1) * C * T
        out[18] += P - o
        out[19] += P - o
        out[20] += R * C
        out[21] += (R - 1) * C
    out[22] = (P - 1) * (R - 1) * C
    out[23] = shape.stability_rows
    return out


def variable_count(shape: ModelShape, families: Iterable[str] = VAR_FAMILIES) -> int:
    counts = family_variable_counts(shape)
    return sum(counts[f] for f in families)


def constraint_count(shape: ModelShape, families: Iterable[int] = range(24)) -> int:
    counts = family_constraint_counts(shape)
    return sum(counts[k] for k in families)


class MilpModel:
    """Lazy model over an instance.

    ``kind`` is ``"integrated"`` (all variables, rows 0..23), ``"mpsp"`` (w and
    u, rows 19..23) or ``"crp"`` (yard side plus z and q, rows 0..18, with w
    and u fixed to the valuation ``fixed``).
    """

    def __init__(
        self,
        instance: Instance,
        big_M: int | None = None,
        kind: str = "integrated",
        fixed: Iterable[VarKey] | None = None,
    ):
        if kind not in ("integrated", "mpsp", "crp"):
            raise ValueError(f"unknown model kind {kind!r}")
        self.instance = instance
        self.kind = kind
        self.P = instance.ports
        self.R = instance.ship_tiers
        self.C = instance.ship_stacks
        self.flow = derive_flow(instance)
        self.dest = instance.destinations
        self.org = {n: instance.origin(n) for n in instance.containers}
        self.ids = instance.containers
        self.yards: dict[int, _Yard] = {}
        for o, spec in enumerate(instance.yards, 1):
            start = {}
            for i, col in enumerate(spec.columns, 1):
                for j, n in enumerate(col, 1):
                    start[n] = (i, j)
            self.yards[o] = _Yard(o, spec.stacks, spec.tiers, spec.count, spec.containers, start)
        self.maxW = max(y.W for y in self.yards.values())
        self.maxH = max(y.H for y in self.yards.values())
        self.maxT = max(y.T for y in self.yards.values())
        self.big_M = big_M if big_M is not None else max(
            max(y.W * y.H for y in self.yards.values()), self.R * self.C
        )
        self.limits = {o: instance.limit(o) for o in range(1, self.P)}
        self.shape = ModelShape.of(instance)
        if kind == "integrated":
            self.var_families = VAR_FAMILIES
            self.row_families = tuple(range(24))
        elif kind == "mpsp":
            self.var_families = SHIP_SIDE
            self.row_families = tuple(range(19, 24))
        else:
            self.var_families = YARD_SIDE
            self.row_families = tuple(range(19))
        self._families = set(self.var_families)
        self.fixed: frozenset[VarKey] | None = None
        self._staying_cache: dict[tuple[int, int, int], tuple] = {}
        if kind == "crp":
            if fixed is None:
                raise InfeasibleFixing("the loading model needs a w/u valuation")
            self.fixed = frozenset(fixed)
            bad = [k for k in self.fixed if k[0] not in SHIP_SIDE or not self._in_space(k)]
            if bad:
                raise InfeasibleFixing(f"fixed valuation names {var_name(bad[0])}, not a w/u variable")

    # -- sizes ------------------------------------------------------------------

    @property
    def variable_count(self) -> int:
        return variable_count(self.shape, self.var_families)

    @property
    def constraint_count(self) -> int:
        return constraint_count(self.shape, self.row_families)

    # -- variable space -----------------------------------------------------------

    def _in_space(self, key: VarKey) -> bool:
        fam, idx = key[0], key[1:]
        P, R, C = self.P, self.R, self.C
        try:
            if fam in ("b", "y"):
                i, j, n, t, o = idx
                yd = self.yards[o]
                return self.org.get(n) == o and 1 <= i <= yd.W and 1 <= j <= yd.H and 1 <= t <= yd.T
            if fam == "v":
                n, t, o = idx
                return self.org.get(n) == o and 1 <= t <= self.yards[o].T
            if fam == "x":
                i, j, k, l, n, t, o = idx
                yd = self.yards[o]
                return (
                    self.org.get(n) == o
                    and 1 <= i <= yd.W
                    and 1 <= k <= yd.W
                    and 1 <= j <= yd.H
                    and 1 <= l <= yd.H
                    and 1 <= t <= yd.T
                )
            if fam == "z":
                n, t, r, c = idx
                o = self.org.get(n)
                return o is not None and 1 <= t <= self.yards[o].T and 1 <= r <= R and 1 <= c <= C
            if fam == "q":
                o, d, r, c = idx
                return 1 <= o < d <= P and 1 <= r <= R and 1 <= c <= C
            if fam == "w":
                o, d, a, r, c = idx
                return 1 <= o < a <= d <= P and 1 <= r <= R and 1 <= c <= C
            if fam == "u":
                o, r, c = idx
                return 1 <= o < P and 1 <= r <= R and 1 <= c <= C
        except (ValueError, KeyError):
            return False
        return False

    def has_variable(self, key: VarKey) -> bool:
        return key[0] in self._families and self._in_space(key)

    def variables(self) -> Iterator[VarKey]:
        for fam in self.var_families:
            yield from getattr(self, f"_vars_{fam}")()

    def variable_names(self) -> Iterator[str]:
        return map(var_name, self.variables())

    def _yard_slots(self):
        # (i, j, n, o) in lexicographic order of (i, j, n)
        for i in range(1, self.maxW + 1):
            for j in range(1, self.maxH + 1):
                for n in self.ids:
                    yd = self.yards[self.org[n]]
                    if i <= yd.W and j <= yd.H:
                        yield i, j, n, yd

    def _vars_b(self):
        for i, j, n, yd in self._yard_slots():
            for t in range(1, yd.T + 1):
                yield ("b", i, j, n, t, yd.o)

    def _vars_v(self):
        for n in self.ids:
            o = self.org[n]
            for t in range(1, self.yards[o].T + 1):
                yield ("v", n, t, o)

    def _vars_x(self):
        mw, mh = self.maxW, self.maxH
        for i in range(1, mw + 1):
            for j in range(1, mh + 1):
                for k in range(1, mw + 1):
                    for l in range(1, mh + 1):
                        for n in self.ids:
                            yd = self.yards[self.org[n]]
                            if i <= yd.W and k <= yd.W and j <= yd.H and l <= yd.H:
                                for t in range(1, yd.T + 1):
                                    yield ("x", i, j, k, l, n, t, yd.o)

    def _vars_y(self):
        for i, j, n, yd in self._yard_slots():
            for t in range(1, yd.T + 1):
                yield ("y", i, j, n, t, yd.o)

    def _vars_z(self):
        for n in self.ids:
            for t in range(1, self.yards[self.org[n]].T + 1):
                for r in range(1, self.R + 1):
                    for c in range(1, self.C + 1):
                        yield ("z", n, t, r, c)

    def _vars_q(self):
        for o in range(1, self.P):
            for d in range(o + 1, self.P + 1):
                for r in range(1, self.R + 1):
                    for c in range(1, self.C + 1):
                        yield ("q", o, d, r, c)

    def _vars_w(self):
        for o in range(1, self.P):
            for d in range(o + 1, self.P + 1):
                for a in range(o + 1, d + 1):
                    for r in range(1, self.R + 1):
                        for c in range(1, self.C + 1):
                            yield ("w", o, d, a, r, c)

    def _vars_u(self):
        for o in range(1, self.P):
            for r in range(1, self.R + 1):
                for c in range(1, self.C + 1):
                    yield ("u", o, r, c)

    # -- objective ----------------------------------------------------------------

    def objective(self) -> Iterator[tuple[VarKey, int]]:
        if "x" in self._families:
            for key in self._vars_x():
                yield key, 1
        if "w" in self._families:
            for key in self._vars_w():
                if key[3] < key[2]:
                    yield key, 1

    @staticmethod
    def is_objective_var(key: VarKey) -> bool:
        return key[0] == "x" or (key[0] == "w" and key[3] < key[2])

    # -- rows -------------------------------------------------------------------

    def rows(self, families: Iterable[int] | None = None) -> Iterator[Row]:
        for k in self.row_families if families is None else families:
            for idx in self.row_keys(k):
                row = self.row(k, idx)
                if row is not None:
                    yield row

    def row_keys(self, k: int) -> Iterator[tuple[int, ...]]:
        return getattr(self, f"_keys{k}")()

    def row(self, k: int, idx: tuple[int, ...]) -> Row | None:
        """The row ``eq{k}`` at ``idx`` with fixed variables folded into the right-hand side.

        Returns None for a crp model row left without free variables.
        """
        terms, sense, rhs = getattr(self, f"_row{k}")(*idx)
        # generators never repeat a variable within a row, so only fixed
        # ship-side values need folding
        if self.fixed is None:
            return Row(k, idx, tuple(terms), sense, rhs)
        fixed = self.fixed
        const = 0
        clean = []
        for key, coef in terms:
            if key[0] in SHIP_SIDE:
                if key in fixed:
                    const += coef
            else:
                clean.append((key, coef))
        rhs -= const
        if not clean:
            holds = {"<=": 0 <= rhs, ">=": 0 >= rhs, "=": rhs == 0}[sense]
            if not holds:
                raise InfeasibleFixing(f"eq{k} at {idx} cannot hold under the fixed w/u valuation")
            return None
        return Row(k, idx, tuple(clean), sense, rhs)

    def zero_feasible(self, k: int) -> bool:
        """True when every row of family ``k`` holds at the all-zero point."""
        if k in (0, 1, 10, 16, 19):
            return False
        if self.fixed is not None and k in (13, 15, 17, 18):
            return False
        return True

    # Each _keysK yields index tuples in lexicographic order and each _rowK
    # returns (terms, sense, rhs) before merging.

    # family 0: initial layout
    def _keys0(self):
        for n in self.ids:
            yield (n, self.org[n])

    def _row0(self, n, o):
        i, j = self.yards[o].start[n]
        return [(("b", i, j, n, 1, o), 1)], "=", 1

    # family 1: each container is in the yard or gone
    def _keys1(self):
        for n in self.ids:
            o = self.org[n]
            for t in range(1, self.yards[o].T + 1):
                yield (n, t, o)

    def _row1(self, n, t, o):
        yd = self.yards[o]
        terms = [(("b", i, j, n, t, o), 1) for i in range(1, yd.W + 1) for j in range(1, yd.H + 1)]
        terms.append((("v", n, t, o), 1))
        return terms, "=", 1

    def _slot_keys(self, jmax_offset: int):
        # (i, j, t, o) for j <= H - jmax_offset
        for i in range(1, self.maxW + 1):
            for j in range(1, self.maxH + 1):
                for t in range(1, self.maxT + 1):
                    for o, yd in self.yards.items():
                        if i <= yd.W and j <= yd.H - jmax_offset and t <= yd.T:
                            yield (i, j, t, o)

    # family 2: one container per slot
    def _keys2(self):
        return self._slot_keys(0)

    def _row2(self, i, j, t, o):
        return [(("b", i, j, n, t, o), 1) for n in self.yards[o].omega], "<=", 1

    # family 3: no holes (index i, t, j, o)
    def _keys3(self):
        for i in range(1, self.maxW + 1):
            for t in range(1, self.maxT + 1):
                for j in range(1, self.maxH):
                    for o, yd in self.yards.items():
                        if i <= yd.W and t <= yd.T and j <= yd.H - 1:
                            yield (i, t, j, o)

    def _row3(self, i, t, j, o):
        om = self.yards[o].omega
        terms = [(("b", i, j, n, t, o), 1) for n in om] + [(("b", i, j + 1, n, t, o), -1) for n in om]
        return terms, ">=", 0

    # family 4: flow balance (index n, i, j, t, o)
    def _keys4(self):
        for n in self.ids:
            yd = self.yards[self.org[n]]
            for i in range(1, yd.W + 1):
                for j in range(1, yd.H + 1):
                    for t in range(2, yd.T + 1):
                        yield (n, i, j, t, yd.o)

    def _row4(self, n, i, j, t, o):
        yd = self.yards[o]
        s = t - 1
        terms = [(("b", i, j, n, t, o), 1)]
        for k in range(1, yd.W + 1):
            for l in range(1, yd.H + 1):
                if (k, l) != (i, j):  # the in and out terms of a self-move cancel
                    terms.append((("x", k, l, i, j, n, s, o), -1))
                    terms.append((("x", i, j, k, l, n, s, o), 1))
        terms.append((("b", i, j, n, s, o), -1))
        terms.append((("y", i, j, n, s, o), 1))
        return terms, "=", 0

    # family 5: v counts earlier retrievals
    def _keys5(self):
        for n in self.ids:
            o = self.org[n]
            for t in range(2, self.yards[o].T + 1):
                yield (n, t, o)

    def _row5(self, n, t, o):
        yd = self.yards[o]
        terms = [(("v", n, t, o), 1)]
        for i in range(1, yd.W + 1):
            for j in range(1, yd.H + 1):
                for s in range(1, t):
                    terms.append((("y", i, j, n, s, o), -1))
        return terms, "=", 0

    # family 6: LIFO between a pair of stacks (index i, k, j, l, t, o)
    def _keys6(self):
        mw, mh = self.maxW, self.maxH
        for i in range(1, mw + 1):
            for k in range(1, mw + 1):
                for j in range(1, mh + 1):
                    for l in range(1, mh + 1):
                        for t in range(1, self.maxT + 1):
                            for o, yd in self.yards.items():
                                if i <= yd.W and k <= yd.W and j <= yd.H and l <= yd.H and t <= yd.T:
                                    yield (i, k, j, l, t, o)

    def _row6(self, i, k, j, l, t, o):
        yd = self.yards[o]
        M = self.big_M
        terms = [(("x", i, j, k, l, n, t, o), M) for n in yd.omega]
        for n in yd.omega:
            for j2 in range(j + 1, yd.H + 1):
                for l2 in range(l + 1, yd.H + 1):
                    terms.append((("x", i, j2, k, l2, n, t, o), 1))
        return terms, "<=", M

    # family 7: relocate only from the stack of the retrieved container (index n, i, t, o)
    def _keys7(self):
        for n in self.ids:
            yd = self.yards[self.org[n]]
            for i in range(1, yd.W + 1):
                for t in range(1, yd.T + 1):
                    yield (n, i, t, yd.o)

    def _row7(self, n, i, t, o):
        yd = self.yards[o]
        M = self.big_M
        terms = [(("y", i, j, n, t, o), M) for j in range(1, yd.H + 1)]
        for i2 in range(1, yd.W + 1):
            if i2 == i:
                continue
            for j in range(1, yd.H + 1):
                for k in range(1, yd.W + 1):
                    for l in range(1, yd.H + 1):
                        for n2 in yd.omega:
                            terms.append((("x", i2, j, k, l, n2, t, o), 1))
        return terms, "<=", M

    # family 8: no relocation within a stack (index n, i, j, l, t, o)
    def _keys8(self):
        for n in self.ids:
            yd = self.yards[self.org[n]]
            for i in range(1, yd.W + 1):
                for j in range(1, yd.H + 1):
                    for l in range(1, yd.H + 1):
                        for t in range(1, yd.T + 1):
                            yield (n, i, j, l, t, yd.o)

    def _row8(self, n, i, j, l, t, o):
        return [(("x", i, j, i, l, n, t, o), 1)], "=", 0

    # family 9: move only from the top
    def _keys9(self):
        return self._slot_keys(1)

    def _row9(self, i, j, t, o):
        yd = self.yards[o]
        terms = []
        for k in range(1, yd.W + 1):
            for l in range(1, yd.H + 1):
                for n in yd.omega:
                    terms.append((("x", i, j + 1, k, l, n, t, o), 1))
        for n in yd.omega:
            terms.append((("b", i, j + 1, n, t, o), -1))
        for k in range(1, yd.W + 1):
            for l in range(1, yd.H + 1):
                for n in yd.omega:
                    terms.append((("x", i, j, k, l, n, t, o), -1))
        for n in yd.omega:
            terms.append((("y", i, j, n, t, o), -1))
        return terms, ">=", -1

    # family 10: retrieval counter
    def _keys10(self):
        for t in range(1, self.maxT + 1):
            for o, yd in self.yards.items():
                if t <= yd.T:
                    yield (t, o)

    def _row10(self, t, o):
        return [(("v", n, t, o), 1) for n in self.yards[o].omega], "=", t - 1

    # family 11: once gone, gone
    def _keys11(self):
        for n in self.ids:
            o = self.org[n]
            for t in range(1, self.yards[o].T):
                yield (n, t, o)

    def _row11(self, n, t, o):
        return [(("v", n, t + 1, o), 1), (("v", n, t, o), -1)], ">=", 0

    # family 12: retrieved containers are aboard
    def _keys12(self):
        return self._keys11()

    def _row12(self, n, t, o):
        terms = [(("z", n, t, r, c), 1) for r in range(1, self.R + 1) for c in range(1, self.C + 1)]
        terms.append((("v", n, t + 1, o), -1))
        return terms, "=", 0

    def _staying(self, o, r, c):
        # legs boarded before o that are still aboard while moored at o
        key = (o, r, c)
        hit = self._staying_cache.get(key)
        if hit is None:
            hit = tuple(
                ("w", o2, d, a, r, c)
                for o2 in range(1, o)
                for d in range(o + 1, self.P + 1)
                for a in range(o + 1, d + 1)
            )
            self._staying_cache[key] = hit
        return hit

    # family 13: one container per ship slot (index r, c, t, o)
    def _keys13(self):
        for r in range(1, self.R + 1):
            for c in range(1, self.C + 1):
                for t in range(1, self.maxT + 1):
                    for o, yd in self.yards.items():
                        if t <= yd.T:
                            yield (r, c, t, o)

    def _row13(self, r, c, t, o):
        terms = [(key, 1) for key in self._staying(o, r, c)]
        terms += [(("q", o, d, r, c), 1) for d in range(o + 1, self.P + 1)]
        terms += [(("z", n, t, r, c), 1) for n in self.yards[o].omega]
        return terms, "<=", 1

    # family 14: loaded containers stay put (index n, r, c, t, o)
    def _keys14(self):
        for n in self.ids:
            o = self.org[n]
            for r in range(1, self.R + 1):
                for c in range(1, self.C + 1):
                    for t in range(1, self.yards[o].T):
                        yield (n, r, c, t, o)

    def _row14(self, n, r, c, t, o):
        return [(("z", n, t + 1, r, c), 1), (("z", n, t, r, c), -1)], ">=", 0

    # family 15: legs starting at o are new loads or put-back shifts (index r, c, d, o)
    def _keys15(self):
        for r in range(1, self.R + 1):
            for c in range(1, self.C + 1):
                for d in range(2, self.P + 1):
                    for o in range(1, d):
                        yield (r, c, d, o)

    def _row15(self, r, c, d, o):
        terms = [(("w", o, d, a, r, c), 1) for a in range(o + 1, d + 1)]
        yd = self.yards[o]
        terms += [(("z", n, yd.T, r, c), -1) for n in yd.omega if self.dest[n] == d]
        terms.append((("q", o, d, r, c), -1))
        return terms, "=", 0

    # family 16: every container ends up aboard
    def _keys16(self):
        return self._keys0()

    def _row16(self, n, o):
        T = self.yards[o].T
        return [(("z", n, T, r, c), 1) for r in range(1, self.R + 1) for c in range(1, self.C + 1)], "=", 1

    # family 17: no floating loads (index t, r, c, o)
    def _keys17(self):
        for t in range(1, self.maxT + 1):
            for r in range(1, self.R):
                for c in range(1, self.C + 1):
                    for o, yd in self.yards.items():
                        if t <= yd.T:
                            yield (t, r, c, o)

    def _row17(self, t, r, c, o):
        om = self.yards[o].omega
        terms = [(("z", n, t, r, c), 1) for n in om]
        terms += [(key, 1) for key in self._staying(o, r, c)]
        terms += [(("q", o, d, r, c), 1) for d in range(o + 1, self.P + 1)]
        terms += [(("z", n, t, r + 1, c), -1) for n in om]
        return terms, ">=", 0

    # family 18: every shift is put back (index d, o)
    def _keys18(self):
        for d in range(2, self.P + 1):
            for o in range(1, d):
                yield (d, o)

    def _row18(self, d, o):
        terms = []
        for o2 in range(1, o):
            for c in range(1, self.C + 1):
                for r in range(1, self.R + 1):
                    terms.append((("w", o2, d, o, r, c), 1))
        for r in range(1, self.R + 1):
            for c in range(1, self.C + 1):
                terms.append((("q", o, d, r, c), -1))
        return terms, "=", 0

    # family 19: container flow
    def _keys19(self):
        for o in range(1, self.P):
            for d in range(o + 1, self.P + 1):
                yield (o, d)

    def _row19(self, o, d):
        R, C = self.R, self.C
        terms = []
        for a in range(o + 1, d + 1):
            for r in range(1, R + 1):
                for c in range(1, C + 1):
                    terms.append((("w", o, d, a, r, c), 1))
        for m in range(1, o):
            for r in range(1, R + 1):
                for c in range(1, C + 1):
                    terms.append((("w", m, d, o, r, c), -1))
        return terms, "=", self.flow.count(o, d)

    # family 20: occupancy at departure
    def _keys20(self):
        for o in range(1, self.P):
            for r in range(1, self.R + 1):
                for c in range(1, self.C + 1):
                    yield (o, r, c)

    def _row20(self, o, r, c):
        terms = []
        for m in range(1, o + 1):
            for d in range(o + 1, self.P + 1):
                for a in range(o + 1, d + 1):
                    terms.append((("w", m, d, a, r, c), 1))
        terms.append((("u", o, r, c), -1))
        return terms, "=", 0

    # family 21: no floating containers at departure
    def _keys21(self):
        for o in range(1, self.P):
            for r in range(1, self.R):
                for c in range(1, self.C + 1):
                    yield (o, r, c)

    def _row21(self, o, r, c):
        return [(("u", o, r, c), 1), (("u", o, r + 1, c), -1)], ">=", 0

    # family 22: unload only from the top (index d, r, c)
    def _keys22(self):
        for d in range(2, self.P + 1):
            for r in range(1, self.R):
                for c in range(1, self.C + 1):
                    yield (d, r, c)

    def _row22(self, d, r, c):
        P = self.P
        terms = []
        for o in range(1, d):
            for e in range(d, P + 1):
                terms.append((("w", o, e, d, r, c), 1))
        for o in range(1, d):
            for e in range(d + 1, P + 1):
                for a in range(d + 1, e + 1):
                    terms.append((("w", o, e, a, r + 1, c), 1))
        return terms, "<=", 1

    # family 23: height limit at departure, only where it binds
    def _keys23(self):
        for o in range(1, self.P):
            if self.limits[o] < self.R:
                yield (o,)

    def _row23(self, o):
        lim = self.limits[o]
        terms = [(("u", o, r, c), 1) for r in range(lim + 1, self.R + 1) for c in range(1, self.C + 1)]
        return terms, "=", 0

    # -- incidence --------------------------------------------------------------

    def rows_touching(self, key: VarKey) -> set[tuple[int, tuple]]:
        """A superset of the rows whose terms mention ``key``."""
        fam = key[0]
        out: set[tuple[int, tuple]] = set()
        add = out.add
        R, P = self.R, self.P
        if fam in ("b", "y", "x", "v"):
            o = key[-1]
            yd = self.yards[o]
            T, H, W = yd.T, yd.H, yd.W
        if fam == "b":
            _, i, j, n, t, o = key
            if t == 1:
                add((0, (n, o)))
            add((1, (n, t, o)))
            add((2, (i, j, t, o)))
            if j <= H - 1:
                add((3, (i, t, j, o)))
                add((9, (i, j, t, o)))
            if j >= 2:
                add((3, (i, t, j - 1, o)))
                add((9, (i, j - 1, t, o)))
            if t >= 2:
                add((4, (n, i, j, t, o)))
            if t + 1 <= T:
                add((4, (n, i, j, t + 1, o)))
        elif fam == "v":
            _, n, t, o = key
            add((1, (n, t, o)))
            add((10, (t, o)))
            if t >= 2:
                add((5, (n, t, o)))
                add((11, (n, t - 1, o)))
                add((12, (n, t - 1, o)))
            if t <= T - 1:
                add((11, (n, t, o)))
        elif fam == "y":
            _, i, j, n, t, o = key
            if t + 1 <= T:
                add((4, (n, i, j, t + 1, o)))
            for s in range(t + 1, T + 1):
                add((5, (n, s, o)))
            add((7, (n, i, t, o)))
            if j <= H - 1:
                add((9, (i, j, t, o)))
        elif fam == "x":
            _, i, j, k, l, n, t, o = key
            if t + 1 <= T:
                add((4, (n, k, l, t + 1, o)))
                add((4, (n, i, j, t + 1, o)))
            for j0 in range(1, j + 1):
                for l0 in range(1, l + 1):
                    add((6, (i, k, j0, l0, t, o)))
            for n2 in yd.omega:
                for i2 in range(1, W + 1):
                    if i2 != i:
                        add((7, (n2, i2, t, o)))
            if k == i:
                add((8, (n, i, j, l, t, o)))
            if j <= H - 1:
                add((9, (i, j, t, o)))
            if j >= 2:
                add((9, (i, j - 1, t, o)))
        elif fam == "z":
            _, n, t, r, c = key
            o = self.org[n]
            T = self.yards[o].T
            if t <= T - 1:
                add((12, (n, t, o)))
                add((14, (n, r, c, t, o)))
            if t >= 2:
                add((14, (n, r, c, t - 1, o)))
            add((13, (r, c, t, o)))
            if t == T:
                add((15, (r, c, self.dest[n], o)))
                add((16, (n, o)))
            if r <= R - 1:
                add((17, (t, r, c, o)))
            if r >= 2:
                add((17, (t, r - 1, c, o)))
        elif fam == "q":
            _, o, d, r, c = key
            T = self.yards[o].T
            for t in range(1, T + 1):
                add((13, (r, c, t, o)))
                if r <= R - 1:
                    add((17, (t, r, c, o)))
            add((15, (r, c, d, o)))
            add((18, (d, o)))
        elif fam == "w":
            _, o, d, a, r, c = key
            for o2 in range(o + 1, a):
                for t in range(1, self.yards[o2].T + 1):
                    add((13, (r, c, t, o2)))
                    if r <= R - 1:
                        add((17, (t, r, c, o2)))
            add((15, (r, c, d, o)))
            if a < d:
                add((18, (d, a)))
                add((19, (a, d)))
            add((19, (o, d)))
            for o2 in range(o, a):
                add((20, (o2, r, c)))
            if r <= R - 1:
                add((22, (a, r, c)))
            if r >= 2:
                for d2 in range(o + 1, a):
                    add((22, (d2, r - 1, c)))
        elif fam == "u":
            _, o, r, c = key
            add((20, (o, r, c)))
            if r <= R - 1:
                add((21, (o, r, c)))
            if r >= 2:
                add((21, (o, r - 1, c)))
            if self.limits[o] < R and r > self.limits[o]:
                add((23, (o,)))
        fams = self.row_families
        return {rk for rk in out if rk[0] in fams}


def build_model(instance: Instance, big_M: int | None = None, max_variables: int | None = 50_000_000) -> MilpModel:
    shape = ModelShape.of(instance)
    count = variable_count(shape)
    if max_variables is not None and count > max_variables:
        raise ModelTooLarge(f"model would have {count} variables, cap is {max_variables}")
    return MilpModel(instance, big_M)


def build_mpsp_model(instance: Instance) -> MilpModel:
    """Ship-side stage: w and u only, rows 19 to 23."""
    return MilpModel(instance, kind="mpsp")


def build_crp_loading_model(instance: Instance, fixed: Iterable[VarKey] | Mapping[str, int]) -> MilpModel:
    """Yard-side stage with the w/u valuation ``fixed`` folded into rows 13, 15, 17 and 18.

    ``fixed`` lists the w and u variables at value 1 (keys or a name to value
    mapping).  The valuation must satisfy rows 19 to 23.
    """
    ones = _ones_of(fixed)
    stage_one = build_mpsp_model(instance)
    for key in ones:
        if not stage_one.has_variable(key):
            raise InfeasibleFixing(f"{var_name(key)} is not a w/u variable of this instance")
    from .check import check_assignment  # local import keeps the module graph acyclic

    report = check_assignment(stage_one, ones)
    if not report.feasible:
        raise InfeasibleFixing(f"fixed w/u valuation violates {report.violations[0].name}")
    return MilpModel(instance, kind="crp", fixed=ones)


def _ones_of(values) -> frozenset[VarKey]:
    if isinstance(values, Mapping):
        out = set()
        for name, val in values.items():
            key = parse_var_name(name) if isinstance(name, str) else name
            if val not in (0, 1):
                raise InfeasibleFixing(f"{name} has non-binary value {val}")
            if val:
                out.add(key)
        return frozenset(out)
    return frozenset(values)


__all__ = [
    "InfeasibleFixing",
    "MilpModel",
    "ModelShape",
    "ModelTooLarge",
    "Row",
    "VAR_FAMILIES",
    "build_crp_loading_model",
    "build_model",
    "build_mpsp_model",
    "constraint_count",
    "family_constraint_counts",
    "family_variable_counts",
    "parse_var_name",
    "var_name",
    "var_sort_key",
    "variable_count",
]
