"""Domain model for integrated stowage planning with yard relocation.

Coordinates are 1-based.  A yard slot is ``(i, j)`` with ``i`` the stack and
``j`` the tier counted from the bottom; a ship slot is ``(r, c)`` with ``r``
the tier and ``c`` the stack.  Stacks are stored bottom-first, so the top of a
stack is the last element of its tuple or list.

The validator replays a plan port by port:

* port 1 loads only, ports ``2..P-1`` unload then load, port ``P`` unloads;
* during unloading a port accepts ``U`` (unload) and ``S`` (lift a blocker into
  the buffer); the buffer is put back when the first loading move arrives or
  the port closes, in ascending ``(tier, stack)`` order of the targets;
* a loading period is zero or more ``X`` moves followed by exactly one ``R``;
* ``F`` moves come after the last retrieval of a port and bring containers
  from above the height limit down to a tier within it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Iterable, Iterator, Mapping, Union


class InstanceError(ValueError):
    """An instance breaks one of the structural assumptions."""

    def __init__(self, rule: str, message: str):
        super().__init__(f"{rule}: {message}")
        self.rule = rule


class IllegalMove(Exception):
    """A move cannot be applied; ``rule`` names the violated constraint."""

    def __init__(self, rule: str, message: str = ""):
        super().__init__(f"{rule}: {message}" if message else rule)
        self.rule = rule
        self.detail = message


class PlanFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class YardSpec:
    """Initial layout of one yard; ``columns[i-1]`` is stack ``i`` bottom-first."""

    tiers: int
    stacks: int
    columns: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.tiers < 1 or self.stacks < 1:
            raise InstanceError("dims", f"yard must be at least 1x1, got {self.stacks}x{self.tiers}")
        cols = tuple(tuple(c) for c in self.columns)
        object.__setattr__(self, "columns", cols)
        if len(cols) != self.stacks:
            raise InstanceError("dims", f"expected {self.stacks} stacks, got {len(cols)}")
        for i, col in enumerate(cols, 1):
            if len(col) > self.tiers:
                raise InstanceError("dims", f"stack {i} holds {len(col)} containers above {self.tiers} tiers")

    @classmethod
    def empty(cls, tiers: int, stacks: int) -> "YardSpec":
        return cls(tiers, stacks, tuple(() for _ in range(stacks)))

    def slot(self, i: int, j: int) -> int | None:
        col = self.columns[i - 1]
        return col[j - 1] if j <= len(col) else None

    @property
    def containers(self) -> tuple[int, ...]:
        return tuple(sorted(n for col in self.columns for n in col))

    @property
    def count(self) -> int:
        return sum(len(col) for col in self.columns)

    @property
    def capacity(self) -> int:
        return self.tiers * self.stacks

    def position(self, n: int) -> tuple[int, int]:
        for i, col in enumerate(self.columns, 1):
            if n in col:
                return i, col.index(n) + 1
        raise KeyError(n)


@dataclass(frozen=True)
class FlowMatrix:
    """Container counts by (origin, destination) and the load at each departure."""

    ports: int
    counts: Mapping[tuple[int, int], int]
    theta: tuple[int, ...]

    def count(self, o: int, d: int) -> int:
        return self.counts.get((o, d), 0)

    def aboard(self, o: int) -> int:
        """Containers aboard when leaving port ``o`` (zero at the last port)."""
        return self.theta[o - 1] if 1 <= o < self.ports else 0

    def departing(self, o: int) -> int:
        return sum(self.count(o, d) for d in range(o + 1, self.ports + 1))


def height_limit(theta_o: int, C: int) -> int:
    """Stability limit on the tier index when leaving a port with ``theta_o`` aboard."""
    if C < 1:
        raise ValueError("ship needs at least one stack")
    return -(-theta_o // C)


@dataclass(frozen=True, eq=True)
class Instance:
    ports: int
    ship_tiers: int
    ship_stacks: int
    yards: tuple[YardSpec, ...]
    destinations: Mapping[int, int]
    _origin: dict[int, int] = field(init=False, repr=False, compare=False)
    _flow: FlowMatrix = field(init=False, repr=False, compare=False)

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        P = self.ports
        if P < 2:
            raise InstanceError("ports", f"need at least 2 ports, got {P}")
        if self.ship_tiers < 1 or self.ship_stacks < 1:
            raise InstanceError("dims", "ship must be at least 1x1")
        yards = tuple(self.yards)
        object.__setattr__(self, "yards", yards)
        object.__setattr__(self, "destinations", dict(self.destinations))
        if len(yards) != P - 1:
            raise InstanceError("dims", f"expected {P - 1} yards, got {len(yards)}")
        origin: dict[int, int] = {}
        for o, yard in enumerate(yards, 1):
            for col in yard.columns:
                for n in col:
                    if not isinstance(n, int) or n <= 0:
                        raise InstanceError("id", f"container id {n!r} must be a positive integer")
                    if n in origin:
                        raise InstanceError("duplicate", f"container {n} appears twice")
                    origin[n] = o
            if yard.capacity < yard.count + yard.tiers - 1:
                raise InstanceError(
                    "slack",
                    f"yard {o} holds {yard.count} containers in {yard.capacity} slots; "
                    f"needs {yard.tiers - 1} free",
                )
        dest = self.destinations
        for n, o in origin.items():
            if n not in dest:
                raise InstanceError("destination", f"container {n} has no destination")
            if not o < dest[n] <= P:
                raise InstanceError("destination", f"container {n} from port {o} cannot go to {dest[n]}")
        extra = set(dest) - set(origin)
        if extra:
            raise InstanceError("destination", f"destination given for unknown container {min(extra)}")
        object.__setattr__(self, "_origin", origin)
        flow = _compute_flow(P, origin, dest)
        cap = self.ship_tiers * self.ship_stacks
        for o, th in enumerate(flow.theta, 1):
            if th > cap:
                raise InstanceError("capacity", f"{th} containers aboard after port {o}, ship holds {cap}")
        object.__setattr__(self, "_flow", flow)

    def origin(self, n: int) -> int:
        return self._origin[n]

    @property
    def containers(self) -> tuple[int, ...]:
        return tuple(sorted(self._origin))

    @property
    def size(self) -> int:
        return len(self._origin)

    def yard(self, o: int) -> YardSpec:
        return self.yards[o - 1]

    def limit(self, o: int) -> int:
        """Height limit at departure from port ``o``."""
        return height_limit(self._flow.aboard(o), self.ship_stacks)


def _compute_flow(P: int, origin: Mapping[int, int], dest: Mapping[int, int]) -> FlowMatrix:
    counts: dict[tuple[int, int], int] = {}
    for n, o in origin.items():
        key = (o, dest[n])
        counts[key] = counts.get(key, 0) + 1
    theta = []
    for o in range(1, P):
        theta.append(sum(v for (m, d), v in counts.items() if m <= o < d))
    return FlowMatrix(P, counts, tuple(theta))


def derive_flow(instance: Instance) -> FlowMatrix:
    return instance._flow


def top_of(stacks, index: int) -> int | None:
    """Container on top of stack ``index`` (1-based), or None when empty.

    ``stacks`` may be a YardSpec, a state object with ``columns`` or a plain
    sequence of bottom-first stacks.
    """
    cols = getattr(stacks, "columns", stacks)
    if not 1 <= index <= len(cols):
        raise IndexError(f"stack {index} out of range 1..{len(cols)}")
    col = cols[index - 1]
    return col[-1] if col else None


# ---------------------------------------------------------------------------
# Moves and plans


@dataclass(frozen=True)
class YardRelocate:
    port: int
    container: int
    i: int
    j: int
    k: int
    l: int
    code: ClassVar[str] = "X"

    def values(self) -> tuple[int, ...]:
        return (self.port, self.container, self.i, self.j, self.k, self.l)


@dataclass(frozen=True)
class RetrieveLoad:
    port: int
    container: int
    i: int
    j: int
    r: int
    c: int
    code: ClassVar[str] = "R"

    def values(self) -> tuple[int, ...]:
        return (self.port, self.container, self.i, self.j, self.r, self.c)


@dataclass(frozen=True)
class Unload:
    port: int
    container: int
    r: int
    c: int
    code: ClassVar[str] = "U"

    def values(self) -> tuple[int, ...]:
        return (self.port, self.container, self.r, self.c)


@dataclass(frozen=True)
class ShipRelocate:
    """Lift a blocker into the buffer; it returns to ``(r2, c2)`` after unloading."""

    port: int
    container: int
    r: int
    c: int
    r2: int
    c2: int
    code: ClassVar[str] = "S"

    def values(self) -> tuple[int, ...]:
        return (self.port, self.container, self.r, self.c, self.r2, self.c2)


@dataclass(frozen=True)
class StabilityFix:
    port: int
    container: int
    r: int
    c: int
    r2: int
    c2: int
    code: ClassVar[str] = "F"

    def values(self) -> tuple[int, ...]:
        return (self.port, self.container, self.r, self.c, self.r2, self.c2)


Move = Union[YardRelocate, RetrieveLoad, Unload, ShipRelocate, StabilityFix]

MOVE_TYPES: dict[str, type] = {t.code: t for t in (YardRelocate, RetrieveLoad, Unload, ShipRelocate, StabilityFix)}
_ARITY = {"X": 6, "R": 6, "U": 4, "S": 6, "F": 6}


def format_move(move: Move) -> str:
    return " ".join([move.code, *map(str, move.values())])


def parse_move(line: str, lineno: int = 0) -> Move:
    parts = line.split()
    if not parts or parts[0] not in MOVE_TYPES:
        raise PlanFormatError(lineno, f"unknown move kind in {line!r}")
    code = parts[0]
    if len(parts) - 1 != _ARITY[code]:
        raise PlanFormatError(lineno, f"{code} takes {_ARITY[code]} integers, got {len(parts) - 1}")
    try:
        nums = [int(p) for p in parts[1:]]
    except ValueError:
        raise PlanFormatError(lineno, f"non-integer field in {line!r}") from None
    return MOVE_TYPES[code](*nums)


@dataclass(frozen=True)
class MovePlan:
    moves: tuple[Move, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "moves", tuple(self.moves))

    def __len__(self) -> int:
        return len(self.moves)

    def __iter__(self) -> Iterator[Move]:
        return iter(self.moves)

    def _count(self, kind: type) -> int:
        return sum(1 for m in self.moves if type(m) is kind)

    @property
    def yard_relocations(self) -> int:
        return self._count(YardRelocate)

    @property
    def ship_shifts(self) -> int:
        return self._count(ShipRelocate)

    @property
    def stability_fixes(self) -> int:
        return self._count(StabilityFix)

    @property
    def ship_relocations(self) -> int:
        return self.ship_shifts + self.stability_fixes

    @property
    def objective(self) -> int:
        return self.yard_relocations + self.ship_relocations

    def to_text(self) -> str:
        return "".join(format_move(m) + "\n" for m in self.moves)

    @classmethod
    def from_text(cls, text: str) -> "MovePlan":
        moves = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            moves.append(parse_move(line, lineno))
        return cls(tuple(moves))


# ---------------------------------------------------------------------------
# Mutable states used during replay


@dataclass
class YardState:
    tiers: int
    columns: list[list[int]]

    @classmethod
    def from_spec(cls, spec: YardSpec) -> "YardState":
        return cls(spec.tiers, [list(c) for c in spec.columns])

    @property
    def stacks(self) -> int:
        return len(self.columns)

    def is_empty(self) -> bool:
        return not any(self.columns)

    def copy(self) -> "YardState":
        return YardState(self.tiers, [list(c) for c in self.columns])


@dataclass
class ShipState:
    """Ship bay with per-stack prefix minima of destinations for fast scoring."""

    tiers: int
    columns: list[list[int]]
    destinations: Mapping[int, int]
    boarded: dict[int, int] = field(default_factory=dict)
    minima: list[list[int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.minima:
            self.minima = []
            for col in self.columns:
                mins: list[int] = []
                for n in col:
                    d = self.destinations[n]
                    mins.append(min(d, mins[-1]) if mins else d)
                self.minima.append(mins)

    @classmethod
    def empty(cls, tiers: int, stacks: int, destinations: Mapping[int, int]) -> "ShipState":
        return cls(tiers, [[] for _ in range(stacks)], destinations)

    @property
    def stacks(self) -> int:
        return len(self.columns)

    def height(self, c: int) -> int:
        return len(self.columns[c - 1])

    def push(self, c: int, n: int, port: int) -> None:
        d = self.destinations[n]
        mins = self.minima[c - 1]
        mins.append(min(d, mins[-1]) if mins else d)
        self.columns[c - 1].append(n)
        self.boarded[n] = port

    def pop(self, c: int) -> int:
        self.minima[c - 1].pop()
        n = self.columns[c - 1].pop()
        del self.boarded[n]
        return n

    def min_dest(self, c: int) -> int | None:
        mins = self.minima[c - 1]
        return mins[-1] if mins else None

    def count(self) -> int:
        return sum(len(col) for col in self.columns)

    def copy(self) -> "ShipState":
        return ShipState(
            self.tiers,
            [list(c) for c in self.columns],
            self.destinations,
            dict(self.boarded),
            [list(m) for m in self.minima],
        )


@dataclass(frozen=True)
class Violation:
    index: int | None
    rule: str
    port: int
    message: str

    def __str__(self) -> str:
        where = f"move {self.index}" if self.index is not None else "departure"
        return f"port {self.port} {where} [{self.rule}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    yard_relocations: int
    ship_shifts: int
    stability_fixes: int

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def ship_relocations(self) -> int:
        return self.ship_shifts + self.stability_fixes

    @property
    def objective(self) -> int:
        return self.yard_relocations + self.ship_shifts + self.stability_fixes


@dataclass
class JourneyState:
    """Replay state of a whole voyage; ``port`` is the port currently moored at.

    ``stage`` is ``"unload"`` until the first loading move of the port and
    ``"load"`` afterwards; ``port == P + 1`` once the voyage is closed.
    """

    instance: Instance
    port: int
    stage: str
    yards: list[YardState]
    ship: ShipState
    buffer: list[tuple[int, int, int]] = field(default_factory=list)
    open_stack: int | None = None
    open_moves: int = 0
    period: int = 0

    @classmethod
    def initial(cls, instance: Instance) -> "JourneyState":
        return cls(
            instance=instance,
            port=1,
            stage="unload",
            yards=[YardState.from_spec(y) for y in instance.yards],
            ship=ShipState.empty(instance.ship_tiers, instance.ship_stacks, instance.destinations),
        )

    def copy(self) -> "JourneyState":
        return JourneyState(
            self.instance,
            self.port,
            self.stage,
            [y.copy() for y in self.yards],
            self.ship.copy(),
            list(self.buffer),
            self.open_stack,
            self.open_moves,
            self.period,
        )

    @property
    def finished(self) -> bool:
        return self.port > self.instance.ports

    # -- stage handling ----------------------------------------------------

    def settle_buffer(self) -> list[tuple[str, str]]:
        """End the unloading stage by putting buffered containers back."""
        problems = []
        ship = self.ship
        for n, r, c in sorted(self.buffer, key=lambda e: (e[1], e[2], e[0])):
            if not (1 <= c <= ship.stacks and 1 <= r <= ship.tiers):
                problems.append(("range", f"buffer target ({r},{c}) of container {n} outside the ship"))
            elif ship.height(c) >= r:
                problems.append(("eq13", f"buffer target ({r},{c}) of container {n} already occupied"))
            elif ship.height(c) != r - 1:
                problems.append(("eq17", f"buffer target ({r},{c}) of container {n} would float"))
            else:
                ship.push(c, n, self.port)
        self.buffer = []
        self.stage = "load"
        return problems

    def close_port(self) -> list[tuple[str, str]]:
        """Run departure checks and move on to the next port."""
        inst = self.instance
        p = self.port
        problems = []
        if self.stage == "unload":
            problems.extend(self.settle_buffer())
        if self.open_moves:
            problems.append(("eq11", f"{self.open_moves} yard relocations without a retrieval"))
        if p < inst.ports:
            left = sum(len(col) for col in self.yards[p - 1].columns)
            if left:
                problems.append(("eq5", f"{left} containers left in yard {p}"))
        stay = [n for col in self.ship.columns for n in col if inst.destinations[n] == p]
        if stay:
            problems.append(("eq19", f"containers {sorted(stay)} not unloaded at port {p}"))
        if p < inst.ports:
            limit = inst.limit(p)
            high = [c for c in range(1, self.ship.stacks + 1) if self.ship.height(c) > limit]
            if high:
                problems.append(("eq23", f"stacks {high} exceed height limit {limit}"))
        self.port += 1
        self.stage = "unload"
        self.open_stack = None
        self.open_moves = 0
        self.period = 0
        return problems

    # -- moves ------------------------------------------------------------------

    def apply(self, move: Move) -> None:
        """Apply ``move`` in place or raise IllegalMove leaving the state unchanged.

        The caller is responsible for port sequencing and for settling the
        buffer before the first loading move.
        """
        kind = type(move)
        if kind is Unload:
            self._unload(move)
        elif kind is ShipRelocate:
            self._shift(move)
        elif kind is YardRelocate:
            self._relocate(move)
        elif kind is RetrieveLoad:
            self._retrieve(move)
        elif kind is StabilityFix:
            self._fix(move)
        else:
            raise IllegalMove("kind", f"unknown move {move!r}")

    def _ship_source(self, n: int, r: int, c: int) -> list[int]:
        ship = self.ship
        if not (1 <= c <= ship.stacks and 1 <= r <= ship.tiers):
            raise IllegalMove("range", f"ship slot ({r},{c}) out of range")
        col = ship.columns[c - 1]
        if r > len(col) or col[r - 1] != n:
            raise IllegalMove("eq20", f"container {n} is not at ship slot ({r},{c})")
        if r != len(col):
            raise IllegalMove("eq22", f"container {n} at ({r},{c}) is not on top")
        return col

    def _ship_target(self, r: int, c: int, n: int) -> None:
        ship = self.ship
        if not (1 <= c <= ship.stacks and 1 <= r <= ship.tiers):
            raise IllegalMove("range", f"ship slot ({r},{c}) out of range")
        h = ship.height(c)
        if r <= h:
            raise IllegalMove("eq13", f"ship slot ({r},{c}) for container {n} is occupied")
        if r != h + 1:
            raise IllegalMove("eq17", f"ship slot ({r},{c}) for container {n} would float")

    def _yard_source(self, n: int, i: int, j: int) -> YardState:
        p = self.port
        if p >= self.instance.ports:
            raise IllegalMove("range", f"port {p} has no yard")
        yard = self.yards[p - 1]
        if not (1 <= i <= yard.stacks and 1 <= j <= yard.tiers):
            raise IllegalMove("range", f"yard slot ({i},{j}) out of range")
        col = yard.columns[i - 1]
        if j > len(col) or col[j - 1] != n:
            raise IllegalMove("eq4", f"container {n} is not at yard slot ({i},{j})")
        if j != len(col):
            raise IllegalMove("eq9", f"container {n} at ({i},{j}) is not on top")
        return yard

    def _need_stage(self, stage: str, move: Move) -> None:
        if self.stage != stage:
            raise IllegalMove("phase", f"{move.code} move not allowed during {self.stage} stage")

    def _unload(self, m: Unload) -> None:
        self._need_stage("unload", m)
        self._ship_source(m.container, m.r, m.c)
        d = self.instance.destinations[m.container]
        if d != self.port:
            raise IllegalMove("eq19", f"container {m.container} goes to port {d}, not {self.port}")
        self.ship.pop(m.c)

    def _shift(self, m: ShipRelocate) -> None:
        self._need_stage("unload", m)
        col = self._ship_source(m.container, m.r, m.c)
        dest = self.instance.destinations
        p = self.port
        if dest[m.container] == p:
            raise IllegalMove("eq19", f"container {m.container} must be unloaded at port {p}")
        if not any(dest[n] == p for n in col[:-1]):
            raise IllegalMove("eq7", f"container {m.container} blocks nothing destined for port {p}")
        if not (1 <= m.c2 <= self.ship.stacks and 1 <= m.r2 <= self.ship.tiers):
            raise IllegalMove("range", f"ship slot ({m.r2},{m.c2}) out of range")
        self.ship.pop(m.c)
        self.buffer.append((m.container, m.r2, m.c2))

    def _relocate(self, m: YardRelocate) -> None:
        self._need_stage("load", m)
        yard = self._yard_source(m.container, m.i, m.j)
        if m.k == m.i:
            raise IllegalMove("eq8", f"container {m.container} relocated within stack {m.i}")
        if not (1 <= m.k <= yard.stacks and 1 <= m.l <= yard.tiers):
            raise IllegalMove("range", f"yard slot ({m.k},{m.l}) out of range")
        h = len(yard.columns[m.k - 1])
        if m.l <= h:
            raise IllegalMove("eq2", f"yard slot ({m.k},{m.l}) is occupied")
        if m.l != h + 1:
            raise IllegalMove("eq3", f"yard slot ({m.k},{m.l}) would float")
        if self.open_stack is not None and self.open_stack != m.i:
            raise IllegalMove("eq7", f"period already relocates from stack {self.open_stack}")
        yard.columns[m.i - 1].pop()
        yard.columns[m.k - 1].append(m.container)
        self.open_stack = m.i
        self.open_moves += 1

    def _retrieve(self, m: RetrieveLoad) -> None:
        self._need_stage("load", m)
        yard = self._yard_source(m.container, m.i, m.j)
        if self.open_stack is not None and self.open_stack != m.i:
            raise IllegalMove("eq7", f"relocations came from stack {self.open_stack}, target sits in {m.i}")
        self._ship_target(m.r, m.c, m.container)
        limit = self.instance.limit(self.port)
        if m.r > limit:
            raise IllegalMove("eq23", f"tier {m.r} exceeds height limit {limit}")
        yard.columns[m.i - 1].pop()
        self.ship.push(m.c, m.container, self.port)
        self.open_stack = None
        self.open_moves = 0
        self.period += 1

    def _fix(self, m: StabilityFix) -> None:
        self._need_stage("load", m)
        if self.open_moves:
            raise IllegalMove("eq11", "ship shift inside an open retrieval period")
        if self.port < self.instance.ports and any(self.yards[self.port - 1].columns):
            raise IllegalMove("phase", "stability fixes follow the last retrieval of the port")
        self._ship_source(m.container, m.r, m.c)
        if self.ship.boarded[m.container] >= self.port:
            raise IllegalMove("eq14", f"container {m.container} was placed at this port and cannot move")
        limit = self.instance.limit(self.port)
        if m.r <= limit:
            raise IllegalMove("eq23", f"container {m.container} at tier {m.r} is within the height limit {limit}")
        if m.c2 == m.c:
            raise IllegalMove("eq14", f"container {m.container} shifted within stack {m.c}")
        self._ship_target(m.r2, m.c2, m.container)
        if m.r2 > limit:
            raise IllegalMove("eq23", f"tier {m.r2} exceeds height limit {limit}")
        self.ship.pop(m.c)
        self.ship.push(m.c2, m.container, self.port)


_UNLOAD_KINDS = (Unload, ShipRelocate)


def apply_move(state: JourneyState, move: Move) -> JourneyState:
    """Return a new state with ``move`` applied; the input state is untouched.

    A move for a later port closes the intermediate ports first, which raises
    IllegalMove if any departure check fails.
    """
    if not 1 <= move.port <= state.instance.ports:
        raise IllegalMove("range", f"port {move.port} out of range")
    if move.port < state.port:
        raise IllegalMove("order", f"move for port {move.port} after port {state.port}")
    new = state.copy()
    while new.port < move.port:
        problems = new.close_port()
        if problems:
            raise IllegalMove(*problems[0])
    if new.stage == "unload" and not isinstance(move, _UNLOAD_KINDS):
        problems = new.settle_buffer()
        if problems:
            raise IllegalMove(*problems[0])
    new.apply(move)
    return new


def validate_plan(instance: Instance, plan: MovePlan | Iterable[Move]) -> ValidationReport:
    """Replay ``plan`` and report every violated rule; never raises on bad plans."""
    moves = plan.moves if isinstance(plan, MovePlan) else tuple(plan)
    state = JourneyState.initial(instance)
    P = instance.ports
    found: list[Violation] = []
    for idx, move in enumerate(moves):
        if not 1 <= move.port <= P:
            found.append(Violation(idx, "range", state.port, f"port {move.port} out of range"))
            continue
        if move.port < state.port:
            found.append(Violation(idx, "order", state.port, f"move for port {move.port} after port {state.port}"))
            continue
        while state.port < move.port:
            p = state.port
            found.extend(Violation(idx, rule, p, msg) for rule, msg in state.close_port())
        if state.stage == "unload" and not isinstance(move, _UNLOAD_KINDS):
            found.extend(Violation(idx, rule, state.port, msg) for rule, msg in state.settle_buffer())
        try:
            state.apply(move)
        except IllegalMove as exc:
            found.append(Violation(idx, exc.rule, state.port, exc.detail))
    while not state.finished:
        p = state.port
        found.extend(Violation(None, rule, p, msg) for rule, msg in state.close_port())
    counts = {YardRelocate: 0, ShipRelocate: 0, StabilityFix: 0}
    for m in moves:
        if type(m) in counts:
            counts[type(m)] += 1
    return ValidationReport(tuple(found), counts[YardRelocate], counts[ShipRelocate], counts[StabilityFix])


def ship_layout(ship: ShipState) -> list[list[int]]:
    """Destinations per stack, bottom first."""
    return [[ship.destinations[n] for n in col] for col in ship.columns]


__all__ = [
    "FlowMatrix",
    "IllegalMove",
    "Instance",
    "InstanceError",
    "JourneyState",
    "Move",
    "MovePlan",
    "PlanFormatError",
    "RetrieveLoad",
    "ShipRelocate",
    "ShipState",
    "StabilityFix",
    "Unload",
    "ValidationReport",
    "Violation",
    "YardRelocate",
    "YardSpec",
    "YardState",
    "apply_move",
    "derive_flow",
    "format_move",
    "height_limit",
    "parse_move",
    "top_of",
    "validate_plan",
]
