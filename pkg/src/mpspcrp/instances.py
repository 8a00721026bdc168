"""Seeded instance generation, the instance text format, and named families.

File grammar (``#`` starts a comment line)::

    MPSPCRP v1
    PORTS <P>
    SHIP <R> <C>
    YARD <o> <H> <W>        # once per origin port o = 1..P-1
    <H lines, top tier first, W tokens each: container id or '.'>
    DEST
    <id> <port>             # one line per container
    END
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .core import Instance, InstanceError, YardSpec

MAGIC = "MPSPCRP v1"


class ParseError(ValueError):
    def __init__(self, line: int, rule: str, message: str):
        super().__init__(f"line {line}: {rule}: {message}")
        self.line = line
        self.rule = rule


class GenerationFailed(RuntimeError):
    pass


class UnknownFamily(KeyError):
    pass


@dataclass(frozen=True)
class GenParams:
    """Generator settings.  ``yard_dims`` is one ``(H, W)`` pair or one per origin port.

    ``dest_bias`` skews destinations towards nearer ports: a container from
    port o goes to o + k with weight exp(-dest_bias * (k - 1)); 0 is uniform.
    """

    ports: int
    yard_dims: tuple
    ship_dims: tuple[int, int]
    occupancy: tuple[float, float] = (0.65, 0.85)
    seed: int = 0
    name: str = ""
    max_retries: int = 200
    dest_bias: float = 0.0

    def __post_init__(self) -> None:
        lo, hi = self.occupancy
        if not 0 < lo <= hi <= 1:
            raise ValueError(f"occupancy range {self.occupancy} must satisfy 0 < lo <= hi <= 1")
        if self.ports < 2:
            raise ValueError("need at least 2 ports")
        dims = self.yard_dims
        if len(dims) == 2 and all(isinstance(v, int) for v in dims):
            dims = (tuple(dims),) * (self.ports - 1)
        dims = tuple(tuple(d) for d in dims)
        if len(dims) != self.ports - 1:
            raise ValueError(f"expected {self.ports - 1} yard dims, got {len(dims)}")
        object.__setattr__(self, "yard_dims", dims)

    def dims(self, o: int) -> tuple[int, int]:
        return self.yard_dims[o - 1]

    def with_seed(self, seed: int) -> "GenParams":
        return replace(self, seed=seed)


def yard_count(H: int, W: int, u: float) -> int:
    """Containers placed in an ``H x W`` yard at occupancy ``u`` after the slack clamp."""
    return max(0, min(int(u * W * H), W * H - (H - 1)))


def generate(params: GenParams) -> Instance:
    rng = random.Random(params.seed)
    P = params.ports
    R, C = params.ship_dims
    lo, hi = params.occupancy
    yards: list[list[list[int]]] = []
    origin: list[int] = []
    next_id = 1
    for o in range(1, P):
        H, W = params.dims(o)
        n_o = yard_count(H, W, rng.uniform(lo, hi))
        cols: list[list[int]] = [[] for _ in range(W)]
        open_stacks = list(range(W))
        for _ in range(n_o):
            pick = rng.randrange(len(open_stacks))
            s = open_stacks[pick]
            cols[s].append(next_id)
            origin.append(o)
            next_id += 1
            if len(cols[s]) == H:
                open_stacks[pick] = open_stacks[-1]
                open_stacks.pop()
        yards.append(cols)
    if params.dest_bias:
        weights = [math.exp(-params.dest_bias * k) for k in range(P)]
        draw = lambda o: rng.choices(range(o + 1, P + 1), weights[: P - o])[0]  # noqa: E731
    else:
        draw = lambda o: rng.randint(o + 1, P)  # noqa: E731
    for _ in range(params.max_retries):
        dest = [draw(o) for o in origin]
        if _max_aboard(P, origin, dest) <= R * C:
            break
    else:
        raise GenerationFailed(
            f"no destination draw fits a {R}x{C} ship after {params.max_retries} attempts"
        )
    specs = tuple(YardSpec(params.dims(o)[0], params.dims(o)[1], tuple(map(tuple, yards[o - 1]))) for o in range(1, P))
    return Instance(P, R, C, specs, {n: d for n, d in enumerate(dest, 1)})


def _max_aboard(P: int, origin: Sequence[int], dest: Sequence[int]) -> int:
    delta = [0] * (P + 2)
    for o, d in zip(origin, dest):
        delta[o] += 1
        delta[d] -= 1
    best = run = 0
    for p in range(1, P + 1):
        run += delta[p]
        best = max(best, run)
    return best


def tiny_instance(seed: int, max_containers: int = 5, ports: Sequence[int] = (2, 3)) -> Instance:
    """A small random instance with a tight ship, for exact search.

    The container count is drawn near ``max_containers`` and split over the
    yards; each yard gets 1 to 3 tiers and as few stacks as the slack rule
    allows; the ship has 1 or 2 stacks and usually no spare tier above the
    peak load, so blocking is common.  Everything is drawn from ``random.Random(seed)``.
    """
    rng = random.Random(seed)
    P = rng.choice(list(ports))
    total = rng.randint(max(1, max_containers - 2), max_containers)
    cuts = sorted(rng.randint(0, total) for _ in range(P - 2))
    counts = [b - a for a, b in zip([0, *cuts], [*cuts, total])]
    yards = []
    origin = []
    next_id = 1
    for o, n_o in enumerate(counts, 1):
        H = rng.randint(1, 3)
        W = max(1, -(-(n_o + H - 1) // H))
        cols: list[list[int]] = [[] for _ in range(W)]
        for _ in range(n_o):
            s = rng.choice([k for k in range(W) if len(cols[k]) < H])
            cols[s].append(next_id)
            origin.append(o)
            next_id += 1
        yards.append(YardSpec(H, W, tuple(map(tuple, cols))))
    dest = [rng.randint(o + 1, P) for o in origin]
    peak = max(1, _max_aboard(P, origin, dest))
    C = rng.choice((1, 1, 2))
    R = -(-peak // C) + (rng.random() < 0.25)
    return Instance(P, R, C, tuple(yards), {n: d for n, d in enumerate(dest, 1)})


# ---------------------------------------------------------------------------
# Text format


def dumps(instance: Instance) -> str:
    out = [MAGIC, f"PORTS {instance.ports}", f"SHIP {instance.ship_tiers} {instance.ship_stacks}"]
    for o, yard in enumerate(instance.yards, 1):
        out.append(f"YARD {o} {yard.tiers} {yard.stacks}")
        for j in range(yard.tiers, 0, -1):
            row = []
            for col in yard.columns:
                row.append(str(col[j - 1]) if j <= len(col) else ".")
            out.append(" ".join(row))
    out.append("DEST")
    for n in instance.containers:
        out.append(f"{n} {instance.destinations[n]}")
    out.append("END")
    return "\n".join(out) + "\n"


def serialize(instance: Instance, sink: TextIO | str | Path) -> str:
    text = dumps(instance)
    if isinstance(sink, (str, Path)):
        write_atomic(Path(sink), text)
    else:
        sink.write(text)
    return text


def write_atomic(path: Path | str, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _ints(tokens: list[str], count: int, lineno: int, what: str) -> list[int]:
    if len(tokens) != count:
        raise ParseError(lineno, "syntax", f"{what} expects {count} integers")
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(lineno, "syntax", f"{what} expects integers") from None


def loads(text: str) -> Instance:
    lines = [
        (no, raw.strip())
        for no, raw in enumerate(text.splitlines(), 1)
        if raw.strip() and not raw.strip().startswith("#")
    ]
    pos = 0

    def take() -> tuple[int, list[str]]:
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise ParseError(last, "syntax", "unexpected end of file")
        no, line = lines[pos]
        pos += 1
        return no, line.split()

    no, tok = take()
    if " ".join(tok) != MAGIC:
        raise ParseError(no, "syntax", f"expected header {MAGIC!r}")
    no, tok = take()
    if tok[:1] != ["PORTS"]:
        raise ParseError(no, "syntax", "expected PORTS")
    (P,) = _ints(tok[1:], 1, no, "PORTS")
    if P < 2:
        raise ParseError(no, "ports", "need at least 2 ports")
    no, tok = take()
    if tok[:1] != ["SHIP"]:
        raise ParseError(no, "syntax", "expected SHIP")
    R, C = _ints(tok[1:], 2, no, "SHIP")
    if R < 1 or C < 1:
        raise ParseError(no, "dims", "ship must be at least 1x1")

    yards = []
    where: dict[int, tuple[int, int]] = {}
    for o in range(1, P):
        no, tok = take()
        if tok[:1] != ["YARD"]:
            raise ParseError(no, "syntax", f"expected YARD {o}")
        o_read, H, W = _ints(tok[1:], 3, no, "YARD")
        if o_read != o:
            raise ParseError(no, "syntax", f"expected YARD {o}, got YARD {o_read}")
        if H < 1 or W < 1:
            raise ParseError(no, "dims", "yard must be at least 1x1")
        rows = []
        for _ in range(H):
            rno, cells = take()
            if len(cells) != W:
                raise ParseError(rno, "syntax", f"yard row needs {W} tokens, got {len(cells)}")
            rows.append((rno, cells))
        cols: list[list[int]] = [[] for _ in range(W)]
        for j in range(1, H + 1):
            rno, cells = rows[H - j]
            for i, cell in enumerate(cells, 1):
                if cell == ".":
                    continue
                try:
                    n = int(cell)
                except ValueError:
                    raise ParseError(rno, "syntax", f"bad cell {cell!r}") from None
                if n <= 0:
                    raise ParseError(rno, "id", f"container id {n} must be positive")
                if len(cols[i - 1]) != j - 1:
                    raise ParseError(rno, "floating", f"container {n} at stack {i} tier {j} has nothing below")
                if n in where:
                    raise ParseError(rno, "duplicate", f"container {n} appears twice")
                where[n] = (o, rno)
                cols[i - 1].append(n)
        yards.append(YardSpec(H, W, tuple(map(tuple, cols))))

    no, tok = take()
    if tok != ["DEST"]:
        raise ParseError(no, "syntax", "expected DEST")
    dest: dict[int, int] = {}
    while True:
        no, tok = take()
        if tok == ["END"]:
            break
        n, d = _ints(tok, 2, no, "destination line")
        if n not in where:
            raise ParseError(no, "destination", f"unknown container {n}")
        if n in dest:
            raise ParseError(no, "destination", f"container {n} listed twice")
        o = where[n][0]
        if not o < d <= P:
            raise ParseError(no, "destination", f"container {n} from port {o} cannot go to port {d}")
        dest[n] = d
    end_line = no
    missing = sorted(set(where) - set(dest))
    if missing:
        raise ParseError(end_line, "destination", f"container {missing[0]} has no destination")
    if pos != len(lines):
        raise ParseError(lines[pos][0], "syntax", "content after END")
    try:
        return Instance(P, R, C, tuple(yards), dest)
    except InstanceError as exc:
        raise ParseError(end_line, exc.rule, str(exc)) from None


def parse(source: TextIO | str | Path) -> Instance:
    """Parse an instance from a path or an open text stream."""
    if isinstance(source, (str, Path)):
        return loads(Path(source).read_text())
    return loads(source.read())


# ---------------------------------------------------------------------------
# Families


@dataclass(frozen=True)
class FamilyPreset:
    name: str
    ports: int
    yard: tuple[int, int]
    ship: tuple[int, int]
    containers: int
    yard_invented: bool = False
    group: str = field(default="")
    dest_bias: float = 0.0


def _preset(name, H, W, R, C, P, N, group, invented=False) -> FamilyPreset:
    return FamilyPreset(name, P, (H, W), (R, C), N, invented, group, _BIAS.get(name, 0.0))


# Ships in these families are too small for uniform destinations: the
# expected mid-route load exceeds R*C, so draws favour nearer ports.
_BIAS = {"5A": 1.0, "6A": 0.5, "7A": 0.3, "8A": 0.3}


_TABLE = [
    # name, H, W, R, C, P, N
    ("1A", 4, 3, 4, 5, 4, 30), ("2A", 4, 3, 4, 6, 6, 46), ("3A", 4, 3, 5, 9, 10, 92), ("4A", 4, 3, 6, 10, 15, 137),
    ("5A", 4, 6, 5, 5, 4, 58), ("6A", 4, 6, 6, 6, 6, 91), ("7A", 4, 6, 7, 9, 10, 162), ("8A", 4, 6, 7, 10, 15, 261),
    ("9A", 6, 10, 6, 14, 4, 131), ("10A", 6, 10, 6, 19, 6, 212), ("11A", 6, 10, 6, 30, 10, 409),
    ("12A", 6, 10, 6, 44, 15, 617),
    ("1B", 4, 3, 4, 10, 4, 30), ("2B", 4, 3, 4, 12, 6, 46), ("3B", 4, 3, 4, 18, 10, 92), ("4B", 4, 3, 4, 20, 15, 137),
    ("5B", 4, 6, 5, 18, 4, 58), ("6B", 4, 6, 6, 16, 6, 91), ("7B", 4, 6, 7, 20, 10, 162), ("8B", 4, 6, 7, 36, 15, 261),
    ("9B", 6, 10, 6, 28, 4, 131), ("10B", 6, 10, 6, 38, 6, 212), ("11B", 6, 10, 6, 60, 10, 409),
    ("12B", 6, 10, 6, 88, 15, 617),
]
_LARGE = [
    ("13A", 28, 73, 4, 2352), ("14A", 33, 91, 6, 3801), ("15A", 39, 108, 10, 6517), ("16A", 49, 133, 15, 10372),
    ("13B", 28, 146, 4, 2352), ("14B", 33, 182, 6, 3801), ("15B", 39, 216, 10, 6517), ("16B", 49, 266, 15, 10372),
]
# The real-scale table gives no yard dimensions; yards are 10 tiers deep and
# wide enough to hold the listed volume at 75% mean occupancy.
_REAL = [
    ("17A", 45, 551, 6, 30306, 808), ("18A", 45, 758, 6, 49315, 1315),
    ("19A", 45, 782, 6, 41403, 1104), ("20A", 45, 674, 6, 49256, 1313),
]

CATALOG: dict[str, FamilyPreset] = {}
for _n, _H, _W, _R, _C, _P, _N in _TABLE:
    CATALOG[_n] = _preset(_n, _H, _W, _R, _C, _P, _N, "A" if _n.endswith("A") else "B")
for _n, _R, _C, _P, _N in _LARGE:
    CATALOG[_n] = _preset(_n, 10, 100, _R, _C, _P, _N, "paper-large")
for _n, _R, _C, _P, _N, _W in _REAL:
    CATALOG[_n] = _preset(_n, 10, _W, _R, _C, _P, _N, "real-scale", invented=True)


def family(name: str, seeds: Iterable[int] = (0,)) -> list[GenParams]:
    """Generator presets for a named family, one per seed."""
    try:
        preset = CATALOG[name.upper()]
    except KeyError:
        raise UnknownFamily(name) from None
    return [
        GenParams(preset.ports, preset.yard, preset.ship, seed=s, name=preset.name, dest_bias=preset.dest_bias)
        for s in seeds
    ]


def family_names(group: str | None = None) -> list[str]:
    return [n for n, p in CATALOG.items() if group is None or p.group == group]


__all__ = [
    "CATALOG",
    "FamilyPreset",
    "GenParams",
    "GenerationFailed",
    "ParseError",
    "UnknownFamily",
    "dumps",
    "family",
    "family_names",
    "generate",
    "loads",
    "parse",
    "serialize",
    "tiny_instance",
    "write_atomic",
    "yard_count",
]
