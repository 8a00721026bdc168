"""LP text writer and a reader for the same dialect."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .model import MilpModel, VarKey, var_name

TERMS_PER_LINE = 8


def _terms(terms: Iterable[tuple[VarKey, int]]) -> Iterable[str]:
    for key, coef in terms:
        if coef == 1:
            yield f"+ {var_name(key)}"
        elif coef == -1:
            yield f"- {var_name(key)}"
        elif coef >= 0:
            yield f"+ {coef} {var_name(key)}"
        else:
            yield f"- {-coef} {var_name(key)}"


def _wrapped(head: str, parts: Iterable[str], tail: str, out: IO[str]) -> None:
    line = [head]
    count = 0
    for part in parts:
        if count == TERMS_PER_LINE:
            out.write(" ".join(line) + "\n")
            line = ["  "]
            count = 0
        line.append(part)
        count += 1
    if count == 0 and len(line) == 1:
        line.append("0")
    if tail:
        line.append(tail)
    out.write(" ".join(line) + "\n")


def write_lp(model: MilpModel, out: IO[str]) -> None:
    kind = {"integrated": "integrated", "mpsp": "ship-side stage", "crp": "yard-side stage"}[model.kind]
    out.write(f"\\ MPSP-CRP {kind} model: {model.variable_count} binaries, M = {model.big_M}\n")
    out.write("Minimize\n")
    _wrapped(" obj:", _terms(model.objective()), "", out)
    out.write("Subject To\n")
    for row in model.rows():
        _wrapped(f" {row.name}:", _terms(row.terms), f"{row.sense} {row.rhs}", out)
    out.write("Binary\n")
    names: list[str] = []
    for key in model.variables():
        names.append(var_name(key))
        if len(names) == TERMS_PER_LINE:
            out.write(" " + " ".join(names) + "\n")
            names = []
    if names:
        out.write(" " + " ".join(names) + "\n")
    out.write("End\n")


def emit_lp(model: MilpModel, sink: str | IO[str] | None = None) -> str | None:
    """Write the model in LP format.

    With a path, the file is written atomically and None is returned; with a
    stream the text is written there; with no sink the text is returned.
    """
    if sink is None:
        buf = io.StringIO()
        write_lp(model, buf)
        return buf.getvalue()
    if isinstance(sink, (str, os.PathLike)):
        path = Path(sink)
        tmp = path.with_name(path.name + ".tmp")
        try:
            with open(tmp, "w") as fh:
                write_lp(model, fh)
            tmp.replace(path)
        except BaseException:
            tmp.unlink(missing_ok=True)
            raise
        return None
    write_lp(model, sink)
    return None


@dataclass
class LpFile:
    objective: list[tuple[str, int]] = field(default_factory=list)
    rows: list[tuple[str, list[tuple[str, int]], str, int]] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)


class LpSyntaxError(ValueError):
    pass


def _parse_terms(tokens: list[str]) -> list[tuple[str, int]]:
    out = []
    k = 0
    while k < len(tokens):
        sign = tokens[k]
        if sign not in "+-":
            raise LpSyntaxError(f"expected sign, got {sign!r}")
        k += 1
        coef = 1
        if tokens[k].lstrip("-").isdigit():
            coef = int(tokens[k])
            k += 1
        out.append((tokens[k], coef if sign == "+" else -coef))
        k += 1
    return out


def read_lp(text: str) -> LpFile:
    """Parse LP text in the dialect written by :func:`emit_lp`."""
    lp = LpFile()
    section = None
    statements: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        if line in ("Minimize", "Subject To", "Binary", "End"):
            section = line
            continue
        if section == "Binary":
            lp.binaries.extend(line.split())
        elif raw.startswith("  ") and statements:
            statements[-1] += " " + line
        else:
            statements.append(line)
            if section == "Minimize":
                statements[-1] = "@obj " + statements[-1]
    for stmt in statements:
        if stmt.startswith("@obj "):
            tokens = stmt[5:].split()
            if tokens[0] != "obj:":
                raise LpSyntaxError("objective must be named obj")
            body = tokens[1:]
            lp.objective = [] if body == ["0"] else _parse_terms(body)
            continue
        tokens = stmt.split()
        name = tokens[0].rstrip(":")
        sense, rhs = tokens[-2], int(tokens[-1])
        if sense not in ("<=", ">=", "="):
            raise LpSyntaxError(f"row {name}: bad sense {sense!r}")
        lp.rows.append((name, _parse_terms(tokens[1:-2]), sense, rhs))
    return lp


__all__ = ["LpFile", "LpSyntaxError", "emit_lp", "read_lp", "write_lp"]
