"""Sparse 0/1 valuations and constraint checking by substitution."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .model import MilpModel, Row, VarKey, parse_var_name, var_name, var_sort_key


class MissingVariable(KeyError):
    pass


class UnknownVariable(KeyError):
    pass


class Assignment(Mapping[str, int]):
    """A complete valuation of a model's variables, stored as the set of ones.

    Every variable of ``model`` is valued: names not in ``ones`` map to 0.
    """

    def __init__(self, model: MilpModel, ones: Iterable[VarKey]):
        self.model = model
        self.ones = frozenset(ones)
        for key in self.ones:
            if not model.has_variable(key):
                raise UnknownVariable(f"{var_name(key)} is not a variable of the model")

    def __getitem__(self, name: str) -> int:
        try:
            key = parse_var_name(name)
        except ValueError:
            raise KeyError(name) from None
        if not self.model.has_variable(key):
            raise KeyError(name)
        return int(key in self.ones)

    def __iter__(self) -> Iterator[str]:
        return self.model.variable_names()

    def __len__(self) -> int:
        return self.model.variable_count

    def __contains__(self, name: object) -> bool:
        if not isinstance(name, str):
            return False
        try:
            return self.model.has_variable(parse_var_name(name))
        except ValueError:
            return False

    def nonzero(self) -> list[VarKey]:
        """Keys valued 1, in emission order."""
        return sorted(self.ones, key=var_sort_key)

    @property
    def objective(self) -> int:
        return sum(1 for key in self.ones if MilpModel.is_objective_var(key))

    def flipped(self, key: VarKey) -> "Assignment":
        return Assignment(self.model, self.ones ^ {key})

    def restricted(self, model: MilpModel) -> "Assignment":
        """The same ones viewed in ``model``, dropping families it lacks."""
        return Assignment(model, (k for k in self.ones if k[0] in model.var_families))


@dataclass(frozen=True)
class RowViolation:
    name: str
    lhs: int
    sense: str
    rhs: int

    @property
    def residual(self) -> int:
        return self.lhs - self.rhs

    def __str__(self) -> str:
        return f"{self.name}: {self.lhs} {self.sense} {self.rhs} fails (residual {self.residual})"


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[RowViolation, ...]
    objective: int
    rows_checked: int

    @property
    def feasible(self) -> bool:
        return not self.violations

    def families(self) -> set[int]:
        return {int(v.name[2:].split("_")[0]) for v in self.violations}


def _ones_for(model: MilpModel, values) -> frozenset[VarKey]:
    if isinstance(values, Assignment):
        if values.model is not model:
            return frozenset(k for k in values.ones if _accept(model, k))
        return values.ones
    if isinstance(values, Mapping):
        ones = set()
        for key in model.variables():
            name = var_name(key)
            if name not in values:
                raise MissingVariable(f"no value for {name}")
            val = values[name]
            if val not in (0, 1):
                raise ValueError(f"{name} has non-binary value {val!r}")
            if val:
                ones.add(key)
        extra = len(values) - model.variable_count
        if extra > 0:
            raise UnknownVariable(f"{extra} names are not variables of the model")
        return frozenset(ones)
    out = frozenset(values)
    for key in out:
        if not _accept(model, key):
            raise UnknownVariable(f"{var_name(key)} is not a variable of the model")
    return out


def _accept(model: MilpModel, key: VarKey) -> bool:
    if model.has_variable(key):
        return True
    # fixed ship-side values may ride along in a loading-stage check
    return model.fixed is not None and key in model.fixed


def check_assignment(model: MilpModel, values) -> FeasibilityReport:
    """Evaluate every row of ``model`` at ``values``.

    ``values`` is an Assignment, a mapping from every variable name to 0/1, or
    an iterable of keys valued 1.  Rows not touched by a 1 are evaluated at
    zero in bulk per family, which is exact because each family either holds
    at zero for every row or is evaluated row by row.
    """
    ones = _ones_for(model, values)
    free = frozenset(k for k in ones if k[0] in model.var_families)
    todo: set[tuple[int, tuple]] = set()
    for key in free:
        todo |= model.rows_touching(key)
    violations: list[RowViolation] = []
    checked = 0

    def evaluate(row: Row | None) -> None:
        nonlocal checked
        if row is None:
            return
        checked += 1
        lhs = sum(coef for key, coef in row.terms if key in free)
        if not row.holds(lhs):
            violations.append(RowViolation(row.name, lhs, row.sense, row.rhs))

    full = [k for k in model.row_families if not model.zero_feasible(k)]
    for k in model.row_families:
        if k in full:
            for idx in model.row_keys(k):
                evaluate(model.row(k, idx))
                todo.discard((k, idx))
    for k, idx in sorted(todo):
        evaluate(model.row(k, idx))
    violations.sort(key=lambda v: _row_order(v.name))
    objective = sum(1 for key in free if MilpModel.is_objective_var(key))
    return FeasibilityReport(tuple(violations), objective, checked)


def _row_order(name: str) -> tuple[int, ...]:
    return tuple(int(p) for p in name[2:].split("_"))


__all__ = [
    "Assignment",
    "FeasibilityReport",
    "MissingVariable",
    "RowViolation",
    "UnknownVariable",
    "check_assignment",
]
