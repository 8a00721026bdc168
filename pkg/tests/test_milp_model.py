from __future__ import annotations

import itertools
import random
from collections import defaultdict
from pathlib import Path

import pytest

from helpers import expected_variables
from mpspcrp.heuristics import hr1
from mpspcrp.instances import family, generate, parse, tiny_instance
from mpspcrp.milp import (
    InfeasibleFixing,
    ModelShape,
    ModelTooLarge,
    build_crp_loading_model,
    build_model,
    build_mpsp_model,
    check_assignment,
    emit_lp,
    family_constraint_counts,
    family_variable_counts,
    read_lp,
    ship_valuation,
)
from mpspcrp.milp.lp import LpSyntaxError
from mpspcrp.milp.model import VAR_FAMILIES, constraint_count, parse_var_name, var_name, variable_count

DATA = Path(__file__).parent / "data"


SMALL = [tiny_instance(s, 6, ports=(2, 3, 4)) for s in range(20)]


@pytest.mark.parametrize("inst", SMALL, ids=[f"tiny{s}" for s in range(20)])
def test_variables_match_direct_enumeration(inst):
    model = build_model(inst)
    listed = list(model.variables())
    assert len(listed) == len(set(listed))
    assert set(listed) == expected_variables(inst)
    assert len(listed) == model.variable_count
    by_family = defaultdict(int)
    for key in listed:
        by_family[key[0]] += 1
    assert dict(by_family) == {f: v for f, v in family_variable_counts(model.shape).items() if v}


@pytest.mark.parametrize("inst", SMALL, ids=[f"tiny{s}" for s in range(20)])
def test_rows_match_their_counts(inst):
    model = build_model(inst)
    rows = list(model.rows())
    assert len(rows) == model.constraint_count
    names = [r.name for r in rows]
    assert len(names) == len(set(names))
    per_family = defaultdict(int)
    for row in rows:
        per_family[row.family] += 1
        keys = [k for k, _ in row.terms]
        assert len(keys) == len(set(keys))
        assert all(model.has_variable(k) for k in keys)
        assert row.sense in ("<=", ">=", "=")
    counts = family_constraint_counts(model.shape)
    assert all(per_family[k] == counts[k] for k in range(24))


@pytest.mark.parametrize(
    "stacks, variables, constraints",
    [(5, 57_080, 30_373), (10, 63_460, 37_095)],
)
def test_reference_shapes(stacks, variables, constraints):
    shape = ModelShape(4, 4, stacks, ((4, 3, 10),) * 3)
    assert variable_count(shape) == variables
    # Row counts depend on index-range conventions; stay within a few percent.
    assert abs(constraint_count(shape) - constraints) / constraints < 0.05


def test_family_counts_sum_to_totals():
    shape = ModelShape.of(generate(family("2B", [0])[0]))
    assert sum(family_variable_counts(shape).values()) == variable_count(shape)
    assert sum(family_constraint_counts(shape).values()) == constraint_count(shape)
    assert variable_count(shape, ("w", "u")) == family_variable_counts(shape)["w"] + family_variable_counts(shape)["u"]


def test_single_container_model_by_brute_force():
    inst = parse(DATA / "single.txt")
    model = build_model(inst)
    keys = list(model.variables())
    assert [var_name(k) for k in keys] == [
        "b(1,1,1,1,1)", "v(1,1,1)", "x(1,1,1,1,1,1,1)", "y(1,1,1,1,1)",
        "z(1,1,1,1)", "q(1,2,1,1)", "w(1,2,2,1,1)", "u(1,1,1)",
    ]
    assert model.constraint_count == 13
    feasible = []
    for bits in itertools.product((0, 1), repeat=len(keys)):
        ones = [k for k, b in zip(keys, bits) if b]
        if check_assignment(model, ones).feasible:
            feasible.append(set(ones))
    assert feasible
    # The model leaves the final y free, so more than one point survives, all at cost zero.
    assert all(sum(model.is_objective_var(k) for k in point) == 0 for point in feasible)
    assert {("b", 1, 1, 1, 1, 1), ("z", 1, 1, 1, 1), ("w", 1, 2, 2, 1, 1), ("u", 1, 1, 1)} <= set.intersection(*feasible)


def test_objective_is_yard_moves_plus_early_unloads():
    model = build_model(tiny_instance(4, 6, ports=(4,)))
    terms = list(model.objective())
    assert all(coef == 1 for _, coef in terms)
    keys = [k for k, _ in terms]
    assert all(k[0] == "x" or (k[0] == "w" and k[3] < k[2]) for k in keys)
    expected = sum(1 for k in model.variables() if k[0] == "x" or (k[0] == "w" and k[3] < k[2]))
    assert len(keys) == expected


@pytest.mark.parametrize("seed", range(8))
def test_row_incidence_is_a_superset(seed):
    model = build_model(tiny_instance(seed, 5, ports=(3, 4)))
    seen = defaultdict(set)
    for row in model.rows():
        for key, _ in row.terms:
            seen[key].add((row.family, row.index))
    for key in model.variables():
        assert seen[key] <= model.rows_touching(key), var_name(key)


def test_default_big_m():
    inst = generate(family("5B", [0])[0])
    model = build_model(inst)
    assert model.big_M == max(max(y.tiers * y.stacks for y in inst.yards), inst.ship_tiers * inst.ship_stacks)
    assert build_model(inst, big_M=999).big_M == 999


def test_size_cap():
    inst = generate(family("1A", [0])[0])
    with pytest.raises(ModelTooLarge):
        build_model(inst, max_variables=1000)


def test_variable_names_round_trip():
    model = build_model(tiny_instance(2, 5, ports=(3,)))
    for key in model.variables():
        assert parse_var_name(var_name(key)) == key
    with pytest.raises(ValueError):
        parse_var_name("k(1,2)")


# -- LP text -----------------------------------------------------------------


def test_lp_text_is_stable():
    model = build_model(parse(DATA / "single.txt"))
    assert emit_lp(model) == (DATA / "single.lp").read_text()


@pytest.mark.parametrize("seed", range(4))
def test_lp_round_trip(seed, tmp_path):
    model = build_model(tiny_instance(seed, 6, ports=(3, 4)))
    path = tmp_path / "m.lp"
    emit_lp(model, path)
    text = path.read_text()
    assert text == emit_lp(model)
    lp = read_lp(text)
    assert lp.binaries == list(model.variable_names())
    assert lp.objective == [(var_name(k), c) for k, c in model.objective()]
    rows = [(r.name, [(var_name(k), c) for k, c in r.terms], r.sense, r.rhs) for r in model.rows()]
    assert lp.rows == rows
    assert not list(tmp_path.glob("*.tmp"))


def test_lp_reader_rejects_bad_senses():
    with pytest.raises(LpSyntaxError):
        read_lp("Minimize\n obj: + a\nSubject To\n r: + a => 1\nBinary\n a\nEnd\n")


# -- stage models ----------------------------------------------------------------


def test_ship_stage_model_keeps_ship_side_only():
    inst = tiny_instance(5, 6, ports=(4,))
    model = build_mpsp_model(inst)
    assert {k[0] for k in model.variables()} == {"w", "u"}
    assert {r.family for r in model.rows()} <= set(range(19, 24))
    assert model.variable_count == len(list(model.variables()))


@pytest.mark.parametrize("seed", range(10))
def test_yard_stage_model_with_a_feasible_fixing(seed):
    inst = tiny_instance(seed, 6, ports=(3, 4))
    plan = hr1(inst).best_plan
    fixed = ship_valuation(inst, plan)
    assert check_assignment(build_mpsp_model(inst), fixed).feasible
    stage = build_crp_loading_model(inst, fixed)
    assert {k[0] for k in stage.variables()} <= set(VAR_FAMILIES[:6])
    assert all(k[0] not in ("w", "u") for r in stage.rows() for k, _ in r.terms)
    names = {var_name(k): 1 for k in fixed}
    assert build_crp_loading_model(inst, names).fixed == fixed


def test_yard_stage_rejects_bad_fixings():
    inst = tiny_instance(3, 6, ports=(3,))
    with pytest.raises(InfeasibleFixing):
        build_crp_loading_model(inst, set())
    with pytest.raises(InfeasibleFixing):
        build_crp_loading_model(inst, {("b", 1, 1, 1, 1, 1)})
    with pytest.raises(InfeasibleFixing):
        build_crp_loading_model(inst, {"u(1,1,1)": 2})


def test_yard_stage_rows_fold_fixed_values():
    inst = tiny_instance(7, 6, ports=(3, 4))
    fixed = ship_valuation(inst, hr1(inst).best_plan)
    full = build_model(inst)
    stage = build_crp_loading_model(inst, fixed)
    rng = random.Random(0)
    for k in (13, 15, 17, 18):
        for idx in rng.sample(list(full.row_keys(k)), min(5, len(list(full.row_keys(k))))):
            whole = full.row(k, idx)
            folded = stage.row(k, idx)
            const = sum(c for key, c in whole.terms if key in fixed)
            if folded is not None:
                assert folded.rhs == whole.rhs - const
                assert all(key[0] not in ("w", "u") for key, _ in folded.terms)
