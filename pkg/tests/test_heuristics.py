from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpspcrp.core import ShipState, validate_plan
from mpspcrp.heuristics import (
    NoCapacity,
    hr1,
    hr2,
    score_stacks,
    select_stack_hr1,
    select_stack_hr2,
)
from mpspcrp.instances import family, generate, tiny_instance


@pytest.mark.parametrize(
    "scores, dest, expected",
    [
        ((4, 4, 5, 3), 5, 3),
        ((4, 4, 5, 3), 4, 1),
        ((4, 4, 5, 3), 3, 4),
        ((4, 4, 5, 3), 6, 3),
        ((0, 2, 0), 5, 2),
        ((7, 7), 2, 1),
        ((0, 6, 3), 4, 2),
    ],
)
def test_deterministic_rule(scores, dest, expected):
    assert select_stack_hr1(scores, dest) == expected


@pytest.mark.parametrize("chooser", [select_stack_hr1, lambda s, d: select_stack_hr2(s, d, random.Random(0))])
def test_full_ship_has_no_stack(chooser):
    with pytest.raises(NoCapacity):
        chooser((0, 0, 0), 2)


def test_score_marks_empty_and_full_stacks():
    dest = {1: 3, 2: 5, 3: 2}
    ship = ShipState(3, [[1, 2], [], [3, 1, 2]], dest)
    assert score_stacks(ship, 6, 3) == (3, 7, 0)
    assert score_stacks(ship, 6, 2) == (0, 7, 0)


def test_random_rule_is_uniform_over_open_stacks():
    rng = random.Random(42)
    draws = Counter(select_stack_hr2((2, 0, 3, 1), 4, rng) for _ in range(30_000))
    assert set(draws) == {1, 3, 4}
    for c in (1, 3, 4):
        assert abs(draws[c] / 30_000 - 1 / 3) <= 0.02


@given(
    st.lists(st.integers(0, 9), min_size=1, max_size=8),
    st.integers(2, 9),
    st.integers(0, 1000),
)
def test_random_rule_agrees_when_a_stack_fits(scores, dest, seed):
    if any(s >= dest for s in scores):
        assert select_stack_hr2(scores, dest, random.Random(seed)) == select_stack_hr1(scores, dest)


@pytest.mark.parametrize("name", ["1A", "2B", "3A", "5B", "6A", "7B", "8A"])
def test_heuristic_plans_validate(name):
    inst = generate(family(name, [4])[0])
    run1 = hr1(inst)
    report = validate_plan(inst, run1.best_plan)
    assert report.ok, report.violations[:3]
    assert report.objective == run1.best_objective
    run2 = hr2(inst, rounds=50, seed=3)
    report2 = validate_plan(inst, run2.best_plan)
    assert report2.ok
    assert run2.best_objective == report2.objective <= run1.best_objective


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 100))
def test_random_rounds_never_lose_to_the_deterministic_plan(seed, hr2_seed):
    inst = tiny_instance(seed, 8, ports=(3, 4, 5))
    base = hr1(inst)
    run = hr2(inst, rounds=30, seed=hr2_seed)
    assert run.best_objective <= base.best_objective
    assert validate_plan(inst, run.best_plan).ok


def test_random_rounds_are_reproducible():
    inst = generate(family("2A", [1])[0])
    a = hr2(inst, rounds=200, seed=11)
    b = hr2(inst, rounds=200, seed=11)
    assert a.best_plan == b.best_plan
    assert a.best_round == b.best_round


def test_parallel_search_matches_serial():
    inst = generate(family("3A", [2])[0])
    serial = hr2(inst, rounds=120, seed=5)
    parallel = hr2(inst, rounds=120, seed=5, workers=2)
    assert parallel.best_plan == serial.best_plan
    assert parallel.best_round == serial.best_round


def test_search_skips_rounds_when_the_first_plan_is_free():
    for seed in range(200):
        inst = tiny_instance(seed, 6, ports=(3, 4))
        if hr1(inst).best_objective == 0:
            run = hr2(inst, rounds=1000, seed=0)
            assert run.rounds_executed == 0
            assert run.best_round == 0
            break
    else:
        pytest.fail("no instance with a relocation-free plan")


def test_search_runs_every_round_without_zero():
    inst = generate(family("3A", [1])[0])
    run = hr2(inst, rounds=40, seed=2)
    assert run.best_objective > 0
    assert run.rounds_executed == 40


def test_time_budget_caps_rounds():
    inst = generate(family("4B", [0])[0])
    run = hr2(inst, rounds=10**6, time_budget=0.2, seed=1)
    assert run.rounds_executed < 10**6
    assert validate_plan(inst, run.best_plan).ok
