import math

import pytest

from gradcap.explore import BudgetExceeded, canonical_form, explore_exhaustive, store_hash
from gradcap.parser import parse_program
from gradcap.runtime import Reason, RoundRobin, SeededRandom, run

from .conftest import load_corpus


def test_single_actor_has_one_interleaving():
    r = explore_exhaustive(load_corpus("hello_unit"))
    assert r.interleavings == 1 and r.complete
    assert r.reasons() == {"AllDone"}


def test_two_independent_actors_count_interleavings():
    # After the spawn, main has m steps left (bind `a`, one sequencing let)
    # and the child has n (one sequencing let). Independent steps interleave
    # in C(m + n, n) ways.
    p = parse_program("main { let a = spawn { unit; unit }; unit; unit }")
    m, n = 2, 1
    r = explore_exhaustive(p)
    assert r.interleavings == math.comb(m + n, n)

    p = parse_program("main { let a = spawn { unit; unit; unit; unit }; unit; unit; unit }")
    m, n = 3, 3
    assert explore_exhaustive(p).interleavings == math.comb(m + n, n)
    assert len(r.summaries) == 1


def test_arrival_race_has_two_outcomes():
    r = explore_exhaustive(load_corpus("arrival_race"))
    assert r.complete
    assert r.reasons() == {"AllDone"}
    assert len(r.summaries) == 2


def test_every_random_run_lands_on_an_explored_outcome():
    p = load_corpus("arrival_race")
    explored = {s.store_hash for s in explore_exhaustive(p).summaries}
    for seed in range(30):
        out, _ = run(p, SeededRandom(seed))
        assert store_hash(out.store) in explored


def test_canonical_hash_ignores_fresh_name_numbering():
    p = load_corpus("spawn_reply")
    a, _ = run(p, RoundRobin())
    b, _ = run(p, SeededRandom(11))
    assert canonical_form(a.store) == canonical_form(b.store)


def test_budget():
    p = load_corpus("fifo_order")
    r = explore_exhaustive(p, node_limit=500)
    assert not r.complete and r.nodes == 501
    with pytest.raises(BudgetExceeded):
        explore_exhaustive(p, node_limit=500, strict=True)


def test_depth_bound_reports_step_limit():
    p = parse_program("main { unit; unit; unit }")
    r = explore_exhaustive(p, max_steps=1)
    assert r.reasons() == {Reason.STEP_LIMIT.value}
