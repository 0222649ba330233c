import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ivars
from randgen import random_rpg
from rpgcache import benchmarks
from rpgcache.logic import ParseError, SortError
from rpgcache.logic import terms as T
from rpgcache.objective import BUCHI, Objective, UnsupportedObjective
from rpgcache.rpg import (
    Game,
    Transition,
    bottom,
    finitize_semantics,
    int_range,
    is_empty,
    join,
    leq,
    meet,
    negate_within_inv,
    parse_game,
    print_game,
    region,
    region_from_json,
    validate,
)

x, samp, req = ivars("x", "samp", "req")
c = T.const

HEADER = "(theory LIA) (inputs (i Int)) (vars (x Int))\n"


def one_loc(*transitions):
    return Game("LIA", [T.var("i", T.Sort.INT)], [x], ["l"], {}, list(transitions))


def test_parse_robot():
    g, obj = benchmarks.robot_collect()
    g2, obj2 = parse_game(print_game(g, obj))
    assert g2 == g and obj2 == obj
    assert list(g2.locations) == ["base", "mine", "move"]
    assert {v.val for v in g2.variables} == {"samp", "req"}
    assert obj2 == Objective(BUCHI, {"base"})


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_game(HEADER + "(locations) (transitions) (objective (buchi))")
    with pytest.raises(SortError):
        parse_game(HEADER + "(locations l) (transitions (l (>= q 0) () l)) (objective (buchi l))")
    with pytest.raises(ParseError):
        parse_game(HEADER + "(locations l) (transitions (l true () m)) (objective (buchi l))")
    with pytest.raises(UnsupportedObjective):
        parse_game(HEADER + "(locations l) (transitions (l true () l)) (objective (parity l))")


def test_identity_updates_are_implicit():
    g, _ = parse_game(HEADER + "(locations l) (transitions (l true ((x x)) l)) (objective (buchi l))")
    assert g.transitions[0].is_identity()


def test_validate_robot(backend):
    g, _ = benchmarks.robot_collect()
    assert validate(g, backend).ok


def test_validate_overlap(backend):
    g = one_loc(
        Transition.make("l", T.ge(x, c(0)), {}, "l"),
        Transition.make("l", T.ge(x, c(1)), {}, "l"),
        Transition.make("l", T.lt(x, c(0)), {}, "l"),
    )
    (r,) = validate(g, backend).locations
    assert not r.disjoint and r.cover
    assert r.witnesses["disjoint"]["x"] >= 1


def test_validate_cover(backend):
    g = one_loc(Transition.make("l", T.gt(x, c(0)), {}, "l"))
    rep = validate(g, backend)
    (r,) = rep.locations
    assert not r.cover and r.witnesses["cover"]["x"] <= 0
    assert not rep.ok and rep.failures()
    assert rep.to_json()["ok"] is False


def test_region_lattice(backend):
    g, _ = benchmarks.robot_collect()
    a = region(g, {"mine": T.ge(samp, c(1))})
    b = region(g, {"mine": T.le(samp, c(0))})
    assert join(a, b)["mine"] is T.or_(T.ge(samp, c(1)), T.le(samp, c(0)))
    assert is_empty(backend, region(g, {"mine": T.and_(T.ge(samp, req), T.lt(samp, req))}))
    assert is_empty(backend, meet(a, b))
    assert leq(backend, bottom(g), a)
    assert region_from_json(g, a.to_json()) == a
    n = negate_within_inv(g, a)
    assert backend.equiv(n["mine"], T.and_(g.inv["mine"], T.lt(samp, c(1))))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_join_is_upper_bound(backend, seed):
    from randgen import random_region

    rng = random.Random(seed)
    g = random_rpg(rng)
    d, e = random_region(rng, g), random_region(rng, g)
    assert leq(backend, d, join(d, e)) and leq(backend, e, join(d, e))
    assert leq(backend, meet(d, e), d)


def test_finitize_robot_counts():
    g, _ = benchmarks.robot_collect()
    r = {"samp": int_range(0, 2), "req": int_range(0, 2), "i": [0, 1]}
    eg = finitize_semantics(g, r)
    assert eg.n_env == 3 * 9
    assert eg.closed
    # req >= 0 removes the negative values at mine only
    r["req"] = int_range(-1, 1)
    assert finitize_semantics(g, r).n_env == 3 * 9 - 3


def test_finitize_empty_range():
    g, _ = benchmarks.robot_collect()
    eg = finitize_semantics(g, {"samp": [], "req": [0], "i": [0]})
    assert eg.graph.n == 0


def test_finitize_self_loop_successors():
    g = one_loc(Transition.make("l", T.TRUE, {}, "l"))
    eg = finitize_semantics(g, {"x": int_range(-2, 2), "i": int_range(0, 3)})
    for v in eg.env_vertices():
        assert len(eg.graph.succ[v]) == 4


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_print_parse_round_trip_random(seed):
    g = random_rpg(random.Random(seed))
    obj = Objective(BUCHI, {g.locations[0]})
    text = print_game(g, obj)
    g2, obj2 = parse_game(text)
    assert print_game(g2, obj2) == text
    assert g2 == g
