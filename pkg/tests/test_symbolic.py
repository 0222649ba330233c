import random

import pytest

from conftest import ivars
from randgen import box_ranges, random_objective, random_region, random_valid_rpg
from rpgcache import benchmarks
from rpgcache.caching import CacheEntry
from rpgcache.logic import terms as T
from rpgcache.objective import BUCHI, ENV, KINDS, REACH, SAFETY, SYS, Objective
from rpgcache.oracle import env_part, explicit_attractor, explicit_solve
from rpgcache.rpg import Game, Transition, bottom, finitize_semantics, inv_region, join, region
from rpgcache.symbolic import (
    AccelCertificate,
    Engine,
    IterationLimit,
    SolveOptions,
    Stats,
    check_certificate,
    cpre,
    solve,
)

samp, req, x, k = ivars("samp", "req", "x", "k")
i = T.var("i", T.Sort.INT)
c = T.const


@pytest.fixture(scope="module")
def robot():
    return benchmarks.robot_collect()


def base_move(g):
    return region(g, {"base": T.TRUE, "move": T.TRUE})


def test_cpre_robot_steps(backend, robot):
    g, _ = robot
    inv = g.inv["mine"]
    one = cpre(g, backend, SYS, base_move(g))
    assert backend.equiv(T.and_(inv, one["mine"]), T.and_(inv, T.ge(samp, req)))
    two = cpre(g, backend, SYS, join(base_move(g), one))
    assert backend.equiv(T.and_(inv, two["mine"]), T.and_(inv, T.ge(samp, T.sub(req, c(1)))))


def test_cpre_bottom(backend, robot):
    g, _ = robot
    for p in (SYS, ENV):
        assert cpre(g, backend, p, bottom(g)) == bottom(g)


def test_attractor_robot(backend, robot):
    g, _ = robot
    st = Stats()
    a = Engine(g, backend).attractor(SYS, base_move(g), stats=st)
    assert backend.equiv(a["mine"], g.inv["mine"])
    assert st.iterations <= 20 and st.accel_hits >= 1
    assert Engine(g, backend).attractor(SYS, bottom(g)) == bottom(g)


def test_attractor_robot_without_acceleration(backend, robot):
    g, _ = robot
    eng = Engine(g, backend, SolveOptions(accel=False, max_iters=30))
    with pytest.raises(IterationLimit) as info:
        eng.attractor(SYS, base_move(g))
    last = info.value.region["mine"]
    assert backend.implies(last, g.inv["mine"]) and not backend.implies(g.inv["mine"], last)


def test_robot_certificate(backend, robot):
    g, _ = robot
    a = region(g, {"base": T.TRUE, "move": T.TRUE, "mine": T.ge(samp, req)})
    cert = AccelCertificate("mine", g.inv["mine"], T.sub(req, samp), 1)
    assert check_certificate(g, backend, SYS, a, cert)
    assert not check_certificate(g, backend, SYS, a, AccelCertificate("mine", g.inv["mine"], T.sub(req, samp), 0))
    assert not check_certificate(g, backend, SYS, a, AccelCertificate("mine", T.TRUE, T.sub(req, samp), 1))
    psi, certs = Engine(g, backend).accelerate(SYS, "mine", a)
    assert backend.equiv(T.and_(g.inv["mine"], psi), g.inv["mine"])
    assert all(check_certificate(g, backend, SYS, a, ct) for ct in certs)


def test_no_self_loop_no_acceleration(backend, robot):
    g, _ = robot
    assert Engine(g, backend).accelerate(SYS, "base", base_move(g)) is None


def env_sign_game():
    ts = [
        Transition.make("l", T.ge(x, c(0)), {}, "goal"),
        Transition.make("l", T.lt(x, c(0)), {x: T.add(x, i)}, "l"),
        Transition.make("goal", T.TRUE, {}, "goal"),
    ]
    return Game("LIA", [i], [x], ["l", "goal"], {}, ts)


def test_env_controlled_increment_not_accelerated(backend):
    g = env_sign_game()
    a = region(g, {"goal": T.TRUE, "l": T.ge(x, c(0))})
    res = Engine(g, backend).accelerate(SYS, "l", a)
    assert res is None or backend.implies(res[0], a["l"])
    bad = AccelCertificate("l", T.TRUE, T.neg(x), 1)
    assert not check_certificate(g, backend, SYS, a, bad)
    # witness i = -1 keeps x negative forever
    w = Engine(g, backend).attractor(SYS, region(g, {"goal": T.TRUE}))
    assert backend.equiv(w["l"], T.ge(x, c(0)))


def xk_game():
    ts = [Transition.make("l", T.TRUE, {}, "l")]
    return Game("LIA", [i], [x, k], ["l"], {}, ts)


def test_strengthen_target(backend):
    g = xk_game()
    eng = Engine(g, backend)
    targ = region(g, {"l": T.ge(x, c(0))})
    a = region(g, {"l": T.and_(T.ge(x, c(0)), T.ge(k, c(5)))})
    assert backend.equiv(eng.strengthen_target(targ, a, [k]), T.ge(k, c(5)))
    assert backend.is_valid(eng.strengthen_target(targ, targ, [k]))
    assert not backend.is_sat(eng.strengthen_target(targ, bottom(g), [k]))


def test_empty_cache_matches_plain_attractor(backend, robot):
    g, _ = robot
    t1, t2 = [], []
    a1 = Engine(g, backend).attractor(SYS, base_move(g), trace=t1)
    a2 = Engine(g, backend).attractor(SYS, base_move(g), cache=[], trace=t2)
    assert a1 == a2
    assert [it.region for it in t1] == [it.region for it in t2]


def test_disjoint_cache_entry_never_fires(backend):
    ts = [Transition.make("l0", T.TRUE, {}, "l0"), Transition.make("l1", T.TRUE, {}, "l1")]
    g = Game("LIA", [i], [x], ["l0", "l1"], {}, ts)
    entry = CacheEntry(g.game_id, SYS, region(g, {"l0": T.TRUE}), region(g, {"l0": T.TRUE}), frozenset())
    st = Stats()
    d = region(g, {"l1": T.TRUE})
    a = Engine(g, backend).attractor(SYS, d, cache=[entry], stats=st)
    assert st.cache_hits == []
    assert a == Engine(g, backend).attractor(SYS, d)


def test_solve_robot_buchi(backend, robot):
    g, obj = robot
    w = solve(g, backend, obj)
    assert backend.equiv(w["base"], g.inv["base"])


def test_solve_trivial_objectives(backend, robot):
    g, _ = robot
    w = solve(g, backend, Objective(SAFETY, g.locations))
    assert all(backend.equiv(w[l], g.inv[l]) for l in g.locations)
    assert solve(g, backend, Objective(REACH, ())) == bottom(g)


@pytest.mark.parametrize("seed", range(6))
def test_attractor_matches_explicit(backend, seed):
    rng = random.Random(100 + seed)
    g = random_valid_rpg(rng, backend)
    d = random_region(rng, g)
    eg = finitize_semantics(g, box_ranges(g))
    for p in (SYS, ENV):
        for accel in (False, True):
            a = Engine(g, backend, SolveOptions(accel=accel)).attractor(p, d)
            expect = env_part(eg, explicit_attractor(eg.graph, p, eg.denotation(d)))
            assert eg.denotation(a) == expect


@pytest.mark.parametrize("seed", range(6))
def test_solve_matches_explicit(backend, seed):
    rng = random.Random(200 + seed)
    g = random_valid_rpg(rng, backend)
    eg = finitize_semantics(g, box_ranges(g))
    for kind in KINDS:
        obj = random_objective(rng, g, kind)
        w = solve(g, backend, obj)
        ws, _ = explicit_solve(eg.graph, eg.graph.lift_objective(obj))
        assert eg.denotation(w) == env_part(eg, ws), kind


def test_solve_stays_within_invariant(backend, robot):
    g, obj = robot
    w = solve(g, backend, obj)
    for l in g.locations:
        assert backend.implies(w[l], g.inv[l])
    assert backend.implies(inv_region(g)["mine"], w["mine"])
