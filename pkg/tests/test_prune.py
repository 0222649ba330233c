import random

import pytest

from randgen import box_ranges, points_region, random_objective, random_valid_rpg, winning_states
from rpgcache import benchmarks
from rpgcache.logic import terms as T
from rpgcache.objective import BUCHI, ENV, KINDS, SYS
from rpgcache.prune import SINK_ENV, SINK_SYS, prune
from rpgcache.rpg import finitize_semantics, inv_region, region, uniform_ranges, validate


def original(states, g):
    return {s for s in states if s[0] in g.index}


def test_empty_region_changes_nothing(backend):
    g, obj = benchmarks.chain_simple(1)
    pg = prune(g, obj, region(g, {}), SYS, backend)
    assert pg.region == {}
    assert not any(t.dst in (SINK_SYS, SINK_ENV) for t in pg.game.transitions if t.src in g.index)
    assert SINK_ENV in pg.objective.locations
    assert validate(pg.game, backend).ok
    r = uniform_ranges(g, -2, 2)
    for p in (SYS, ENV):
        before = winning_states(finitize_semantics(g, r), obj, p)
        after = original(winning_states(finitize_semantics(pg.game, r), pg.objective, p), g)
        assert before == after


def test_everything_pruned_for_sys(backend):
    g, obj = benchmarks.robot_collect()
    pg = prune(g, obj, inv_region(g), SYS, backend)
    assert set(pg.region) == set(g.locations)
    assert validate(pg.game, backend).ok
    eg = finitize_semantics(pg.game, {"samp": [0, 1, 2], "req": [0, 1, 2], "i": [0, 1]})
    assert original(winning_states(eg, pg.objective, SYS), g) == set()


def test_sinks_are_reused(backend):
    g, obj = benchmarks.robot_collect()
    first = prune(g, obj, region(g, {"move": T.TRUE}), SYS, backend)
    second = prune(first.game, first.objective, region(g, {}), ENV, backend)
    assert list(second.game.locations).count(SINK_SYS) == 1
    assert len(second.game.transitions) == len(first.game.transitions)


@pytest.mark.parametrize("seed", range(10))
def test_pruning_lost_states_keeps_winner(backend, seed):
    rng = random.Random(500 + seed)
    g = random_valid_rpg(rng, backend)
    obj = random_objective(rng, g, rng.choice(KINDS))
    p = rng.choice((SYS, ENV))
    eg = finitize_semantics(g, box_ranges(g))
    lost = [eg.env_index[s] for s in winning_states(eg, obj, p.opponent)]
    d = points_region(g, eg, rng.sample(lost, rng.randint(0, len(lost))))
    pg = prune(g, obj, d, p, backend)
    eg2 = finitize_semantics(pg.game, box_ranges(g))
    assert original(winning_states(eg2, pg.objective, p), g) == winning_states(eg, obj, p)
