import pytest

from rpgcache import benchmarks
from rpgcache.caching import CacheEntry
from rpgcache.logic import terms as T
from rpgcache.objective import SYS
from rpgcache.pipeline import (
    MODES,
    PipelineConfig,
    realizable_from,
    rpg_cache_solve,
    rpg_prune_cache_solve,
    run,
    verdict_json,
)
from rpgcache.prune import SINK_SYS
from rpgcache.rpg import equiv, finitize_semantics, uniform_ranges
from rpgcache.symbolic import IterationLimit

c = T.var("c", T.Sort.INT)


@pytest.mark.parametrize("mode", MODES)
def test_robot_all_modes(backend, mode):
    g, obj = benchmarks.robot_collect()
    res = run(g, obj, backend, PipelineConfig(mode=mode))
    assert backend.equiv(res.winning["base"], g.inv["base"])
    assert realizable_from(g, res.winning, backend) == list(g.locations)


def test_modes_agree_chain_simple(backend):
    g, obj = benchmarks.chain_simple(2)
    results = [run(g, obj, backend, PipelineConfig(mode=m)).winning for m in MODES]
    assert all(equiv(backend, results[0], w) for w in results[1:])


def test_cache_saves_cpre_calls(backend):
    g, obj = benchmarks.chain_simple(3)
    base = run(g, obj, backend, PipelineConfig(mode="baseline")).stats
    cache = run(g, obj, backend, PipelineConfig(mode="cache"))
    assert cache.entries and cache.stats.cache_hits
    assert cache.stats.cpre_calls < base.cpre_calls


def test_single_cell_abstraction(backend):
    g, obj = benchmarks.robot_collect()
    cfg = PipelineConfig(mode="prune-cache", max_atoms=0)
    res = rpg_prune_cache_solve(g, obj, backend, cfg)
    assert all(not r for r in res.pruned.values())
    plain = rpg_cache_solve(g, obj, backend, PipelineConfig(mode="cache", max_atoms=0))
    assert equiv(backend, res.winning, plain.winning)


def test_losing_cells_are_pruned(backend):
    g, obj = benchmarks.chain_simple(1)
    res = rpg_prune_cache_solve(g, obj, backend)
    lost = res.pruned[SYS]
    assert lost["sink"] is T.TRUE
    assert backend.implies(lost["goal"], T.ge(c, T.const(1)))
    base = run(g, obj, backend, PipelineConfig(mode="baseline"))
    assert equiv(backend, res.winning, base.winning)
    assert SINK_SYS not in res.winning.index


def test_preloaded_cache_is_used(backend):
    g, obj = benchmarks.chain_simple(2)
    first = run(g, obj, backend, PipelineConfig(mode="cache"))
    cfg = PipelineConfig(mode="baseline", preloaded=list(first.entries))
    again = run(g, obj, backend, cfg)
    assert again.stats.cache_hits
    assert equiv(backend, again.winning, first.winning)


def test_foreign_cache_entries_ignored(backend):
    g, obj = benchmarks.chain_simple(2)
    other, _ = benchmarks.chain_simple(1)
    e = run(other, obj, backend, PipelineConfig(mode="cache")).entries[0]
    assert isinstance(e, CacheEntry) and e.game_id != g.game_id
    res = run(g, obj, backend, PipelineConfig(mode="baseline", preloaded=[e]))
    assert res.stats.cache_hits == []


def test_verdict_and_stats(backend):
    g, obj = benchmarks.chain_simple(1)
    res = run(g, obj, backend, PipelineConfig(mode="cache"))
    v = verdict_json(g, res.winning, backend)
    assert v["winning"]["goal"] == "(not (>= c 1))"
    assert v["realizable_from"] == ["init"]
    st = res.stats_json("cache")
    assert st["mode"] == "cache" and st["cpre_calls"] > 0
    assert set(st["cache"]["hit_entries"]) <= set(st["cache"]["entries"])


def test_matches_oracle_on_chain(backend):
    g, obj = benchmarks.chain_simple(1)
    res = run(g, obj, backend, PipelineConfig(mode="prune-cache"))
    eg = finitize_semantics(g, uniform_ranges(g, -3, 3))
    from rpgcache.oracle import env_part, explicit_solve

    ws, _ = explicit_solve(eg.graph, eg.graph.lift_objective(obj))
    assert eg.denotation(res.winning) == env_part(eg, ws)


def test_iteration_limit_propagates(backend):
    g, obj = benchmarks.robot_collect()
    cfg = PipelineConfig(mode="baseline", accel=False, max_iters=5)
    with pytest.raises(IterationLimit):
        run(g, obj, backend, cfg)


def test_bad_mode():
    with pytest.raises(ValueError):
        PipelineConfig(mode="fast")


@pytest.mark.parametrize("family,k", [("chain-simple", 2), ("robot-collect", None), ("robot-deliver", 1)])
def test_dropping_entries_keeps_verdict(backend, family, k):
    import random

    g, obj = benchmarks.generate(family, k)
    full = run(g, obj, backend, PipelineConfig(mode="cache"))
    rng = random.Random(5)
    for _ in range(3):
        subset = [e for e in full.entries if rng.random() < 0.5]
        again = run(g, obj, backend, PipelineConfig(mode="baseline", preloaded=subset))
        assert equiv(backend, again.winning, full.winning)
