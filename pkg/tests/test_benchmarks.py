import pytest

from rpgcache import benchmarks
from rpgcache.objective import BUCHI
from rpgcache.rpg import finitize_semantics, parse_game, print_game, real_range, validate


def names(vs):
    return [v.val for v in vs]


def test_chain_simple_shape():
    g, obj = benchmarks.chain_simple(2)
    assert set(g.locations) == {"init", "goal", "sink", "l1", "l2"}
    assert set(names(g.variables)) == {"y", "c", "x"}
    assert names(g.inputs) == ["i"]
    assert obj.kind == BUCHI and obj.locations == {"goal"}


def test_chain_shape():
    g, _ = benchmarks.chain(2)
    assert len(g.locations) == 5
    assert set(names(g.variables)) == {"y", "c", "x1", "x2"}


def test_chain_simple_loops():
    g, _ = benchmarks.chain_simple(1)
    loops = g.self_loops("l1")
    terms = {str(t.mapping[g.var_names["x"]]) for t in loops}
    assert terms == {"(+ x 1)", "(- x 1)"}
    assert {t.dst for t in g.out("l1")} == {"l1", "goal"}


def test_robot_shape():
    g, obj = benchmarks.robot_collect()
    assert list(g.locations) == ["base", "mine", "move"]
    assert names(g.variables) == ["samp", "req"]
    assert obj.locations == {"base"}


def test_smarthome(backend):
    g, _ = benchmarks.smarthome_lite()
    assert g.theory == "LRA"
    assert validate(g, backend).ok
    r = {"temperature": real_range(0, 3, 0.5), "blinds": real_range(0, 1.5, 0.5), "disturbance": real_range(-1, 1, 0.5)}
    eg = finitize_semantics(g, r)
    assert eg.n_env > 0
    # truncation only where idle cools below the range
    dropped = [eg.env_states[e][0] for e in range(eg.n_env) if not eg.graph.succ[e] or
               len(eg.graph.succ[e]) < len(r["disturbance"])]
    assert set(dropped) <= {"idle"}


@pytest.mark.parametrize("family,k", list(benchmarks.all_instances()))
def test_benchmarks_validate_and_round_trip(backend, family, k):
    g, obj = benchmarks.generate(family, k)
    assert validate(g, backend).ok
    text = benchmarks.benchmark_text(family, k)
    g2, obj2 = parse_game(text)
    assert print_game(g2, obj2) == text
    assert (g2, obj2) == (g, obj)


def test_unknown_family():
    with pytest.raises(ValueError):
        benchmarks.generate("nope")
