import itertools
import random

import pytest

from conftest import ivars
from randgen import box_ranges, random_valid_rpg
from rpgcache import benchmarks
from rpgcache.abstraction import AlphaMap, abstract_domain, abstract_rpg, predicate_pool
from rpgcache.graphs import GameGraph
from rpgcache.logic import terms as T
from rpgcache.logic.linear import canonical_atom
from rpgcache.objective import BUCHI, ENV, SYS, Objective
from rpgcache.oracle import check_abstraction_contracts, check_abstraction_soundness
from rpgcache.rpg import Game, Transition, finitize_semantics, int_range, uniform_ranges

samp, req, x = ivars("samp", "req", "x")
i = T.var("i", T.Sort.INT)


@pytest.fixture(scope="module")
def robot():
    return benchmarks.robot_collect()


def test_robot_domain(backend, robot):
    g, _ = robot
    dom = abstract_domain(g, backend)
    assert canonical_atom(T.ge(samp, req))[0] in dom.atoms
    assert len(dom.state_cells) <= 4
    assert len(dom.move_cells) <= 2 ** len(dom.atoms)
    for cell in dom.state_cells + dom.move_cells:
        assert backend.is_sat(cell.formula)
    # move cells partition their state cell
    for cid, moves in dom.refines.items():
        f = T.or_(*(dom.move_cells[e].formula for e in moves))
        assert backend.equiv(f, dom.state_cells[cid].formula)


def test_true_guards_single_cell(backend):
    ts = [Transition.make("a", T.TRUE, {}, "b"), Transition.make("b", T.TRUE, {x: T.add(x, i)}, "a")]
    g = Game("LIA", [i], [x], ["a", "b"], {}, ts)
    dom = abstract_domain(g, backend)
    assert len(dom.state_cells) == 1 and len(dom.move_cells) == 1
    up, down = abstract_rpg(g, backend, dom)
    for ag in (up, down):
        assert ag.graph.n == 4
        assert sorted((ag.graph.loc[v], ag.graph.loc[w]) for v, w in ag.graph.edges() if ag.graph.owner[v] is SYS) == [
            ("a", "b"), ("b", "a")]


def test_duplicate_atoms_deduplicated(backend):
    one = T.ge(x, T.const(1))
    ts = [Transition.make("l", one, {}, "l"), Transition.make("l", T.not_(one), {}, "l")]
    g = Game("LIA", [i], [x], ["l"], {"l": T.and_(one, T.ge(x, T.const(1)))}, ts)
    assert len(predicate_pool(g)) == 1
    dom = abstract_domain(g, backend)
    assert len(dom.state_cells) == 2
    # the cell outside the invariant gets no vertex
    up, _ = abstract_rpg(g, backend, dom)
    assert len(up.env_vertices()) == 1


def test_alpha_gamma(backend, robot):
    g, _ = robot
    up, _ = abstract_rpg(g, backend)
    eg = finitize_semantics(g, {"samp": int_range(0, 5), "req": int_range(0, 3), "i": [0, 1]})
    alpha = AlphaMap(up, eg)
    v = eg.env_index[("mine", (5, 3))]
    assert T.evaluate(up.gamma(alpha(v)), {"samp": 5, "req": 3})
    assert up.label(alpha(v)).startswith("mine")
    names = ["samp", "req"]
    for s in range(eg.graph.n):
        a = alpha(s)
        assert up.graph.loc[a] == eg.graph.loc[s]
        if s < eg.n_env:
            env = dict(zip(names, eg.env_states[s][1]))
        else:
            e, inp = eg.sys_states[s - eg.n_env]
            env = dict(zip(names, eg.env_states[e][1]), i=inp[0])
        assert T.evaluate(up.gamma(a), env)


def test_robot_mine_progress_edge(backend, robot):
    g, _ = robot
    up, _ = abstract_rpg(g, backend)
    below = T.ge(samp, req)
    edges = [(v, w) for v, w in up.graph.edges() if up.graph.owner[v] is SYS
             and up.graph.loc[v] == "mine" and up.graph.loc[w] == "mine"]
    assert any(backend.implies(up.gamma(w), below) and not backend.is_sat(T.and_(up.gamma(v), below))
               for v, w in edges)


@pytest.mark.parametrize("family,k", [("robot-collect", None), ("chain-simple", 1), ("chain-simple", 2)])
def test_contracts_and_soundness(backend, family, k):
    g, obj = benchmarks.generate(family, k)
    eg = finitize_semantics(g, uniform_ranges(g, -3, 3))
    up, down = abstract_rpg(g, backend)
    for ag in (up, down):
        rep = check_abstraction_contracts(ag, eg, backend)
        assert rep.ok, rep.failures[:3]
        assert rep.concrete_edges > 0 and rep.must_checks > 0
    assert check_abstraction_soundness(up, down, eg, obj)["ok"]


def test_contract_checker_catches_missing_edge(backend, robot):
    g, _ = robot
    eg = finitize_semantics(g, {"samp": int_range(0, 2), "req": int_range(0, 2), "i": [0, 1]})
    up, _ = abstract_rpg(g, backend)
    v, w = next((v, w) for v, w in up.graph.edges() if up.graph.owner[v] is SYS)
    succ = [[x for x in s if (u, x) != (v, w)] for u, s in enumerate(up.graph.succ)]
    up.graph = GameGraph(up.graph.owner, succ, up.graph.loc)
    assert not check_abstraction_contracts(up, eg, backend).ok


@pytest.mark.parametrize("seed", range(5))
def test_random_contracts(backend, seed):
    rng = random.Random(400 + seed)
    g = random_valid_rpg(rng, backend)
    eg = finitize_semantics(g, box_ranges(g))
    up, down = abstract_rpg(g, backend)
    for ag in (up, down):
        assert check_abstraction_contracts(ag, eg, backend).ok
    obj = Objective(BUCHI, {g.locations[0]})
    assert check_abstraction_soundness(up, down, eg, obj)["ok"]


def test_dot_output(backend, robot):
    g, _ = robot
    up, down = abstract_rpg(g, backend)
    dot = up.to_dot()
    assert dot.startswith('digraph "up"') and "shape=box" in dot and "shape=diamond" in dot
    assert "style=dashed" in dot or "style=solid" in dot
