"""Random games for property and oracle tests."""
from __future__ import annotations

import random

from rpgcache.graphs import FiniteObjective, GameGraph
from rpgcache.logic import terms as T
from rpgcache.objective import BUCHI, ENV, REACH, SAFETY, SYS, Objective
from rpgcache.rpg import Game, Region, Transition, region, validate

INT = T.Sort.INT
BOX = 3


def random_graph(rng: random.Random, max_n: int = 6, kind: str = BUCHI, dead_ends: bool = True):
    """A small bipartite game graph with an objective of the given kind."""
    n = rng.randint(2, max_n)
    owner = [rng.choice((SYS, ENV)) for _ in range(n)]
    if all(o is owner[0] for o in owner):
        owner[-1] = owner[0].opponent
    succ = []
    for v in range(n):
        others = [w for w in range(n) if owner[w] is not owner[v]]
        k = rng.randint(0 if dead_ends else 1, min(3, len(others)))
        succ.append(sorted(rng.sample(others, k)))
    target = frozenset(v for v in range(n) if rng.random() < 0.4)
    return GameGraph(owner, succ, [f"v{v}" for v in range(n)]), FiniteObjective(kind, target)


def _c(k):
    return T.const(k, INT)


def _clamp(t):
    return T.ite(T.gt(t, _c(BOX)), _c(BOX), T.ite(T.lt(t, _c(-BOX)), _c(-BOX), t))


def _atom(rng, x, y, i, with_input=True):
    c = _c(rng.randint(-2, 2))
    pool = [
        lambda: T.ge(x, c),
        lambda: T.le(y, c),
        lambda: T.ge(x, y),
        lambda: T.le(T.add(x, y), c),
    ]
    if with_input:
        pool += [lambda: T.ge(i, c), lambda: T.ge(T.add(x, _clamp(i)), c)]
    return rng.choice(pool)()


def _update(rng, x, y, i):
    def term():
        c = _c(rng.randint(-2, 2))
        return rng.choice([
            lambda: x,
            lambda: y,
            lambda: c,
            lambda: T.add(x, c),
            lambda: T.add(y, c),
            lambda: _clamp(i),
            lambda: T.add(x, y),
        ])()

    upd = {}
    for v in (x, y):
        if rng.random() < 0.6:
            upd[v] = _clamp(term())
    return upd


def random_rpg(rng: random.Random, max_locations: int = 4):
    """A random LIA game over x, y in the box [-3, 3] and one input i.

    Updates are clamped into the box and input atoms saturate at the box
    edges, so the finitization to [-3, 3] is exact for inputs too.
    """
    x, y, i = T.var("x", INT), T.var("y", INT), T.var("i", INT)
    box = T.and_(T.ge(x, _c(-BOX)), T.le(x, _c(BOX)), T.ge(y, _c(-BOX)), T.le(y, _c(BOX)))
    n = rng.randint(1, max_locations)
    locs = [f"q{k}" for k in range(n)]
    inv = {}
    for l in locs:
        inv[l] = box if rng.random() < 0.8 else T.and_(box, _atom(rng, x, y, i, with_input=False))
    ts = []
    for l in locs:
        guards = [T.TRUE]
        for _ in range(rng.randint(0, 2)):
            a = _atom(rng, x, y, i)
            guards = [T.and_(g, a) for g in guards] + [T.and_(g, T.not_(a)) for g in guards]
        for gd in guards:
            for _ in range(rng.randint(1, 2)):
                ts.append(Transition.make(l, gd, _update(rng, x, y, i), rng.choice(locs)))
    # deduplicate identical transitions
    ts = list({(t.src, t.guard, t.update, t.dst): t for t in ts}.values())
    return Game("LIA", [i], [x, y], locs, inv, ts)


def random_valid_rpg(rng: random.Random, backend, max_locations: int = 4, tries: int = 200):
    for _ in range(tries):
        g = random_rpg(rng, max_locations)
        if validate(g, backend).ok:
            return g
    raise RuntimeError("no valid random game found")


def random_region(rng: random.Random, g: Game) -> Region:
    x, y = g.variables
    vals = {}
    for l in g.locations:
        r = rng.random()
        if r < 0.35:
            continue
        if r < 0.5:
            vals[l] = T.TRUE
        else:
            vals[l] = _atom(rng, x, y, None, with_input=False)
    return region(g, vals)


def random_objective(rng: random.Random, g: Game, kind: str) -> Objective:
    locs = {l for l in g.locations if rng.random() < 0.5}
    return Objective(kind, locs)


def box_ranges(g: Game) -> dict:
    r = list(range(-BOX, BOX + 1))
    return {v.val: r for v in g.variables + g.inputs}


def points_region(g: Game, eg, verts) -> Region:
    """Region holding exactly the given Env vertices of a finitization, as point formulas."""
    parts: dict = {}
    for v in sorted(verts):
        l, vals = eg.env_states[v]
        pt = T.and_(*(T.eq(x, T.const(a, x.sort)) for x, a in zip(g.variables, vals)))
        parts.setdefault(l, []).append(pt)
    return region(g, {l: T.or_(*fs) for l, fs in parts.items()})


def winning_states(eg, obj: Objective, p) -> set:
    """``(location, values)`` of the Env vertices won by ``p`` (``obj`` is Sys's)."""
    from rpgcache.oracle import explicit_solve

    ws, we = explicit_solve(eg.graph, eg.graph.lift_objective(obj))
    w = ws if p is SYS else we
    return {eg.env_states[v] for v in w if v < eg.n_env}
