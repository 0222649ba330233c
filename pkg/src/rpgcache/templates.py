"""Finite game solving and permissive strategy templates.

A template for player p is a triple (U, D, H): p must never take an unsafe
edge in U, must take co-live edges in D only finitely often, and whenever it
visits the source of a live group in H infinitely often it must take an
edge of that group infinitely often.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from rpgcache.graphs import FiniteObjective, GameGraph
from rpgcache.objective import BUCHI, ENV, REACH, SAFETY, SYS, Player, UnsupportedObjective


def attractor_ranks(G: GameGraph, p: Player, target, within: set | None = None) -> dict[int, int]:
    """Layered attractor: vertex -> first layer at which ``p`` can force ``target``.

    Restricted to ``within`` (edges leaving it are ignored).  Opponent
    vertices without successors inside join vacuously at layer 1 unless
    they are targets.
    """
    verts = set(range(G.n)) if within is None else within
    rank = {v: 0 for v in target if v in verts}
    remaining = {v: sum(1 for w in G.succ[v] if w in verts) for v in verts}
    frontier = list(rank)
    layer = 0
    vacuous = [v for v in verts if v not in rank and G.owner[v] is not p and remaining[v] == 0]
    while frontier or vacuous:
        layer += 1
        nxt = []
        for v in vacuous:
            rank[v] = layer
            nxt.append(v)
        vacuous = []
        for w in frontier:
            for v in G.pred[w]:
                if v not in verts or v in rank:
                    continue
                if G.owner[v] is p:
                    rank[v] = layer
                    nxt.append(v)
                else:
                    remaining[v] -= 1
                    if remaining[v] == 0:
                        rank[v] = layer
                        nxt.append(v)
        frontier = nxt
    return rank


def _buchi_sys(G: GameGraph, B) -> tuple[set[int], dict[int, int]]:
    """Sys Büchi region by repeated removal of Env attractors to losing traps."""
    W = set(range(G.n))
    while True:
        target = {v for v in B if v in W and (G.owner[v] is ENV or any(w in W for w in G.succ[v]))}
        rank = attractor_ranks(G, SYS, target, W)
        losing = W - set(rank)
        if not losing:
            return W, rank
        W -= set(attractor_ranks(G, ENV, losing, W))


def solve_finite(G: GameGraph, obj: FiniteObjective, p: Player = SYS) -> set[int]:
    """Winning region of ``p``; ``obj`` is Sys's objective."""
    V = set(range(G.n))
    if obj.kind == REACH:
        w_sys = set(attractor_ranks(G, SYS, obj.target))
    elif obj.kind == SAFETY:
        w_sys = V - set(attractor_ranks(G, ENV, V - obj.target))
    elif obj.kind == BUCHI:
        w_sys = _buchi_sys(G, obj.target)[0]
    else:
        raise UnsupportedObjective(obj.kind)
    return w_sys if p is SYS else V - w_sys


@dataclass
class Template:
    player: Player
    winning: set
    unsafe: set = field(default_factory=set)
    colive: set = field(default_factory=set)
    live: list = field(default_factory=list)  # list of edge sets, one per rank level

    def to_json(self) -> dict:
        return {
            "player": self.player.value,
            "winning": sorted(self.winning),
            "unsafe": sorted(map(list, self.unsafe)),
            "colive": sorted(map(list, self.colive)),
            "live": [sorted(map(list, h)) for h in self.live],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _unsafe(G: GameGraph, p: Player, W: set, done=frozenset()) -> set:
    """Edges leaving ``W``; vertices in ``done`` have already won a reach goal."""
    return {(v, w) for v in W - done if G.owner[v] is p for w in G.succ[v] if w not in W}


def _live_groups(G: GameGraph, p: Player, rank: dict[int, int], W: set) -> list[set]:
    groups: dict[int, set] = {}
    for v, j in rank.items():
        if j == 0 or G.owner[v] is not p or v not in W:
            continue
        h = {(v, w) for w in G.succ[v] if w in rank and rank[w] < j}
        if h:
            groups.setdefault(j, set()).update(h)
    return [groups[j] for j in sorted(groups)]


def solve_abstract(G: GameGraph, obj: FiniteObjective, p: Player = SYS) -> Template:
    """A winning template for ``p`` on its winning region."""
    V = set(range(G.n))
    kind = obj.kind
    if p is SYS:
        if kind == SAFETY:
            W = solve_finite(G, obj, SYS)
            return Template(SYS, W, _unsafe(G, SYS, W))
        if kind == REACH:
            rank = attractor_ranks(G, SYS, obj.target)
            W = set(rank)
            return Template(SYS, W, _unsafe(G, SYS, W, obj.target), set(), _live_groups(G, SYS, rank, W))
        if kind == BUCHI:
            W, rank = _buchi_sys(G, obj.target)
            return Template(SYS, W, _unsafe(G, SYS, W), set(), _live_groups(G, SYS, rank, W))
        raise UnsupportedObjective(kind)
    # Env plays for the complement of Sys's objective
    if kind == SAFETY:
        bad = V - obj.target
        rank = attractor_ranks(G, ENV, bad)
        W = set(rank)
        return Template(ENV, W, _unsafe(G, ENV, W, bad), set(), _live_groups(G, ENV, rank, W))
    if kind == REACH:
        W = solve_finite(G, obj, ENV)
        return Template(ENV, W, _unsafe(G, ENV, W))
    raise UnsupportedObjective(f"no {kind} template for the environment (its objective is co-Büchi)")


def solve_abstract_wr(G: GameGraph, obj: FiniteObjective, p: Player = SYS) -> tuple[Template, set[int]]:
    """Template for ``p`` together with the opponent's winning region."""
    try:
        t = solve_abstract(G, obj, p)
        W = t.winning
    except UnsupportedObjective:
        t = None
        W = solve_finite(G, obj, p)
    return t, set(range(G.n)) - W
