"""Redirect regions known to be lost by a player into absorbing sinks."""
from __future__ import annotations

from dataclasses import dataclass

from rpgcache.logic import terms as T
from rpgcache.logic.backend import Backend
from rpgcache.objective import SYS, Objective, Player
from rpgcache.rpg import Game, Region, Transition

SINK_SYS = "__sink_sys"
SINK_ENV = "__sink_env"
SINKS = (SINK_SYS, SINK_ENV)


@dataclass(frozen=True)
class PrunedGame:
    game: Game
    objective: Objective
    region: dict  # location -> installed formula
    player: Player


def prune(g: Game, obj: Objective, d: Region, p: Player, backend: Backend) -> PrunedGame:
    """States of ``d`` hand the play to ``p``'s sink, where ``p`` loses.

    ``d`` may be indexed by a game with fewer locations (e.g. the game
    before a first pruning); missing locations count as false.
    """
    installed: dict[str, T.Expr] = {}
    for l in g.locations:
        if l in SINKS:
            continue
        f = d.get(l)
        if f is T.FALSE:
            continue
        f = backend.simplify(f)
        if backend.is_sat(T.and_(g.inv[l], f)):
            installed[l] = f
    sink = SINK_SYS if p is SYS else SINK_ENV
    ts = []
    for t in g.transitions:
        f = installed.get(t.src)
        if f is None:
            ts.append(t)
        else:
            ts.append(Transition(t.src, T.and_(t.guard, T.not_(f)), t.update, t.dst))
    for l, f in installed.items():
        ts.append(Transition(l, f, (), sink))
    locs = list(g.locations)
    for s in SINKS:
        if s not in g.index:
            locs.append(s)
            ts.append(Transition(s, T.TRUE, (), s))
    pruned = Game(g.theory, g.inputs, g.variables, locs, g.inv, ts)
    lifted = obj.with_locations(set(obj.locations) | {SINK_ENV})
    return PrunedGame(pruned, lifted, installed, p)
