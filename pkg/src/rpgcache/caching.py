"""Attractor cache entries and their construction from sub-games."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Iterable

from rpgcache.logic import terms as T
from rpgcache.logic.backend import Backend, BackendError
from rpgcache.logic.printer import to_smt
from rpgcache.logic.reader import Reader
from rpgcache.objective import Player
from rpgcache.rpg import Game, Region, Transition, region
from rpgcache.symbolic import Engine, IterationLimit, SolveOptions

log = logging.getLogger(__name__)

SINK_SUB = "__sink_sub"
SUB_MAX_ITERS = 50


class ProjectionFailure(Exception):
    pass


@dataclass(frozen=True)
class CacheEntry:
    """``src ∧ φ`` is inside the ``player`` attractor of ``targ ∧ φ`` for every φ over ``x_ind``."""

    game_id: str
    player: Player
    src: Region
    targ: Region
    x_ind: tuple  # variables, sorted by name

    @property
    def entry_id(self) -> str:
        key = json.dumps(
            [self.game_id, self.player.value, self.src.to_json(), self.targ.to_json(), [v.val for v in self.x_ind]],
            sort_keys=True,
        )
        return hashlib.sha256(key.encode()).hexdigest()[:12]

    def to_json(self) -> dict:
        return {
            "id": self.entry_id,
            "game_id": self.game_id,
            "player": self.player.value,
            "src": {l: f for l, f in self.src.to_json().items() if f != "false"},
            "targ": {l: f for l, f in self.targ.to_json().items() if f != "false"},
            "x_ind": [v.val for v in self.x_ind],
        }

    @staticmethod
    def from_json(g: Game, data: dict) -> "CacheEntry":
        names = {v.val: v for v in g.variables}
        reader = Reader(names)
        try:
            x_ind = tuple(names[n] for n in data["x_ind"])
        except KeyError as exc:
            raise ValueError(f"cache entry mentions unknown variable {exc}") from None
        src = region(g, {l: reader.read_text(s) for l, s in data["src"].items()})
        targ = region(g, {l: reader.read_text(s) for l, s in data["targ"].items()})
        return CacheEntry(data["game_id"], Player.parse(data["player"]), src, targ, x_ind)


def dump_cache(entries: Iterable[CacheEntry]) -> str:
    return json.dumps([e.to_json() for e in entries], indent=2, sort_keys=True) + "\n"


def load_cache(g: Game, text: str) -> list[CacheEntry]:
    return [CacheEntry.from_json(g, d) for d in json.loads(text)]


@dataclass(frozen=True)
class SubGame:
    parent_id: str
    game: Game
    l_sub: tuple
    x_sub: tuple
    x_ind: tuple


def _program_vars(g: Game, f: T.Expr) -> set:
    progs = set(g.variables)
    return {v for v in f.fv if v in progs}


def sub_variables(g: Game, l_sub: Iterable[str]) -> set:
    """Variables the sub-game must keep: guard, invariant and internal-update
    variables, closed under data flow of internal updates."""
    l_sub = set(l_sub)
    keep: set = set()
    for l in l_sub:
        keep |= _program_vars(g, g.inv[l])
        for t in g.out(l):
            keep |= _program_vars(g, t.guard)
            if t.dst in l_sub:
                keep |= {v for v, _ in t.update}
    internal = [t for l in l_sub for t in g.out(l) if t.dst in l_sub]
    changed = True
    while changed:
        changed = False
        for t in internal:
            for v, term in t.update:
                if v in keep:
                    new = _program_vars(g, term) - keep
                    if new:
                        keep |= new
                        changed = True
    return keep


def induce_subgame(g: Game, l_sub: Iterable[str]) -> SubGame:
    l_sub = [l for l in g.locations if l in set(l_sub)]
    if not l_sub:
        raise ValueError("empty location set for sub-game")
    keep = sub_variables(g, l_sub)
    x_sub = tuple(v for v in g.variables if v in keep)
    x_ind = tuple(sorted((v for v in g.variables if v not in keep), key=lambda v: v.val))
    for l in l_sub:
        for f in [g.inv[l]] + [t.guard for t in g.out(l)]:
            bad = _program_vars(g, f) & set(x_ind)
            if bad:
                raise ProjectionFailure(f"{to_smt(f)} at {l} mentions independent variables")
    ts = set()
    inside = set(l_sub)
    for l in l_sub:
        for t in g.out(l):
            if t.dst in inside:
                upd = {v: term for v, term in t.update if v in keep}
                ts.add(Transition.make(l, t.guard, upd, t.dst))
            else:
                ts.add(Transition(l, t.guard, (), SINK_SUB))
    ts.add(Transition(SINK_SUB, T.TRUE, (), SINK_SUB))
    inv = {l: g.inv[l] for l in l_sub}
    sub = Game(g.theory, g.inputs, x_sub, l_sub + [SINK_SUB], inv, ts)
    return SubGame(g.game_id, sub, tuple(l_sub), x_sub, x_ind)


def extend_region(d: Region, g: Game) -> Region:
    """Embed a sub-game region into ``g``: false outside the sub-game, sink dropped."""
    return region(g, {l: f for l, f in d.items() if l != SINK_SUB and l in g.index})


def restrict(d: Region, sub: Game) -> Region:
    """Inverse of ``extend_region`` on the sub-game's own locations."""
    return region(sub, {l: d[l] for l in sub.locations if l != SINK_SUB})


def subgame_cache(
    g: Game,
    backend: Backend,
    p: Player,
    l_sub: Iterable[str],
    d: Region,
    max_iters: int = SUB_MAX_ITERS,
) -> list[CacheEntry]:
    """One cache entry from the sub-game on ``l_sub`` with target ``d``, or none."""
    try:
        sg = induce_subgame(g, l_sub)
    except ProjectionFailure as exc:
        log.info("cache skipped: %s", exc)
        return []
    sub = sg.game
    x_ind = set(sg.x_ind)
    vals = {}
    try:
        for l in sg.l_sub:
            f = d[l]
            if f is T.FALSE:
                continue
            f = backend.qelim(T.exists([v for v in f.fv if v in x_ind], T.and_(g.inv[l], f)))
            vals[l] = f
        d_sub = region(sub, vals)
        if not any(backend.is_sat(f) for f in d_sub.values):
            log.info("cache skipped for %s: projected target is empty", list(sg.l_sub))
            return []
        eng = Engine(sub, backend, SolveOptions(max_iters=max_iters, accel=True))
        a = eng.attractor(p, d_sub)
        if all(backend.equiv(a[l], d_sub[l]) for l in sg.l_sub):
            log.info("cache skipped for %s: no gain over the target", list(sg.l_sub))
            return []
    except IterationLimit:
        log.info("cache skipped for %s: sub-attractor did not converge", list(sg.l_sub))
        return []
    except BackendError as exc:
        log.info("cache skipped for %s: %s", list(sg.l_sub), exc)
        return []
    entry = CacheEntry(g.game_id, p, extend_region(a, g), extend_region(d_sub, g), sg.x_ind)
    return [entry]
