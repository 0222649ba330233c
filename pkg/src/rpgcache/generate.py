"""Turn live groups of abstract templates into attractor cache entries."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from rpgcache.abstraction import AbstractGame
from rpgcache.caching import CacheEntry, subgame_cache
from rpgcache.logic import terms as T
from rpgcache.logic.backend import Backend, BackendError
from rpgcache.objective import SYS, Player
from rpgcache.rpg import Game, Region, region
from rpgcache.symbolic import Engine
from rpgcache.templates import Template

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubgameProposal:
    player: Player
    l_sub: tuple
    target: Region
    group: int
    direction: str

    def key(self):
        return (self.player, self.l_sub, tuple(sorted(self.target.to_json().items())))

    def to_json(self) -> dict:
        return {
            "player": self.player.value,
            "l_sub": list(self.l_sub),
            "target": {l: f for l, f in self.target.to_json().items() if f != "false"},
            "origin": {"group": self.group, "direction": self.direction},
        }


def _target_cells(ag: AbstractGame, p: Player, h) -> dict[str, list]:
    """Env vertices the group's edges lead to, as cell formulas per location."""
    graph = ag.graph
    cells: dict[str, list] = {}
    for _, w in sorted(h):
        if p is SYS:
            targets = [w]
        else:
            # Env moves into a Sys vertex; the certified progress is to its successors
            targets = graph.succ[w]
        for u in targets:
            f = ag.gamma(u)
            cells.setdefault(graph.loc[u], [])
            if f not in cells[graph.loc[u]]:
                cells[graph.loc[u]].append(f)
    return cells


def proposals(g: Game, backend: Backend, ag: AbstractGame, template: Template, b: int = 0) -> list[SubgameProposal]:
    p = template.player
    eng = Engine(g, backend)
    out: list[SubgameProposal] = []
    seen = set()
    for j, h in enumerate(template.live):
        l_sub = tuple(l for l in g.locations if l in {ag.graph.loc[v] for v, _ in h})
        if b > 0 and len(l_sub) > b:
            log.info("proposal from group %d dropped: %d locations exceed bound %d", j, len(l_sub), b)
            continue
        cells = _target_cells(ag, p, h)
        d = region(g, {l: T.or_(*fs) for l, fs in cells.items()})
        # pull the target back one step so that it lives on the sub-game's locations
        try:
            pre = eng.cpre(p, d)
        except BackendError as exc:
            log.info("proposal from group %d dropped: %s", j, exc)
            continue
        d = region(g, {l: eng.absorb(d[l], pre[l]) for l in l_sub})
        prop = SubgameProposal(p, l_sub, d, j, ag.direction)
        if prop.key() in seen:
            continue
        seen.add(prop.key())
        out.append(prop)
    return out


def generate_cache(
    g: Game, backend: Backend, ag: AbstractGame, template: Template, b: int = 0, emitted: list | None = None
) -> list[CacheEntry]:
    """Cache entries for the live groups of ``template`` on abstract game ``ag``."""
    entries: list[CacheEntry] = []
    ids = set()
    for prop in proposals(g, backend, ag, template, b):
        if emitted is not None:
            emitted.append(prop.to_json())
        if not prop.target.support():
            continue
        for e in subgame_cache(g, backend, prop.player, prop.l_sub, prop.target):
            if e.entry_id not in ids:
                ids.add(e.entry_id)
                entries.append(e)
    return entries


def dump_proposals(props: list[dict]) -> str:
    return json.dumps(props, indent=2, sort_keys=True) + "\n"
