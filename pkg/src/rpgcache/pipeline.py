"""Top-level solvers: plain, cache-assisted, and prune-then-cache."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from rpgcache.abstraction import AbstractionTooLarge, abstract_rpg, MAX_ATOMS
from rpgcache.caching import CacheEntry
from rpgcache.generate import generate_cache
from rpgcache.logic.backend import Backend, BackendError
from rpgcache.objective import ENV, SYS, Objective, UnsupportedObjective
from rpgcache.prune import SINKS, prune
from rpgcache.rpg import Game, Region, region
from rpgcache.symbolic import Engine, SolveOptions, Stats
from rpgcache.templates import solve_abstract, solve_finite

log = logging.getLogger(__name__)

MODES = ("baseline", "cache", "prune-cache")

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INVALID, EXIT_BACKEND = 0, 2, 3, 4


@dataclass
class PipelineConfig:
    mode: str = "cache"
    b: int = 0
    accel: bool = True
    max_iters: int = 500
    outer_max_iters: int = 100
    max_atoms: int = MAX_ATOMS
    preloaded: list = field(default_factory=list)  # CacheEntry list from --load-cache

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {', '.join(MODES)}")

    def options(self) -> SolveOptions:
        return SolveOptions(max_iters=self.max_iters, outer_max_iters=self.outer_max_iters, accel=self.accel)


@dataclass
class Result:
    winning: Region
    stats: Stats
    entries: list = field(default_factory=list)
    proposals: list = field(default_factory=list)
    abstract: list = field(default_factory=list)  # AbstractGame values that were built
    pruned: dict = field(default_factory=dict)  # player -> installed region
    seconds: float = 0.0
    game: Game | None = None  # the game the entries refer to (the pruned one in prune-cache mode)

    def stats_json(self, mode: str) -> dict:
        out = self.stats.to_json()
        out["mode"] = mode
        out["seconds"] = round(self.seconds, 3)
        out["cache"] = {
            "entries": [e.entry_id for e in self.entries],
            "hit_entries": sorted(set(self.stats.cache_hits)),
        }
        if self.pruned:
            out["pruned"] = {p.value: sorted(r) for p, r in self.pruned.items()}
        return out


def generate_caches(g: Game, obj: Objective, backend: Backend, cfg: PipelineConfig, result: Result) -> list[CacheEntry]:
    """Abstract, compute templates for both players and derive cache entries."""
    try:
        up, down = abstract_rpg(g, backend, max_atoms=cfg.max_atoms)
    except (AbstractionTooLarge, BackendError) as exc:
        log.warning("abstraction failed, solving without caches: %s", exc)
        return []
    result.abstract = [up, down]
    entries: list[CacheEntry] = []
    for p, ag in ((SYS, up), (ENV, down)):
        fobj = ag.graph.lift_objective(obj)
        try:
            template = solve_abstract(ag.graph, fobj, p)
        except UnsupportedObjective as exc:
            log.info("no %s template: %s", p.value, exc)
            continue
        try:
            new = generate_cache(g, backend, ag, template, cfg.b, result.proposals)
        except BackendError as exc:
            log.warning("cache generation for %s failed: %s", p.value, exc)
            continue
        known = {e.entry_id for e in entries}
        entries += [e for e in new if e.entry_id not in known]
    return entries


def rpg_cache_solve(g: Game, obj: Objective, backend: Backend, cfg: PipelineConfig | None = None) -> Result:
    cfg = cfg or PipelineConfig()
    t0 = time.perf_counter()
    result = Result(region(g, {}), Stats())
    entries = list(cfg.preloaded)
    if cfg.mode != "baseline":
        entries += generate_caches(g, obj, backend, cfg, result)
    result.entries = entries
    result.game = g
    eng = Engine(g, backend, cfg.options())
    result.winning = eng.solve(obj, entries, result.stats)
    result.seconds = time.perf_counter() - t0
    return result


def _lost_region(ag, obj: Objective, p) -> Region:
    """Cells of Env vertices where the abstract game shows ``p`` losing."""
    graph = ag.graph
    win = solve_finite(graph, graph.lift_objective(obj), p)
    return ag.gamma_region(v for v in graph.vertices(ENV) if v not in win)


def rpg_prune_cache_solve(g: Game, obj: Objective, backend: Backend, cfg: PipelineConfig | None = None) -> Result:
    cfg = cfg or PipelineConfig(mode="prune-cache")
    t0 = time.perf_counter()
    result = Result(region(g, {}), Stats())
    g2, obj2 = g, obj
    try:
        up, down = abstract_rpg(g, backend, max_atoms=cfg.max_atoms)
        # lost for Sys even with Sys's may moves; won for Sys even with only its must moves
        lost_sys = _lost_region(up, obj, SYS)
        lost_env = _lost_region(down, obj, ENV)
        first = prune(g, obj, lost_sys, SYS, backend)
        second = prune(first.game, first.objective, lost_env, ENV, backend)
        g2, obj2 = second.game, second.objective
        result.pruned = {SYS: first.region, ENV: second.region}
    except (AbstractionTooLarge, BackendError) as exc:
        log.warning("pruning skipped: %s", exc)
    entries = list(cfg.preloaded) if g2 is g else []
    entries += generate_caches(g2, obj2, backend, cfg, result)
    result.entries = entries
    result.game = g2
    eng = Engine(g2, backend, cfg.options())
    w = eng.solve(obj2, entries, result.stats)
    result.winning = region(g, {l: w[l] for l in g.locations if l not in SINKS})
    result.seconds = time.perf_counter() - t0
    return result


def run(g: Game, obj: Objective, backend: Backend, cfg: PipelineConfig) -> Result:
    if cfg.mode == "prune-cache":
        return rpg_prune_cache_solve(g, obj, backend, cfg)
    return rpg_cache_solve(g, obj, backend, cfg)


def realizable_from(g: Game, w: Region, backend: Backend) -> list[str]:
    """Locations where Sys wins from every valuation satisfying the invariant."""
    return [l for l in g.locations if backend.is_sat(g.inv[l]) and backend.implies(g.inv[l], w[l])]


def verdict_json(g: Game, w: Region, backend: Backend) -> dict:
    return {
        "winning": {l: f for l, f in w.to_json().items()},
        "realizable_from": realizable_from(g, w, backend),
    }


__all__ = [
    "PipelineConfig", "Result", "rpg_cache_solve", "rpg_prune_cache_solve", "run",
    "verdict_json", "realizable_from", "MODES",
]
