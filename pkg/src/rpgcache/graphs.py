"""Explicit two-player game graphs.

Vertices are integers ``0..n-1``; each has an owner and a successor list.
The same structure carries finitized RPG semantics, abstract games and the
small random games used in tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from rpgcache.objective import BUCHI, ENV, REACH, SAFETY, SYS, Objective, Player


@dataclass
class GameGraph:
    owner: list  # Player per vertex
    succ: list  # list[list[int]]
    loc: list = field(default_factory=list)  # location name per vertex (may be None)
    _pred: list | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.owner)

    @property
    def pred(self) -> list:
        if self._pred is None or len(self._pred) != self.n:
            pred = [[] for _ in range(self.n)]
            for v, ws in enumerate(self.succ):
                for w in ws:
                    pred[w].append(v)
            self._pred = pred
        return self._pred

    def vertices(self, player: Player | None = None) -> list[int]:
        if player is None:
            return list(range(self.n))
        return [v for v in range(self.n) if self.owner[v] is player]

    def edges(self):
        for v, ws in enumerate(self.succ):
            for w in ws:
                yield v, w

    def is_bipartite(self) -> bool:
        return all(self.owner[v] is not self.owner[w] for v, w in self.edges())

    def dead_ends(self, player: Player | None = None) -> set[int]:
        return {v for v in range(self.n) if not self.succ[v] and (player is None or self.owner[v] is player)}

    def lift(self, locations) -> set[int]:
        """Vertices whose location lies in ``locations``."""
        locations = set(locations)
        return {v for v in range(self.n) if self.loc[v] in locations}

    def lift_objective(self, obj: Objective) -> "FiniteObjective":
        return FiniteObjective(obj.kind, frozenset(self.lift(obj.locations)))


@dataclass(frozen=True)
class FiniteObjective:
    """An objective over explicit vertex sets."""

    kind: str
    target: frozenset

    def __post_init__(self):
        assert self.kind in (SAFETY, REACH, BUCHI), self.kind


__all__ = ["GameGraph", "FiniteObjective", "SYS", "ENV", "Player"]
