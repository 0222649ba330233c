"""Players and location-based objectives."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class Player(enum.Enum):
    SYS = "Sys"
    ENV = "Env"

    @property
    def opponent(self) -> "Player":
        return Player.ENV if self is Player.SYS else Player.SYS

    @classmethod
    def parse(cls, text: str) -> "Player":
        t = text.strip().lower()
        if t == "sys":
            return cls.SYS
        if t == "env":
            return cls.ENV
        raise ValueError(f"unknown player {text!r}")


SYS = Player.SYS
ENV = Player.ENV


class UnsupportedObjective(Exception):
    pass


SAFETY, REACH, BUCHI = "safety", "reach", "buchi"
KINDS = (SAFETY, REACH, BUCHI)


@dataclass(frozen=True)
class Objective:
    """Safety(S), Reach(R) or Buchi(B) over a set of locations."""

    kind: str
    locations: frozenset

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedObjective(
                f"objective {self.kind!r} is not supported (use safety, reach or buchi)"
            )
        object.__setattr__(self, "locations", frozenset(self.locations))

    def with_locations(self, extra) -> "Objective":
        return Objective(self.kind, self.locations | frozenset(extra))

    def __str__(self):
        return f"{self.kind}({', '.join(sorted(self.locations))})"
