"""Reactive program game structures, symbolic regions and the game-file format.

A game has input variables chosen by the environment, program variables
updated on transitions, a finite set of locations with invariants, and
guarded transitions.  At each location the guards partition the valuations of
program and input variables; the system picks one transition whose guard
holds.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from rpgcache.graphs import GameGraph
from rpgcache.logic import terms as T
from rpgcache.logic.backend import Backend
from rpgcache.logic.printer import symbol, to_smt
from rpgcache.logic.reader import Reader
from rpgcache.logic.sexpr import Atom, ParseError, SList, parse_all, position
from rpgcache.objective import (  # noqa: F401  (re-exported)
    BUCHI,
    ENV,
    KINDS,
    REACH,
    SAFETY,
    SYS,
    Objective,
    Player,
    UnsupportedObjective,
)

log = logging.getLogger(__name__)

THEORIES = ("LIA", "LRA", "LIRA")


class InvalidGame(Exception):
    pass


@dataclass(frozen=True)
class Transition:
    src: str
    guard: T.Expr
    update: tuple  # ((var, term), ...) sorted by variable name, identity entries omitted
    dst: str

    @staticmethod
    def make(src: str, guard: T.Expr, update: Mapping, dst: str) -> "Transition":
        items = tuple(sorted(((v, t) for v, t in update.items() if v is not t), key=lambda p: p[0].val))
        return Transition(src, guard, items, dst)

    @property
    def mapping(self) -> dict:
        return dict(self.update)

    def term(self, v: T.Expr) -> T.Expr:
        for w, t in self.update:
            if w is v:
                return t
        return v

    def is_identity(self) -> bool:
        return not self.update

    def key(self):
        return (self.src, self.dst, to_smt(self.guard), update_text(self.update))


def update_text(update) -> str:
    return " ".join(f"({symbol(v.val)} {to_smt(t)})" for v, t in update)


class Game:
    """An immutable reactive program game structure."""

    def __init__(
        self,
        theory: str,
        inputs: Iterable[T.Expr],
        variables: Iterable[T.Expr],
        locations: Iterable[str],
        inv: Mapping[str, T.Expr],
        transitions: Iterable[Transition],
    ):
        self.theory = theory
        self.inputs = tuple(inputs)
        self.variables = tuple(variables)
        self.locations = tuple(locations)
        self.index = {l: k for k, l in enumerate(self.locations)}
        self.inv = {l: inv.get(l, T.TRUE) for l in self.locations}
        ts = list(transitions)
        ts.sort(key=lambda t: (self.index[t.src], self.index[t.dst], t.key()[2], t.key()[3]))
        self.transitions = tuple(ts)
        self._out: dict[str, list[Transition]] = {l: [] for l in self.locations}
        for t in self.transitions:
            self._out[t.src].append(t)
        self._id: str | None = None

    # structure
    def out(self, l: str) -> list[Transition]:
        return self._out[l]

    def self_loops(self, l: str) -> list[Transition]:
        return [t for t in self._out[l] if t.dst == l]

    def guards(self, l: str) -> list[T.Expr]:
        return list(dict.fromkeys(t.guard for t in self._out[l]))

    @property
    def var_names(self) -> dict[str, T.Expr]:
        d = {v.val: v for v in self.variables}
        d.update({v.val: v for v in self.inputs})
        return d

    @property
    def game_id(self) -> str:
        if self._id is None:
            self._id = hashlib.sha256(print_game(self).encode()).hexdigest()[:16]
        return self._id

    def __eq__(self, other):
        return isinstance(other, Game) and print_game(self) == print_game(other)

    def __hash__(self):
        return hash(self.game_id)

    def __repr__(self):
        return f"<Game {len(self.locations)} locations, {len(self.transitions)} transitions>"


# ---------------------------------------------------------------------------
# parsing and printing


def _expect_list(sx, head: str | None = None) -> SList:
    if not isinstance(sx, SList):
        raise ParseError(f"expected a list, got {sx!r}", *position(sx))
    if head is not None and (not sx or sx[0] != head):
        raise ParseError(f"expected ({head} ...)", *position(sx))
    return sx


def _parse_decls(sx: SList) -> list[T.Expr]:
    out = []
    for d in sx[1:]:
        d = _expect_list(d)
        if len(d) != 2 or not isinstance(d[0], Atom):
            raise ParseError("variable declaration must be (name Sort)", *position(d))
        try:
            out.append(T.var(str(d[0]), T.Sort.parse(str(d[1]))))
        except T.SortError as exc:
            raise T.SortError(f"{d.line}:{d.col}: {exc}") from None
    return out


def parse_game(text: str | bytes) -> tuple[Game, Objective]:
    """Parse the S-expression game format (grammar only, no semantic checks)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    sections: dict[str, SList] = {}
    for item in parse_all(text):
        item = _expect_list(item)
        if not item or not isinstance(item[0], Atom):
            raise ParseError("expected a section like (theory ...)", *position(item))
        name = str(item[0])
        if name not in ("theory", "inputs", "vars", "locations", "transitions", "objective"):
            raise ParseError(f"unknown section {name!r}", *position(item))
        if name in sections:
            raise ParseError(f"duplicate section {name!r}", *position(item))
        sections[name] = item
    for needed in ("locations", "transitions", "objective"):
        if needed not in sections:
            raise ParseError(f"missing ({needed} ...) section")

    theory = "LIA"
    if "theory" in sections:
        th = sections["theory"]
        if len(th) != 2 or str(th[1]) not in THEORIES:
            raise ParseError(f"theory must be one of {', '.join(THEORIES)}", *position(th))
        theory = str(th[1])
    inputs = _parse_decls(sections["inputs"]) if "inputs" in sections else []
    variables = _parse_decls(sections["vars"]) if "vars" in sections else []
    names = [v.val for v in inputs + variables]
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable name (inputs and program variables must be disjoint)")
    for v in inputs + variables:
        if theory == "LIA" and v.sort is T.Sort.REAL:
            raise T.SortError(f"Real variable {v.val} in an LIA game")
        if theory == "LRA" and v.sort is T.Sort.INT:
            raise T.SortError(f"Int variable {v.val} in an LRA game")

    prog_reader = Reader({v.val: v for v in variables})
    full_reader = Reader({v.val: v for v in inputs + variables})

    locs_sx = sections["locations"]
    if len(locs_sx) < 2:
        raise ParseError("empty location list", *position(locs_sx))
    locations: list[str] = []
    inv: dict[str, T.Expr] = {}
    for entry in locs_sx[1:]:
        if isinstance(entry, Atom):
            name, inv_f = str(entry), T.TRUE
        else:
            entry = _expect_list(entry)
            if not entry or not isinstance(entry[0], Atom):
                raise ParseError("location must be name or (name (inv φ))", *position(entry))
            name = str(entry[0])
            inv_f = T.TRUE
            for attr in entry[1:]:
                attr = _expect_list(attr, "inv")
                inv_f = _formula(prog_reader, attr[1])
        if name in inv:
            raise ParseError(f"duplicate location {name!r}", *position(entry))
        locations.append(name)
        inv[name] = inv_f

    var_set = set(variables)
    transitions = []
    for tsx in sections["transitions"][1:]:
        tsx = _expect_list(tsx)
        if len(tsx) != 4:
            raise ParseError("transition must be (from guard ((x term) ...) to)", *position(tsx))
        src, dst = str(tsx[0]), str(tsx[3])
        for l, node in ((src, tsx[0]), (dst, tsx[3])):
            if l not in inv:
                raise ParseError(f"unknown location {l!r}", *position(node))
        guard = _formula(full_reader, tsx[1])
        if not T.is_quantifier_free(guard):
            raise ParseError("guards must be quantifier-free", *position(tsx[1]))
        update = {}
        for u in _expect_list(tsx[2]):
            u = _expect_list(u)
            if len(u) != 2:
                raise ParseError("update must be (x term)", *position(u))
            v = prog_reader.scope.get(str(u[0]))
            if v is None or v not in var_set:
                raise T.SortError(f"{u.line}:{u.col}: update of undeclared program variable {str(u[0])!r}")
            if v in update:
                raise ParseError(f"variable {v.val} updated twice", *position(u))
            term = full_reader.read(u[1])
            if term.sort is not v.sort:
                if v.sort is T.Sort.REAL and term.sort is T.Sort.INT:
                    term = T.to_real(term)
                else:
                    raise T.SortError(f"{u.line}:{u.col}: update of {v.val} has sort {term.sort.value}")
            if not T.is_quantifier_free(term):
                raise ParseError("update terms must be quantifier-free", *position(u))
            update[v] = term
        transitions.append(Transition.make(src, guard, update, dst))

    obj_sx = _expect_list(sections["objective"])
    if len(obj_sx) != 2:
        raise ParseError("objective must be (objective (kind loc ...))", *position(obj_sx))
    o = _expect_list(obj_sx[1])
    kind = str(o[0]).lower()
    if kind not in KINDS:
        raise UnsupportedObjective(
            f"{o.line}:{o.col}: objective {kind!r} is not supported (use safety, reach or buchi)"
        )
    for l in o[1:]:
        if str(l) not in inv:
            raise ParseError(f"objective mentions unknown location {str(l)!r}", *position(l))
    objective = Objective(kind, frozenset(str(l) for l in o[1:]))
    return Game(theory, inputs, variables, locations, inv, transitions), objective


def _formula(reader: Reader, sx) -> T.Expr:
    f = reader.read(sx)
    if f.sort is not T.Sort.BOOL:
        raise T.SortError(f"{position(sx)[0]}:{position(sx)[1]}: expected a formula")
    return f


def print_game(g: Game, objective: Objective | None = None) -> str:
    """Canonical text of a game; parse_game(print_game(g)) == g."""
    lines = [f"(theory {g.theory})"]
    lines.append("(inputs" + "".join(f" ({symbol(v.val)} {v.sort.value})" for v in g.inputs) + ")")
    lines.append("(vars" + "".join(f" ({symbol(v.val)} {v.sort.value})" for v in g.variables) + ")")
    lines.append("(locations")
    for l in g.locations:
        lines.append(f"  ({symbol(l)} (inv {to_smt(g.inv[l])}))")
    lines.append(")")
    lines.append("(transitions")
    for t in g.transitions:
        lines.append(f"  ({symbol(t.src)} {to_smt(t.guard)} ({update_text(t.update)}) {symbol(t.dst)})")
    lines.append(")")
    if objective is not None:
        locs = sorted(objective.locations, key=lambda l: g.index.get(l, len(g.locations)))
        lines.append(f"(objective ({objective.kind}" + "".join(" " + symbol(l) for l in locs) + "))")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation


@dataclass
class LocationReport:
    location: str
    cover: bool = True
    disjoint: bool = True
    deterministic: bool = True
    non_blocking: bool = True
    witnesses: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.cover and self.disjoint and self.deterministic and self.non_blocking


@dataclass
class ValidationReport:
    locations: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.locations)

    def failures(self) -> list[str]:
        out = []
        for r in self.locations:
            for check in ("cover", "disjoint", "deterministic", "non_blocking"):
                if not getattr(r, check):
                    w = r.witnesses.get(check)
                    out.append(f"{r.location}: {check} failed" + (f" (witness {w})" if w else ""))
        return out

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "locations": {
                r.location: {
                    "cover": r.cover,
                    "disjoint": r.disjoint,
                    "deterministic": r.deterministic,
                    "non_blocking": r.non_blocking,
                    "witnesses": {k: {n: str(v) for n, v in w.items()} if isinstance(w, dict) else str(w)
                                  for k, w in r.witnesses.items()},
                }
                for r in self.locations
            },
        }


def post_condition(g: Game, t: Transition, region_f: T.Expr) -> T.Expr:
    """``region_f`` at the target of ``t`` expressed over the source state and inputs."""
    return T.substitute(region_f, t.mapping)


def validate(g: Game, backend: Backend) -> ValidationReport:
    reports = []
    for l in g.locations:
        r = LocationReport(l)
        guards = g.guards(l)
        if not guards:
            r.cover = False
            r.witnesses["cover"] = "no outgoing transitions"
        else:
            m = backend.model(T.not_(T.or_(*guards)))
            if m is not None:
                r.cover = False
                r.witnesses["cover"] = m
        for a, b in itertools.combinations(guards, 2):
            m = backend.model(T.and_(a, b))
            if m is not None:
                r.disjoint = False
                r.witnesses["disjoint"] = m
                break
        seen: dict = {}
        for t in g.out(l):
            key = (t.guard, t.update)
            if key in seen and seen[key] != t.dst:
                r.deterministic = False
                r.witnesses["deterministic"] = f"{t.dst} vs {seen[key]}"
            seen.setdefault(key, t.dst)
        inv_l = g.inv[l]
        if backend.is_sat(inv_l):
            fires = T.or_(*(T.and_(t.guard, post_condition(g, t, g.inv[t.dst])) for t in g.out(l)))
            m = backend.model(T.and_(inv_l, T.not_(fires)))
            if m is not None:
                r.non_blocking = False
                r.witnesses["non_blocking"] = m
        reports.append(r)
    return ValidationReport(reports)


# ---------------------------------------------------------------------------
# symbolic regions


class Region:
    """A map from locations to formulas over program variables."""

    __slots__ = ("index", "values")

    def __init__(self, index: Mapping[str, int], values: tuple):
        self.index = index
        self.values = tuple(values)

    @property
    def locations(self):
        return tuple(self.index)

    def __getitem__(self, l: str) -> T.Expr:
        return self.values[self.index[l]]

    def get(self, l: str, default=T.FALSE) -> T.Expr:
        k = self.index.get(l)
        return default if k is None else self.values[k]

    def items(self):
        return zip(self.index, self.values)

    def replace(self, updates: Mapping[str, T.Expr]) -> "Region":
        vals = list(self.values)
        for l, f in updates.items():
            vals[self.index[l]] = f
        return Region(self.index, tuple(vals))

    def map(self, fn) -> "Region":
        return Region(self.index, tuple(fn(l, f) for l, f in zip(self.index, self.values)))

    def support(self) -> list[str]:
        """Locations whose entry is not syntactically false."""
        return [l for l, f in self.items() if f is not T.FALSE]

    def __eq__(self, other):
        return isinstance(other, Region) and list(self.index) == list(other.index) and self.values == other.values

    def __hash__(self):
        return hash(self.values)

    def __repr__(self):
        inner = ", ".join(f"{l}: {to_smt(f)}" for l, f in self.items() if f is not T.FALSE)
        return "{" + inner + "}"

    def to_json(self) -> dict:
        return {l: to_smt(f) for l, f in self.items()}


def bottom(g: Game) -> Region:
    return Region(g.index, (T.FALSE,) * len(g.locations))


def region(g: Game, mapping: Mapping[str, T.Expr]) -> Region:
    for l in mapping:
        if l not in g.index:
            raise KeyError(f"unknown location {l!r}")
    return Region(g.index, tuple(mapping.get(l, T.FALSE) for l in g.locations))


def inv_region(g: Game) -> Region:
    return Region(g.index, tuple(g.inv[l] for l in g.locations))


def objective_region(g: Game, locations) -> Region:
    """Inv(l) on the given locations, false elsewhere."""
    locations = set(locations)
    return Region(g.index, tuple(g.inv[l] if l in locations else T.FALSE for l in g.locations))


def _same_domain(a: Region, b: Region):
    if list(a.index) != list(b.index):
        raise ValueError("regions over different location sets")


def join(a: Region, b: Region) -> Region:
    _same_domain(a, b)
    return Region(a.index, tuple(T.or_(x, y) for x, y in zip(a.values, b.values)))


def meet(a: Region, b: Region) -> Region:
    _same_domain(a, b)
    return Region(a.index, tuple(T.and_(x, y) for x, y in zip(a.values, b.values)))


def leq(backend: Backend, a: Region, b: Region) -> bool:
    _same_domain(a, b)
    return all(backend.implies(x, y) for x, y in zip(a.values, b.values))


def equiv(backend: Backend, a: Region, b: Region) -> bool:
    _same_domain(a, b)
    return all(backend.equiv(x, y) for x, y in zip(a.values, b.values))


def is_empty(backend: Backend, a: Region) -> bool:
    return not any(backend.is_sat(x) for x in a.values)


def negate_within_inv(g: Game, a: Region) -> Region:
    return Region(a.index, tuple(T.and_(g.inv[l], T.not_(f)) for l, f in a.items()))


def simplify_region(backend: Backend, a: Region) -> Region:
    return Region(a.index, tuple(backend.simplify(f) for f in a.values))


def region_from_json(g: Game, data: Mapping[str, str]) -> Region:
    reader = Reader({v.val: v for v in g.variables})
    return region(g, {l: reader.read_text(s) for l, s in data.items()})


# ---------------------------------------------------------------------------
# finitization


class RangeExplosion(Exception):
    pass


@dataclass
class ExplicitGame:
    """Finitized semantics: Env vertices ``(l, a)`` then Sys vertices ``((l, a), i)``."""

    game: Game
    graph: GameGraph
    env_states: list  # (loc, values tuple aligned with game.variables)
    env_index: dict
    sys_states: list  # (env vertex id, input tuple aligned with game.inputs)
    dropped_edges: int = 0
    dropped_sys: int = 0

    @property
    def n_env(self) -> int:
        return len(self.env_states)

    @property
    def closed(self) -> bool:
        # dropped edges are fine as long as every Sys state keeps a move
        return self.dropped_sys == 0

    def env_vertices(self) -> range:
        return range(self.n_env)

    def assignment(self, v: int) -> dict:
        loc, vals = self.env_states[v]
        return {x.val: a for x, a in zip(self.game.variables, vals)}

    def denotation(self, reg: Region) -> set[int]:
        """Env vertices satisfying the region (formulas must be quantifier-free)."""
        compiled = {l: T.compile_expr(f) for l, f in reg.items()}
        out = set()
        names = [x.val for x in self.game.variables]
        for v, (l, vals) in enumerate(self.env_states):
            f = compiled.get(l)
            if f is not None and reg[l] is not T.FALSE and f(dict(zip(names, vals))):
                out.add(v)
        return out

    def denotation_formula(self, l: str, f: T.Expr) -> set[int]:
        fn = T.compile_expr(f)
        names = [x.val for x in self.game.variables]
        return {v for v, (loc, vals) in enumerate(self.env_states) if loc == l and fn(dict(zip(names, vals)))}


def _values(spec) -> list:
    return list(spec)


def finitize_semantics(g: Game, ranges: Mapping[str, Iterable], cap: int = 2_000_000) -> ExplicitGame:
    """Explicit game graph of ``g`` restricted to finite variable ranges."""
    missing = [v.val for v in g.variables + g.inputs if v.val not in ranges]
    if missing:
        raise ValueError(f"missing ranges for {', '.join(missing)}")
    var_ranges = [_values(ranges[v.val]) for v in g.variables]
    in_ranges = [_values(ranges[v.val]) for v in g.inputs]
    n_vals = 1
    for r in var_ranges:
        n_vals *= len(r)
    n_in = 1
    for r in in_ranges:
        n_in *= len(r)
    if n_vals * len(g.locations) * (1 + n_in) > cap:
        raise RangeExplosion(f"{n_vals * len(g.locations) * (1 + n_in)} states exceed cap {cap}")
    var_sets = [set(r) for r in var_ranges]
    names = [v.val for v in g.variables]
    in_names = [v.val for v in g.inputs]
    inv_fn = {l: T.compile_expr(g.inv[l]) for l in g.locations}
    compiled = {}
    for t in g.transitions:
        compiled[t] = (T.compile_expr(t.guard), [T.compile_expr(t.term(x)) for x in g.variables])

    env_states = []
    env_index = {}
    for l in g.locations:
        for vals in itertools.product(*var_ranges):
            if inv_fn[l](dict(zip(names, vals))):
                env_index[(l, vals)] = len(env_states)
                env_states.append((l, vals))
    inputs = list(itertools.product(*in_ranges))

    n_env = len(env_states)
    owner = [ENV] * n_env
    succ: list[list[int]] = [[] for _ in range(n_env)]
    loc = [l for l, _ in env_states]
    sys_states = []
    dropped_edges = dropped_sys = 0
    for e, (l, vals) in enumerate(env_states):
        base = dict(zip(names, vals))
        for inp in inputs:
            env = dict(base)
            env.update(zip(in_names, inp))
            targets = []
            dropped = 0
            for t in g.out(l):
                gfn, ufns = compiled[t]
                if not gfn(env):
                    continue
                new = tuple(u(env) for u in ufns)
                if not all(a in s for a, s in zip(new, var_sets)):
                    dropped += 1
                    continue
                w = env_index.get((t.dst, new))
                if w is not None and w not in targets:
                    targets.append(w)
            dropped_edges += dropped
            if not targets and dropped:
                dropped_sys += 1
                continue
            sid = len(owner)
            owner.append(SYS)
            succ.append(targets)
            loc.append(l)
            sys_states.append((e, inp))
            succ[e].append(sid)
    graph = GameGraph(owner, succ, loc)
    return ExplicitGame(g, graph, env_states, env_index, sys_states, dropped_edges, dropped_sys)


def int_range(lo: int, hi: int) -> list[int]:
    return list(range(lo, hi + 1))


def real_range(lo, hi, step) -> list[Fraction]:
    lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
    out = []
    x = lo
    while x <= hi:
        out.append(x)
        x += step
    return out


def uniform_ranges(g: Game, lo: int, hi: int, inputs: tuple[int, int] | None = None) -> dict:
    r = {v.val: int_range(lo, hi) for v in g.variables}
    ilo, ihi = inputs if inputs is not None else (lo, hi)
    r.update({v.val: int_range(ilo, ihi) for v in g.inputs})
    return r
