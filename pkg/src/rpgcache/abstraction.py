"""Guard-predicate abstraction and the may/must abstract games.

Env vertices are ``(l, c)`` for cells ``c`` over program variables; Sys
vertices are ``(l, c, e)`` for cells ``e`` over program and input variables
refining ``c``.  The over-approximation for Sys (``up``) gives Sys its may
moves and Env only its must moves; ``down`` swaps the roles.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from rpgcache.graphs import GameGraph
from rpgcache.logic import linear
from rpgcache.logic import terms as T
from rpgcache.logic.backend import Backend
from rpgcache.logic.printer import to_smt
from rpgcache.objective import ENV, SYS, Player
from rpgcache.rpg import ExplicitGame, Game, Region, region

log = logging.getLogger(__name__)

UP, DOWN = "up", "down"
MAX_ATOMS = 12
MAX_CELLS = 4096


class AbstractionTooLarge(Exception):
    pass


@dataclass(frozen=True)
class Cell:
    id: int
    literals: tuple

    @property
    def formula(self) -> T.Expr:
        return T.and_(*self.literals)

    def __str__(self):
        return " & ".join(to_smt(x) for x in self.literals) or "true"


@dataclass
class Domain:
    atoms: tuple
    state_cells: list  # cells over program variables
    move_cells: list  # cells over program and input variables
    refines: dict  # state cell id -> list of move cell ids inside it


def predicate_pool(g: Game, max_atoms: int = MAX_ATOMS) -> tuple:
    """Canonical atoms of guards and invariants, most frequent in guards first."""
    freq: Counter = Counter()
    order: dict = {}
    sources = [(t.guard, True) for t in g.transitions] + [(g.inv[l], False) for l in g.locations]
    for f, in_guard in sources:
        for a in T.atoms(f):
            canon, _ = linear.canonical_atom(a)
            if canon.op in (T.TRUE_OP, T.FALSE_OP):
                continue
            order.setdefault(canon, len(order))
            if in_guard:
                freq[canon] += 1
    pool = sorted(order, key=lambda a: (-freq[a], order[a]))
    if len(pool) > max_atoms:
        log.info("predicate pool truncated from %d to %d atoms", len(pool), max_atoms)
        pool = pool[:max_atoms]
    return tuple(sorted(pool, key=lambda a: order[a]))


def _split(backend: Backend, cells: list[tuple], atoms, cap: int) -> list[tuple]:
    for a in atoms:
        nxt = []
        for lits in cells:
            for lit in (a, T.not_(a)):
                cand = lits + (lit,)
                if backend.is_sat(T.and_(*cand)):
                    nxt.append(cand)
        if len(nxt) > cap:
            raise AbstractionTooLarge(f"more than {cap} cells")
        cells = nxt
    return cells


def abstract_domain(g: Game, backend: Backend, max_atoms: int = MAX_ATOMS, max_cells: int = MAX_CELLS) -> Domain:
    atoms = predicate_pool(g, max_atoms)
    inputs = set(g.inputs)
    state_atoms = [a for a in atoms if not (a.fv & inputs)]
    move_atoms = [a for a in atoms if a.fv & inputs]
    state = _split(backend, [()], state_atoms, max_cells)
    state_cells = [Cell(k, lits) for k, lits in enumerate(state)]
    move_cells: list[Cell] = []
    refines: dict[int, list[int]] = {}
    for c in state_cells:
        refines[c.id] = []
        for lits in _split(backend, [c.literals], move_atoms, max_cells):
            cell = Cell(len(move_cells), lits)
            move_cells.append(cell)
            refines[c.id].append(cell.id)
        if len(move_cells) > max_cells:
            raise AbstractionTooLarge(f"more than {max_cells} move cells")
    return Domain(atoms, state_cells, move_cells, refines)


@dataclass
class AbstractGame:
    """A finite game over abstract vertices with cell annotations."""

    direction: str
    game: Game
    domain: Domain
    graph: GameGraph
    vertices: list  # (l, c) or (l, c, e) per vertex id
    index: dict  # vertex tuple -> id
    must: set = field(default_factory=set)  # edges that are must edges

    @property
    def overapprox(self) -> Player:
        return SYS if self.direction == UP else ENV

    def env_vertices(self) -> list[int]:
        return self.graph.vertices(ENV)

    def gamma(self, v: int) -> T.Expr:
        vert = self.vertices[v]
        l = vert[0]
        if len(vert) == 2:
            cell = self.domain.state_cells[vert[1]]
        else:
            cell = self.domain.move_cells[vert[2]]
        return T.and_(self.game.inv[l], cell.formula)

    def gamma_region(self, verts) -> Region:
        """Disjunction of the cells of the given Env vertices, per location."""
        parts: dict[str, list] = {}
        for v in sorted(verts):
            vert = self.vertices[v]
            if len(vert) == 2:
                parts.setdefault(vert[0], []).append(self.gamma(v))
        return region(self.game, {l: T.or_(*fs) for l, fs in parts.items()})

    def label(self, v: int) -> str:
        vert = self.vertices[v]
        if len(vert) == 2:
            return f"{vert[0]} | {self.domain.state_cells[vert[1]]}"
        return f"{vert[0]} | {self.domain.move_cells[vert[2]]}"

    def to_dot(self, name: str | None = None) -> str:
        lines = [f'digraph "{name or self.direction}" {{']
        for v in range(self.graph.n):
            shape = "box" if self.graph.owner[v] is ENV else "diamond"
            label = self.label(v).replace('"', '\\"')
            lines.append(f'  v{v} [shape={shape}, label="{label}"];')
        for v, w in self.graph.edges():
            style = "solid" if (v, w) in self.must else "dashed"
            lines.append(f"  v{v} -> v{w} [style={style}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


class AlphaMap:
    """Concrete-to-abstract vertex map for a finitization."""

    def __init__(self, ag: AbstractGame, eg: ExplicitGame):
        self.ag = ag
        self.eg = eg
        dom = ag.domain
        self._state = [(c.id, T.compile_expr(c.formula)) for c in dom.state_cells]
        self._move = {c.id: [(e, T.compile_expr(dom.move_cells[e].formula)) for e in dom.refines[c.id]]
                      for c in dom.state_cells}
        self._names = [v.val for v in eg.game.variables]
        self._inputs = [v.val for v in eg.game.inputs]

    def _state_cell(self, env: dict) -> int:
        hits = [cid for cid, fn in self._state if fn(env)]
        assert len(hits) == 1, hits
        return hits[0]

    def __call__(self, v: int) -> int | None:
        """Abstract vertex of concrete vertex ``v`` (None if not in the abstract game)."""
        eg = self.eg
        if v < eg.n_env:
            l, vals = eg.env_states[v]
            env = dict(zip(self._names, vals))
            return self.ag.index.get((l, self._state_cell(env)))
        e_v, ivals = eg.sys_states[v - eg.n_env]
        l, vals = eg.env_states[e_v]
        env = dict(zip(self._names, vals))
        c = self._state_cell(env)
        env.update(zip(self._inputs, ivals))
        hits = [e for e, fn in self._move[c] if fn(env)]
        assert len(hits) == 1, hits
        return self.ag.index.get((l, c, hits[0]))


def abstract_rpg(g: Game, backend: Backend, dom: Domain | None = None,
                 max_atoms: int = MAX_ATOMS) -> tuple[AbstractGame, AbstractGame]:
    """Build the over- (``up``) and under-approximation (``down``) for Sys."""
    dom = dom or abstract_domain(g, backend, max_atoms)
    env_verts: list = []
    sys_verts: list = []
    for l in g.locations:
        inv = g.inv[l]
        for c in dom.state_cells:
            if not backend.is_sat(T.and_(inv, c.formula)):
                continue
            env_verts.append((l, c.id))
            for e in dom.refines[c.id]:
                if backend.is_sat(T.and_(inv, dom.move_cells[e].formula)):
                    sys_verts.append((l, c.id, e))
    verts = env_verts + sys_verts
    index = {v: k for k, v in enumerate(verts)}
    owner = [ENV] * len(env_verts) + [SYS] * len(sys_verts)
    loc = [v[0] for v in verts]
    inputs = list(g.inputs)

    env_may, env_must = [], set()
    for (l, c, e) in sys_verts:
        src = index[(l, c)]
        dst = index[(l, c, e)]
        env_may.append((src, dst))
        inv_c = T.and_(g.inv[l], dom.state_cells[c].formula)
        if backend.implies(inv_c, T.exists(inputs, dom.move_cells[e].formula)):
            env_must.add((src, dst))

    sys_may, sys_must = [], set()
    for (l, c, e) in sys_verts:
        src = index[(l, c, e)]
        here = T.and_(g.inv[l], dom.move_cells[e].formula)
        by_dst: dict[str, list] = {}
        for t in g.out(l):
            by_dst.setdefault(t.dst, []).append(t)
        for l2, ts in by_dst.items():
            for c2 in dom.state_cells:
                w = index.get((l2, c2.id))
                if w is None:
                    continue
                post = T.and_(g.inv[l2], c2.formula)
                options = [T.and_(t.guard, T.substitute(post, t.mapping)) for t in ts]
                if not any(backend.is_sat(T.and_(here, o)) for o in options):
                    continue
                sys_may.append((src, w))
                if backend.implies(here, T.or_(*options)):
                    sys_must.add((src, w))

    def build(direction: str) -> AbstractGame:
        succ = [[] for _ in verts]
        must = set()
        if direction == UP:
            env_edges, sys_edges = sorted(env_must), sys_may
        else:
            env_edges, sys_edges = env_may, sorted(sys_must)
        for v, w in list(env_edges) + list(sys_edges):
            succ[v].append(w)
            if (v, w) in env_must or (v, w) in sys_must:
                must.add((v, w))
        graph = GameGraph(list(owner), succ, list(loc))
        return AbstractGame(direction, g, dom, graph, verts, index, must)

    return build(UP), build(DOWN)
