"""Brute-force ground truth on explicit (finitized) games.

Nothing here is shared with the symbolic engine or with ``templates``:
the algorithms are written out again, on purpose, so that agreement between
the two is evidence rather than tautology.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from rpgcache.graphs import FiniteObjective, GameGraph
from rpgcache.logic import terms as T
from rpgcache.objective import BUCHI, ENV, REACH, SAFETY, SYS, Player
from rpgcache.rpg import ExplicitGame, Region

log = logging.getLogger(__name__)


class EnumerationTooLarge(Exception):
    pass


# ---------------------------------------------------------------------------
# attractors


def explicit_attractor(G: GameGraph, p: Player, target: Iterable[int], within: set | None = None) -> set[int]:
    """Vertices from which ``p`` can force a visit to ``target``.

    A dead-end owned by the opponent is attracted vacuously; a dead-end owned
    by ``p`` is attracted only if it is a target.  ``within`` restricts the
    game to a subgraph (edges leaving it are ignored).
    """
    verts = set(range(G.n)) if within is None else set(within)
    attr = {v for v in target if v in verts}
    count = {}
    for v in verts:
        count[v] = sum(1 for w in G.succ[v] if w in verts)
    queue = list(attr)
    for v in verts:
        if v not in attr and G.owner[v] is not p and count[v] == 0:
            attr.add(v)
            queue.append(v)
    pred = G.pred
    while queue:
        w = queue.pop()
        for v in pred[w]:
            if v not in verts or v in attr:
                continue
            if G.owner[v] is p:
                attr.add(v)
                queue.append(v)
            else:
                count[v] -= 1
                if count[v] == 0:
                    attr.add(v)
                    queue.append(v)
    return attr


def forward_attractor(G: GameGraph, p: Player, target: set[int], max_vertices: int = 200) -> set[int]:
    """Attractor by game-tree search with cycle cutting (for cross-checking).

    A vertex wins for ``p`` if it is a target, or ``p`` owns it and some
    successor wins, or the opponent owns it and all successors win; a vertex
    on the current search path is losing (cycles avoid the target forever).
    """
    if G.n > max_vertices:
        raise EnumerationTooLarge("forward search limited to small games")
    target = set(target)

    def wins(v, path):
        if v in target:
            return True
        if v in path:
            return False
        path = path | {v}
        succ = G.succ[v]
        if G.owner[v] is p:
            return any(wins(w, path) for w in succ)
        return all(wins(w, path) for w in succ)

    # memoising on (v, path) is exponential; restrict to tiny games
    return {v for v in range(G.n) if wins(v, frozenset())}


# ---------------------------------------------------------------------------
# winning regions


def _env_dead(G: GameGraph, verts) -> set[int]:
    return {v for v in verts if G.owner[v] is ENV and not G.succ[v]}


def _sys_dead(G: GameGraph, verts) -> set[int]:
    return {v for v in verts if G.owner[v] is SYS and not G.succ[v]}


def _cpre(G: GameGraph, p: Player, X: set[int]) -> set[int]:
    """One-step forcing: ``p`` vertices with a successor in X, opponent
    vertices with all successors in X (so opponent dead-ends qualify)."""
    out = set()
    for v in range(G.n):
        succ = G.succ[v]
        if G.owner[v] is p:
            if any(w in X for w in succ):
                out.add(v)
        elif all(w in X for w in succ):
            out.add(v)
    return out


def _solve_sys(G: GameGraph, obj: FiniteObjective) -> set[int]:
    V = set(range(G.n))
    R = set(obj.target)
    if obj.kind == REACH:
        return explicit_attractor(G, SYS, R)
    if obj.kind == SAFETY:
        Z = set(R)
        while True:
            nxt = R & _cpre(G, SYS, Z)
            if nxt == Z:
                return Z
            Z = nxt
    # Buchi: nu Z. mu Y. (B ∩ cpre(Z)) ∪ cpre(Y); Env dead-ends enter via cpre
    Z = set(V)
    while True:
        good = (R & _cpre(G, SYS, Z)) | _env_dead(G, V)
        Y = explicit_attractor(G, SYS, good)
        if Y == Z:
            return Z
        Z = Y


def _solve_env(G: GameGraph, obj: FiniteObjective) -> set[int]:
    """Env's winning region computed from Env's own (dual) objective."""
    V = set(range(G.n))
    R = set(obj.target)
    if obj.kind == REACH:
        # stay out of R forever, or stop at a Sys dead-end outside R
        Z = V - R
        while True:
            nxt = Z & _cpre(G, ENV, Z)
            if nxt == Z:
                return Z
            Z = nxt
    if obj.kind == SAFETY:
        return explicit_attractor(G, ENV, (V - R) | _sys_dead(G, V))
    # co-Buchi for Env: mu Z. nu Y. (notB ∩ cpre_Env(Y)) ∪ cpre_Env(Z)
    Z: set[int] = set()
    while True:
        Y = set(V)
        while True:
            nxt = ((V - R) & _cpre(G, ENV, Y)) | _cpre(G, ENV, Z)
            if nxt == Y:
                break
            Y = nxt
        if Y == Z:
            return Z
        Z = Y


def explicit_solve(G: GameGraph, obj: FiniteObjective) -> tuple[set[int], set[int]]:
    """Winning regions ``(W_Sys, W_Env)``; asserts they partition the vertices."""
    w_sys = _solve_sys(G, obj)
    w_env = _solve_env(G, obj)
    if w_sys & w_env or (w_sys | w_env) != set(range(G.n)):
        raise AssertionError(
            f"determinacy check failed: overlap {sorted(w_sys & w_env)[:5]}, "
            f"missing {sorted(set(range(G.n)) - w_sys - w_env)[:5]}"
        )
    return w_sys, w_env


def buchi_recurrence(G: GameGraph, target: set[int]) -> set[int]:
    """Sys Büchi region by repeatedly removing the vertices Env wins.

    Inside the current subgame, vertices that cannot be forced into the
    accepting set are Env wins; their Env attractor is removed and the
    remainder (an Env trap) is solved again.
    """
    alive = set(range(G.n)) - explicit_attractor(G, ENV, _sys_dead(G, range(G.n)))
    while True:
        reach = explicit_attractor(G, SYS, set(target) & alive, within=alive)
        trap = alive - reach
        if not trap:
            return alive
        alive -= explicit_attractor(G, ENV, trap, within=alive)


# ---------------------------------------------------------------------------
# symbolic regions on finitizations


def denotation(eg: ExplicitGame, reg: Region) -> set[int]:
    return eg.denotation(reg)


def env_part(eg: ExplicitGame, verts: set[int]) -> set[int]:
    return {v for v in verts if v < eg.n_env}


# ---------------------------------------------------------------------------
# cache entries


def sample_phis(x_ind, lo: int, hi: int, cap: int = 9) -> list:
    """⊤, ⊥ and bound atoms ``x >= c`` / ``x <= c`` for independent variables."""
    phis = [T.TRUE, T.FALSE]
    consts = list(dict.fromkeys([lo, hi, 0]))
    for x in sorted(x_ind, key=lambda v: v.val):
        if x.sort is T.Sort.BOOL:
            phis += [x, T.not_(x)]
            continue
        for c in consts:
            phis.append(T.ge(x, T.const(c, x.sort)))
            phis.append(T.le(x, T.const(c, x.sort)))
    return phis[:cap]


@dataclass
class CacheCheckReport:
    entry_id: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_json(self):
        return {"entry": self.entry_id, "checked": self.checked, "ok": self.ok, "failures": self.failures}


def check_cache_entry(entry, eg: ExplicitGame, phis: list, player: Player | None = None) -> CacheCheckReport:
    """Check ⟦src ∧ φ⟧ ⊆ Attr_p(⟦targ ∧ φ⟧) on the finitization for each φ."""
    p = player or entry.player
    report = CacheCheckReport(entry.entry_id)
    names = [v.val for v in eg.game.variables]
    for phi in phis:
        phi_fn = T.compile_expr(phi)
        sat_phi = {
            v for v in range(eg.n_env)
            if phi_fn(dict(zip(names, eg.env_states[v][1])))
        }
        src = eg.denotation(entry.src) & sat_phi
        if not src:
            report.checked += 1
            continue
        targ = eg.denotation(entry.targ) & sat_phi
        attr = explicit_attractor(eg.graph, p, targ)
        bad = sorted(src - attr)
        report.checked += 1
        if bad:
            w = bad[0]
            report.failures.append(
                {"phi": str(phi), "witness": [eg.env_states[w][0], list(map(str, eg.env_states[w][1]))],
                 "count": len(bad)}
            )
    return report


# ---------------------------------------------------------------------------
# templates


@dataclass
class TemplateReport:
    strategies: int = 0
    satisfying: int = 0
    violations: list = field(default_factory=list)
    vacuous: bool = False

    @property
    def ok(self):
        return not self.violations


def _player_choices(G: GameGraph, p: Player, region: set[int]):
    verts = [v for v in sorted(region) if G.owner[v] is p and G.succ[v]]
    return verts, [list(G.succ[v]) for v in verts]


def enumerate_template_soundness(
    G: GameGraph, obj: FiniteObjective, template, winning: set[int], limit: int = 10**6
) -> TemplateReport:
    """Every memoryless strategy (on ``winning``) satisfying the template wins.

    The opponent is unrestricted; the play graph of a fixed strategy is a
    one-player graph for the opponent, analysed with SCCs.
    """
    p = template.player
    verts, choices = _player_choices(G, p, winning)
    total = 1
    for c in choices:
        total *= len(c)
    if total > limit:
        raise EnumerationTooLarge(f"{total} strategies")
    rep = TemplateReport()
    unsafe = set(template.unsafe)
    colive = set(template.colive)
    groups = [set(h) for h in template.live]
    for pick in itertools.product(*choices):
        rep.strategies += 1
        strat = dict(zip(verts, pick))
        if any((v, w) in unsafe for v, w in strat.items()):
            continue
        edges = _strategy_edges(G, p, strat)
        if not _satisfies_liveness(G, edges, winning, colive, groups, strat):
            continue
        rep.satisfying += 1
        loser = _find_losing_start(G, p, obj, edges, winning)
        if loser is not None:
            rep.violations.append({"strategy": {str(k): v for k, v in strat.items()}, "start": loser})
            if len(rep.violations) > 5:
                break
    rep.vacuous = rep.satisfying == 0 and bool(winning & set(G.vertices(p)))
    return rep


def _strategy_edges(G: GameGraph, p: Player, strat: dict) -> dict:
    """Successor sets when ``p`` follows ``strat`` (outside its domain, p is free)."""
    out = {}
    for v in range(G.n):
        if G.owner[v] is p and v in strat:
            out[v] = [strat[v]]
        else:
            out[v] = list(G.succ[v])
    return out


def _reachable(edges: dict, start: Iterable[int]) -> set[int]:
    seen = set(start)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for w in edges[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _satisfies_liveness(G, edges, winning, colive, groups, strat) -> bool:
    """For a memoryless strategy: no reachable cycle uses a co-live edge, and
    no reachable cycle visits a live-group source while avoiding the group."""
    reach = _reachable(edges, winning)

    def cyclic_sccs(skip: set):
        g = nx.DiGraph()
        g.add_nodes_from(reach)
        g.add_edges_from((v, w) for v in reach for w in edges[v] if (v, w) not in skip)
        for scc in nx.strongly_connected_components(g):
            if len(scc) > 1 or any(g.has_edge(v, v) for v in scc):
                yield scc, g

    for scc, g in cyclic_sccs(set()):
        if any((v, w) in colive for v in scc for w in edges[v] if w in scc):
            return False
    for h in groups:
        srcs = {v for v, _ in h}
        for scc, _ in cyclic_sccs(h):
            if scc & srcs:
                return False
    return True


def _find_losing_start(G, p, obj: FiniteObjective, edges: dict, winning: set[int]):
    """A vertex of ``winning`` from which the opponent beats the fixed strategy."""
    n = G.n
    sub = GameGraph([G.owner[v] for v in range(n)], [list(edges[v]) for v in range(n)], list(G.loc))
    w_sys, w_env = explicit_solve(sub, obj)
    mine = w_sys if p is SYS else w_env
    for v in sorted(winning):
        if v not in mine:
            return v
    return None


# ---------------------------------------------------------------------------
# brute-force memoryless solving (small games)


def brute_force_winning(G: GameGraph, obj: FiniteObjective, limit: int = 10**5) -> set[int]:
    """W_Sys by enumerating memoryless Sys strategies (memoryless determinacy)."""
    verts, choices = _player_choices(G, SYS, set(range(G.n)))
    total = 1
    for c in choices:
        total *= len(c)
    if total > limit:
        raise EnumerationTooLarge(f"{total} strategies")
    win: set[int] = set()
    for pick in itertools.product(*choices):
        strat = dict(zip(verts, pick))
        edges = _strategy_edges(G, SYS, strat)
        win |= _one_player_sys_wins(G, obj, edges)
    return win


def _one_player_sys_wins(G: GameGraph, obj: FiniteObjective, edges: dict) -> set[int]:
    """Vertices where Sys wins against every Env behaviour in a one-player graph."""
    T_ = set(obj.target)
    n = G.n
    # Env-controlled graph: Env wins from v if some path violates the objective
    dg = nx.DiGraph()
    dg.add_nodes_from(range(n))
    for v in range(n):
        for w in edges[v]:
            dg.add_edge(v, w)
    sys_dead = {v for v in range(n) if G.owner[v] is SYS and not edges[v]}
    if obj.kind == SAFETY:
        bad = (set(range(n)) - T_) | sys_dead
        losing = {v for v in range(n) if bad & (nx.descendants(dg, v) | {v})}
        return set(range(n)) - losing
    if obj.kind == REACH:
        h = dg.subgraph(set(range(n)) - T_)
        losing = set()
        cyc = set()
        for scc in nx.strongly_connected_components(h):
            if len(scc) > 1 or any(h.has_edge(v, v) for v in scc):
                cyc |= scc
        seeds = cyc | (sys_dead - T_)
        for v in h.nodes:
            if (nx.descendants(h, v) | {v}) & seeds:
                losing.add(v)
        return set(range(n)) - losing
    # Buchi: Env wins if it reaches a Sys dead-end or a cycle avoiding B
    h = dg.subgraph(set(range(n)) - T_)
    cyc = set()
    for scc in nx.strongly_connected_components(h):
        if len(scc) > 1 or any(h.has_edge(v, v) for v in scc):
            cyc |= scc
    seeds = cyc | sys_dead
    losing = {v for v in range(n) if (nx.descendants(dg, v) | {v}) & seeds}
    return set(range(n)) - losing


# ---------------------------------------------------------------------------
# abstractions


@dataclass
class ContractReport:
    direction: str
    concrete_edges: int = 0
    must_checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_json(self):
        return {"direction": self.direction, "concrete_edges": self.concrete_edges,
                "must_checks": self.must_checks, "ok": self.ok, "failures": self.failures[:10]}


def check_abstraction_contracts(ag, eg: ExplicitGame, backend=None) -> ContractReport:
    """Edge-by-edge transition contracts of an abstract game on a finitization.

    (i) every concrete move of the over-approximated player has its image
    among the abstract edges.  (ii) every abstract move of the other player
    is a must move: each concrete source has a concrete move into the target
    cell.  For (ii) successors are evaluated without range truncation; an
    input outside the finite range is looked up with ``backend`` if given.
    """
    from rpgcache.abstraction import AlphaMap

    alpha = AlphaMap(ag, eg)
    G, A = eg.graph, ag.graph
    over = ag.overapprox
    rep = ContractReport(ag.direction)
    edges = set(A.edges())
    for v, w in G.edges():
        if G.owner[v] is not over:
            continue
        rep.concrete_edges += 1
        av, aw = alpha(v), alpha(w)
        if av is None or aw is None or (av, aw) not in edges:
            rep.failures.append({"contract": "i", "edge": [_describe(eg, v), _describe(eg, w)]})

    g = eg.game
    names = [x.val for x in g.variables]
    in_names = [x.val for x in g.inputs]
    dom = ag.domain
    by_src: dict[int, list[int]] = {}
    for v, w in edges:
        if A.owner[v] is not over:
            by_src.setdefault(v, []).append(w)
    compiled = {t: (T.compile_expr(t.guard), [T.compile_expr(t.term(x)) for x in g.variables]) for t in g.transitions}
    inv = {l: T.compile_expr(g.inv[l]) for l in g.locations}
    state_fn = [T.compile_expr(c.formula) for c in dom.state_cells]
    for s in range(G.n):
        if G.owner[s] is over:
            continue
        a = alpha(s)
        if a is None:
            continue
        for w in by_src.get(a, []):
            rep.must_checks += 1
            if G.owner[s] is ENV:
                l, vals = eg.env_states[s]
                e = ag.vertices[w][2]
                if any(alpha(x) == w for x in G.succ[s]):
                    continue
                if backend is not None:
                    f = dom.move_cells[e].formula
                    bind = {x: T.const(val, x.sort) for x, val in zip(g.variables, vals)}
                    if backend.is_sat(T.substitute(f, bind)):
                        continue
                rep.failures.append({"contract": "ii", "edge": [_describe(eg, s), ag.label(w)]})
            else:
                e_v, ivals = eg.sys_states[s - eg.n_env]
                l, vals = eg.env_states[e_v]
                env = dict(zip(names, vals))
                env.update(zip(in_names, ivals))
                l2, c2 = ag.vertices[w]
                ok = False
                for t in g.out(l):
                    gfn, ufns = compiled[t]
                    if t.dst != l2 or not gfn(env):
                        continue
                    post = dict(zip(names, (u(env) for u in ufns)))
                    if inv[l2](post) and state_fn[c2](post):
                        ok = True
                        break
                if not ok:
                    rep.failures.append({"contract": "ii", "edge": [_describe(eg, s), ag.label(w)]})
    return rep


def _describe(eg: ExplicitGame, v: int) -> str:
    if v < eg.n_env:
        l, vals = eg.env_states[v]
        return f"{l}{tuple(map(str, vals))}"
    e, ivals = eg.sys_states[v - eg.n_env]
    return f"{_describe(eg, e)}/{tuple(map(str, ivals))}"


def check_abstraction_soundness(up, down, eg: ExplicitGame, obj) -> dict:
    """Explicit W_Sys lies between the concretized abstract winning regions."""
    from rpgcache.abstraction import AlphaMap

    w_sys, _ = explicit_solve(eg.graph, eg.graph.lift_objective(obj))
    concrete = env_part(eg, w_sys)
    out = {}
    for ag in (up, down):
        alpha = AlphaMap(ag, eg)
        aw, _ = explicit_solve(ag.graph, ag.graph.lift_objective(obj))
        inside = {v for v in eg.env_vertices() if alpha(v) in aw}
        if ag.direction == "up":
            bad = concrete - inside
        else:
            bad = inside - concrete
        out[ag.direction] = {"ok": not bad, "abstract_winning": len(inside), "violations": len(bad)}
    out["concrete_winning"] = len(concrete)
    out["ok"] = all(out[ag.direction]["ok"] for ag in (up, down))
    return out
