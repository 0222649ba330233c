"""Symbolic attractors: enforceable predecessors, acceleration, caches, solving.

Regions map locations to formulas over program variables and denote sets of
environment states.  The attractor is the least fixpoint of
``X = d or cpre(X)``; on infinite state spaces it need not converge, so two
mechanisms add whole regions at once: checked acceleration certificates for
self-loops, and attractor-cache entries.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Iterable

from rpgcache.logic import linear
from rpgcache.logic import terms as T
from rpgcache.logic import simplify as simp
from rpgcache.logic.backend import Backend, BackendError
from rpgcache.objective import BUCHI, ENV, REACH, SAFETY, SYS, Objective, Player, UnsupportedObjective
from rpgcache.rpg import Game, Region, bottom, inv_region, meet, objective_region

log = logging.getLogger(__name__)


def _check_default() -> bool:
    return os.environ.get("RPGCACHE_CHECK", "") not in ("", "0")


@dataclass
class SolveOptions:
    max_iters: int = 500
    outer_max_iters: int = 100
    accel: bool = True
    check: bool = field(default_factory=_check_default)
    keep_trace: bool = False
    max_rankings: int = 8


@dataclass
class Stats:
    cpre_calls: int = 0
    accel_hits: int = 0
    cache_hits: list = field(default_factory=list)
    iterations: int = 0
    outer_iterations: int = 0

    def to_json(self) -> dict:
        return {
            "cpre_calls": self.cpre_calls,
            "accel_hits": self.accel_hits,
            "cache_hits": list(self.cache_hits),
            "iterations": self.iterations,
            "outer_iterations": self.outer_iterations,
        }


class IterationLimit(Exception):
    """Iteration budget exhausted.  ``region`` is the last iterate; for
    least fixpoints it is a sound under-approximation, for greatest fixpoints
    (``inconclusive``) it is not a winning region."""

    def __init__(self, msg: str, region: Region, inconclusive: bool = False):
        super().__init__(msg)
        self.region = region
        self.inconclusive = inconclusive


@dataclass
class AttractorIterate:
    step: int
    region: Region
    provenance: dict  # location -> list of reasons for growth


@dataclass(frozen=True)
class AccelCertificate:
    location: str
    psi: T.Expr
    ranking: T.Expr
    delta: object


class Engine:
    """Symbolic operations on one game with one backend session.

    Holds memo tables so repeated cpre/acceleration queries on identical
    inputs do not reach the solver again.
    """

    def __init__(self, game: Game, backend: Backend, opts: SolveOptions | None = None):
        self.g = game
        self.b = backend
        self.opts = opts or SolveOptions()
        self._cpre_memo: dict = {}
        self._accel_memo: dict = {}
        self._succ = {l: list(dict.fromkeys(t.dst for t in game.out(l))) for l in game.locations}
        self.certificates: list[AccelCertificate] = []

    # -- one-step predecessor ---------------------------------------------

    def cpre_location(self, p: Player, d: Region, l: str) -> T.Expr:
        g = self.g
        key = (p, l, tuple(d[l2] for l2 in self._succ[l]))
        r = self._cpre_memo.get(key)
        if r is not None:
            return r
        inv_l = g.inv[l]
        if p is SYS:
            parts = []
            for t in g.out(l):
                target = T.and_(g.inv[t.dst], d[t.dst])
                if target is T.FALSE:
                    continue
                parts.append(T.and_(t.guard, T.substitute(target, t.mapping)))
            body = T.forall(g.inputs, T.or_(*parts))
        else:
            parts = []
            for t in g.out(l):
                enabled = T.and_(t.guard, T.substitute(g.inv[t.dst], t.mapping))
                parts.append(T.implies(enabled, T.substitute(d[t.dst], t.mapping)))
            body = T.exists(g.inputs, T.and_(*parts))
        f = T.and_(inv_l, body)
        if f is T.FALSE:
            r = T.FALSE
        else:
            r = simp.normalize(self.b.qelim(f))
        self._cpre_memo[key] = r
        return r

    def cpre(self, p: Player, d: Region) -> Region:
        return d.map(lambda l, _f: self.cpre_location(p, d, l))

    # -- helpers ------------------------------------------------------------

    def absorb(self, old: T.Expr, new: T.Expr) -> T.Expr:
        """``old or new``, keeping the larger operand when one implies the other."""
        if new is T.FALSE or new is old:
            return old
        if old is T.FALSE:
            return new
        if self.b.implies(new, old):
            return old
        if self.b.implies(old, new):
            return simp.tidy(self.b, new)
        # drop disjuncts of ``old`` that the new part subsumes
        kept = [x for x in (old.args if old.op == T.OR else (old,)) if not self.b.implies(x, new)]
        return simp.tidy(self.b, self.b.simplify(T.or_(*kept, new)))

    # -- acceleration -------------------------------------------------------

    def accelerate(self, p: Player, l: str, a: Region) -> tuple[T.Expr, list[AccelCertificate]] | None:
        """Search certificates for location ``l``; return the joined lemma region."""
        g = self.g
        loops = g.self_loops(l)
        if not loops:
            return None
        key = (p, l, tuple(a[l2] for l2 in self._succ[l]))
        if key in self._accel_memo:
            return self._accel_memo[key]
        result = self._search(p, l, a, loops)
        self._accel_memo[key] = result
        return result

    def _ranking_candidates(self, l: str, a: Region, loops) -> list[T.Expr]:
        g = self.g
        prog = set(g.variables)
        sources = [a[l]] + [t.guard for t in g.out(l)] + [a[t.dst] for t in g.out(l) if t.dst != l]
        out: dict[T.Expr, None] = {}
        for f in sources:
            for atom in T.atoms(f):
                if atom.op not in T.COMPARISONS or atom.args[0].sort is T.Sort.BOOL:
                    continue
                if not atom.fv or not atom.fv <= prog:
                    continue
                form = linear.linear_form(T.sub(atom.args[0], atom.args[1]))
                if not linear.is_pure(form):
                    continue
                coeffs, const = form
                sort = T.Sort.REAL if any(v.sort is T.Sort.REAL for v in coeffs) else T.Sort.INT
                if sort is T.Sort.INT:
                    coeffs, const = linear._scale_int(coeffs, const)
                for sign in (-1, 1):
                    r = linear.build_term({v: sign * c for v, c in coeffs.items()}, sign * const, sort)
                    out.setdefault(r, None)
        # loops must touch the ranking, otherwise it cannot decrease
        modified = {v for t in loops for v, _ in t.update}
        ranked = [r for r in out if r.fv & modified]
        return ranked[: self.opts.max_rankings]

    def _deltas(self, loops, sort: T.Sort) -> list:
        ds = [1]
        for t in loops:
            for _, term in t.update:
                for sub in T.subterms(term):
                    if sub.op == T.CONST and sub.val != 0 and abs(sub.val) not in ds:
                        ds.append(abs(sub.val))
        if sort is T.Sort.INT:
            ds = [d for d in ds if d == int(d)]
        return sorted(ds)

    def _search(self, p: Player, l: str, a: Region, loops):
        g = self.g
        inv = g.inv[l]
        if not self.b.is_sat(inv):
            return None
        modified = list(dict.fromkeys(v for t in loops for v, _ in t.update))
        accepted: list[AccelCertificate] = []
        joined = a[l]
        for r in self._ranking_candidates(l, a, loops):
            zero = T.const(0, r.sort)
            for extra in (T.TRUE, T.ge(r, zero)):
                try:
                    kappa = self.b.qelim(T.forall(modified, T.implies(T.and_(inv, T.le(r, zero), extra), a[l])))
                except BackendError as exc:
                    log.debug("acceleration: qelim failed at %s: %s", l, exc)
                    continue
                psi = T.and_(inv, extra, kappa)
                if psi is T.FALSE or self.b.implies(psi, joined):
                    continue
                for delta in self._deltas(loops, r.sort):
                    cert = AccelCertificate(l, psi, r, delta)
                    if check_certificate(self.g, self.b, p, a, cert):
                        accepted.append(cert)
                        joined = self.absorb(joined, psi)
                        break
        if not accepted:
            return None
        return joined, accepted

    # -- cache use ------------------------------------------------------------

    def strengthen_target(self, targ: Region, a: Region, x_ind: Iterable[T.Expr]) -> T.Expr:
        """Weakest-ish φ over ``x_ind`` with targ ∧ φ ⊆ a at every location."""
        x_ind = set(x_ind)
        others = [v for v in self.g.variables if v not in x_ind]
        parts = []
        for l, f in targ.items():
            if f is T.FALSE:
                continue
            parts.append(T.implies(T.and_(self.g.inv[l], f), a[l]))
        body = T.and_(*parts)
        try:
            phi = self.b.simplify(self.b.qelim(T.forall(others, body)))
        except BackendError as exc:
            log.debug("strengthen_target: qelim failed (%s); using false", exc)
            return T.FALSE
        if not phi.fv <= x_ind:
            return T.FALSE
        if self.opts.check:
            for l, f in targ.items():
                if f is not T.FALSE and not self.b.implies(T.and_(self.g.inv[l], f, phi), a[l]):
                    raise AssertionError(f"strengthen_target postcondition fails at {l}")
        return phi

    # -- attractors -----------------------------------------------------------

    def attractor(
        self,
        p: Player,
        d: Region,
        cache: Iterable = (),
        stats: Stats | None = None,
        max_iters: int | None = None,
        trace: list | None = None,
    ) -> Region:
        """Least fixpoint of ``X = d or cpre(X)`` with acceleration and caches."""
        stats = stats if stats is not None else Stats()
        max_iters = self.opts.max_iters if max_iters is None else max_iters
        entries = [e for e in cache if e.game_id == self.g.game_id and e.player is p]
        a = d.map(lambda l, f: T.and_(self.g.inv[l], f) if f is not T.FALSE else f)
        if trace is not None:
            trace.append(AttractorIterate(0, bottom(self.g), {}))
            trace.append(AttractorIterate(1, a, {l: ["initial"] for l in a.support()}))
        for n in range(max_iters):
            stats.iterations += 1
            prov: dict[str, list] = {}
            vals = dict(a.items())
            if self.opts.accel:
                for l in self.g.locations:
                    res = self.accelerate(p, l, a)
                    if res is None:
                        continue
                    psi, certs = res
                    new = self.absorb(vals[l], psi)
                    if new is not vals[l]:
                        vals[l] = new
                        stats.accel_hits += 1
                        self.certificates.extend(certs)
                        prov.setdefault(l, []).append("accelerated")
            stats.cpre_calls += 1
            c = self.cpre(p, a)
            for l, f in c.items():
                new = self.absorb(vals[l], f)
                if new is not vals[l]:
                    vals[l] = new
                    prov.setdefault(l, []).append("cpre")
            b = Region(a.index, tuple(vals[l] for l in self.g.locations))
            for e in entries:
                phi = self.strengthen_target(e.targ, b, e.x_ind)
                if phi is T.FALSE or not self.b.is_sat(phi):
                    continue
                hit = False
                for l, f in e.src.items():
                    if f is T.FALSE:
                        continue
                    add = T.and_(self.g.inv[l], f, phi)
                    new = self.absorb(vals[l], add)
                    if new is not vals[l]:
                        vals[l] = new
                        hit = True
                        prov.setdefault(l, []).append(f"cache-hit({e.entry_id})")
                if hit:
                    stats.cache_hits.append(e.entry_id)
                    b = Region(a.index, tuple(vals[l] for l in self.g.locations))
            nxt = Region(a.index, tuple(vals[l] for l in self.g.locations))
            if trace is not None:
                trace.append(AttractorIterate(n + 2, nxt, prov))
            if nxt == a:
                return a
            a = nxt
        raise IterationLimit(f"attractor did not converge within {max_iters} iterations", a)

    # -- objectives -------------------------------------------------------------

    def solve(self, obj: Objective, cache: Iterable = (), stats: Stats | None = None) -> Region:
        stats = stats if stats is not None else Stats()
        cache = list(cache)
        g = self.g
        if obj.kind == REACH:
            return self.attractor(SYS, objective_region(g, obj.locations), cache, stats)
        if obj.kind == SAFETY:
            y = objective_region(g, obj.locations)
            for _ in range(self.opts.outer_max_iters):
                stats.outer_iterations += 1
                stats.cpre_calls += 1
                c = self.cpre(SYS, y)
                nxt = y.map(lambda l, f: self._shrink(f, c[l]))
                if nxt == y:
                    return y
                y = nxt
            raise IterationLimit("safety fixpoint did not converge", y, inconclusive=True)
        if obj.kind == BUCHI:
            y = inv_region(g)
            for _ in range(self.opts.outer_max_iters):
                stats.outer_iterations += 1
                stats.cpre_calls += 1
                c = self.cpre(SYS, y)
                target = meet(objective_region(g, obj.locations), c)
                target = target.map(lambda l, f: self.b.simplify(f))
                try:
                    nxt = self.attractor(SYS, target, cache, stats)
                except IterationLimit as exc:
                    raise IterationLimit(str(exc), y, inconclusive=True) from None
                nxt = nxt.map(lambda l, f: self._shrink(y[l], f))
                if nxt == y:
                    return y
                y = nxt
            raise IterationLimit("Buchi fixpoint did not converge", y, inconclusive=True)
        raise UnsupportedObjective(obj.kind)

    def _shrink(self, old: T.Expr, new: T.Expr) -> T.Expr:
        """``old and new`` for descending iterations, reusing ``old`` when equal."""
        if new is old:
            return old
        if self.b.implies(old, new):
            return old
        if self.b.implies(new, old):
            return new
        return self.b.simplify(T.and_(old, new))


# ---------------------------------------------------------------------------
# certificates


def certificate_conditions(g: Game, p: Player, a: Region, cert: AccelCertificate) -> list[T.Expr]:
    """The three validity obligations of an acceleration certificate."""
    l, psi, r, delta = cert.location, cert.psi, cert.ranking, cert.delta
    zero = T.const(0, r.sort)
    dl = T.const(delta, r.sort)
    c1 = T.implies(T.and_(psi, T.le(r, zero)), a[l])
    moves = []
    for t in g.out(l):
        m = t.mapping
        goal = T.substitute(a[t.dst], m)
        if t.dst == l:
            goal = T.or_(goal, T.and_(T.substitute(psi, m), T.le(T.substitute(r, m), T.sub(r, dl))))
        enabled = T.and_(t.guard, T.substitute(g.inv[t.dst], m))
        moves.append((enabled, goal))
    if p is SYS:
        step = T.forall(g.inputs, T.or_(*(T.and_(e, goal) for e, goal in moves)))
    else:
        step = T.exists(g.inputs, T.and_(*(T.implies(e, goal) for e, goal in moves)))
    c2 = T.implies(T.and_(psi, T.gt(r, zero)), step)
    c3 = T.implies(psi, g.inv[l])
    return [c1, c2, c3]


def check_certificate(g: Game, backend: Backend, p: Player, a: Region, cert: AccelCertificate) -> bool:
    if cert.delta <= 0:
        return False
    if cert.ranking.sort is T.Sort.BOOL or not cert.ranking.fv <= set(g.variables):
        return False
    return all(backend.is_valid(c) for c in certificate_conditions(g, p, a, cert))


# ---------------------------------------------------------------------------
# module-level conveniences


def cpre(g: Game, backend: Backend, p: Player, d: Region) -> Region:
    return Engine(g, backend).cpre(p, d)


def attractor(g: Game, backend: Backend, p: Player, d: Region, opts: SolveOptions | None = None,
              stats: Stats | None = None) -> Region:
    return Engine(g, backend, opts).attractor(p, d, (), stats)


def attractor_with_cache(g: Game, backend: Backend, p: Player, d: Region, cache, opts: SolveOptions | None = None,
                         stats: Stats | None = None) -> Region:
    return Engine(g, backend, opts).attractor(p, d, cache, stats)


def accelerate(g: Game, backend: Backend, p: Player, l: str, a: Region):
    res = Engine(g, backend).accelerate(p, l, a)
    if res is None:
        return None
    psi, certs = res
    return a.replace({l: psi}), certs


def strengthen_target(g: Game, backend: Backend, targ: Region, a: Region, x_ind) -> T.Expr:
    return Engine(g, backend).strengthen_target(targ, a, x_ind)


def solve(g: Game, backend: Backend, obj: Objective, cache=(), opts: SolveOptions | None = None,
          stats: Stats | None = None) -> Region:
    return Engine(g, backend, opts).solve(obj, cache, stats)
