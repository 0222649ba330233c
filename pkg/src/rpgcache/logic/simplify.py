"""Cheap formula clean-up on top of the solver's own simplifier.

Fixpoint iterates are disjunctions that grow by one piece per step; the
solver's context simplifier does not merge such pieces.  ``merge_disjuncts``
replaces two disjuncts by the conjunction of the literals both imply, when
that conjunction is no larger semantically than their union.
"""
from __future__ import annotations

from rpgcache.logic import linear
from rpgcache.logic import terms as T


def normalize(f: T.Expr) -> T.Expr:
    """Rewrite arithmetic atoms into canonical linear form (syntactic only)."""
    memo: dict[T.Expr, T.Expr] = {}

    def go(x: T.Expr) -> T.Expr:
        r = memo.get(x)
        if r is not None:
            return r
        if x.sort is not T.Sort.BOOL or x.op in (T.TRUE_OP, T.FALSE_OP, T.VAR):
            r = x
        elif x.op in T.COMPARISONS and x.args[0].sort is not T.Sort.BOOL:
            atom, pos = linear.canonical_atom(x)
            r = atom if pos else T.not_(atom)
        elif x.op == T.NOT:
            r = T.not_(go(x.args[0]))
        elif x.op in T.QUANTIFIERS:
            r = T.rebuild(x, (go(x.args[0]),))
        elif x.op == T.AND:
            r = T.and_(*_tighten(tuple(go(a) for a in x.args), conj=True))
        elif x.op == T.OR:
            r = T.or_(*_tighten(tuple(go(a) for a in x.args), conj=False))
        elif x.op in (T.IMPLIES, T.ITE, T.EQ):
            r = T.rebuild(x, tuple(go(a) for a in x.args))
        else:
            r = x
        memo[x] = r
        return r

    return go(f)


def _int_bound(lit: T.Expr):
    """``(term, lo, hi)`` for a canonical Int literal ``term >= k`` or its negation."""
    pos = lit.op != T.NOT
    atom = lit if pos else lit.args[0]
    if atom.op != T.GE or atom.args[0].sort is not T.Sort.INT or atom.args[1].op != T.CONST:
        return None
    k = atom.args[1].val
    return (atom.args[0], k, None) if pos else (atom.args[0], None, k - 1)


def _tighten(args: tuple, conj: bool) -> list[T.Expr]:
    """Keep one bound per term and direction: the tightest in a conjunction,
    the loosest in a disjunction."""
    best: dict = {}
    out: list = []
    for a in args:
        b = _int_bound(a)
        if b is None:
            out.append(a)
            continue
        term, lo, hi = b
        side = "lo" if lo is not None else "hi"
        val = lo if lo is not None else hi
        key = (term, side)
        if key not in best:
            best[key] = (val, a)
            out.append(key)
            continue
        old = best[key][0]
        stronger = val > old if side == "lo" else val < old
        if stronger == conj:
            best[key] = (val, a)
    return [best[x][1] if isinstance(x, tuple) else x for x in out]


def disjuncts(f: T.Expr) -> list[T.Expr]:
    return list(f.args) if f.op == T.OR else [f]


def conjuncts(f: T.Expr) -> list[T.Expr]:
    return list(f.args) if f.op == T.AND else [f]


def merge_disjuncts(backend, f: T.Expr, context: T.Expr = T.TRUE, max_disjuncts: int = 12) -> T.Expr:
    """Semantically equivalent (under ``context``) disjunction with merged pieces."""
    ds = disjuncts(f)
    if len(ds) < 2 or len(ds) > max_disjuncts:
        return f
    # drop disjuncts implied by the others one at a time
    changed = True
    while changed and len(ds) > 1:
        changed = False
        for i, d in enumerate(ds):
            rest = T.or_(*(ds[:i] + ds[i + 1:]))
            if backend.implies(T.and_(context, d), rest):
                ds = ds[:i] + ds[i + 1:]
                changed = True
                break
    changed = True
    while changed and len(ds) > 1:
        changed = False
        for i in range(len(ds)):
            for j in range(i + 1, len(ds)):
                di, dj = ds[i], ds[j]
                common = []
                for lit in dict.fromkeys(conjuncts(di) + conjuncts(dj)):
                    if backend.implies(T.and_(context, di), lit) and backend.implies(T.and_(context, dj), lit):
                        common.append(lit)
                hull = T.and_(*common)
                if backend.implies(T.and_(context, hull), T.or_(di, dj)):
                    ds = [d for k, d in enumerate(ds) if k not in (i, j)] + [hull]
                    changed = True
                    break
            if changed:
                break
    return T.or_(*ds)


def tidy(backend, f: T.Expr, context: T.Expr = T.TRUE, max_disjuncts: int = 24) -> T.Expr:
    """``normalize`` plus disjunct merging, also below a top-level conjunction."""
    f = normalize(f)
    if f.op == T.AND:
        ors = [a for a in f.args if a.op == T.OR]
        if len(ors) == 1:
            rest = [a for a in f.args if a is not ors[0]]
            inner = merge_disjuncts(backend, ors[0], T.and_(context, *rest), max_disjuncts)
            return normalize(T.and_(*rest, inner))
        return f
    return normalize(merge_disjuncts(backend, f, context, max_disjuncts))
