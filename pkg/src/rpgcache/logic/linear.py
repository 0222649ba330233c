"""Linear normal forms for arithmetic terms and atoms."""
from __future__ import annotations

import math
from fractions import Fraction

from rpgcache.logic import terms as T
from rpgcache.logic.printer import to_smt

LinearForm = tuple[dict, Fraction]


def linear_form(t: T.Expr) -> LinearForm:
    """Return ``(coeffs, constant)`` with ``t = sum(c * leaf) + constant``.

    Leaves are variables or any non-linear subterm (ite, div, mod, to_real),
    which are treated as opaque.
    """
    coeffs: dict[T.Expr, Fraction] = {}
    const = Fraction(0)

    def go(x: T.Expr, k: Fraction):
        nonlocal const
        op = x.op
        if op == T.CONST:
            const += k * x.val
        elif op == T.ADD:
            for a in x.args:
                go(a, k)
        elif op == T.SUB:
            go(x.args[0], k)
            go(x.args[1], -k)
        elif op == T.NEG:
            go(x.args[0], -k)
        elif op == T.MUL:
            go(x.args[1], k * x.args[0].val)
        elif op == T.TO_REAL and x.args[0].op == T.VAR:
            coeffs[x] = coeffs.get(x, 0) + k
        else:
            coeffs[x] = coeffs.get(x, 0) + k

    go(t, Fraction(1))
    return {v: c for v, c in coeffs.items() if c != 0}, const


def is_pure(form: LinearForm) -> bool:
    """True when every leaf is a plain variable."""
    return all(v.op == T.VAR for v in form[0])


def build_term(coeffs: dict, const, sort: T.Sort) -> T.Expr:
    parts = []
    for v in sorted(coeffs, key=to_smt):
        c = coeffs[v]
        if sort is T.Sort.INT:
            c = int(c)
        parts.append(T.mul(T.const(c, sort), v))
    if const:
        parts.append(T.const(const if sort is T.Sort.REAL else int(const), sort))
    if not parts:
        return T.const(0, sort)
    return T.add(*parts)


def _scale_int(coeffs: dict, const: Fraction) -> tuple[dict, Fraction]:
    """Scale to integer coefficients with gcd 1 (constant scaled along)."""
    den = 1
    for c in coeffs.values():
        den = den * c.denominator // math.gcd(den, c.denominator)
    coeffs = {v: c * den for v, c in coeffs.items()}
    const = const * den
    g = 0
    for c in coeffs.values():
        g = math.gcd(g, int(c))
    if g > 1:
        coeffs = {v: c / g for v, c in coeffs.items()}
        const = const / g
    return coeffs, const


def canonical_atom(atom: T.Expr) -> tuple[T.Expr, bool]:
    """Normalise an atom to ``(canon, polarity)`` with ``atom == canon`` if
    polarity is True and ``atom == not canon`` otherwise.

    Int atoms become ``sum >= k`` or ``sum = k`` with coprime integer
    coefficients and a positive leading coefficient.  Real atoms become
    ``sum >= k``, ``sum <= k`` or ``sum = k`` with leading coefficient 1.
    Negations of each other therefore map to the same canonical atom.
    """
    if atom.op == T.NOT:
        c, pol = canonical_atom(atom.args[0])
        return c, not pol
    if atom.op not in T.COMPARISONS or atom.args[0].sort is T.Sort.BOOL:
        return atom, True
    a, b = atom.args
    coeffs, const = linear_form(T.sub(a, b))
    op = atom.op
    sort = T.Sort.REAL if a.sort is T.Sort.REAL or b.sort is T.Sort.REAL else T.Sort.INT
    rhs = -const  # sum(coeffs) op rhs
    if not coeffs:
        val = T._CMP_EVAL[op](0, rhs)
        return (T.TRUE, True) if val else (T.FALSE, True)
    lead = coeffs[min(coeffs, key=to_smt)]
    if sort is T.Sort.INT:
        coeffs, rhs = _scale_int(coeffs, rhs)
        lead = coeffs[min(coeffs, key=to_smt)]
        if op == T.EQ:
            if lead < 0:
                coeffs = {v: -c for v, c in coeffs.items()}
                rhs = -rhs
            if rhs.denominator != 1:
                return T.FALSE, True
            return T.eq(build_term(coeffs, 0, sort), T.const(int(rhs))), True
        # reduce to sum >= k
        if op == T.GT:
            k, flip = math.floor(rhs) + 1, False
        elif op == T.GE:
            k, flip = math.ceil(rhs), False
        elif op == T.LT:
            # sum < rhs  <=>  not(sum >= ceil(rhs))
            k, flip = math.ceil(rhs), True
        else:  # LE: sum <= rhs <=> not(sum >= floor(rhs)+1)
            k, flip = math.floor(rhs) + 1, True
        pol = not flip
        if lead < 0:
            # sum >= k <=> not(-sum >= -k+1)
            coeffs = {v: -c for v, c in coeffs.items()}
            k = -k + 1
            pol = not pol
        return T.ge(build_term(coeffs, 0, sort), T.const(k)), pol
    # Real: divide by |lead| keeps direction, then make lead positive
    scale = abs(lead)
    coeffs = {v: c / scale for v, c in coeffs.items()}
    rhs = rhs / scale
    if lead < 0:
        coeffs = {v: -c for v, c in coeffs.items()}
        rhs = -rhs
        op = {T.LE: T.GE, T.LT: T.GT, T.GE: T.LE, T.GT: T.LT, T.EQ: T.EQ}[op]
    term = build_term(coeffs, 0, sort)
    k = T.const(rhs, T.Sort.REAL)
    if op == T.EQ:
        return T.eq(term, k), True
    if op == T.GE:
        return T.ge(term, k), True
    if op == T.LE:
        return T.le(term, k), True
    if op == T.GT:
        return T.le(term, k), False
    return T.ge(term, k), False


def literal(atom: T.Expr, positive: bool) -> T.Expr:
    return atom if positive else T.not_(atom)
