"""Canonical SMT-LIB2 printing of expressions."""
from __future__ import annotations

import re
from fractions import Fraction

from rpgcache.logic import terms as T

_SIMPLE_SYMBOL = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*$")


def symbol(name: str) -> str:
    if _SIMPLE_SYMBOL.match(name):
        return name
    return "|" + name + "|"


def _real_literal(q: Fraction) -> str:
    neg = q < 0
    q = abs(q)
    if q.denominator == 1:
        s = f"{q.numerator}.0"
    else:
        s = f"(/ {q.numerator}.0 {q.denominator}.0)"
    return f"(- {s})" if neg else s


def const_text(e: T.Expr) -> str:
    if e.sort is T.Sort.INT:
        return f"(- {-e.val})" if e.val < 0 else str(e.val)
    return _real_literal(e.val)


def to_smt(e: T.Expr) -> str:
    memo: dict[T.Expr, str] = {}

    def go(x: T.Expr) -> str:
        s = memo.get(x)
        if s is not None:
            return s
        op = x.op
        if op == T.VAR:
            s = symbol(x.val)
        elif op == T.CONST:
            s = const_text(x)
        elif op == T.TRUE_OP:
            s = "true"
        elif op == T.FALSE_OP:
            s = "false"
        elif op == T.NEG:
            s = f"(- {go(x.args[0])})"
        elif op in T.QUANTIFIERS:
            binders = " ".join(f"({symbol(v.val)} {v.sort.value})" for v in x.val)
            s = f"({op} ({binders}) {go(x.args[0])})"
        else:
            s = "(" + op + " " + " ".join(go(a) for a in x.args) + ")"
        memo[x] = s
        return s

    return go(e)


def sort_decl(v: T.Expr) -> str:
    return f"(declare-const {symbol(v.val)} {v.sort.value})"
