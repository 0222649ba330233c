"""Convert parsed S-expressions into :class:`Expr` values."""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Mapping

from rpgcache.logic import terms as T
from rpgcache.logic.sexpr import Atom, ParseError, SList, parse_one, position

_INT_RE = re.compile(r"^[0-9]+$")
_DEC_RE = re.compile(r"^[0-9]+\.[0-9]+$")

_CMP = {"<=": T.LE, "<": T.LT, ">=": T.GE, ">": T.GT}


class Reader:
    """Reads SMT-LIB terms over a fixed scope of declared variables."""

    def __init__(self, scope: Mapping[str, T.Expr]):
        self.scope = dict(scope)

    def read_text(self, text: str) -> T.Expr:
        return self.read(parse_one(text))

    def read(self, sx, env: Mapping[str, T.Expr] | None = None) -> T.Expr:
        try:
            return self._read(sx, env or {})
        except T.SortError as exc:
            line, col = position(sx)
            if line is not None and not str(exc).startswith(f"{line}:"):
                raise T.SortError(f"{line}:{col}: {exc}") from None
            raise

    def _read(self, sx, env) -> T.Expr:
        if isinstance(sx, SList):
            if not sx:
                raise ParseError("empty application", *position(sx))
            return self._app(sx, env)
        tok = str(sx)
        if tok in env:
            return env[tok]
        if tok in self.scope:
            return self.scope[tok]
        if tok == "true":
            return T.TRUE
        if tok == "false":
            return T.FALSE
        if _INT_RE.match(tok):
            return T.const(int(tok), T.Sort.INT)
        if _DEC_RE.match(tok):
            return T.const(Fraction(tok), T.Sort.REAL)
        raise T.SortError(f"undeclared variable {tok!r}")

    def _app(self, sx: SList, env) -> T.Expr:
        head = sx[0]
        if isinstance(head, SList):
            # indexed function such as ((_ divisible 3) t)
            if len(head) == 3 and head[0] == "_" and head[1] == "divisible":
                k = int(head[2])
                t = self._read(sx[1], env)
                return T.eq(T.smt_mod(t, T.const(k)), T.const(0))
            raise ParseError(f"unsupported application head {head}", *position(sx))
        op = str(head)
        if op == "let":
            bindings = {}
            for b in sx[1]:
                bindings[str(b[0])] = self._read(b[1], env)
            inner = dict(env)
            inner.update(bindings)
            return self._read(sx[2], inner)
        if op in ("exists", "forall"):
            inner = dict(env)
            vs = []
            for b in sx[1]:
                v = T.var(str(b[0]), T.Sort.parse(str(b[1])))
                inner[str(b[0])] = v
                vs.append(v)
            body = self._read(sx[2], inner)
            return T.exists(vs, body) if op == "exists" else T.forall(vs, body)
        if op == "!":
            # annotated term: ignore attributes
            return self._read(sx[1], env)
        args = [self._read(a, env) for a in sx[1:]]
        return apply_op(op, args, sx)


def apply_op(op: str, args: list, sx=None) -> T.Expr:
    pos = position(sx) if sx is not None else (None, None)
    if op == "+":
        return T.add(*args)
    if op == "-":
        if len(args) == 1:
            return T.neg(args[0])
        acc = args[0]
        for a in args[1:]:
            acc = T.sub(acc, a)
        return acc
    if op == "*":
        return T.mul(*args)
    if op == "/":
        if len(args) != 2 or args[1].op != T.CONST or args[1].val == 0:
            raise T.SortError("division only by a non-zero constant")
        return T.mul(T.to_real(args[0]), T.const(Fraction(1) / Fraction(args[1].val), T.Sort.REAL))
    if op == "div":
        return T.smt_div(*args)
    if op == "mod":
        return T.smt_mod(*args)
    if op == "to_real":
        return T.to_real(args[0])
    if op == "to_int":
        raise T.SortError("to_int is not supported")
    if op == "abs":
        (a,) = args
        return T.ite(T.ge(a, T.const(0, a.sort)), a, T.neg(a))
    if op == "ite":
        return T.ite(*args)
    if op in _CMP:
        parts = [T.compare(_CMP[op], a, b) for a, b in zip(args, args[1:])]
        return T.and_(*parts)
    if op == "=":
        parts = [T.eq(a, b) for a, b in zip(args, args[1:])]
        return T.and_(*parts)
    if op == "distinct":
        parts = [T.not_(T.eq(a, b)) for i, a in enumerate(args) for b in args[i + 1 :]]
        return T.and_(*parts)
    if op == "not":
        return T.not_(*args)
    if op == "and":
        return T.and_(*args)
    if op == "or":
        return T.or_(*args)
    if op == "=>":
        acc = args[-1]
        for a in reversed(args[:-1]):
            acc = T.implies(a, acc)
        return acc
    if op == "xor":
        acc = args[0]
        for a in args[1:]:
            acc = T.not_(T.iff(acc, a))
        return acc
    raise ParseError(f"unknown operator {op!r}", *pos)


def read_formula(text: str, scope: Mapping[str, T.Expr]) -> T.Expr:
    return Reader(scope).read_text(text)
