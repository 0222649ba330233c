"""Hash-consed first-order terms and formulas over linear arithmetic.

Every node is interned: two structurally equal expressions are the same
Python object, so ``is``/``==`` are identity comparisons and expressions can
be used directly as dictionary keys.  Semantic questions (equivalence,
validity) always go through a :class:`~rpgcache.logic.backend.Backend`.
"""
from __future__ import annotations

import enum
import itertools
import weakref
from fractions import Fraction
from typing import Callable, Iterable, Mapping


class SortError(Exception):
    """Ill-sorted or non-linear term construction."""


class Sort(enum.Enum):
    INT = "Int"
    REAL = "Real"
    BOOL = "Bool"

    @classmethod
    def parse(cls, name: str) -> "Sort":
        try:
            return cls(name)
        except ValueError:
            raise SortError(f"unknown sort {name!r}") from None


ARITH = (Sort.INT, Sort.REAL)

# operator tags
VAR, CONST, TRUE_OP, FALSE_OP = "var", "const", "true", "false"
ADD, SUB, NEG, MUL, DIV, MOD, ITE, TO_REAL = "+", "-", "neg", "*", "div", "mod", "ite", "to_real"
LE, LT, GE, GT, EQ = "<=", "<", ">=", ">", "="
NOT, AND, OR, IMPLIES = "not", "and", "or", "=>"
EXISTS, FORALL = "exists", "forall"

COMPARISONS = (LE, LT, GE, GT, EQ)
QUANTIFIERS = (EXISTS, FORALL)

_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    """An interned expression node.  Do not instantiate directly."""

    __slots__ = ("op", "args", "val", "sort", "fv", "_size", "__weakref__")

    op: str
    args: tuple
    val: object
    sort: Sort
    fv: frozenset

    def __repr__(self):
        from rpgcache.logic.printer import to_smt

        return f"Expr({to_smt(self)})"

    def __str__(self):
        from rpgcache.logic.printer import to_smt

        return to_smt(self)

    def __reduce__(self):
        # interned objects are rebuilt through the constructors
        return (_rebuild, (self.op, self.args, self.val, self.sort))

    @property
    def name(self) -> str:
        assert self.op == VAR
        return self.val

    @property
    def is_var(self):
        return self.op == VAR

    @property
    def is_const(self):
        return self.op in (CONST, TRUE_OP, FALSE_OP)

    @property
    def size(self) -> int:
        return self._size


def _rebuild(op, args, val, sort):
    return _mk(op, args, val, sort)


def _mk(op: str, args: tuple, val, sort: Sort) -> Expr:
    key = (op, val, sort, args)
    e = _table.get(key)
    if e is not None:
        return e
    e = object.__new__(Expr)
    e.op = op
    e.args = args
    e.val = val
    e.sort = sort
    if op == VAR:
        e.fv = frozenset((e,))
        e._size = 1
    elif op in QUANTIFIERS:
        e.fv = args[0].fv - frozenset(val)
        e._size = 1 + args[0]._size
    elif args:
        fv = frozenset()
        for a in args:
            if a.fv:
                fv = fv | a.fv
        e.fv = fv
        e._size = 1 + sum(a._size for a in args)
    else:
        e.fv = frozenset()
        e._size = 1
    _table[key] = e
    return e


TRUE = _mk(TRUE_OP, (), None, Sort.BOOL)
FALSE = _mk(FALSE_OP, (), None, Sort.BOOL)
# keep the two boolean constants alive
_PINNED = (TRUE, FALSE)


# ---------------------------------------------------------------------------
# leaves


def var(name: str, sort: Sort) -> Expr:
    return _mk(VAR, (), name, sort)


def const(value, sort: Sort | None = None) -> Expr:
    if isinstance(value, bool):
        return TRUE if value else FALSE
    if sort is None:
        sort = Sort.INT if isinstance(value, int) else Sort.REAL
    if sort is Sort.INT:
        if isinstance(value, Fraction):
            if value.denominator != 1:
                raise SortError(f"non-integral constant {value} of sort Int")
            value = value.numerator
        return _mk(CONST, (), int(value), Sort.INT)
    if sort is Sort.REAL:
        return _mk(CONST, (), Fraction(value), Sort.REAL)
    raise SortError(f"numeric constant with sort {sort}")


def boolean(b: bool) -> Expr:
    return TRUE if b else FALSE


# ---------------------------------------------------------------------------
# arithmetic


def _arith_sort(args: Iterable[Expr]) -> Sort:
    sorts = {a.sort for a in args}
    if Sort.BOOL in sorts:
        raise SortError("Boolean operand in arithmetic")
    return Sort.REAL if Sort.REAL in sorts else Sort.INT


def _coerce(args: tuple, sort: Sort, strict: bool = False) -> tuple:
    """Promote Int operands of a Real expression."""
    if sort is Sort.INT:
        return args
    out = []
    for a in args:
        if a.sort is Sort.INT:
            if a.op == CONST:
                a = const(Fraction(a.val), Sort.REAL)
            elif strict:
                raise SortError(f"mixing Int term {a} with Real")
            else:
                a = _mk(TO_REAL, (a,), None, Sort.REAL)
        out.append(a)
    return tuple(out)


def to_real(t: Expr) -> Expr:
    if t.sort is Sort.REAL:
        return t
    if t.op == CONST:
        return const(Fraction(t.val), Sort.REAL)
    return _mk(TO_REAL, (t,), None, Sort.REAL)


def add(*ts: Expr) -> Expr:
    flat = []
    for t in ts:
        if t.op == ADD:
            flat.extend(t.args)
        else:
            flat.append(t)
    if not flat:
        return const(0)
    sort = _arith_sort(flat)
    flat = _coerce(tuple(flat), sort)
    acc = 0
    rest = []
    for t in flat:
        if t.op == CONST:
            acc += t.val
        else:
            rest.append(t)
    if acc != 0 or not rest:
        rest.append(const(acc, sort))
    if len(rest) == 1:
        return rest[0]
    return _mk(ADD, tuple(rest), None, sort)


def neg(t: Expr) -> Expr:
    if t.op == CONST:
        return const(-t.val, t.sort)
    if t.op == NEG:
        return t.args[0]
    _arith_sort((t,))
    return _mk(NEG, (t,), None, t.sort)


def sub(a: Expr, b: Expr) -> Expr:
    sort = _arith_sort((a, b))
    a, b = _coerce((a, b), sort)
    if b.op == CONST and b.val == 0:
        return a
    if a.op == CONST and b.op == CONST:
        return const(a.val - b.val, sort)
    return _mk(SUB, (a, b), None, sort)


def mul(*ts: Expr) -> Expr:
    sort = _arith_sort(ts)
    ts = _coerce(tuple(ts), sort)
    coef = 1
    rest = []
    for t in ts:
        if t.op == CONST:
            coef *= t.val
        else:
            rest.append(t)
    if len(rest) > 1:
        raise SortError("non-linear multiplication")
    if not rest:
        return const(coef, sort)
    if coef == 0:
        return const(0, sort)
    if coef == 1:
        return rest[0]
    return _mk(MUL, (const(coef, sort), rest[0]), None, sort)


def _intdiv_args(a: Expr, b: Expr):
    if a.sort is not Sort.INT or b.sort is not Sort.INT:
        raise SortError("div/mod require Int operands")
    if b.op != CONST or b.val == 0:
        raise SortError("div/mod require a non-zero constant divisor")


def smt_div(a: Expr, b: Expr) -> Expr:
    _intdiv_args(a, b)
    if a.op == CONST:
        return const(euclid_div(a.val, b.val))
    return _mk(DIV, (a, b), None, Sort.INT)


def smt_mod(a: Expr, b: Expr) -> Expr:
    _intdiv_args(a, b)
    if a.op == CONST:
        return const(euclid_mod(a.val, b.val))
    return _mk(MOD, (a, b), None, Sort.INT)


def euclid_mod(m: int, n: int) -> int:
    return m % abs(n)


def euclid_div(m: int, n: int) -> int:
    return (m - euclid_mod(m, n)) // n


def ite(c: Expr, a: Expr, b: Expr) -> Expr:
    if c.sort is not Sort.BOOL:
        raise SortError("ite condition must be Boolean")
    if c is TRUE:
        return a
    if c is FALSE:
        return b
    if a is b:
        return a
    if a.sort is Sort.BOOL or b.sort is Sort.BOOL:
        if a.sort is not b.sort:
            raise SortError("ite branches differ in sort")
        return _mk(ITE, (c, a, b), None, Sort.BOOL)
    sort = _arith_sort((a, b))
    a, b = _coerce((a, b), sort)
    return _mk(ITE, (c, a, b), None, sort)


# ---------------------------------------------------------------------------
# atoms

_CMP_EVAL: dict[str, Callable] = {
    LE: lambda x, y: x <= y,
    LT: lambda x, y: x < y,
    GE: lambda x, y: x >= y,
    GT: lambda x, y: x > y,
    EQ: lambda x, y: x == y,
}


def compare(op: str, a: Expr, b: Expr) -> Expr:
    if op == EQ and (a.sort is Sort.BOOL or b.sort is Sort.BOOL):
        return iff(a, b)
    sort = _arith_sort((a, b))
    a, b = _coerce((a, b), sort)
    if a.op == CONST and b.op == CONST:
        return boolean(_CMP_EVAL[op](a.val, b.val))
    if a is b:
        return boolean(op in (LE, GE, EQ))
    return _mk(op, (a, b), None, Sort.BOOL)


def le(a, b):
    return compare(LE, a, b)


def lt(a, b):
    return compare(LT, a, b)


def ge(a, b):
    return compare(GE, a, b)


def gt(a, b):
    return compare(GT, a, b)


def eq(a, b):
    return compare(EQ, a, b)


# ---------------------------------------------------------------------------
# connectives


def _check_bool(fs):
    for f in fs:
        if f.sort is not Sort.BOOL:
            raise SortError(f"expected a formula, got term {f}")


def not_(f: Expr) -> Expr:
    _check_bool((f,))
    if f is TRUE:
        return FALSE
    if f is FALSE:
        return TRUE
    if f.op == NOT:
        return f.args[0]
    return _mk(NOT, (f,), None, Sort.BOOL)


def and_(*fs: Expr) -> Expr:
    _check_bool(fs)
    out: list[Expr] = []
    seen = set()
    for f in fs:
        parts = f.args if f.op == AND else (f,)
        for p in parts:
            if p is TRUE:
                continue
            if p is FALSE:
                return FALSE
            if p in seen:
                continue
            seen.add(p)
            out.append(p)
    for p in out:
        if p.op == NOT and p.args[0] in seen:
            return FALSE
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return _mk(AND, tuple(out), None, Sort.BOOL)


def or_(*fs: Expr) -> Expr:
    _check_bool(fs)
    out: list[Expr] = []
    seen = set()
    for f in fs:
        parts = f.args if f.op == OR else (f,)
        for p in parts:
            if p is FALSE:
                continue
            if p is TRUE:
                return TRUE
            if p in seen:
                continue
            seen.add(p)
            out.append(p)
    for p in out:
        if p.op == NOT and p.args[0] in seen:
            return TRUE
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return _mk(OR, tuple(out), None, Sort.BOOL)


def implies(a: Expr, b: Expr) -> Expr:
    _check_bool((a, b))
    if a is TRUE:
        return b
    if a is FALSE or b is TRUE:
        return TRUE
    if b is FALSE:
        return not_(a)
    return _mk(IMPLIES, (a, b), None, Sort.BOOL)


def iff(a: Expr, b: Expr) -> Expr:
    _check_bool((a, b))
    if a is b:
        return TRUE
    if a is TRUE:
        return b
    if b is TRUE:
        return a
    if a is FALSE:
        return not_(b)
    if b is FALSE:
        return not_(a)
    return _mk(EQ, (a, b), None, Sort.BOOL)


def _quant(op: str, vs: Iterable[Expr], body: Expr) -> Expr:
    _check_bool((body,))
    vs = tuple(v for v in dict.fromkeys(vs) if v in body.fv)
    for v in vs:
        if v.op != VAR:
            raise SortError("quantifier over a non-variable")
    if not vs:
        return body
    if body.op == op:
        # merge nested quantifier blocks
        vs = vs + tuple(v for v in body.val if v not in vs)
        body = body.args[0]
    vs = tuple(sorted(vs, key=lambda v: v.val))
    return _mk(op, (body,), vs, Sort.BOOL)


def exists(vs: Iterable[Expr], body: Expr) -> Expr:
    return _quant(EXISTS, vs, body)


def forall(vs: Iterable[Expr], body: Expr) -> Expr:
    return _quant(FORALL, vs, body)


# ---------------------------------------------------------------------------
# structural queries


def is_quantifier_free(e: Expr) -> bool:
    memo: dict[Expr, bool] = {}

    def go(x: Expr) -> bool:
        r = memo.get(x)
        if r is None:
            r = x.op not in QUANTIFIERS and all(go(a) for a in x.args)
            memo[x] = r
        return r

    return go(e)


def is_atom(e: Expr) -> bool:
    """Comparison, Boolean variable, or Boolean-valued ite/equality leaf."""
    if e.sort is not Sort.BOOL:
        return False
    if e.op == VAR:
        return True
    return e.op in COMPARISONS and e.args[0].sort is not Sort.BOOL


def atoms(e: Expr) -> list[Expr]:
    """Arithmetic atoms and Boolean variables occurring in ``e``, in order."""
    out: dict[Expr, None] = {}
    seen: set[Expr] = set()

    def go(x: Expr):
        if x in seen:
            return
        seen.add(x)
        if is_atom(x):
            out[x] = None
            # conditions of ite terms inside atoms are atoms too
            for a in x.args:
                go(a)
            return
        for a in x.args:
            go(a)

    go(e)
    return list(out)


def subterms(e: Expr) -> Iterable[Expr]:
    seen: set[Expr] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        yield x
        stack.extend(x.args)


# ---------------------------------------------------------------------------
# substitution

_fresh = itertools.count()


def fresh_var(v: Expr, avoid: frozenset | set = frozenset()) -> Expr:
    base = v.val.split("__")[0]
    while True:
        w = var(f"{base}__{next(_fresh)}", v.sort)
        if w not in avoid:
            return w


def substitute(e: Expr, mapping: Mapping[Expr, Expr]) -> Expr:
    """Simultaneous, capture-avoiding substitution of variables by terms."""
    mapping = {k: v for k, v in mapping.items() if k is not v}
    if not mapping:
        return e
    for k, v in mapping.items():
        if k.op != VAR:
            raise SortError(f"substitution key {k} is not a variable")
        if k.sort is not v.sort and not (k.sort is Sort.REAL and v.sort is Sort.INT):
            raise SortError(f"substituting {v} ({v.sort.value}) for {k} ({k.sort.value})")
    return _subst(e, mapping, {})


def _subst(e: Expr, mapping: Mapping[Expr, Expr], memo: dict) -> Expr:
    if not (e.fv & mapping.keys()):
        return e
    r = memo.get(e)
    if r is not None:
        return r
    if e.op == VAR:
        r = mapping[e]
        if r.sort is not e.sort:
            r = to_real(r)
    elif e.op in QUANTIFIERS:
        bound = e.val
        inner = {k: v for k, v in mapping.items() if k not in bound}
        range_fv = set()
        for k, v in inner.items():
            if k in e.args[0].fv:
                range_fv |= v.fv
        renames = {}
        new_bound = []
        for b in bound:
            if b in range_fv:
                nb = fresh_var(b, range_fv | e.args[0].fv)
                renames[b] = nb
                new_bound.append(nb)
            else:
                new_bound.append(b)
        inner.update(renames)
        body = _subst(e.args[0], inner, {})
        r = _quant(e.op, new_bound, body)
    else:
        args = tuple(_subst(a, mapping, memo) for a in e.args)
        r = rebuild(e, args)
    memo[e] = r
    return r


def rebuild(e: Expr, args: tuple) -> Expr:
    """Rebuild ``e`` with new children through the simplifying constructors."""
    op = e.op
    if args == e.args:
        return e
    if op == ADD:
        return add(*args)
    if op == SUB:
        return sub(*args)
    if op == NEG:
        return neg(args[0])
    if op == MUL:
        return mul(*args)
    if op == DIV:
        return smt_div(*args)
    if op == MOD:
        return smt_mod(*args)
    if op == ITE:
        return ite(*args)
    if op == TO_REAL:
        return to_real(args[0])
    if op in COMPARISONS:
        return compare(op, *args)
    if op == NOT:
        return not_(args[0])
    if op == AND:
        return and_(*args)
    if op == OR:
        return or_(*args)
    if op == IMPLIES:
        return implies(*args)
    if op in QUANTIFIERS:
        return _quant(op, e.val, args[0])
    raise ValueError(f"cannot rebuild {op}")


# ---------------------------------------------------------------------------
# evaluation


class MissingBinding(Exception):
    """An assignment lacks a value for a free variable."""


def compile_expr(e: Expr) -> Callable[[Mapping[str, object]], object]:
    """Compile a quantifier-free expression into a Python closure over a
    name-to-value environment (ints, Fractions and bools)."""
    memo: dict[Expr, Callable] = {}

    def go(x: Expr) -> Callable:
        f = memo.get(x)
        if f is not None:
            return f
        op = x.op
        if op == VAR:
            name = x.val

            def f(env, name=name):
                try:
                    return env[name]
                except KeyError:
                    raise MissingBinding(name) from None

        elif op == CONST:
            v = x.val
            f = lambda env, v=v: v  # noqa: E731
        elif op == TRUE_OP:
            f = lambda env: True  # noqa: E731
        elif op == FALSE_OP:
            f = lambda env: False  # noqa: E731
        else:
            cs = [go(a) for a in x.args]
            f = _compile_node(op, cs, x)
        memo[x] = f
        return f

    return go(e)


def _compile_node(op, cs, x):
    if op == ADD:
        return lambda env: sum(c(env) for c in cs)
    if op == SUB:
        a, b = cs
        return lambda env: a(env) - b(env)
    if op == NEG:
        (a,) = cs
        return lambda env: -a(env)
    if op == MUL:
        a, b = cs
        return lambda env: a(env) * b(env)
    if op == DIV:
        a, b = cs
        return lambda env: euclid_div(a(env), b(env))
    if op == MOD:
        a, b = cs
        return lambda env: euclid_mod(a(env), b(env))
    if op == TO_REAL:
        (a,) = cs
        return lambda env: Fraction(a(env))
    if op == ITE:
        c, a, b = cs
        return lambda env: a(env) if c(env) else b(env)
    if op in _CMP_EVAL:
        cmp = _CMP_EVAL[op]
        a, b = cs
        return lambda env: cmp(a(env), b(env))
    if op == NOT:
        (a,) = cs
        return lambda env: not a(env)
    if op == AND:
        return lambda env: all(c(env) for c in cs)
    if op == OR:
        return lambda env: any(c(env) for c in cs)
    if op == IMPLIES:
        a, b = cs
        return lambda env: (not a(env)) or b(env)
    raise ValueError(f"cannot evaluate {op} (quantified formula?)")


def evaluate(e: Expr, env: Mapping[str, object]):
    return compile_expr(e)(env)
