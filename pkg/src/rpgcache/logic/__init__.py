"""Terms, formulas and the SMT backend."""
from rpgcache.logic.terms import (  # noqa: F401
    FALSE,
    TRUE,
    Expr,
    MissingBinding,
    Sort,
    SortError,
    add,
    and_,
    atoms,
    boolean,
    const,
    eq,
    evaluate,
    exists,
    forall,
    ge,
    gt,
    iff,
    implies,
    is_quantifier_free,
    ite,
    le,
    lt,
    mul,
    neg,
    not_,
    or_,
    sub,
    substitute,
    var,
)
from rpgcache.logic.backend import Backend, BackendError  # noqa: F401
from rpgcache.logic.printer import to_smt  # noqa: F401
from rpgcache.logic.reader import read_formula  # noqa: F401
from rpgcache.logic.sexpr import ParseError  # noqa: F401
