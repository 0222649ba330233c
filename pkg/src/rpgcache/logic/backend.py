"""SMT-LIB2 client for an external solver process (z3 by default).

One :class:`Backend` owns one persistent solver process.  Every query is
wrapped in ``(push)``/``(pop)`` and terminated by an ``(echo ...)`` marker so
responses can be read back without guessing how many lines to expect.
"""
from __future__ import annotations

import logging
import os
import select
import shlex
import subprocess
import time
from fractions import Fraction
from typing import Mapping

from rpgcache.logic import terms as T
from rpgcache.logic.printer import sort_decl, to_smt
from rpgcache.logic.reader import Reader
from rpgcache.logic.sexpr import Atom, ParseError, SList, parse_all

log = logging.getLogger(__name__)

DEFAULT_CMD = "z3 -in"
MARKER = "<<rpgcache-done>>"

_LOGICS = {"LIA": "LIA", "LRA": "LRA", "LIRA": "ALL"}


class BackendError(Exception):
    """The solver process failed, timed out or answered ``unknown``."""


def solver_command(cmd: str | None = None) -> str:
    return cmd or os.environ.get("RPG_SOLVER_CMD") or DEFAULT_CMD


class Backend:
    """Theory backend answering sat/validity/qelim/simplify queries."""

    def __init__(
        self,
        cmd: str | None = None,
        theory: str = "LIA",
        timeout: float = 20.0,
        check_qelim: bool = True,
    ):
        self.cmd = solver_command(cmd)
        self.theory = theory
        self.timeout = timeout
        self.check_qelim = check_qelim
        self.proc: subprocess.Popen | None = None
        self._sat_cache: dict[T.Expr, bool] = {}
        self._qe_cache: dict[T.Expr, T.Expr] = {}
        self._simp_cache: dict[T.Expr, T.Expr] = {}
        self.queries = 0
        self._start()

    # -- process management -------------------------------------------------

    def _start(self):
        try:
            self.proc = subprocess.Popen(
                shlex.split(self.cmd),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"cannot start solver {self.cmd!r}: {exc}") from exc
        self._buf = ""
        logic = _LOGICS.get(self.theory)
        setup = ["(set-option :print-success false)"]
        if logic and logic != "ALL":
            setup.append(f"(set-logic {logic})")
        setup.append(f"(set-option :timeout {int(self.timeout * 1000)})")
        self._exchange("\n".join(setup))

    def close(self):
        if self.proc is not None:
            try:
                self.proc.stdin.write("(exit)\n")
                self.proc.stdin.flush()
                self.proc.wait(timeout=2)
            except Exception:
                self.proc.kill()
            self.proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    def _restart(self):
        if self.proc is not None:
            self.proc.kill()
            self.proc = None
        self._start()

    def _exchange(self, script: str, deadline: float | None = None) -> str:
        """Send ``script`` and return everything printed before the marker."""
        if self.proc is None:
            self._start()
        self.queries += 1
        try:
            self.proc.stdin.write(script + f'\n(echo "{MARKER}")\n')
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._restart()
            raise BackendError(f"solver pipe closed: {exc}") from exc
        limit = time.monotonic() + (deadline if deadline is not None else self.timeout + 10)
        fd = self.proc.stdout.fileno()
        acc = self._buf
        while MARKER not in acc:
            remaining = limit - time.monotonic()
            if remaining <= 0:
                self._restart()
                raise BackendError("solver timed out")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            data = os.read(fd, 65536).decode()
            if not data:
                self._restart()
                raise BackendError("solver process exited")
            acc += data
        idx = acc.find(MARKER)
        out = acc[:idx]
        self._buf = acc[idx + len(MARKER):].lstrip("\n")
        for line in out.splitlines():
            s = line.strip()
            if s.startswith("(error"):
                raise BackendError(f"solver error: {s}")
        return out

    # -- helpers ------------------------------------------------------------

    @staticmethod
    def _declarations(*fs: T.Expr) -> str:
        fv = set()
        for f in fs:
            fv |= f.fv
        return "\n".join(sort_decl(v) for v in sorted(fv, key=lambda v: v.val))

    def _scope(self, *fs: T.Expr) -> dict[str, T.Expr]:
        scope = {}
        for f in fs:
            for v in f.fv:
                scope[v.val] = v
        return scope

    # -- queries ------------------------------------------------------------

    def is_sat(self, f: T.Expr) -> bool:
        if f is T.TRUE:
            return True
        if f is T.FALSE:
            return False
        r = self._sat_cache.get(f)
        if r is not None:
            return r
        script = f"(push)\n{self._declarations(f)}\n(assert {to_smt(f)})\n(check-sat)\n(pop)"
        out = self._exchange(script).split()
        answer = [w for w in out if w in ("sat", "unsat", "unknown")]
        if not answer:
            raise BackendError(f"unexpected solver reply: {' '.join(out)!r}")
        if answer[-1] == "unknown":
            raise BackendError(f"solver answered unknown on {to_smt(f)[:200]}")
        r = answer[-1] == "sat"
        self._sat_cache[f] = r
        return r

    def is_valid(self, f: T.Expr) -> bool:
        return not self.is_sat(T.not_(f))

    def implies(self, a: T.Expr, b: T.Expr) -> bool:
        if a is b or a is T.FALSE or b is T.TRUE:
            return True
        return self.is_valid(T.implies(a, b))

    def equiv(self, a: T.Expr, b: T.Expr) -> bool:
        if a is b:
            return True
        return self.implies(a, b) and self.implies(b, a)

    def model(self, f: T.Expr) -> dict[str, object] | None:
        """A satisfying assignment of the free variables of ``f``, or None."""
        if not self.is_sat(f):
            return None
        script = (
            f"(push)\n{self._declarations(f)}\n(assert {to_smt(f)})\n(check-sat)\n"
            "(get-model)\n(pop)"
        )
        out = self._exchange(script)
        items = parse_all(out)
        items = [x for x in items if isinstance(x, SList)]
        model: dict[str, object] = {}
        if items:
            for d in items[-1]:
                if isinstance(d, SList) and d and d[0] == "define-fun" and len(d[2]) == 0:
                    sort = T.Sort.parse(str(d[3]))
                    val = Reader({}).read(d[4])
                    if sort is T.Sort.BOOL:
                        model[str(d[1])] = val is T.TRUE
                    elif sort is T.Sort.INT:
                        model[str(d[1])] = int(val.val)
                    else:
                        model[str(d[1])] = Fraction(val.val)
        for v in f.fv:
            if v.val not in model:
                model[v.val] = default_value(v.sort)
        return model

    def entails(self, assignment: Mapping[str, object], f: T.Expr) -> bool:
        """``assignment |= f``; ``assignment`` must bind every free variable."""
        missing = [v.val for v in f.fv if v.val not in assignment]
        if missing:
            raise T.MissingBinding(", ".join(sorted(missing)))
        if T.is_quantifier_free(f):
            return bool(T.evaluate(f, assignment))
        ground = T.substitute(f, {v: value_const(assignment[v.val], v.sort) for v in f.fv})
        return self.is_valid(ground)

    def _apply(self, f: T.Expr, tactic: str, budget: float) -> T.Expr:
        ms = max(1, int(budget * 1000))
        script = (
            f"(push)\n{self._declarations(f)}\n(assert {to_smt(f)})\n"
            f"(apply (try-for {tactic} {ms}))\n(pop)"
        )
        out = self._exchange(script, deadline=budget + 10)
        return self._parse_goals(out, self._scope(f))

    @staticmethod
    def _parse_goals(out: str, scope) -> T.Expr:
        items = [x for x in parse_all(out) if isinstance(x, SList)]
        if not items or not items[-1] or items[-1][0] != "goals":
            raise BackendError(f"unexpected tactic output: {out.strip()[:200]!r}")
        reader = Reader(scope)
        disj = []
        for goal in items[-1][1:]:
            if not isinstance(goal, SList) or not goal or goal[0] != "goal":
                continue
            conj = []
            skip = False
            for part in goal[1:]:
                if skip:
                    skip = False
                    continue
                if isinstance(part, Atom) and part.startswith(":"):
                    skip = True
                    continue
                conj.append(reader.read(part))
            disj.append(T.and_(*conj))
        return T.or_(*disj)

    def qelim(self, f: T.Expr) -> T.Expr:
        """Quantifier-free equivalent of ``f``; BackendError on failure."""
        r = self._qe_cache.get(f)
        if r is not None:
            return r
        if T.is_quantifier_free(f):
            r = self.simplify(f)
        else:
            r = None
            budget = min(self.timeout, 10.0)
            for tactic in ("(then qe_rec simplify ctx-solver-simplify)", "(then qe simplify)"):
                try:
                    cand = self._apply(f, tactic, budget)
                except (BackendError, ParseError, T.SortError) as exc:
                    log.debug("qelim tactic %s failed: %s", tactic, exc)
                    continue
                if not T.is_quantifier_free(cand):
                    continue
                if self.check_qelim and not self.equiv(cand, f):
                    log.warning("qelim tactic %s returned a non-equivalent formula", tactic)
                    continue
                r = cand
                break
            if r is None:
                raise BackendError(f"quantifier elimination failed on {to_smt(f)[:200]}")
        self._qe_cache[f] = r
        return r

    def simplify(self, f: T.Expr, budget: float = 2.0) -> T.Expr:
        """Try to shrink ``f``; falls back to ``f`` itself."""
        if f.op in (T.TRUE_OP, T.FALSE_OP) or T.is_atom(f):
            return f
        r = self._simp_cache.get(f)
        if r is not None:
            return r
        r = f
        if T.is_quantifier_free(f):
            try:
                cand = self._apply(f, "(then simplify ctx-solver-simplify simplify)", budget)
                if cand.size <= f.size or not self.is_sat(f) or self.is_valid(f):
                    r = cand
            except (BackendError, ParseError, T.SortError) as exc:
                log.debug("simplify fell back to identity: %s", exc)
        self._simp_cache[f] = r
        return r


def default_value(sort: T.Sort):
    if sort is T.Sort.BOOL:
        return False
    if sort is T.Sort.INT:
        return 0
    return Fraction(0)


def value_const(value, sort: T.Sort) -> T.Expr:
    if sort is T.Sort.BOOL:
        return T.boolean(bool(value))
    return T.const(value, sort)
