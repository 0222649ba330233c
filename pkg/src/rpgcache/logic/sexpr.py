"""Minimal S-expression reader with source positions.

Atoms come back as :class:`Atom` (a ``str`` subclass remembering line and
column), string literals as :class:`String`, lists as :class:`SList`.
"""
from __future__ import annotations


class ParseError(Exception):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


class Atom(str):
    line: int = 0
    col: int = 0


class String(str):
    line: int = 0
    col: int = 0


class SList(list):
    line: int = 0
    col: int = 0


def _pos(obj, line, col):
    obj.line = line
    obj.col = col
    return obj


def position(x) -> tuple[int | None, int | None]:
    return getattr(x, "line", None), getattr(x, "col", None)


def tokenize(text: str):
    """Yield (kind, value, line, col) with kind in '(', ')', 'atom', 'str'."""
    i, n = 0, len(text)
    line, col = 1, 1
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, ch, line, col
            i += 1
            col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string literal", start_line, start_col)
                c = text[j]
                if c == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(c)
                j += 1
            consumed = text[i : j + 1]
            yield "str", "".join(buf), start_line, start_col
            line += consumed.count("\n")
            col = (len(consumed) - consumed.rfind("\n")) if "\n" in consumed else col + len(consumed)
            i = j + 1
            continue
        if ch == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ParseError("unterminated quoted symbol", line, col)
            yield "atom", text[i + 1 : j], line, col
            col += j + 1 - i
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in '();"':
            j += 1
        yield "atom", text[i:j], line, col
        col += j - i
        i = j


def parse_all(text: str) -> list:
    """Parse every top-level S-expression in ``text``."""
    stack: list[SList] = []
    out: list = []
    for kind, val, line, col in tokenize(text):
        if kind == "(":
            stack.append(_pos(SList(), line, col))
        elif kind == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            node = _pos(Atom(val) if kind == "atom" else String(val), line, col)
            (stack[-1] if stack else out).append(node)
    if stack:
        raise ParseError("unbalanced '(': missing ')'", stack[-1].line, stack[-1].col)
    return out


def parse_one(text: str):
    items = parse_all(text)
    if len(items) != 1:
        raise ParseError(f"expected one S-expression, found {len(items)}")
    return items[0]


def dump(x) -> str:
    """Print a nested list back to S-expression text."""
    if isinstance(x, list):
        return "(" + " ".join(dump(y) for y in x) + ")"
    if isinstance(x, String):
        return '"' + x.replace('"', '""') + '"'
    return str(x)
