"""Coefficient expressions: a small recursive-descent parser and evaluator.

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right associative, binds tighter than unary minus
    atom   := NUMBER | 'x' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | sinh | cosh | sqrt | abs

``-x^2`` parses as ``-(x^2)`` and ``2^-1`` as ``2^(-1)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "ExprSyntaxError",
    "UnknownIdentifier",
    "parse",
    "evaluate",
    "compile_expr",
    "to_text",
    "is_constant",
]

FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprSyntaxError(ValueError):
    """Malformed expression; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if m is None:
                rest = text[pos:]
                if rest.strip() == "":
                    break
                bad = pos + (len(rest) - len(rest.lstrip()))
                raise ExprSyntaxError(f"unexpected character {text[bad]!r}", self._byte(bad))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def _byte(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", self._byte(pos))

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", self._byte(pos))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifier(f"unknown identifier {text!r}", self._byte(pos))
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", self._byte(pos))


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree in the single variable ``x``."""
    return _Parser(text).parse()


def compile_expr(e: Expr) -> Callable[[float], float]:
    """Turn a tree into a closure; works on floats and numpy arrays alike."""
    if isinstance(e, Num):
        v = e.value
        return lambda x: v + 0.0 * x
    if isinstance(e, Var):
        return lambda x: x + 0.0
    if isinstance(e, Const):
        v = CONSTANTS[e.name]
        return lambda x: v + 0.0 * x
    if isinstance(e, Neg):
        f = compile_expr(e.operand)
        return lambda x: -f(x)
    if isinstance(e, Call):
        fn = FUNCTIONS[e.func]
        f = compile_expr(e.arg)
        return lambda x: fn(f(x))
    lf, rf = compile_expr(e.left), compile_expr(e.right)
    if e.op == "+":
        return lambda x: lf(x) + rf(x)
    if e.op == "-":
        return lambda x: lf(x) - rf(x)
    if e.op == "*":
        return lambda x: lf(x) * rf(x)
    if e.op == "/":
        return lambda x: np.divide(lf(x), rf(x))
    return lambda x: np.power(lf(x), rf(x))


def evaluate(e: Expr, x):
    """Evaluate with IEEE semantics: NaN and Inf propagate, nothing raises."""
    with np.errstate(all="ignore"):
        out = compile_expr(e)(np.float64(x) if np.isscalar(x) else np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def is_constant(e: Expr) -> bool:
    if isinstance(e, Var):
        return False
    if isinstance(e, (Num, Const)):
        return True
    if isinstance(e, Neg):
        return is_constant(e.operand)
    if isinstance(e, Call):
        return is_constant(e.arg)
    return is_constant(e.left) and is_constant(e.right)


def to_text(e: Expr) -> str:
    """Print fully parenthesised; ``parse(to_text(t))`` rebuilds the same tree."""
    if isinstance(e, Num):
        if not math.isfinite(e.value):
            return "(1e999)" if e.value > 0 else "(-1e999)"
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
