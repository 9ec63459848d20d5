"""A tiny arithmetic language for coefficient functions of chart coordinates.

Grammar (whitespace insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" ["-"] INTEGER)?
    primary := NUMBER | VARIABLE | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := sin | cos | exp | sqrt

Variables are ``x1 .. xn`` by default; callers may supply other names (path
configs use ``t``).  Exponents are integer literals only.  Evaluation goes
through :mod:`diracverify.ad`, so expressions accept dual-number inputs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import ad

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ExprEvalError(ArithmeticError):
    def __init__(self, message: str, point):
        super().__init__(f"{message} at point {list(np.round(point, 12))}")
        self.point = np.asarray(point)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def default_names(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _tokenize(text: str):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].isspace():
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", _byte_offset(text, start))
        kind = m.lastgroup
        out.append((kind, m.group(kind), _byte_offset(text, m.start(kind))))
        pos = m.end()
    out.append(("end", "", _byte_offset(text, len(text))))
    return out


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = {name: k for k, name in enumerate(names)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind not in ("op",):
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", off)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return e

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
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, val, off = self.take()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be an integer literal", off)
            return Pow(base, sign * int(val))
        return base

    def primary(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in self.names:
                return Var(self.names[val])
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                raise ExprSyntaxError(
                    f"coordinate {val} out of range (chart has {len(self.names)} coordinates)", off
                )
            raise ExprSyntaxError(f"unknown name {val!r}", off)
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", off)


def parse(text: str, n_coords: int, names: Sequence[str] | None = None) -> Expr:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    names = tuple(names) if names is not None else default_names(n_coords)
    if len(names) != n_coords:
        raise ValueError("number of variable names must equal n_coords")
    return _Parser(text, names).parse()


# printing ---------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG, _POW, _ATOM = 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _NEG
    if isinstance(e, Pow):
        return _POW
    return _ATOM


def to_text(e: Expr, names: Sequence[str] | None = None) -> str:
    """Print with the minimum parentheses that parse back to the same tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return names[e.index] if names is not None else f"x{e.index + 1}"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg, names)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg, names)
        return "-" + (inner if _prec(e.arg) >= _NEG else f"({inner})")
    if isinstance(e, Pow):
        inner = to_text(e.base, names)
        if _prec(e.base) < _ATOM:
            inner = f"({inner})"
        return f"{inner}^{e.exponent}"
    p = _PREC[e.op]
    left = to_text(e.left, names)
    right = to_text(e.right, names)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# evaluation -------------------------------------------------------------------

def _first_bad(mask: np.ndarray, x) -> np.ndarray:
    xr = ad.real_part(x)
    mask = np.broadcast_to(mask, xr.shape[:-1])
    idx = np.argwhere(mask)[0]
    return xr[tuple(idx)]


def evaluate(e: Expr, x, margin: float = 0.0):
    """Evaluate on coordinates of shape (..., n); accepts dual numbers."""
    batch = ad._shape(x)[:-1]

    def rec(node):
        if isinstance(node, Num):
            return np.full(batch, node.value)
        if isinstance(node, Var):
            return x[..., node.index]
        if isinstance(node, Neg):
            return -rec(node.arg)
        if isinstance(node, Pow):
            base = rec(node.base)
            if node.exponent < 0:
                bad = np.abs(ad.real_part(base)) <= margin
                if np.any(bad):
                    raise ExprEvalError("division by zero in negative power", _first_bad(bad, x))
            return ad.power(base, node.exponent)
        if isinstance(node, Call):
            arg = rec(node.arg)
            if node.func == "sqrt":
                r = ad.real_part(arg)
                bad = (r < 0) | ((r <= margin) if margin > 0 else np.zeros_like(r, dtype=bool))
                if np.any(bad):
                    raise ExprEvalError("sqrt of negative argument", _first_bad(bad, x))
            return getattr(ad, node.func)(arg)
        left, right = rec(node.left), rec(node.right)
        if node.op == "+":
            return ad.add(left, right)
        if node.op == "-":
            return ad.sub(left, right)
        if node.op == "*":
            return ad.mul(left, right)
        bad = np.abs(ad.real_part(right)) <= margin
        if np.any(bad):
            raise ExprEvalError("division by zero", _first_bad(bad, x))
        return ad.div(left, right)

    return rec(e)


eval_dual = evaluate


def compile_expr(text: str, n_coords: int, names: Sequence[str] | None = None, margin: float = 0.0):
    """Parse ``text`` and return an AD-capable evaluator ``x -> value``."""
    tree = parse(text, n_coords, names)
    return lambda x: evaluate(tree, x, margin)
