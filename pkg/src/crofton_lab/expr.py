"""Expressions in x and y for the conformal scale of a disc metric.

Grammar (whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | 'x' | 'y' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sin | cos | exp | log | sqrt

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``; ``^`` is
right associative and its exponent must fold to a constant.  Trees are
immutable and evaluate on floats or numpy arrays alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
VARIABLES = ("x", "y")


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    """Malformed expression text; ``pos`` is the 0-based offending offset."""

    def __init__(self, message: str, pos: int, source: str = ""):
        self.pos = pos
        self.source = source
        detail = f"{message} at position {pos}"
        if source:
            detail += f"\n  {source}\n  {' ' * pos}^"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain (division by zero, log of x <= 0, ...)."""


# ---------------------------------------------------------------------------
# tree nodes


class Expr:
    """Base node.  Subclasses are frozen dataclasses."""

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def diff(self, var: str) -> "Expr":
        return differentiate(self, var)

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


ExprTree = Expr


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        what = "end of input" if tok[0] == "end" else repr(tok[1])
        return ParseError(f"{message}: unexpected {what}", tok[2], self.source)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] != "op":
            raise self.error(f"expected {value!r}")
        return self.advance()

    def parse(self) -> Expr:
        tree = self.expr()
        if self.peek()[0] != "end":
            raise self.error("trailing input")
        return tree

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            tok = self.advance()
            exponent = simplify(self.unary())
            if not isinstance(exponent, Const):
                raise ParseError("exponent must be a constant", tok[2] + 1, self.source)
            return Pow(base, exponent.value)
        return base

    def atom(self):
        tok = self.peek()
        kind, text, pos = tok
        if kind == "num":
            self.advance()
            return Const(float(text))
        if kind == "name":
            self.advance()
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.source)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, variable, function or '('")


def parse(source: str) -> Expr:
    """Parse expression text into a tree.

    Raises :class:`ParseError` with the offending position on malformed
    input and :class:`UnknownIdentifierError` for names other than ``x``,
    ``y`` and the supported functions.
    """
    if not source or not source.strip():
        raise ParseError("empty expression", 0, source)
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# evaluation


def _fail(message, mask, x, y):
    if np.ndim(mask):
        k = int(np.flatnonzero(np.ravel(mask))[0])
        px = np.ravel(np.broadcast_to(x, np.shape(mask)))[k]
        py = np.ravel(np.broadcast_to(y, np.shape(mask)))[k]
    else:
        px, py = x, y
    raise DomainError(f"{message} at (x, y) = ({float(px):.17g}, {float(py):.17g})")


def _eval(node, x, y):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -_eval(node.arg, x, y)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, y)
        b = _eval(node.right, x, y)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        bad = np.equal(b, 0.0)
        if np.any(bad):
            _fail("division by zero", bad, x, y)
        return np.true_divide(a, b)
    if isinstance(node, Pow):
        a = _eval(node.base, x, y)
        c = node.exponent
        if c != int(c):
            bad = np.less(a, 0.0)
            if np.any(bad):
                _fail(f"negative base raised to non-integer power {c:g}", bad, x, y)
        if c < 0:
            bad = np.equal(a, 0.0)
            if np.any(bad):
                _fail(f"zero raised to negative power {c:g}", bad, x, y)
        if c == 2.0:
            return a * a
        return np.power(a, c)
    if isinstance(node, Call):
        a = _eval(node.arg, x, y)
        f = node.func
        if f == "log":
            bad = np.less_equal(a, 0.0)
            if np.any(bad):
                _fail("log of non-positive value", bad, x, y)
            return np.log(a)
        if f == "sqrt":
            bad = np.less(a, 0.0)
            if np.any(bad):
                _fail("sqrt of negative value", bad, x, y)
            return np.sqrt(a)
        return getattr(np, f)(a)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(tree: Expr, x, y, strict: bool = True):
    """Evaluate ``tree`` at ``(x, y)``; scalars give a float, arrays an array.

    Non-finite results raise :class:`DomainError` instead of leaking out.
    With ``strict=False`` the checks are skipped and invalid points come
    back as nan/inf, which lets vectorized solvers reject just those lanes.
    """
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    with np.errstate(all="ignore"):
        value = _eval(tree, x, y) if strict else _eval_raw(tree, x, y)
    if strict and not np.all(np.isfinite(value)):
        _fail("non-finite value", ~np.isfinite(value), x, y)
    if scalar:
        return float(value)
    return np.broadcast_to(value, np.broadcast(x, y).shape).astype(float, copy=False)


_UFUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}


def _eval_raw(node, x, y):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -_eval_raw(node.arg, x, y)
    if isinstance(node, BinOp):
        a = _eval_raw(node.left, x, y)
        b = _eval_raw(node.right, x, y)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return np.true_divide(a, b)
    if isinstance(node, Pow):
        a = _eval_raw(node.base, x, y)
        return a * a if node.exponent == 2.0 else np.power(a, node.exponent)
    return _UFUNCS[node.func](_eval_raw(node.arg, x, y))


# ---------------------------------------------------------------------------
# differentiation and simplification

ZERO = Const(0.0)
ONE = Const(1.0)


def _add(a, b):
    return simplify(BinOp("+", a, b))


def _sub(a, b):
    return simplify(BinOp("-", a, b))


def _mul(a, b):
    return simplify(BinOp("*", a, b))


def _div(a, b):
    return simplify(BinOp("/", a, b))


def differentiate(tree: Expr, var: str) -> Expr:
    """Exact partial derivative of ``tree`` with respect to ``var``."""
    if var not in VARIABLES:
        raise ValueError(f"can only differentiate with respect to x or y, not {var!r}")
    return simplify(_d(tree, var))


def _d(node, var):
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, Neg):
        return simplify(Neg(_d(node.arg, var)))
    if isinstance(node, BinOp):
        u, v = node.left, node.right
        du, dv = _d(u, var), _d(v, var)
        if node.op == "+":
            return _add(du, dv)
        if node.op == "-":
            return _sub(du, dv)
        if node.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        # (u/v)' = u'/v - u v'/v^2
        return _sub(_div(du, v), _div(_mul(u, dv), simplify(Pow(v, 2.0))))
    if isinstance(node, Pow):
        c = node.exponent
        inner = simplify(Pow(node.base, c - 1.0))
        return _mul(_mul(Const(c), inner), _d(node.base, var))
    if isinstance(node, Call):
        u = node.arg
        du = _d(u, var)
        f = node.func
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = simplify(Neg(Call("sin", u)))
        elif f == "exp":
            outer = node
        elif f == "log":
            return _div(du, u)
        else:  # sqrt
            return _div(du, _mul(Const(2.0), node))
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


def simplify(node: Expr) -> Expr:
    """Local simplification: constant folding and the 0/1 identities."""
    if isinstance(node, Neg):
        a = node.arg
        if isinstance(a, Const):
            return Const(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return node
    if isinstance(node, BinOp):
        a, b, op = node.left, node.right, node.op
        if isinstance(a, Const) and isinstance(b, Const):
            if op == "/" and b.value == 0.0:
                return node
            return Const(float(evaluate(node, 0.0, 0.0)))
        if op == "+":
            if a == ZERO:
                return b
            if b == ZERO:
                return a
        elif op == "-":
            if b == ZERO:
                return a
            if a == ZERO:
                return simplify(Neg(b))
        elif op == "*":
            if a == ZERO or b == ZERO:
                return ZERO
            if a == ONE:
                return b
            if b == ONE:
                return a
        elif op == "/":
            if a == ZERO and b != ZERO:
                return ZERO
            if b == ONE:
                return a
        return node
    if isinstance(node, Pow):
        if node.exponent == 0.0:
            return ONE
        if node.exponent == 1.0:
            return node.base
        if isinstance(node.base, Const):
            try:
                return Const(float(evaluate(node, 0.0, 0.0)))
            except DomainError:
                return node
        return node
    if isinstance(node, Call) and isinstance(node.arg, Const):
        try:
            return Const(float(evaluate(node, 0.0, 0.0)))
        except DomainError:
            return node
    return node


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_text(node: Expr) -> str:
    """Render a tree as text that :func:`parse` maps back to an equal value."""
    return _text(node)[0]


def _text(node):
    # returns (text, precedence level of the outermost construct)
    if isinstance(node, Const):
        if node.value < 0 or math.copysign(1.0, node.value) < 0:
            return "(" + "-" + _num(-node.value) + ")", 5
        return _num(node.value), 5
    if isinstance(node, Var):
        return node.name, 5
    if isinstance(node, Call):
        return f"{node.func}({_text(node.arg)[0]})", 5
    if isinstance(node, Pow):
        base, p = _text(node.base)
        if p < 5:
            base = f"({base})"
        return f"{base}^{_text(Const(node.exponent))[0]}", 4
    if isinstance(node, Neg):
        arg, p = _text(node.arg)
        if p < 3:
            arg = f"({arg})"
        return "-" + arg, 3
    if isinstance(node, BinOp):
        prec = _PREC[node.op]
        left, lp = _text(node.left)
        right, rp = _text(node.right)
        if lp < prec:
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
        return f"{left} {node.op} {right}", prec
    raise TypeError(f"not an expression node: {node!r}")
