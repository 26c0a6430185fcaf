"""A small expression language for smooth objectives and constraint rows.

Grammar (whitespace insensitive)::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | base ('^' exponent)?
    base     := number | 'x'index | func '(' expr ')' | '(' expr ')'
    exponent := ('-')? number ('^' exponent)?      # folded into one constant
    func     := sin | cos | exp | log | sqrt

Variables are written x1 .. xn (one-based).  '^' takes a numeric exponent,
binds tighter than unary minus, and chains right-associatively.  Nonsmooth
builtins (abs, min, max, ...) are rejected at parse time: nonsmoothness is
the business of penalty terms and constraint sets, not of these expressions.

Evaluation returns exact values and gradients by recursive forward-mode
differentiation of the tree.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

Array = np.ndarray

_SMOOTH_FUNCS = ("sin", "cos", "exp", "log", "sqrt")
_NONSMOOTH = ("abs", "min", "max", "sign", "relu", "heaviside")


class ExpressionSyntaxError(ValueError):
    """Malformed source text; carries the offending position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class EvaluationDomainError(ValueError):
    """Evaluation hit a domain violation; names the subexpression."""

    def __init__(self, message, subexpression):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero-based


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    argument: "Expr"


Expr = Union[Const, Var, Binary, Pow, Neg, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    pos, tokens = 0, []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            raise ExpressionSyntaxError(f"unexpected character {stripped[0]!r}", pos)
        if m.lastgroup is not None:
            tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, n):
        self.source = source
        self.n = int(n)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, symbol):
        kind, text, pos = self.peek()
        if kind != "op" or text != symbol:
            raise ExpressionSyntaxError(f"expected {symbol!r}", pos)
        return self.advance()

    def parse(self):
        tree = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected trailing input {text!r}", pos)
        return tree

    def expr(self):
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Binary(op=text, left=node, right=self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Binary(op=text, left=node, right=self.factor())
            else:
                return node

    def factor(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            # '^' binds tighter than unary minus: -x1^2 is -(x1^2)
            return Neg(operand=self.factor())
        node = self.base()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            node = Pow(base=node, exponent=self.exponent())
        return node

    def exponent(self):
        sign = 1.0
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            sign = -1.0
        kind, text, pos = self.peek()
        if kind != "number":
            raise ExpressionSyntaxError("exponent must be a number", pos)
        self.advance()
        value = sign * float(text)
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            value = value ** self.exponent()  # right-associative chain
        return value

    def base(self):
        kind, text, pos = self.advance()
        if kind == "number":
            return Const(value=float(text))
        if kind == "name":
            if text in _NONSMOOTH:
                raise ExpressionSyntaxError(
                    f"{text!r} is not smooth; nonsmooth structure belongs in "
                    "penalties and constraint sets", pos,
                )
            if text in _SMOOTH_FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(func=text, argument=arg)
            m = re.fullmatch(r"x(\d+)", text)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.n:
                    raise ExpressionSyntaxError(
                        f"variable {text} is out of range for dimension {self.n}", pos
                    )
                return Var(index=index - 1)
            raise ExpressionSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(f"unexpected token {text!r}", pos)


def parse(source, n) -> Expr:
    """Parse source into an expression tree over x1 .. xn."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return _Parser(source, n).parse()


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_PREC_NEG = 2
_PREC_POW = 4
_PREC_ATOM = 5


def _fmt_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def _print(e: Expr, parent_prec: int) -> str:
    if isinstance(e, Const):
        text = _fmt_number(e.value)
        return f"({text})" if e.value < 0 else text
    if isinstance(e, Var):
        return f"x{e.index + 1}"
    if isinstance(e, Call):
        return f"{e.func}({_print(e.argument, 0)})"
    if isinstance(e, Neg):
        inner = _print(e.operand, _PREC_NEG)
        text = f"-{inner}"
        return f"({text})" if parent_prec > _PREC_NEG else text
    if isinstance(e, Pow):
        base = _print(e.base, _PREC_POW + 1)
        exp = _fmt_number(e.exponent)
        if e.exponent < 0:
            exp = f"-{_fmt_number(-e.exponent)}"
        return f"{base}^{exp}"
    prec = _PREC[e.op]
    left = _print(e.left, prec)
    right = _print(e.right, prec + 1)  # left-associative operators
    text = f"{left} {e.op} {right}"
    return f"({text})" if parent_prec > prec else text


def to_source(e: Expr) -> str:
    """Render a tree back to source; parsing the result reproduces the tree."""
    return _print(e, 0)


# ---------------------------------------------------------------------------
# evaluation with gradients
# ---------------------------------------------------------------------------

def _eval(e: Expr, x: Array) -> tuple:
    n = x.size
    if isinstance(e, Const):
        return e.value, np.zeros(n)
    if isinstance(e, Var):
        g = np.zeros(n)
        g[e.index] = 1.0
        return float(x[e.index]), g
    if isinstance(e, Neg):
        v, g = _eval(e.operand, x)
        return -v, -g
    if isinstance(e, Binary):
        lv, lg = _eval(e.left, x)
        rv, rg = _eval(e.right, x)
        if e.op == "+":
            return lv + rv, lg + rg
        if e.op == "-":
            return lv - rv, lg - rg
        if e.op == "*":
            return lv * rv, rv * lg + lv * rg
        if rv == 0.0:
            raise EvaluationDomainError("division by zero", to_source(e))
        return lv / rv, (lg * rv - lv * rg) / (rv * rv)
    if isinstance(e, Pow):
        bv, bg = _eval(e.base, x)
        p = e.exponent
        if float(p).is_integer():
            if bv == 0.0 and p < 0:
                raise EvaluationDomainError("zero base with negative exponent", to_source(e))
            v = bv ** p
            dv = 0.0 if p == 0 else p * bv ** (p - 1.0)
        else:
            if bv <= 0.0:
                raise EvaluationDomainError(
                    "nonpositive base with fractional exponent", to_source(e)
                )
            v = bv ** p
            dv = p * bv ** (p - 1.0)
        return float(v), dv * bg
    if isinstance(e, Call):
        av, ag = _eval(e.argument, x)
        if e.func == "sin":
            return math.sin(av), math.cos(av) * ag
        if e.func == "cos":
            return math.cos(av), -math.sin(av) * ag
        if e.func == "exp":
            v = math.exp(av)
            return v, v * ag
        if e.func == "log":
            if av <= 0.0:
                raise EvaluationDomainError("log requires a positive argument", to_source(e))
            return math.log(av), ag / av
        if e.func == "sqrt":
            if av <= 0.0:
                raise EvaluationDomainError("sqrt requires a positive argument", to_source(e))
            v = math.sqrt(av)
            return v, ag / (2.0 * v)
    raise TypeError(f"unknown expression node {e!r}")


def eval_with_gradient(e: Expr, x) -> tuple:
    """Value and exact gradient of the expression at x."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    v, g = _eval(e, x)
    return float(v), g
