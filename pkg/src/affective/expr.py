"""Smooth utility expressions: parsing, evaluation and exact differentiation.

The grammar is a small arithmetic language::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | base ("^" factor)?
    base   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

``^`` is right associative and binds tighter than unary minus, so ``-x^2``
reads as ``-(x^2)``.  Only smooth primitives are available (``sqrt``, ``exp``,
``log``, ``sin``, ``cos``) and exponents must be constant.

Evaluation works elementwise on numpy arrays, which is what the grid searches
in the rest of the package rely on.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")
UNARY_OPS = ("neg",) + FUNCTIONS
BINARY_OPS = ("add", "sub", "mul", "div", "pow")


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnboundVariableError(ExprError):
    def __init__(self, name):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class DomainError(ExprError):
    def __init__(self, node, message):
        super().__init__(f"{message} in {to_string(node)}")
        self.node = node


@dataclass(frozen=True)
class Const:
    value: float

    @property
    def children(self):
        return ()


@dataclass(frozen=True)
class Var:
    name: str

    @property
    def children(self):
        return ()


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ExprError(f"unknown unary operator {self.op!r}")

    @property
    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ExprError(f"unknown binary operator {self.op!r}")
        if self.op == "pow" and not is_constant(self.right):
            raise ExprError("exponent must be a constant")

    @property
    def children(self):
        return (self.left, self.right)


Expr = Union[Const, Var, Unary, Binary]

ZERO = Const(0.0)
ONE = Const(1.0)


def is_constant(e: Expr) -> bool:
    """True when the tree contains no variables."""
    if isinstance(e, Var):
        return False
    return all(is_constant(c) for c in e.children)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    out = frozenset()
    for c in e.children:
        out |= variables(c)
    return out


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    end = len(text)
    while pos < end:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", len(text[:bad].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(text[:start].encode())))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text, constants):
        self.tokens = _tokenize(text)
        self.i = 0
        self.constants = constants or {}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value or kind != "op":
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", off)

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = Binary("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = Binary("mul" if op == "*" else "div", node, self.factor())
        return node

    def factor(self):
        kind, text, off = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Unary("neg", self.factor())
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            _, _, eoff = self.take()
            exponent = self.factor()
            if not is_constant(exponent):
                raise ParseError("exponent must be a constant expression", eoff)
            node = Binary("pow", node, exponent)
        return node

    def base(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if text in FUNCTIONS:
                raise ParseError(f"function {text!r} needs an argument", off)
            if text in self.constants:
                return Const(float(self.constants[text]))
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {text or 'end of input'!r}", off)


def parse(text: str, constants: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text`` into an expression tree.

    Identifiers listed in ``constants`` are replaced by their numeric value,
    which is how model parameters enter (and why they may appear in an
    exponent).  Other identifiers stay symbolic until evaluation.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, constants)
    node = p.expr()
    kind, tok, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {tok!r}", off)
    return node


# ---------------------------------------------------------------------------
# printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _prec(e):
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1, e.value) < 0):
        return 3
    return 5


def _fmt_const(v):
    if math.isnan(v) or math.isinf(v):
        raise ExprError(f"cannot print non-finite constant {v}")
    if v < 0 or math.copysign(1, v) < 0:
        return "-" + repr(-v)
    return repr(v)


def to_string(e: Expr) -> str:
    """Render ``e`` in the input grammar; ``parse(to_string(e))`` is equivalent."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_string(e.arg)
            return "-" + (f"({inner})" if _prec(e.arg) < 3 else inner)
        return f"{e.op}({to_string(e.arg)})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[e.op]
    p = _PREC[e.op]
    left, right = to_string(e.left), to_string(e.right)
    if e.op == "pow":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < 5:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {sym} {right}"


# ---------------------------------------------------------------------------
# evaluation


def evaluate(e: Expr, env: Mapping[str, object], strict: bool = True):
    """Evaluate ``e`` with variables bound from ``env``.

    Values in ``env`` may be floats or numpy arrays (broadcast together).
    With ``strict`` a domain violation (negative sqrt, non-positive log,
    division by zero, bad power) raises :class:`DomainError`; otherwise the
    offending entries become NaN.
    """
    with np.errstate(all="ignore"):
        out = _eval(e, env, strict)
    if np.ndim(out) == 0:
        return float(out)
    return out


def _violation(node, mask, strict, message):
    if strict and np.any(mask):
        raise DomainError(node, message)


def _eval(e, env, strict):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Unary):
        a = _eval(e.arg, env, strict)
        op = e.op
        if op == "neg":
            return -np.asarray(a, dtype=float)
        if op == "sqrt":
            bad = np.asarray(a) < 0
            _violation(e, bad, strict, "sqrt of a negative number")
            return np.where(bad, np.nan, np.sqrt(np.abs(a)))
        if op == "log":
            bad = np.asarray(a) <= 0
            _violation(e, bad, strict, "log of a non-positive number")
            return np.where(bad, np.nan, np.log(np.where(bad, 1.0, a)))
        if op == "exp":
            return np.exp(a)
        if op == "sin":
            return np.sin(a)
        return np.cos(a)
    a = _eval(e.left, env, strict)
    b = _eval(e.right, env, strict)
    op = e.op
    if op == "add":
        return np.add(a, b)
    if op == "sub":
        return np.subtract(a, b)
    if op == "mul":
        return np.multiply(a, b)
    if op == "div":
        bad = np.asarray(b) == 0
        _violation(e, bad, strict, "division by zero")
        return np.where(bad, np.nan, np.divide(a, np.where(bad, 1.0, b)))
    # pow with constant exponent
    c = float(b)
    base = np.asarray(a, dtype=float)
    bad = np.zeros(base.shape, dtype=bool)
    if not c.is_integer():
        bad = bad | (base < 0)
    if c < 0:
        bad = bad | (base == 0)
    _violation(e, bad, strict, "power outside its domain")
    return np.where(bad, np.nan, np.power(np.where(bad, 1.0, base), c))


# ---------------------------------------------------------------------------
# construction with constant folding


def _fold(node):
    try:
        v = _eval(node, {}, True)
    except ExprError:
        return node
    v = float(v)
    return Const(v) if math.isfinite(v) else node


def add(a, b):
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("add", a, b)


def sub(a, b):
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("sub", a, b)


def mul(a, b):
    if is_zero(a) or is_zero(b):
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("mul", a, b)


def div(a, b):
    if is_zero(a):
        return ZERO
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    return Binary("div", a, b)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value) if a.value != 0 else ZERO
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(a, c):
    if not isinstance(c, Const):
        c = _fold(c)
        if not isinstance(c, Const):
            raise ExprError("exponent must be a constant")
    if c.value == 0:
        return ONE
    if c.value == 1:
        return a
    if isinstance(a, Const):
        return _fold(Binary("pow", a, c))
    return Binary("pow", a, c)


def call(name, a):
    node = Unary(name, a)
    return _fold(node) if isinstance(a, Const) else node


# ---------------------------------------------------------------------------
# differentiation


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``var``.

    Results are constant-folded but otherwise unsimplified.  A subtree that
    does not mention ``var`` differentiates to the zero constant exactly.
    """
    if var not in variables(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Unary):
        a = e.arg
        da = differentiate(a, var)
        op = e.op
        if op == "neg":
            return neg(da)
        if op == "sqrt":
            return div(da, mul(Const(2.0), e))
        if op == "exp":
            return mul(e, da)
        if op == "log":
            return div(da, a)
        if op == "sin":
            return mul(call("cos", a), da)
        return neg(mul(call("sin", a), da))
    a, b = e.left, e.right
    if e.op == "pow":
        c = e.right.value if isinstance(e.right, Const) else float(_eval(e.right, {}, True))
        return mul(mul(Const(c), power(a, Const(c - 1.0))), differentiate(a, var))
    da = differentiate(a, var)
    db = differentiate(b, var)
    if e.op == "add":
        return add(da, db)
    if e.op == "sub":
        return sub(da, db)
    if e.op == "mul":
        return add(mul(da, b), mul(a, db))
    # quotient rule, split so a constant numerator gives a single term
    return sub(div(da, b), div(mul(a, db), power(b, Const(2.0))))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions, folding constants on the way up."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        a = substitute(e.arg, mapping)
        return neg(a) if e.op == "neg" else call(e.op, a)
    a = substitute(e.left, mapping)
    b = substitute(e.right, mapping)
    return {"add": add, "sub": sub, "mul": mul, "div": div, "pow": power}[e.op](a, b)
