"""Small expression language for time-varying rates and reward functions.

Expressions are written in terms of the time ``t`` and the state index ``x``::

    >>> f = TimeFunction("x*(7*t - floor(7*t)) + 0.1")
    >>> round(f(0.5, 4), 12)
    2.1

Evaluation works on Python floats and on numpy arrays (broadcasting ``t``
against ``x``).  Evaluation at a discontinuity of ``floor`` can be asked for
as a one-sided limit by passing ``side="left"`` or ``side="right"``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "ExprDomainError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "evaluate",
    "to_text",
    "substitute_time",
    "TimeFunction",
]

FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "abs": 1,
    "floor": 1,
    "min": 2,
    "max": 2,
}
CONSTANTS = {"pi": math.pi}
VARIABLES = ("t", "x")

# relative distance to an integer below which floor() is treated as sitting
# on its jump when a one-sided limit is requested
_SNAP = 1e-9


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprDomainError(ExprError):
    """Raised when evaluation leaves the domain of an operation."""

    def __init__(self, message: str, node: "Node", t=None, x=None):
        where = ""
        if t is not None:
            where = f" at t={t!r}, x={x!r}"
        super().__init__(f"{message} in '{to_text(node)}'{where}")
        self.node = node
        self.t = t
        self.x = x


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "t", "x" or a named constant such as "pi"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]


# --------------------------------------------------------------------------
# Tokenizer and parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


_BINARY_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.advance()
        if val != value or kind == "end":
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", off)

    def parse(self) -> Node:
        node = self.binary(1)
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return node

    def binary(self, min_prec: int) -> Node:
        # precedence climbing for the left-associative operators + - * /
        left = self.unary()
        while True:
            kind, val, _ = self.peek()
            prec = _BINARY_PREC.get(val) if kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.binary(prec + 1)
            left = BinOp(val, left, right)

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            # right associative; the exponent may carry its own unary minus
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        kind, val, off = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", off)
                self.advance()
                args = [self.binary(1)]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.binary(1))
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    raise ExprSyntaxError(
                        f"{val}() takes {FUNCTIONS[val]} argument(s), got {len(args)}", off
                    )
                return Call(val, tuple(args))
            if val in VARIABLES or val in CONSTANTS:
                return Var(val)
            if val in FUNCTIONS:
                raise ExprSyntaxError(f"function {val!r} used without arguments", off)
            raise ExprSyntaxError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "(":
            node = self.binary(1)
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", off)


def parse(text: str) -> Node:
    """Parse ``text`` into an expression tree.

    Raises :class:`ExprSyntaxError` (carrying the offending offset) on
    malformed input, unknown identifiers and wrong function arity.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(node: Node) -> str:
    """Render ``node`` with the minimal parentheses needed to re-parse it."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        if _node_prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = to_text(node.left)
        right = to_text(node.right)
        lp, rp = _node_prec(node.left), _node_prec(node.right)
        if node.op == "^":
            # base binds tighter than anything but atoms; exponent is a unary
            if lp <= p:
                left = f"({left})"
            if rp < _PREC["neg"]:
                right = f"({right})"
        else:
            if lp < p:
                left = f"({left})"
            if rp <= p:
                right = f"({right})"
        return f"{left} {node.op} {right}" if node.op != "^" else f"{left}^{right}"
    raise TypeError(f"not an expression node: {node!r}")


def _node_prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    if isinstance(node, Num) and node.value < 0:
        return _PREC["neg"]
    return 10


# --------------------------------------------------------------------------
# Evaluation


def _bad(mask, t, x):
    """First (t, x) pair selected by ``mask``, for error messages."""
    if np.ndim(mask) == 0:
        return t, x
    idx = np.flatnonzero(np.asarray(mask))[0]
    tb = np.broadcast_to(t, np.shape(mask)).ravel()[idx]
    xb = np.broadcast_to(x, np.shape(mask)).ravel()[idx]
    return float(tb), float(xb)


def _compile(node: Node) -> Callable:
    """Turn ``node`` into a closure ``f(t, x, side)``."""
    if isinstance(node, Num):
        v = node.value
        return lambda t, x, side: v
    if isinstance(node, Var):
        if node.name == "t":
            return lambda t, x, side: t
        if node.name == "x":
            return lambda t, x, side: x
        c = CONSTANTS[node.name]
        return lambda t, x, side: c
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda t, x, side: -f(t, x, side)
    if isinstance(node, BinOp):
        fl, fr = _compile(node.left), _compile(node.right)
        op = node.op
        if op == "+":
            return lambda t, x, side: fl(t, x, side) + fr(t, x, side)
        if op == "-":
            return lambda t, x, side: fl(t, x, side) - fr(t, x, side)
        if op == "*":
            return lambda t, x, side: fl(t, x, side) * fr(t, x, side)
        if op == "/":

            def div(t, x, side):
                a, b = fl(t, x, side), fr(t, x, side)
                zero = np.equal(b, 0)
                if np.any(zero):
                    raise ExprDomainError("division by zero", node, *_bad(zero, t, x))
                return a / b

            return div

        def power(t, x, side):
            a, b = fl(t, x, side), fr(t, x, side)
            with np.errstate(all="ignore"):
                out = np.power(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else _scalar_pow(a, b)
            bad = ~np.isfinite(out)
            if np.any(bad):
                raise ExprDomainError("power outside its domain", node, *_bad(bad, t, x))
            return out

        return power
    if isinstance(node, Call):
        fs = [_compile(a) for a in node.args]
        name = node.name
        if name == "min":
            a, b = fs
            return lambda t, x, side: np.minimum(a(t, x, side), b(t, x, side))
        if name == "max":
            a, b = fs
            return lambda t, x, side: np.maximum(a(t, x, side), b(t, x, side))
        (f,) = fs
        if name == "floor":
            return _compile_floor(f)
        if name == "log":

            def log(t, x, side):
                a = f(t, x, side)
                bad = np.less_equal(a, 0)
                if np.any(bad):
                    raise ExprDomainError("log of non-positive value", node, *_bad(bad, t, x))
                return np.log(a)

            return log
        if name == "sqrt":

            def sqrt(t, x, side):
                a = f(t, x, side)
                bad = np.less(a, 0)
                if np.any(bad):
                    raise ExprDomainError("sqrt of negative value", node, *_bad(bad, t, x))
                return np.sqrt(a)

            return sqrt
        if name == "exp":

            def exp(t, x, side):
                with np.errstate(over="ignore"):
                    out = np.exp(f(t, x, side))
                bad = ~np.isfinite(out)
                if np.any(bad):
                    raise ExprDomainError("exp overflow", node, *_bad(bad, t, x))
                return out

            return exp
        ufunc = {"sin": np.sin, "cos": np.cos, "abs": np.abs}[name]
        return lambda t, x, side: ufunc(f(t, x, side))
    raise TypeError(f"not an expression node: {node!r}")


def _scalar_pow(a, b):
    try:
        out = float(a) ** float(b)
    except (OverflowError, ZeroDivisionError):
        return math.inf
    if isinstance(out, complex):
        return math.nan
    return out


def _compile_floor(f: Callable) -> Callable:
    def floor(t, x, side):
        g = f(t, x, side)
        if side not in ("left", "right"):
            return np.floor(g)
        n = np.round(g)
        near = np.abs(g - n) <= _SNAP * np.maximum(1.0, np.abs(g))
        if not np.any(near):
            return np.floor(g)
        # one-sided limit: floor of the argument just to the requested side
        delta = 1e-7 * np.maximum(1.0, np.abs(t))
        probe = t - delta if side == "left" else t + delta
        snapped = np.floor(f(probe, x, None))
        return np.where(near, snapped, np.floor(g))

    return floor


def evaluate(node: Node, t, x=0.0, side: Optional[str] = None):
    """Evaluate an expression tree at time ``t`` and state value ``x``."""
    return _compile(node)(t, x, side)


def substitute_time(node: Node, scale: float) -> Node:
    """Return a copy of ``node`` with every ``t`` replaced by ``scale*t``."""
    if isinstance(node, Var) and node.name == "t":
        return BinOp("*", Num(scale), node)
    if isinstance(node, Neg):
        return Neg(substitute_time(node.operand, scale))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute_time(node.left, scale), substitute_time(node.right, scale))
    if isinstance(node, Call):
        return Call(node.name, tuple(substitute_time(a, scale) for a in node.args))
    return node


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimeFunction:
    """A parsed expression in ``t`` and ``x`` plus its declared non-smooth points.

    Breakpoints are never inferred from the expression; they have to be
    declared (absolute ``breakpoints`` and/or ``per_period`` points repeated
    every ``period``).
    """

    text: str
    breakpoints: tuple = ()
    period: Optional[float] = None
    per_period: tuple = ()
    expr: Node = field(init=False, repr=False, compare=False)
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        node = parse(self.text)
        object.__setattr__(self, "expr", node)
        object.__setattr__(self, "_fn", _compile(node))

    @classmethod
    def constant(cls, value: float) -> "TimeFunction":
        return cls(_fmt_num(float(value)))

    @classmethod
    def coerce(cls, value) -> "TimeFunction":
        if isinstance(value, TimeFunction):
            return value
        if isinstance(value, (int, float)):
            return cls.constant(value)
        return cls(str(value))

    def __call__(self, t, x=0.0, side: Optional[str] = None):
        return self._fn(t, x, side)

    def __reduce__(self):
        # compiled closures do not pickle; rebuild from the text
        return (TimeFunction, (self.text, self.breakpoints, self.period, self.per_period))

    def __eq__(self, other):
        if not isinstance(other, TimeFunction):
            return NotImplemented
        return (self.text, self.breakpoints, self.period, self.per_period) == (
            other.text,
            other.breakpoints,
            other.period,
            other.per_period,
        )

    def __hash__(self):
        return hash((self.text, self.breakpoints, self.period, self.per_period))

    @property
    def is_constant(self) -> bool:
        return _is_constant(self.expr)

    @property
    def depends_on_time(self) -> bool:
        return uses_variable(self.expr, "t")

    def declared_points(self, start: float, stop: float) -> np.ndarray:
        """Declared breakpoints inside the open interval (start, stop)."""
        pts = [p for p in self.breakpoints if start < p < stop]
        if self.period:
            pts.extend(expand_periodic(self.per_period, self.period, start, stop))
        return np.unique(np.asarray(pts, dtype=float))

    def rescaled(self, scale: float) -> "TimeFunction":
        """The function ``t -> f(scale*t)`` (breakpoints divided by ``scale``)."""
        node = substitute_time(self.expr, scale)
        return TimeFunction(
            to_text(node),
            tuple(p / scale for p in self.breakpoints),
            self.period / scale if self.period else None,
            tuple(p / scale for p in self.per_period),
        )


def uses_variable(node: Node, name: str) -> bool:
    """Whether the variable ``name`` occurs anywhere in ``node``."""
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Neg):
        return uses_variable(node.operand, name)
    if isinstance(node, BinOp):
        return uses_variable(node.left, name) or uses_variable(node.right, name)
    if isinstance(node, Call):
        return any(uses_variable(a, name) for a in node.args)
    return False


def _is_constant(node: Node) -> bool:
    if isinstance(node, Num):
        return True
    if isinstance(node, Var):
        return node.name in CONSTANTS
    if isinstance(node, Neg):
        return _is_constant(node.operand)
    if isinstance(node, BinOp):
        return _is_constant(node.left) and _is_constant(node.right)
    if isinstance(node, Call):
        return all(_is_constant(a) for a in node.args)
    return False


def expand_periodic(points: Sequence[float], period: float, start: float, stop: float) -> list:
    """All ``p + k*period`` (k integer) lying strictly inside (start, stop)."""
    out = []
    if period <= 0:
        raise ValueError("period must be positive")
    for p in points:
        k0 = math.floor((start - p) / period)
        k = k0
        while True:
            v = p + k * period
            if v >= stop:
                break
            if v > start:
                out.append(v)
            k += 1
    return out
