"""Textual Lagrangian / d-metric definitions.

Expressions use a small infix grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("-" | "+") unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := exp | log | sqrt | sin | cos

The exponent of ``^`` must fold to a rational constant.  Coordinates are
named ``x1..xn`` and ``y1..ym``.
"""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import jets
from .errors import (DefinitionFileError, DomainError, ExpressionSyntaxError,
                     UnknownSymbol)

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos")


@dataclass(frozen=True)
class ChartSpec:
    """Dimensions of the h- (x) and v- (y) parts of the chart.

    ``m == 0`` describes a plain base-manifold chart (no fibre coordinates).
    """

    n: int
    m: int
    signature: str = "positive"

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if self.signature != "positive":
            raise ValueError("only positive-definite signature is supported")

    @property
    def names(self):
        return tuple(f"x{i + 1}" for i in range(self.n)) + \
            tuple(f"y{a + 1}" for a in range(self.m))

    @property
    def dim(self):
        return self.n + self.m


# -- AST -----------------------------------------------------------------------

class Expression:
    """Base class of immutable expression nodes."""

    def variables(self):
        return frozenset()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0:
            raise ValueError("constants are finite and non-negative; use neg() for signs")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Var(Expression):
    name: str

    def variables(self):
        return frozenset([self.name])


@dataclass(frozen=True)
class Unary(Expression):
    op: str  # "neg" or one of FUNCTIONS
    arg: Expression

    def variables(self):
        return self.arg.variables()


@dataclass(frozen=True)
class Binary(Expression):
    op: str  # "add", "sub", "mul", "div"
    left: Expression
    right: Expression

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: Fraction = field(default=Fraction(1))

    def __post_init__(self):
        object.__setattr__(self, "exponent", Fraction(self.exponent))

    def variables(self):
        return self.base.variables()


def add(a, b):
    return Binary("add", a, b)


def sub(a, b):
    return Binary("sub", a, b)


def mul(a, b):
    return Binary("mul", a, b)


def div(a, b):
    return Binary("div", a, b)


def neg(a):
    return Unary("neg", a)


def const(v):
    """Constant node; negative values become ``neg(Const(|v|))``."""
    return neg(Const(-v)) if v < 0 else Const(v)


# -- printing --------------------------------------------------------------------

_BINARY_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _format_number(v):
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _format_exponent(r):
    if r.denominator == 1:
        return str(r.numerator) if r >= 0 else f"({r.numerator})"
    return f"({r.numerator}/{r.denominator})"


def to_text(e):
    """Fully parenthesised text; ``parse(to_text(e))`` rebuilds ``e`` exactly."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_text(e.arg)})"
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Binary):
        return f"({to_text(e.left)}{_BINARY_SYMBOL[e.op]}{to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)}^{_format_exponent(e.exponent)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- parsing ---------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = mt.lastgroup
        if kind != "ws":
            out.append((kind, mt.group(), pos))
        pos = mt.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, names):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind not in ("op",):
            raise ExpressionSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}",
                                        pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.take()[1] == "+" else "sub"
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = "mul" if self.take()[1] == "*" else "div"
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            epos = self.peek()[2]
            exponent = _fold_rational(self.unary(), epos)
            return Pow(base, exponent)
        return base

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                if self.peek()[1] != "(":
                    raise ExpressionSyntaxError(f"function {text!r} needs an argument", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if self.names is not None and text not in self.names:
                raise UnknownSymbol(text)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExpressionSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def _fold_rational(e, pos):
    if isinstance(e, Const):
        return Fraction(repr(e.value))
    if isinstance(e, Unary) and e.op == "neg":
        return -_fold_rational(e.arg, pos)
    if isinstance(e, Binary):
        a, b = _fold_rational(e.left, pos), _fold_rational(e.right, pos)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if b == 0:
            raise ExpressionSyntaxError("zero denominator in exponent", pos)
        return a / b
    if isinstance(e, Pow) and e.exponent.denominator == 1:
        return _fold_rational(e.base, pos) ** e.exponent.numerator
    raise ExpressionSyntaxError("exponent must be a rational constant", pos)


def parse_expression(text, names=None):
    """Parse ``text``; if ``names`` is given, unknown identifiers raise UnknownSymbol."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(text, None if names is None else frozenset(names)).parse()


def parse_lagrangian(text, chart):
    return parse_expression(text, chart.names)


# -- evaluation --------------------------------------------------------------------

_UNARY = {"exp": jets.exp, "log": jets.log, "sqrt": jets.sqrt, "sin": jets.sin,
          "cos": jets.cos}


def _eval(e, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Unary):
        a = _eval(e.arg, env)
        if e.op == "neg":
            return -a
        return _UNARY[e.op](a)
    if isinstance(e, Binary):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if isinstance(b, jets.Jet):
            return a * jets.reciprocal(b)
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    if isinstance(e, Pow):
        return jets.power(_eval(e.base, env), e.exponent)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e, values):
    """Evaluate on plain floats; ``values`` maps coordinate names to numbers."""
    try:
        return float(_eval(e, values))
    except KeyError as exc:
        raise UnknownSymbol(exc.args[0]) from None
    except (OverflowError, ZeroDivisionError, ValueError) as exc:
        raise DomainError(str(exc)) from None


def evaluate_on_jets(e, seeds):
    """Evaluate on jets; every seed must share the variable set and order."""
    orders = {(j.nvars, j.order) for j in seeds.values()}
    if len(orders) != 1:
        raise ValueError("seeds must share truncation order and variable set")
    nvars, order = orders.pop()
    missing = e.variables() - seeds.keys()
    if missing:
        raise UnknownSymbol(sorted(missing)[0])
    out = _eval(e, seeds)
    if not isinstance(out, jets.Jet):
        out = jets.Jet.constant(out, nvars, order)
    return out


def jet_at(e, u, order):
    """Jet of ``e`` at chart point ``u`` in all n+m coordinates."""
    return evaluate_on_jets(e, jets.seed(u, order))


def value_at(e, u):
    return evaluate(e, dict(zip(u.names(), u.u)))


def partial(f, u, idx):
    """True partial derivative of ``f`` at ``u``; ``idx`` is an exponent tuple."""
    idx = tuple(idx)
    order = sum(idx)
    if order > jets.MAX_ORDER:
        raise ValueError(f"derivative order {order} exceeds {jets.MAX_ORDER}")
    return float(jet_at(f, u, order).partial(idx))


# -- homogeneity -------------------------------------------------------------------

def check_homogeneity(e, chart, samples=20, seed=0, box=(0.2, 1.5), degree=2):
    """Sampled test of positive homogeneity of the given degree in y.

    Points have x uniform in ``box`` and y with uniform magnitude in ``box``
    and random signs (so y != 0).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = random.Random(seed)
    lo, hi = box
    for _ in range(samples):
        x = [rng.uniform(lo, hi) for _ in range(chart.n)]
        y = [rng.choice((-1, 1)) * rng.uniform(lo, hi) for _ in range(chart.m)]
        base = evaluate(e, dict(zip(chart.names, x + y)))
        for lam in (0.5, 2.0, 3.0):
            scaled = evaluate(e, dict(zip(chart.names, x + [lam * v for v in y])))
            target = lam ** degree * base
            if abs(scaled - target) > 1e-9 * (1 + abs(target)):
                return False
    return True


# -- definition files -----------------------------------------------------------------

@dataclass(frozen=True)
class Definition:
    """Parsed definition file: either a Lagrangian or direct d-metric data."""

    chart: ChartSpec
    lagrangian: Expression | None = None
    g: tuple | None = None  # n x n nested tuple of expressions
    h: tuple | None = None  # m x m
    nconn: tuple | None = None  # m x n, entry [a][i] is N^a_i

    @property
    def is_lagrangian(self):
        return self.lagrangian is not None


def _index(tok, upper, line, what):
    try:
        k = int(tok)
    except ValueError:
        raise DefinitionFileError(f"{what} index {tok!r} is not an integer", line) from None
    if not 1 <= k <= upper:
        raise DefinitionFileError(f"{what} index {k} out of range 1..{upper}", line)
    return k - 1


def parse_definition(text):
    """Parse the definition-file format (see README for the exact grammar)."""
    chart = None
    lagrangian = None
    g = h = nconn = None
    seen_direct = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        key = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        if key == "dims":
            if chart is not None:
                raise DefinitionFileError("duplicate dims line", lineno)
            toks = rest.split()
            if len(toks) != 2:
                raise DefinitionFileError("dims needs two integers", lineno)
            try:
                chart = ChartSpec(int(toks[0]), int(toks[1]))
            except ValueError as exc:
                raise DefinitionFileError(str(exc), lineno) from None
            g = [[Const(0.0)] * chart.n for _ in range(chart.n)]
            h = [[Const(0.0)] * chart.m for _ in range(chart.m)]
            nconn = [[Const(0.0)] * chart.n for _ in range(chart.m)]
            continue
        if chart is None:
            raise DefinitionFileError("dims must come first", lineno)
        try:
            if key == "lagrangian":
                if lagrangian is not None:
                    raise DefinitionFileError("duplicate lagrangian line", lineno)
                lagrangian = parse_lagrangian(rest, chart)
            elif key == "metric_block":
                toks = rest.split(None, 3)
                if len(toks) != 4 or toks[0] not in ("g", "h"):
                    raise DefinitionFileError("metric_block needs g|h <row> <col> <expr>", lineno)
                size = chart.n if toks[0] == "g" else chart.m
                r = _index(toks[1], size, lineno, "row")
                c = _index(toks[2], size, lineno, "column")
                expr = parse_lagrangian(toks[3], chart)
                block = g if toks[0] == "g" else h
                block[r][c] = expr
                block[c][r] = expr
                seen_direct = True
            elif key == "nconn":
                toks = rest.split(None, 2)
                if len(toks) != 3:
                    raise DefinitionFileError("nconn needs <a> <i> <expr>", lineno)
                a = _index(toks[0], chart.m, lineno, "v")
                i = _index(toks[1], chart.n, lineno, "h")
                nconn[a][i] = parse_lagrangian(toks[2], chart)
                seen_direct = True
            else:
                raise DefinitionFileError(f"unknown directive {key!r}", lineno)
        except ExpressionSyntaxError as exc:
            raise DefinitionFileError(str(exc), lineno) from exc
    if chart is None:
        raise DefinitionFileError("missing dims line")
    if lagrangian is not None and seen_direct:
        raise DefinitionFileError("a file defines either a lagrangian or metric blocks, not both")
    if lagrangian is None and not seen_direct:
        raise DefinitionFileError("no lagrangian or metric_block lines")
    if lagrangian is not None:
        return Definition(chart, lagrangian=lagrangian)
    return Definition(chart, g=tuple(map(tuple, g)), h=tuple(map(tuple, h)),
                      nconn=tuple(map(tuple, nconn)))


def load_definition(path):
    return parse_definition(Path(path).read_text(encoding="utf-8"))


def quadratic_lagrangian(g, chart):
    """Expression sum_ij g_ij(x) y^i y^j from an n x n nested list of expressions."""
    terms = None
    for i in range(chart.n):
        for j in range(chart.n):
            gij = g[i][j]
            if isinstance(gij, Const) and gij.value == 0.0:
                continue
            t = mul(mul(gij, Var(f"y{i + 1}")), Var(f"y{j + 1}"))
            terms = t if terms is None else add(terms, t)
    return terms if terms is not None else Const(0.0)


def as_array(exprs):
    """Object ndarray view of nested expression tuples (for vectorised loops)."""
    arr = np.empty((len(exprs), len(exprs[0]) if exprs else 0), dtype=object)
    for i, row in enumerate(exprs):
        for j, v in enumerate(row):
            arr[i, j] = v
    return arr
