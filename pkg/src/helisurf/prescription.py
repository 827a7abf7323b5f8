"""Prescription functions h(t) on [-1, 1]: parsing, exact derivatives, structure.

The curvature prescription is entered as a small expression language:

    expr   := term (('+' | '-') term)*
    term   := power (('*' | '/') power)*
    power  := signed ('^' power)?          # '^' is right-associative
    signed := '-' signed | atom
    atom   := NUMBER | 't' | 'pi' | fn '(' expr ')' | '(' expr ')'
    fn     := 'sin' | 'cos' | 'exp' | 'sqrt' | 'log'

Unary minus binds tighter than the left operand of '^', so ``-t^2`` parses as
``(-t)^2`` while ``-(t^2)`` must be written explicitly; exponents may be
signed (``t^-2``).  Numbers are decimal literals with optional scientific
notation.  ``abs`` and piecewise constructs are deliberately absent: the
dynamics this package studies requires a C^1 prescription, and the grammar
should not make it easy to violate that silently.

Derivatives are computed by forward-mode dual numbers on the same expression
tree (exact to rounding), never by finite differences.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, ParseError

GRID_SIZE = 2001
PREDICATE_TOL = 1e-9
ZERO_REFINE_TOL = 1e-10

__all__ = [
    "Dual",
    "HFunction",
    "HProfile",
    "parse_h",
    "profile_of",
    "ast_to_text",
]


# ---------------------------------------------------------------------------
# dual numbers (value + first derivative carried together)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dual:
    """Forward-mode dual number; works elementwise on numpy arrays too."""

    val: float | np.ndarray
    dot: float | np.ndarray

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.dot + other.dot)
        return Dual(self.val + other, self.dot)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.dot - other.dot)
        return Dual(self.val - other, self.dot)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.dot)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.val * other.dot + self.dot * other.val)
        return Dual(self.val * other, self.dot * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val / other.val,
                        (self.dot * other.val - self.val * other.dot)
                        / (other.val * other.val))
        return Dual(self.val / other, self.dot / other)

    def __rtruediv__(self, other):
        return Dual(other / self.val, -other * self.dot / (self.val * self.val))

    def __neg__(self):
        return Dual(-self.val, -self.dot)

    def __pow__(self, other):
        if isinstance(other, Dual):
            # general a^b via exp(b log a); domain a > 0
            with np.errstate(invalid="ignore", divide="ignore"):
                v = self.val ** other.val
                d = v * (other.dot * np.log(self.val)
                         + other.val * self.dot / self.val)
            return Dual(v, d)
        k = float(other)
        if k == int(k):
            # integer exponents stay defined for negative bases
            n = int(k)
            if n == 0:
                return Dual(self.val ** 0, 0.0 * self.dot)
            with np.errstate(divide="ignore", invalid="ignore"):
                v = self.val ** n
                d = n * self.val ** (n - 1) * self.dot
            return Dual(v, d)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = self.val ** k
            d = k * self.val ** (k - 1) * self.dot
        return Dual(v, d)

    def __rpow__(self, other):
        with np.errstate(invalid="ignore", divide="ignore"):
            v = other ** self.val
            d = v * np.log(other) * self.dot
        return Dual(v, d)


def _dual_sin(a):
    if isinstance(a, Dual):
        return Dual(np.sin(a.val), np.cos(a.val) * a.dot)
    return np.sin(a)


def _dual_cos(a):
    if isinstance(a, Dual):
        return Dual(np.cos(a.val), -np.sin(a.val) * a.dot)
    return np.cos(a)


def _dual_exp(a):
    if isinstance(a, Dual):
        v = np.exp(a.val)
        return Dual(v, v * a.dot)
    return np.exp(a)


def _dual_sqrt(a):
    if isinstance(a, Dual):
        with np.errstate(invalid="ignore", divide="ignore"):
            v = np.sqrt(a.val)
            return Dual(v, a.dot / (2.0 * v))
    with np.errstate(invalid="ignore"):
        return np.sqrt(a)


def _dual_log(a):
    if isinstance(a, Dual):
        with np.errstate(invalid="ignore", divide="ignore"):
            return Dual(np.log(a.val), a.dot / a.val)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.log(a)


_FUNCTIONS = {
    "sin": _dual_sin,
    "cos": _dual_cos,
    "exp": _dual_exp,
    "sqrt": _dual_sqrt,
    "log": _dual_log,
}


# ---------------------------------------------------------------------------
# expression tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class PiConst:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Num | Var | PiConst | Neg | BinOp | Call


def _eval_node(node: Node, t):
    """Evaluate a tree at t, which may be a float, ndarray, or Dual."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return t
    if isinstance(node, PiConst):
        return math.pi
    if isinstance(node, Neg):
        return -_eval_node(node.arg, t)
    if isinstance(node, Call):
        return _FUNCTIONS[node.fn](_eval_node(node.arg, t))
    left = _eval_node(node.left, t)
    right = _eval_node(node.right, t)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    if node.op == "^":
        if isinstance(left, Dual):
            return left ** right
        if isinstance(right, Dual):
            return left ** right  # delegates to Dual.__rpow__
        with np.errstate(invalid="ignore", divide="ignore"):
            return left ** right
    raise AssertionError(f"unknown operator {node.op!r}")


# precedence levels used by both the parser and the printer
_LEVEL_ADD, _LEVEL_MUL, _LEVEL_POW, _LEVEL_SIGN, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _node_level(node: Node) -> int:
    if isinstance(node, BinOp):
        return {"+": _LEVEL_ADD, "-": _LEVEL_ADD,
                "*": _LEVEL_MUL, "/": _LEVEL_MUL,
                "^": _LEVEL_POW}[node.op]
    if isinstance(node, Neg):
        return _LEVEL_SIGN
    return _LEVEL_ATOM


def ast_to_text(node: Node, _min_level: int = 0) -> str:
    """Render a tree to text that re-parses to the identical tree."""
    if isinstance(node, Num):
        s = repr(node.value)
        out = s
    elif isinstance(node, Var):
        out = "t"
    elif isinstance(node, PiConst):
        out = "pi"
    elif isinstance(node, Call):
        out = f"{node.fn}({ast_to_text(node.arg)})"
    elif isinstance(node, Neg):
        out = "-" + ast_to_text(node.arg, _LEVEL_SIGN)
    elif node.op in "+-":
        out = (f"{ast_to_text(node.left, _LEVEL_ADD)} {node.op} "
               f"{ast_to_text(node.right, _LEVEL_MUL)}")
    elif node.op in "*/":
        out = (f"{ast_to_text(node.left, _LEVEL_MUL)}{node.op}"
               f"{ast_to_text(node.right, _LEVEL_POW)}")
    else:  # ^
        out = (f"{ast_to_text(node.left, _LEVEL_SIGN)}^"
               f"{ast_to_text(node.right, _LEVEL_POW)}")
    if _node_level(node) < _min_level:
        return f"({out})"
    return out


# ---------------------------------------------------------------------------
# lexer + recursive-descent parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]+)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos == len(text):
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos,
                             "number, name, operator, or parenthesis")
        if m.group("num"):
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


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

    def expect_op(self, op: str):
        kind, value, pos = self.peek()
        if kind == "op" and value == op:
            return self.advance()
        raise ParseError(f"got {value!r}" if value else "input ended", pos, repr(op))

    def parse(self) -> Node:
        node = self.parse_expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {value!r}", pos, "end of expression")
        return node

    def parse_expr(self) -> Node:
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = BinOp(value, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Node:
        node = self.parse_power()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = BinOp(value, node, self.parse_power())
            else:
                return node

    def parse_power(self) -> Node:
        node = self.parse_signed()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            node = BinOp("^", node, self.parse_power())
        return node

    def parse_signed(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.parse_signed())
        return self.parse_atom()

    def parse_atom(self) -> Node:
        kind, value, pos = self.advance()
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value == "t":
                return Var()
            if value == "pi":
                return PiConst()
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expr()
                self.expect_op(")")
                return Call(value, arg)
            raise ParseError(f"unknown name {value!r}", pos,
                             "'t', 'pi', or one of " + ", ".join(sorted(_FUNCTIONS)))
        if kind == "op" and value == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError(f"got {value!r}" if value else "input ended", pos,
                         "number, 't', 'pi', function, or '('")


# ---------------------------------------------------------------------------
# HFunction / HProfile
# ---------------------------------------------------------------------------

def _validation_grid() -> np.ndarray:
    return np.linspace(-1.0, 1.0, GRID_SIZE)


@dataclass(frozen=True)
class HFunction:
    """A C^1 prescription on [-1, 1] with an exact derivative.

    Construct via :func:`parse_h` (expression text) or
    :meth:`HFunction.from_callables` (programmatic).  Instances are immutable
    and validated on a fixed 2001-point grid at construction.
    """

    source: str
    _eval: object = field(repr=False)
    _deriv: object = field(repr=False)

    def __call__(self, t):
        return self._eval(t)

    def deriv(self, t):
        return self._deriv(t)

    @classmethod
    def from_ast(cls, tree: Node, source: str | None = None) -> "HFunction":
        text = source if source is not None else ast_to_text(tree)

        def evaluate(t):
            return _eval_node(tree, t)

        def derivative(t):
            out = _eval_node(tree, Dual(t, np.ones_like(np.asarray(t, dtype=float))
                                        if isinstance(t, np.ndarray) else 1.0))
            if isinstance(out, Dual):
                return out.dot
            # expression does not involve t at all
            return np.zeros_like(np.asarray(t, dtype=float)) if isinstance(t, np.ndarray) else 0.0

        fn = cls(text, evaluate, derivative)
        object.__setattr__(fn, "ast", tree)
        fn._validate()
        return fn

    @classmethod
    def from_callables(cls, fn, dfn, source: str = "<callable>") -> "HFunction":
        out = cls(source, fn, dfn)
        out._validate()
        return out

    def _validate(self) -> None:
        grid = _validation_grid()
        with np.errstate(all="ignore"):
            vals = np.asarray(self(grid), dtype=float)
            ders = np.asarray(self.deriv(grid), dtype=float)
        if vals.shape == ():
            vals = np.full(grid.shape, float(vals))
        if ders.shape == ():
            ders = np.full(grid.shape, float(ders))
        bad = ~(np.isfinite(vals) & np.isfinite(ders))
        if bad.any():
            t_bad = grid[bad][0]
            raise DomainError(
                f"prescription {self.source!r} is not finite at t = {t_bad:.6g} "
                "(value or derivative); it must be C^1 on [-1, 1]")


def parse_h(text: str) -> HFunction:
    """Parse an expression for h(t) and return a validated HFunction."""
    tree = _Parser(text).parse()
    return HFunction.from_ast(tree, source=text)


@dataclass(frozen=True)
class HProfile:
    """Structural facts about a prescription, decided on the validation grid."""

    is_positive: bool
    is_even: bool
    is_increasing_on_0_1: bool
    zeros: tuple[float, ...]
    min_value: float
    max_value: float


def _refine_zeros(h: HFunction, grid: np.ndarray, vals: np.ndarray) -> list[float]:
    zeros: list[float] = []

    # sign-change zeros by bisection
    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        root = brentq(lambda t: float(h(t)), grid[i], grid[i + 1], xtol=1e-14)
        zeros.append(float(root))

    # touching zeros (h >= 0 or h <= 0 locally): minimize |h| near grid dips
    absvals = np.abs(vals)
    interior = np.arange(1, len(grid) - 1)
    dips = interior[(absvals[interior] <= absvals[interior - 1])
                    & (absvals[interior] <= absvals[interior + 1])
                    & (absvals[interior] < 1e-3)]
    for i in dips:
        res = minimize_scalar(lambda t: abs(float(h(t))),
                              bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": 1e-14})
        t0 = float(res.x)
        if abs(float(h(t0))) < ZERO_REFINE_TOL:
            zeros.append(t0)

    # exact zeros sitting on grid nodes
    for i in np.nonzero(vals == 0.0)[0]:
        zeros.append(float(grid[i]))

    zeros.sort()
    deduped: list[float] = []
    for z in zeros:
        if not deduped or abs(z - deduped[-1]) > 1e-8:
            deduped.append(z)
    return [z for z in deduped if -1.0 < z < 1.0]


def profile_of(h: HFunction) -> HProfile:
    """Decide positivity, evenness, monotonicity on [0,1], and locate zeros."""
    grid = _validation_grid()
    vals = np.asarray(h(grid), dtype=float)
    if vals.shape == ():
        vals = np.full(grid.shape, float(vals))

    zeros = _refine_zeros(h, grid, vals)
    is_positive = bool(vals.min() > PREDICATE_TOL) and not zeros
    is_even = bool(np.max(np.abs(vals - vals[::-1])) < PREDICATE_TOL)

    half = grid[grid >= 0.0]
    dvals = np.asarray(h.deriv(half), dtype=float)
    if dvals.shape == ():
        dvals = np.full(half.shape, float(dvals))
    is_increasing = bool(dvals.min() >= -PREDICATE_TOL)

    return HProfile(
        is_positive=is_positive,
        is_even=is_even,
        is_increasing_on_0_1=is_increasing,
        zeros=tuple(zeros),
        min_value=_refine_extremum(h, grid, vals, sign=1.0),
        max_value=_refine_extremum(h, grid, vals, sign=-1.0),
    )


def _refine_extremum(h: HFunction, grid: np.ndarray, vals: np.ndarray,
                     sign: float) -> float:
    """Sharpen the grid min (sign=+1) or max (sign=-1) by a local search."""
    i = int(np.argmin(sign * vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if lo == hi:
        return float(vals[i])
    res = minimize_scalar(lambda t: sign * float(h(t)), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12})
    refined = sign * float(res.fun)
    return float(min(refined, vals[i]) if sign > 0 else max(refined, vals[i]))
