"""Scalar expressions over named coordinates.

Expressions are small immutable trees built from constants, variables,
the unary functions ``neg, sin, cos, tan, exp, log, sqrt`` and the binary
operators ``add, sub, mul, div, pow`` (``pow`` only with an integer literal
exponent).  Trees are constant-folded on construction; no other algebraic
rewriting is attempted beyond dropping additive/multiplicative identities.

Grammar accepted by :func:`parse`::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' signed-integer)?
    base   := number | name | func '(' expr ')' | '(' expr ')' | '-' base
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

UNARY_OPS = ("neg", "sin", "cos", "tan", "exp", "log", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class DomainError(ExprError):
    def __init__(self, message: str, subexpr: "Expr | None" = None):
        where = f" in {to_string(subexpr)!r}" if subexpr is not None else ""
        super().__init__(message + where)
        self.subexpr = subexpr


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str
    child: Expr


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# ---------------------------------------------------------------------------
# numeric primitives shared by the tree walker and compiled functions

def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _log(a: float) -> float:
    if not a > 0.0:
        raise DomainError(f"log of non-positive value {a!r}")
    return math.log(a)


def _sqrt(a: float) -> float:
    if a < 0.0:
        raise DomainError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError(f"exp overflow at {a!r}") from None


def _tan(a: float) -> float:
    c = math.cos(a)
    if c == 0.0:
        raise DomainError("tan pole")
    return math.tan(a)


def _powi(a: float, n: int) -> float:
    if n < 0 and a == 0.0:
        raise DomainError("zero to a negative power")
    try:
        return a**n
    except OverflowError:
        raise DomainError("power overflow") from None


_UNARY_FN: dict[str, Callable[[float], float]] = {
    "neg": lambda a: -a,
    "sin": math.sin,
    "cos": math.cos,
    "tan": _tan,
    "exp": _exp,
    "log": _log,
    "sqrt": _sqrt,
}

_BINARY_FN: dict[str, Callable[[float, float], float]] = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": _div,
    "pow": lambda a, b: _powi(a, int(b)),
}


# ---------------------------------------------------------------------------
# folding constructors

def const(value: float) -> Const:
    return Const(float(value))


def var(name: str) -> Var:
    return Var(name)


def _fold(op: str, args: tuple[float, ...]) -> float | None:
    try:
        if len(args) == 1:
            v = _UNARY_FN[op](args[0])
        else:
            v = _BINARY_FN[op](*args)
    except (DomainError, ValueError, OverflowError):
        return None
    return v if math.isfinite(v) else None


def unary(op: str, child: Expr) -> Expr:
    if op not in UNARY_OPS:
        raise ExprError(f"unknown unary op {op!r}")
    if isinstance(child, Const):
        v = _fold(op, (child.value,))
        if v is not None:
            return Const(v)
    return Unary(op, child)


def binary(op: str, left: Expr, right: Expr) -> Expr:
    if op not in BINARY_OPS:
        raise ExprError(f"unknown binary op {op!r}")
    if op == "pow":
        if not (isinstance(right, Const) and float(right.value).is_integer()):
            raise ExprError("pow exponent must be an integer literal")
        n = int(right.value)
        if n == 0:
            return ONE
        if n == 1:
            return left
    if isinstance(left, Const) and isinstance(right, Const):
        v = _fold(op, (left.value, right.value))
        if v is not None:
            return Const(v)
    if op == "add":
        if _is_const(left, 0.0):
            return right
        if _is_const(right, 0.0):
            return left
    elif op == "sub":
        if _is_const(right, 0.0):
            return left
        if _is_const(left, 0.0):
            return unary("neg", right)
    elif op == "mul":
        if _is_const(left, 0.0) or _is_const(right, 0.0):
            return ZERO
        if _is_const(left, 1.0):
            return right
        if _is_const(right, 1.0):
            return left
    elif op == "div":
        if _is_const(right, 1.0):
            return left
    return Binary(op, left, right)


def add(a: Expr, b: Expr) -> Expr:
    return binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    return binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    return binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    return binary("div", a, b)


def powi(a: Expr, n: int) -> Expr:
    return binary("pow", a, Const(float(n)))


def neg(a: Expr) -> Expr:
    return unary("neg", a)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),−])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if value == "−":
                value = "-"
            tokens.append((kind, value, len(text[:pos].encode())))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: set[str] | None):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = allowed

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, v, off = self.take()
        if v != value or kind == "end":
            raise ParseError(f"expected {value!r}, found {v or 'end of input'!r}", off)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = binary("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = binary("mul" if op == "*" else "div", node, self.factor())
        return node

    def factor(self) -> Expr:
        node = self.base()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] in ("+", "-"):
                sign = -1 if self.take()[1] == "-" else 1
            kind, v, off = self.take()
            if kind != "num" or not v.isdigit():
                raise ParseError("exponent must be a signed integer literal", off)
            node = powi(node, sign * int(v))
        return node

    def base(self) -> Expr:
        kind, v, off = self.take()
        if kind == "num":
            return const(float(v))
        if kind == "name":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return unary(v, arg)
            if self.allowed is not None and v not in self.allowed:
                raise UnknownIdentifierError(v, off)
            return Var(v)
        if v == "(":
            node = self.expr()
            self.expect(")")
            return node
        if v == "-":
            return neg(self.base())
        raise ParseError(f"unexpected token {v or 'end of input'!r}", off)


def parse(text: str, allowed_vars: Iterable[str] | None = None) -> Expr:
    """Parse ``text`` into an expression.

    Raises :class:`UnknownIdentifierError` for names outside
    ``allowed_vars`` (when given) and :class:`ParseError` otherwise.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, set(allowed_vars) if allowed_vars is not None else None)
    node = p.expr()
    kind, v, off = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing token {v!r}", off)
    return node


# ---------------------------------------------------------------------------
# printing

_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _atomic(e: Expr) -> bool:
    if isinstance(e, (Var, Const)):
        return True
    return isinstance(e, Unary) and e.op != "neg"


def to_string(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_string(e)) == e``."""
    if isinstance(e, Const):
        return repr(e.value) if not math.copysign(1.0, e.value) < 0 else f"(-{repr(-e.value)})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        inner = to_string(e.child)
        if e.op == "neg":
            return "-" + (inner if _atomic(e.child) else f"({inner})")
        return f"{e.op}({inner})"
    if isinstance(e, Binary):
        left = to_string(e.left)
        left = left if _atomic(e.left) else f"({left})"
        if e.op == "pow":
            return f"{left}^{int(e.right.value)}"  # type: ignore[attr-defined]
        right = to_string(e.right)
        right = right if _atomic(e.right) else f"({right})"
        return f"{left}{_SYMBOL[e.op]}{right}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation and differentiation

def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return variables(e.child)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def evaluate(e: Expr, binding: Mapping[str, float]) -> float:
    """Evaluate ``e`` in IEEE double precision."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(binding[e.name])
        except KeyError:
            raise ExprError(f"no value bound for variable {e.name!r}") from None
    if isinstance(e, Unary):
        a = evaluate(e.child, binding)
        try:
            return _UNARY_FN[e.op](a)
        except DomainError as exc:
            raise DomainError(str(exc), e) from None
    a = evaluate(e.left, binding)
    b = evaluate(e.right, binding)
    try:
        return _BINARY_FN[e.op](a, b)
    except DomainError as exc:
        raise DomainError(str(exc), e) from None


def derivative(e: Expr, v: str) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to variable ``v``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Unary):
        u = e.child
        du = derivative(u, v)
        if _is_const(du, 0.0):
            return ZERO
        op = e.op
        if op == "neg":
            return neg(du)
        if op == "sin":
            return mul(unary("cos", u), du)
        if op == "cos":
            return mul(neg(unary("sin", u)), du)
        if op == "tan":
            return div(du, powi(unary("cos", u), 2))
        if op == "exp":
            return mul(e, du)
        if op == "log":
            return div(du, u)
        if op == "sqrt":
            return div(du, mul(const(2.0), e))
        raise ExprError(op)
    assert isinstance(e, Binary)
    a, b = e.left, e.right
    if e.op == "pow":
        n = int(b.value)  # type: ignore[attr-defined]
        da = derivative(a, v)
        return mul(mul(const(n), powi(a, n - 1)), da)
    da = derivative(a, v)
    db = derivative(b, v)
    if e.op == "add":
        return add(da, db)
    if e.op == "sub":
        return sub(da, db)
    if e.op == "mul":
        return add(mul(da, b), mul(a, db))
    # quotient rule
    return div(sub(mul(da, b), mul(a, db)), powi(b, 2))


# ---------------------------------------------------------------------------
# compilation of expression batches into plain Python functions

_CODE_UNARY = {
    "neg": "(-{0})",
    "sin": "_sin({0})",
    "cos": "_cos({0})",
    "tan": "_tan({0})",
    "exp": "_exp({0})",
    "log": "_log({0})",
    "sqrt": "_sqrt({0})",
}

_CODE_BINARY = {
    "add": "({0} + {1})",
    "sub": "({0} - {1})",
    "mul": "({0} * {1})",
    "div": "_div({0}, {1})",
}


class CompiledBatch:
    """A batch of expressions compiled into one Python function.

    Calling the batch with a point (sequence of floats ordered like
    ``names``) returns a list of floats.  Shared subexpressions are
    evaluated once.  Domain failures are re-raised by the tree walker so
    that the error names the offending subexpression.
    """

    def __init__(self, exprs: Sequence[Expr], names: Sequence[str]):
        self.exprs = list(exprs)
        self.names = list(names)
        index = {n: i for i, n in enumerate(self.names)}
        lines: list[str] = []
        memo: dict[Expr, str] = {}

        def emit(e: Expr) -> str:
            if isinstance(e, Const):
                return repr(e.value) if e.value >= 0 else f"({e.value!r})"
            if isinstance(e, Var):
                if e.name not in index:
                    raise ExprError(f"variable {e.name!r} not among {self.names}")
                return f"_p[{index[e.name]}]"
            hit = memo.get(e)
            if hit is not None:
                return hit
            if isinstance(e, Unary):
                code = _CODE_UNARY[e.op].format(emit(e.child))
            elif e.op == "pow":  # type: ignore[union-attr]
                code = f"_powi({emit(e.left)}, {int(e.right.value)})"  # type: ignore[union-attr]
            else:
                code = _CODE_BINARY[e.op].format(emit(e.left), emit(e.right))  # type: ignore[union-attr]
            name = f"_t{len(memo)}"
            lines.append(f"    {name} = {code}")
            memo[e] = name
            return name

        outs = [emit(e) for e in self.exprs]
        src = "def _f(_p):\n" + "\n".join(lines) + ("\n" if lines else "")
        src += "    return [" + ", ".join(outs) + "]\n"
        scope = {
            "_sin": math.sin,
            "_cos": math.cos,
            "_tan": _tan,
            "_exp": _exp,
            "_log": _log,
            "_sqrt": _sqrt,
            "_div": _div,
            "_powi": _powi,
        }
        exec(compile(src, "<clairmap-expr>", "exec"), scope)
        self._fn = scope["_f"]

    def __call__(self, point: Sequence[float]) -> list[float]:
        try:
            return self._fn(point)
        except DomainError:
            binding = dict(zip(self.names, (float(x) for x in point)))
            for e in self.exprs:
                evaluate(e, binding)
            raise
