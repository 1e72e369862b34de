"""Tiny expression language for functions on [0, 1].

Functions are entered as text (CLI flags, config files) and evaluated
pointwise to complex values.  The grammar:

    expr     := ['+'|'-'] term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' integer)?
    base     := number | 'i' | 'pi' | 'x' | name '(' args ')' | '(' expr ')'
    args     := expr (',' expr)*

Recognised function names: exp, log, sqrt, sin, cos, frac, indicator.
`indicator(a, b)` is the half-open indicator 1_[a,b)(x) of the ambient
variable; its bounds must be constants with 0 <= a < b <= 1.  Numbers are
doubles (decimals, scientific notation); `3/7` goes through the division
node and lands on the correctly rounded double.  `pi` is the usual constant.

Printing is the inverse of parsing up to a fixed point:
``to_text(parse(to_text(e))) == to_text(e)`` and evaluation of the
round-tripped tree is bit-for-bit identical, which lets manifests embed
functions as plain text.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Indicator",
    "ExprSyntaxError",
    "ExprDomainError",
    "parse",
    "to_text",
    "evaluate",
    "evaluate_many",
    "breakpoints",
    "is_constant",
]


class ExprSyntaxError(ValueError):
    """Raised on malformed input; carries the byte offset of the failure."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"syntax error at offset {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class ExprDomainError(ValueError):
    """Raised when evaluation leaves the domain (log of a non-positive
    real, division by zero, fractional part of a non-real, ...)."""


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True)
class Var(Expr):
    pass


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Call(Expr):
    name: str  # exp, log, sqrt, sin, cos, frac
    arg: Expr


@dataclass(frozen=True)
class Indicator(Expr):
    lo: float
    hi: float


_FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "frac")


# ---------------------------------------------------------------------------
# lexer

_OPS = set("+-*/^(),")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Returns (kind, lexeme, offset) triples; kind in {num, name, op}."""
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c in _OPS:
            toks.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            lexeme = text[i:j]
            try:
                float(lexeme)
            except ValueError:
                raise ExprSyntaxError(i, f"bad number {lexeme!r}")
            toks.append(("num", lexeme, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("name", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(i, f"unexpected character {c!r}")
    return toks


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def _peek(self):
        if self.pos < len(self.toks):
            return self.toks[self.pos]
        return ("end", "", len(self.text))

    def _next(self):
        tok = self._peek()
        self.pos += 1
        return tok

    def _expect_op(self, op: str):
        kind, lexeme, off = self._next()
        if kind != "op" or lexeme != op:
            raise ExprSyntaxError(off, f"expected {op!r}")

    def parse(self) -> Expr:
        e = self.expr()
        kind, lexeme, off = self._peek()
        if kind != "end":
            raise ExprSyntaxError(off, f"unexpected {lexeme!r}")
        return e

    def expr(self) -> Expr:
        kind, lexeme, _ = self._peek()
        negate = False
        if kind == "op" and lexeme in "+-":
            self._next()
            negate = lexeme == "-"
        e = self.term()
        if negate:
            e = Neg(e)
        while True:
            kind, lexeme, _ = self._peek()
            if kind == "op" and lexeme in "+-":
                self._next()
                e = BinOp(lexeme, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            kind, lexeme, _ = self._peek()
            if kind == "op" and lexeme in "*/":
                self._next()
                e = BinOp(lexeme, e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        e = self.base()
        kind, lexeme, _ = self._peek()
        if kind == "op" and lexeme == "^":
            self._next()
            e = Pow(e, self._integer())
        return e

    def _integer(self) -> int:
        kind, lexeme, off = self._next()
        sign = 1
        if kind == "op" and lexeme == "-":
            sign = -1
            kind, lexeme, off = self._next()
        if kind != "num" or not lexeme.isdigit():
            raise ExprSyntaxError(off, "expected integer exponent")
        return sign * int(lexeme)

    def base(self) -> Expr:
        kind, lexeme, off = self._next()
        if kind == "num":
            return Const(complex(float(lexeme)))
        if kind == "op" and lexeme == "(":
            e = self.expr()
            self._expect_op(")")
            return e
        if kind == "name":
            if lexeme == "x":
                return Var()
            if lexeme == "i":
                return Const(1j)
            if lexeme == "pi":
                return Const(complex(math.pi))
            if lexeme == "indicator":
                return self._indicator(off)
            if lexeme in _FUNCTIONS:
                self._expect_op("(")
                arg = self.expr()
                self._expect_op(")")
                return Call(lexeme, arg)
            raise ExprSyntaxError(off, f"unknown name {lexeme!r}")
        raise ExprSyntaxError(off, "expected operand")

    def _indicator(self, off: int) -> Expr:
        self._expect_op("(")
        lo_expr = self.expr()
        self._expect_op(",")
        hi_expr = self.expr()
        self._expect_op(")")
        lo = _constant_real(lo_expr, off, "indicator lower bound")
        hi = _constant_real(hi_expr, off, "indicator upper bound")
        if not (0.0 <= lo < hi <= 1.0):
            raise ExprSyntaxError(
                off, f"indicator bounds must satisfy 0 <= a < b <= 1, got ({lo}, {hi})"
            )
        return Indicator(lo, hi)


def _constant_real(e: Expr, off: int, what: str) -> float:
    if not is_constant(e):
        raise ExprSyntaxError(off, f"{what} must be constant")
    v = evaluate(e, 0.0)
    if v.imag != 0.0:
        raise ExprSyntaxError(off, f"{what} must be real")
    return v.real


def parse(text: str) -> Expr:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printer

def _fmt_real(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite constant {v!r}")
    return repr(v)


def _print_const(c: complex) -> str:
    re, im = c.real, c.imag
    if im == 0.0:
        return _fmt_real(re)
    if re == 0.0:
        if im == 1.0:
            return "i"
        return f"{_fmt_real(im)} * i"
    return f"({_fmt_real(re)} + {_fmt_real(im)} * i)"


# precedence levels: sums 1, products 2, powers 3, atoms 4
def _render(e: Expr, min_prec: int) -> str:
    if isinstance(e, Const):
        s = _print_const(e.value)
        prec = 1 if (s.startswith("-") or " " in s and not s.startswith("(")) else 4
        return f"({s})" if prec < min_prec else s
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Indicator):
        return f"indicator({_fmt_real(e.lo)}, {_fmt_real(e.hi)})"
    if isinstance(e, Call):
        return f"{e.name}({_render(e.arg, 1)})"
    if isinstance(e, Pow):
        s = f"{_render(e.base, 4)}^{e.exponent}"
        return f"({s})" if min_prec > 3 else s
    if isinstance(e, Neg):
        s = f"-{_render(e.arg, 2)}"
        return f"({s})" if min_prec > 1 else s
    if isinstance(e, BinOp):
        prec = 1 if e.op in "+-" else 2
        s = f"{_render(e.left, prec)} {e.op} {_render(e.right, prec + 1)}"
        return f"({s})" if min_prec > prec else s
    raise TypeError(f"not an Expr: {e!r}")


def to_text(e: Expr) -> str:
    return _render(e, 1)


# ---------------------------------------------------------------------------
# evaluation

def _powi(z: complex, n: int) -> complex:
    if n < 0:
        if z == 0:
            raise ExprDomainError("zero raised to a negative power")
        return 1.0 / _powi(z, -n)
    result = complex(1.0)
    base = z
    while n:
        if n & 1:
            result = result * base
        base = base * base
        n >>= 1
    return result


def evaluate(e: Expr, x: float) -> complex:
    """Evaluates at a single point of [0, 1] in double precision."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"evaluation point {x!r} outside [0, 1]")
    return _eval(e, x)


def _eval(e: Expr, x: float) -> complex:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return complex(x)
    if isinstance(e, Indicator):
        return complex(1.0 if e.lo <= x < e.hi else 0.0)
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            raise ExprDomainError("division by zero")
        return a / b
    if isinstance(e, Pow):
        return _powi(_eval(e.base, x), e.exponent)
    if isinstance(e, Call):
        v = _eval(e.arg, x)
        if e.name == "exp":
            return cmath.exp(v)
        if e.name == "sin":
            return cmath.sin(v)
        if e.name == "cos":
            return cmath.cos(v)
        if e.name == "log":
            if v.imag == 0.0 and v.real <= 0.0:
                raise ExprDomainError(f"log of non-positive real {v.real!r}")
            return cmath.log(v)
        if e.name == "sqrt":
            if v.imag == 0.0 and v.real < 0.0:
                raise ExprDomainError(f"sqrt of negative real {v.real!r}")
            return cmath.sqrt(v)
        if e.name == "frac":
            if v.imag != 0.0:
                raise ExprDomainError("frac of a non-real value")
            return complex(v.real - math.floor(v.real))
        raise TypeError(f"unknown function {e.name!r}")
    raise TypeError(f"not an Expr: {e!r}")


def evaluate_many(e: Expr, xs: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; same domain rules as `evaluate`.

    Agrees with the scalar path to within a couple of ulps (numpy and the
    C library may round transcendentals differently); exact for the
    arithmetic-only fragment.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise ValueError("evaluation points outside [0, 1]")
    return _eval_many(e, xs)


def _eval_many(e: Expr, xs: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(xs.shape, e.value, dtype=np.complex128)
    if isinstance(e, Var):
        return xs.astype(np.complex128)
    if isinstance(e, Indicator):
        return ((xs >= e.lo) & (xs < e.hi)).astype(np.complex128)
    if isinstance(e, Neg):
        return -_eval_many(e.arg, xs)
    if isinstance(e, BinOp):
        a = _eval_many(e.left, xs)
        b = _eval_many(e.right, xs)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(b == 0):
            raise ExprDomainError("division by zero")
        return a / b
    if isinstance(e, Pow):
        base = _eval_many(e.base, xs)
        n = e.exponent
        if n < 0:
            if np.any(base == 0):
                raise ExprDomainError("zero raised to a negative power")
            return 1.0 / _powi_many(base, -n)
        return _powi_many(base, n)
    if isinstance(e, Call):
        v = _eval_many(e.arg, xs)
        if e.name == "exp":
            return np.exp(v)
        if e.name == "sin":
            return np.sin(v)
        if e.name == "cos":
            return np.cos(v)
        if e.name == "log":
            if np.any((v.imag == 0.0) & (v.real <= 0.0)):
                raise ExprDomainError("log of a non-positive real")
            return np.log(v)
        if e.name == "sqrt":
            if np.any((v.imag == 0.0) & (v.real < 0.0)):
                raise ExprDomainError("sqrt of a negative real")
            return np.sqrt(v)
        if e.name == "frac":
            if np.any(v.imag != 0.0):
                raise ExprDomainError("frac of a non-real value")
            r = v.real
            return (r - np.floor(r)).astype(np.complex128)
        raise TypeError(f"unknown function {e.name!r}")
    raise TypeError(f"not an Expr: {e!r}")


def _powi_many(z: np.ndarray, n: int) -> np.ndarray:
    result = np.ones_like(z)
    base = z
    while n:
        if n & 1:
            result = result * base
        base = base * base
        n >>= 1
    return result


# ---------------------------------------------------------------------------
# structure queries

def breakpoints(e: Expr) -> list[float]:
    """Interior jump locations contributed by indicator factors, sorted.

    Only indicators are counted; smooth factors contribute none.  Used to
    size measure-estimate tolerances.
    """
    pts: set[float] = set()
    _collect_breakpoints(e, pts)
    return sorted(p for p in pts if 0.0 < p < 1.0)


def _collect_breakpoints(e: Expr, out: set) -> None:
    if isinstance(e, Indicator):
        out.add(e.lo)
        out.add(e.hi)
    elif isinstance(e, Neg):
        _collect_breakpoints(e.arg, out)
    elif isinstance(e, BinOp):
        _collect_breakpoints(e.left, out)
        _collect_breakpoints(e.right, out)
    elif isinstance(e, Pow):
        _collect_breakpoints(e.base, out)
    elif isinstance(e, Call):
        _collect_breakpoints(e.arg, out)


def is_constant(e: Expr) -> bool:
    if isinstance(e, (Var, Indicator)):
        return False
    if isinstance(e, Const):
        return True
    if isinstance(e, Neg):
        return is_constant(e.arg)
    if isinstance(e, BinOp):
        return is_constant(e.left) and is_constant(e.right)
    if isinstance(e, Pow):
        return is_constant(e.base)
    if isinstance(e, Call):
        return is_constant(e.arg)
    raise TypeError(f"not an Expr: {e!r}")
