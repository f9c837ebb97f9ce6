"""A tiny closed expression language for weights and coefficient functions.

Grammar::

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | base ('^' exponent)?
    exponent := signed-number | '(' constant-expr ')'
    base     := number | 'x' | '(' expr ')' | 'exp(' expr ')' | 'ln(' expr ')'
              | 'piecewise(' (interval ':' expr ';')+ ')'
    interval := '[' number ',' (number | 'inf') ')'

Expressions are immutable trees.  :func:`evaluate` is vectorised over numpy
arrays and raises :class:`DomainError` instead of returning NaN.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "Expr", "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Exp",
    "Ln", "Piecewise", "X", "parse", "evaluate", "differentiate", "to_source",
    "simplify", "as_function", "is_constant", "breakpoints", "has_piecewise",
]

ArrayLike = Union[float, np.ndarray]


class Expr:
    """Base node.  Arithmetic operators build new (unsimplified) trees."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, _wrap(other))

    def __radd__(self, other):
        return Add(_wrap(other), self)

    def __sub__(self, other):
        return Sub(self, _wrap(other))

    def __rsub__(self, other):
        return Sub(_wrap(other), self)

    def __mul__(self, other):
        return Mul(self, _wrap(other))

    def __rmul__(self, other):
        return Mul(_wrap(other), self)

    def __truediv__(self, other):
        return Div(self, _wrap(other))

    def __rtruediv__(self, other):
        return Div(_wrap(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        return Pow(self, float(exponent))

    def __call__(self, x):
        return evaluate(self, x)

    def __str__(self):
        return to_source(self)


def _wrap(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Num(float(value))


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    pass


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: float


@dataclass(frozen=True, eq=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Ln(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Piecewise(Expr):
    """Pieces are ``(lo, hi, expr)`` on half-open ``[lo, hi)``, sorted and
    contiguous from 0 to inf."""

    pieces: tuple

    def __post_init__(self):
        _check_pieces(self.pieces)


X = Var()


def _check_pieces(pieces):
    if not pieces:
        raise ValueError("piecewise needs at least one piece")
    if pieces[0][0] != 0.0:
        raise ValueError("piecewise guards must start at 0")
    for (lo, hi, _), nxt in zip(pieces, pieces[1:] + ((math.inf, None, None),)):
        if not lo < hi:
            raise ValueError(f"empty piecewise interval [{lo}, {hi})")
        if hi != nxt[0]:
            raise ValueError("piecewise guards must be disjoint and contiguous")
    if pieces[-1][1] != math.inf:
        raise ValueError("piecewise guards must extend to inf")


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()\[\],:;]))"
)


@dataclass
class _Tok:
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    offset: int


def _tokenize(source: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(source)
    while True:
        while pos < n and source[pos].isspace():
            pos += 1
        if pos >= n:
            toks.append(_Tok("end", "", n))
            return toks
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(pos, "token", source)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, expected, tok=None):
        tok = tok or self.tok
        return ParseError(tok.offset, expected, self.source)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            raise self.error(f"'{text}'")

    def number(self) -> float:
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif self.accept("+"):
            pass
        if self.tok.kind != "num":
            raise self.error("number")
        value = float(self.tok.text)
        self.i += 1
        return sign * value

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error("operator or end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = Add(e, self.term())
            elif self.accept("-"):
                e = Sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            if self.accept("*"):
                e = Mul(e, self.factor())
            elif self.accept("/"):
                e = Div(e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        if self.accept("-"):
            return Neg(self.factor())
        base = self.base()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> float:
        if self.tok.kind == "op" and self.tok.text == "(":
            start = self.tok
            self.i += 1
            e = self.expr()
            self.expect(")")
            if not is_constant(e):
                raise self.error("constant exponent", start)
            return float(evaluate(e, 1.0))
        return self.number()

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.i += 1
            if tok.text == "x":
                return X
            if tok.text in ("exp", "ln"):
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Exp(arg) if tok.text == "exp" else Ln(arg)
            if tok.text == "piecewise":
                return self.piecewise()
            raise self.error("'x', 'exp', 'ln' or 'piecewise' (unbound identifier "
                             f"'{tok.text}')", tok)
        raise self.error("number, 'x', '(' or function")

    def piecewise(self) -> Expr:
        self.expect("(")
        pieces = []
        while True:
            start = self.tok
            self.expect("[")
            lo = self.number()
            self.expect(",")
            if self.tok.kind == "ident" and self.tok.text == "inf":
                self.i += 1
                hi = math.inf
            else:
                hi = self.number()
            self.expect(")")
            self.expect(":")
            e = self.expr()
            self.expect(";")
            pieces.append((lo, hi, e))
            if self.accept(")"):
                break
            if not (self.tok.kind == "op" and self.tok.text == "["):
                raise self.error("'[' or ')'")
        try:
            return Piecewise(tuple(pieces))
        except ValueError as exc:
            raise ParseError(start.offset, f"valid interval ({exc})", self.source) from None


def parse(source: str) -> Expr:
    """Parse ``source`` into an :class:`Expr`."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Evaluation

def evaluate(e: Expr, x: ArrayLike) -> ArrayLike:
    """Evaluate ``e`` at ``x`` (scalar or array, all entries > 0 expected).

    Overflow to ``inf`` is allowed; NaN never escapes.
    """
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    with np.errstate(all="ignore"):
        out = _ev(e, xa)
    out = np.broadcast_to(out, xa.shape)
    bad = np.isnan(out)
    if bad.any():
        raise DomainError(float(xa[bad][0]), to_source(e), "undefined value (overflow)")
    if scalar:
        return float(out[0])
    return np.array(out, dtype=float)


def _ev(e: Expr, x: np.ndarray) -> np.ndarray:
    t = type(e)
    if t is Num:
        return np.full(x.shape, e.value)
    if t is Var:
        return x
    if t is Neg:
        return -_ev(e.arg, x)
    if t is Add:
        return _ev(e.left, x) + _ev(e.right, x)
    if t is Sub:
        return _ev(e.left, x) - _ev(e.right, x)
    if t is Mul:
        return _ev(e.left, x) * _ev(e.right, x)
    if t is Div:
        den = _ev(e.right, x)
        zero = den == 0
        if zero.any():
            raise DomainError(float(x[zero][0]), to_source(e), "division by zero")
        return _ev(e.left, x) / den
    if t is Pow:
        base = _ev(e.base, x)
        c = e.exponent
        if c != int(c):
            neg = base < 0
            if neg.any():
                raise DomainError(float(x[neg][0]), to_source(e),
                                  "negative base with non-integer exponent")
        if c < 0:
            zero = base == 0
            if zero.any():
                raise DomainError(float(x[zero][0]), to_source(e), "division by zero")
        return np.power(base, c)
    if t is Exp:
        return np.exp(_ev(e.arg, x))
    if t is Ln:
        arg = _ev(e.arg, x)
        bad = arg <= 0
        if bad.any():
            raise DomainError(float(x[bad][0]), to_source(e), "logarithm of non-positive value")
        return np.log(arg)
    if t is Piecewise:
        out = np.empty(x.shape)
        for lo, hi, sub in e.pieces:
            mask = (x >= lo) & (x < hi)
            if mask.any():
                out[mask] = _ev(sub, x[mask])
        below = x < 0
        if below.any():
            raise DomainError(float(x[below][0]), to_source(e), "outside piecewise guards")
        return out
    raise TypeError(f"not an expression node: {e!r}")


def as_function(f) -> Callable[[np.ndarray], np.ndarray]:
    """Return a vectorised callable for an Expr or pass a callable through."""
    if isinstance(f, Expr):
        return lambda x: evaluate(f, x)
    if callable(f):
        return f
    c = float(f)
    return lambda x: np.full(np.shape(x), c)


def is_constant(e: Expr) -> bool:
    if isinstance(e, Var):
        return False
    if isinstance(e, Num):
        return True
    if isinstance(e, Piecewise):
        return False
    return all(is_constant(c) for c in _children(e))


def has_piecewise(e: Expr) -> bool:
    if isinstance(e, Piecewise):
        return True
    return any(has_piecewise(c) for c in _children(e))


def breakpoints(e: Expr) -> list[float]:
    """Finite piecewise boundaries appearing anywhere in ``e``."""
    pts = set()

    def walk(node):
        if isinstance(node, Piecewise):
            for lo, hi, sub in node.pieces:
                if 0 < lo < math.inf:
                    pts.add(lo)
                walk(sub)
        else:
            for c in _children(node):
                walk(c)

    walk(e)
    return sorted(pts)


def _children(e: Expr) -> tuple:
    if isinstance(e, (Neg, Exp, Ln)):
        return (e.arg,)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return (e.left, e.right)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Piecewise):
        return tuple(p[2] for p in e.pieces)
    return ()


# ---------------------------------------------------------------------------
# Printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _fmt_number(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite constant {v}")
    if v == int(v) and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return s


def _prec(e: Expr) -> int:
    if isinstance(e, Num) and e.value < 0:
        return 3
    return _PREC.get(type(e), 5)


def to_source(e: Expr) -> str:
    """Print ``e`` in the input grammar; ``parse(to_source(e))`` is equivalent."""
    t = type(e)
    if t is Num:
        return _fmt_number(e.value)
    if t is Var:
        return "x"
    if t is Neg:
        return "-" + _paren(e.arg, 3)
    if t in (Add, Sub, Mul, Div):
        p = _PREC[t]
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[t]
        left = _paren(e.left, p)
        right = _paren(e.right, p + 1)
        if isinstance(e.right, Neg) or (isinstance(e.right, Num) and e.right.value < 0):
            right = "(" + to_source(e.right) + ")"
        return left + op + right
    if t is Pow:
        c = e.exponent
        exp = _fmt_number(c) if c >= 0 else "(" + _fmt_number(c) + ")"
        return _paren(e.base, 5) + "^" + exp
    if t is Exp:
        return "exp(" + to_source(e.arg) + ")"
    if t is Ln:
        return "ln(" + to_source(e.arg) + ")"
    if t is Piecewise:
        parts = []
        for lo, hi, sub in e.pieces:
            hs = "inf" if hi == math.inf else _fmt_number(hi)
            parts.append(f"[{_fmt_number(lo)},{hs}):{to_source(sub)};")
        return "piecewise(" + "".join(parts) + ")"
    raise TypeError(f"not an expression node: {e!r}")


def _paren(e: Expr, min_prec: int) -> str:
    s = to_source(e)
    return s if _prec(e) >= min_prec else "(" + s + ")"


# ---------------------------------------------------------------------------
# Simplification (constant folding and unit/zero identities only)

def _num(e) -> float | None:
    return e.value if isinstance(e, Num) else None


def simplify(e: Expr) -> Expr:
    t = type(e)
    if t in (Num, Var):
        return e
    if t is Neg:
        a = simplify(e.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if t is Add or t is Sub:
        a, b = simplify(e.left), simplify(e.right)
        na, nb = _num(a), _num(b)
        if na is not None and nb is not None:
            return Num(na + nb if t is Add else na - nb)
        if nb == 0:
            return a
        if na == 0:
            return b if t is Add else simplify(Neg(b))
        if t is Add and isinstance(b, Neg):
            return Sub(a, b.arg)
        if t is Sub and isinstance(b, Neg):
            return Add(a, b.arg)
        return t(a, b)
    if t is Mul:
        a, b = simplify(e.left), simplify(e.right)
        na, nb = _num(a), _num(b)
        if na is not None and nb is not None:
            return Num(na * nb)
        if na == 0 or nb == 0:
            return Num(0.0)
        if na == 1:
            return b
        if nb == 1:
            return a
        if na == -1:
            return simplify(Neg(b))
        if nb == -1:
            return simplify(Neg(a))
        if nb is not None:
            a, b = b, a
        if isinstance(b, Div) and _num(b.left) == 1:
            return simplify(Div(a, b.right))
        if isinstance(a, Div) and _num(a.left) == 1:
            return simplify(Div(b, a.right))
        return Mul(a, b)
    if t is Div:
        a, b = simplify(e.left), simplify(e.right)
        na, nb = _num(a), _num(b)
        if na is not None and nb is not None and nb != 0:
            return Num(na / nb)
        if na == 0 and nb != 0:
            return Num(0.0)
        if nb == 1:
            return a
        if a == b:
            return Num(1.0)
        return Div(a, b)
    if t is Pow:
        a = simplify(e.base)
        if e.exponent == 0:
            return Num(1.0)
        if e.exponent == 1:
            return a
        if isinstance(a, Num):
            try:
                return Num(float(evaluate(Pow(a, e.exponent), 1.0)))
            except DomainError:
                return Pow(a, e.exponent)
        if isinstance(a, Pow):
            # (y^a)^b = y^(ab) holds for y > 0; only fold when the inner
            # base is x, which is positive on the whole domain
            if isinstance(a.base, Var):
                return simplify(Pow(a.base, a.exponent * e.exponent))
        return Pow(a, e.exponent)
    if t is Exp:
        a = simplify(e.arg)
        if isinstance(a, Num):
            return Num(math.exp(a.value))
        return Exp(a)
    if t is Ln:
        a = simplify(e.arg)
        if isinstance(a, Num) and a.value > 0:
            return Num(math.log(a.value))
        return Ln(a)
    if t is Piecewise:
        return Piecewise(tuple((lo, hi, simplify(s)) for lo, hi, s in e.pieces))
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation

def differentiate(e: Expr) -> Expr:
    """Symbolic d/dx of ``e``.  Piecewise nodes are rejected."""
    if has_piecewise(e):
        raise ValueError("cannot differentiate a piecewise expression")
    return simplify(_d(e))


def _d(e: Expr) -> Expr:
    t = type(e)
    if t is Num:
        return Num(0.0)
    if t is Var:
        return Num(1.0)
    if t is Neg:
        return Neg(_d(e.arg))
    if t is Add:
        return Add(_d(e.left), _d(e.right))
    if t is Sub:
        return Sub(_d(e.left), _d(e.right))
    if t is Mul:
        return Add(Mul(_d(e.left), e.right), Mul(e.left, _d(e.right)))
    if t is Div:
        num = Sub(Mul(_d(e.left), e.right), Mul(e.left, _d(e.right)))
        return Div(num, Pow(e.right, 2.0))
    if t is Pow:
        c = e.exponent
        return Mul(Mul(Num(c), Pow(e.base, c - 1.0)), _d(e.base))
    if t is Exp:
        return Mul(e, _d(e.arg))
    if t is Ln:
        return Div(_d(e.arg), e.arg)
    raise TypeError(f"cannot differentiate {e!r}")
