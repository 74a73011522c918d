"""Text form of QExpr.

Grammar (left-associative binary operators, ``^`` binds tightest, a leading
unary minus applies to the first product of a sum)::

    sum    := ['-'] term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ['^' ['-'] INT]
    atom   := INT | 'q[' INT [';' INT] ']' | 'zeta(' SINT ',' SINT ')' | 'z'
            | 'sqrt(' sum ')' | 'conj(' sum ')' | '(' sum ')'

``to_text`` inserts exactly the parentheses needed so that
``parse(to_text(e)) == e`` holds structurally for every expression built with
the smart constructors.
"""

from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ParseError
from .qexpr import (
    DEFAULT_LEVEL,
    Add,
    Conj,
    Mul,
    Neg,
    Pow,
    QExpr,
    QInt,
    Rational,
    Sqrt,
    Zeta,
    ZSym,
    add,
    conj,
    mul,
    neg,
    power,
    qint,
    sqrt,
    z,
    zeta,
)

# rendering levels, loosest to tightest
_SUM, _PROD, _POW, _ATOM = range(4)


def _level(e: QExpr) -> int:
    if isinstance(e, (Add, Neg)):
        return _SUM
    if isinstance(e, Mul) or (isinstance(e, Pow) and e.k == -1):
        return _PROD
    if isinstance(e, Pow):
        return _POW
    return _ATOM


def _wrap(e: QExpr, need: int) -> str:
    s = _render(e)
    return f"({s})" if _level(e) < need else s


def _render_rational(v: Fraction) -> str:
    if v.denominator == 1 and v >= 0:
        return str(v.numerator)
    return f"({v.numerator}/{v.denominator})" if v.denominator != 1 else f"({v.numerator})"


def _render(e: QExpr) -> str:
    if isinstance(e, Rational):
        return _render_rational(e.value)
    if isinstance(e, QInt):
        return f"q[{e.n}]" if e.level == DEFAULT_LEVEL else f"q[{e.n};{e.level}]"
    if isinstance(e, Zeta):
        return f"zeta({e.l},{e.k})"
    if isinstance(e, ZSym):
        return "z"
    if isinstance(e, Sqrt):
        return f"sqrt({_render(e.arg)})"
    if isinstance(e, Conj):
        return f"conj({_render(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _PROD)
    if isinstance(e, Add):
        left = _render(e.a)
        if isinstance(e.b, Neg):
            return f"{left}-{_wrap(e.b.arg, _PROD)}"
        if isinstance(e.b, Rational) and e.b.value < 0:
            return f"{left}-{_render_rational(-e.b.value)}"
        return f"{left}+{_wrap(e.b, _PROD)}"
    if isinstance(e, Mul):
        left = _wrap(e.a, _PROD)
        if isinstance(e.b, Pow) and e.b.k == -1:
            return f"{left}/{_wrap(e.b.base, _POW)}"
        return f"{left}*{_wrap(e.b, _POW)}"
    if isinstance(e, Pow):
        if e.k == -1:
            return f"1/{_wrap(e.base, _POW)}"
        return f"{_wrap(e.base, _ATOM)}^{e.k}"
    raise TypeError(f"cannot render {type(e).__name__}")


def to_text(e: QExpr) -> str:
    """Serialize an expression; inverse of :func:`parse`."""
    return _render(e)


_TOKEN = re.compile(r"\s*(?:(\d+)|(sqrt|conj|zeta|q|z)|(.))")


def _tokenize(text: str) -> list[tuple[str, str]]:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - regex always matches one char
            raise ParseError(f"bad input at {pos}")
        if m.group(1):
            toks.append(("int", m.group(1)))
        elif m.group(2):
            toks.append(("name", m.group(2)))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()[],;":
                raise ParseError(f"unexpected character {ch!r} at {m.start(3)} in {text!r}")
            toks.append(("op", ch))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "")

    def take(self, kind=None, value=None):
        tok = self.peek()
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value or kind
            raise ParseError(f"expected {want!r}, found {tok[1] or 'end'!r} in {self.text!r}")
        self.i += 1
        return tok

    def accept(self, value) -> bool:
        if self.peek() == ("op", value):
            self.i += 1
            return True
        return False

    def sint(self) -> int:
        sign = -1 if self.accept("-") else 1
        return sign * int(self.take("int")[1])

    def sum(self) -> QExpr:
        if self.accept("-"):
            acc = neg(self.term())
        else:
            acc = self.term()
        while True:
            if self.accept("+"):
                acc = add(acc, self.term())
            elif self.accept("-"):
                acc = add(acc, neg(self.term()))
            else:
                return acc

    def term(self) -> QExpr:
        acc = self.factor()
        while True:
            if self.accept("*"):
                acc = mul(acc, self.factor())
            elif self.accept("/"):
                acc = mul(acc, power(self.factor(), -1))
            else:
                return acc

    def factor(self) -> QExpr:
        base = self.atom()
        if self.accept("^"):
            return power(base, self.sint())
        return base

    def atom(self) -> QExpr:
        kind, val = self.peek()
        if kind == "int":
            self.i += 1
            return Rational(int(val))
        if kind == "name":
            self.i += 1
            if val == "z":
                return z()
            if val == "q":
                self.take("op", "[")
                n = self.sint()
                level = DEFAULT_LEVEL
                if self.accept(";"):
                    level = self.sint()
                self.take("op", "]")
                try:
                    return qint(n, level)
                except ValueError as exc:
                    raise ParseError(str(exc)) from None
            if val == "zeta":
                self.take("op", "(")
                l = self.sint()
                self.take("op", ",")
                k = self.sint()
                self.take("op", ")")
                try:
                    return zeta(l, k)
                except ValueError as exc:
                    raise ParseError(str(exc)) from None
            self.take("op", "(")
            inner = self.sum()
            self.take("op", ")")
            return sqrt(inner) if val == "sqrt" else conj(inner)
        if self.accept("("):
            inner = self.sum()
            self.take("op", ")")
            return inner
        raise ParseError(f"unexpected {val or 'end of input'!r} in {self.text!r}")


def parse(text: str) -> QExpr:
    """Parse the text form of an expression."""
    p = _Parser(text)
    if not p.toks:
        raise ParseError("empty expression")
    e = p.sum()
    if p.i != len(p.toks):
        raise ParseError(f"trailing input {p.toks[p.i][1]!r} in {text!r}")
    return e
