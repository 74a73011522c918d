"""Exact scalar expressions over q = ζ₂₄ and the distinguished number z.

Expressions are immutable DAG nodes.  Subexpressions may be shared freely
(linear completion builds large shared DAGs), so evaluation memoizes by node
identity and never recurses on the Python stack.

Construction goes through smart constructors that fold rational constants
(and the trivial identities 0 + x, 1·x, 0·x).  No other simplification is
performed: equality of values is decided by certified evaluation.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from numbers import Integral
from typing import Iterable

from flint import acb, arb, fmpq

from ..errors import BranchCutError, DivisionByZeroError
from .scalar import DEFAULT_PRECISION, Scalar, working_precision

DEFAULT_LEVEL = 24  # q = ζ_24


class QExpr:
    """Base class of expression nodes."""

    __slots__ = ("_hash",)

    # subclasses define `children` and `_key`
    children: tuple["QExpr", ...] = ()

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((type(self).__name__, self._key(), tuple(hash(c) for c in self.children)))
            self._hash = h
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        if self._key() != other._key():
            return False
        return all(a == b for a, b in zip(self.children, other.children))

    # -- operator sugar -----------------------------------------------------
    def __add__(self, other):
        o = lift(other)
        return NotImplemented if o is None else add(self, o)

    def __radd__(self, other):
        o = lift(other)
        return NotImplemented if o is None else add(o, self)

    def __sub__(self, other):
        o = lift(other)
        return NotImplemented if o is None else add(self, neg(o))

    def __rsub__(self, other):
        o = lift(other)
        return NotImplemented if o is None else add(o, neg(self))

    def __mul__(self, other):
        o = lift(other)
        return NotImplemented if o is None else mul(self, o)

    def __rmul__(self, other):
        o = lift(other)
        return NotImplemented if o is None else mul(o, self)

    def __truediv__(self, other):
        o = lift(other)
        return NotImplemented if o is None else mul(self, power(o, -1))

    def __rtruediv__(self, other):
        o = lift(other)
        return NotImplemented if o is None else mul(o, power(self, -1))

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if not isinstance(k, Integral):
            return NotImplemented
        return power(self, int(k))

    def conj(self) -> "QExpr":
        return conj(self)

    def sqrt(self) -> "QExpr":
        return sqrt(self)

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, prec: int = DEFAULT_PRECISION) -> Scalar:
        return evaluate(self, prec)

    def __scalar__(self, prec: int) -> Scalar:
        return evaluate(self, prec)

    def __repr__(self) -> str:
        from .text import to_text

        return f"QExpr({to_text(self)!r})"

    def __str__(self) -> str:
        from .text import to_text

        return to_text(self)


def _init(node: QExpr) -> None:
    node._hash = None


class Rational(QExpr):
    __slots__ = ("value",)

    def __init__(self, value):
        _init(self)
        self.value = Fraction(value)

    def _key(self):
        return (self.value,)


class QInt(QExpr):
    """The quantum integer [n]_q at q = ζ_level."""

    __slots__ = ("n", "level")

    def __init__(self, n: int, level: int = DEFAULT_LEVEL):
        _init(self)
        self.n, self.level = int(n), int(level)

    def _key(self):
        return (self.n, self.level)


class Zeta(QExpr):
    """The root of unity e^{2πik/l}."""

    __slots__ = ("l", "k")

    def __init__(self, l: int, k: int):
        _init(self)
        self.l, self.k = int(l), int(k)

    def _key(self):
        return (self.l, self.k)


class ZSym(QExpr):
    """The distinguished root z of 9x¹⁶ − 14x⁸ + 9."""

    __slots__ = ()

    def __init__(self):
        _init(self)

    def _key(self):
        return ()


class _Unary(QExpr):
    __slots__ = ("arg",)

    def __init__(self, arg: QExpr):
        _init(self)
        self.arg = arg

    @property
    def children(self):
        return (self.arg,)

    def _key(self):
        return ()


class Sqrt(_Unary):
    __slots__ = ()


class Conj(_Unary):
    __slots__ = ()


class Neg(_Unary):
    __slots__ = ()


class Pow(QExpr):
    __slots__ = ("base", "k")

    def __init__(self, base: QExpr, k: int):
        _init(self)
        self.base, self.k = base, int(k)

    @property
    def children(self):
        return (self.base,)

    def _key(self):
        return (self.k,)


class _Binary(QExpr):
    __slots__ = ("a", "b")

    def __init__(self, a: QExpr, b: QExpr):
        _init(self)
        self.a, self.b = a, b

    @property
    def children(self):
        return (self.a, self.b)

    def _key(self):
        return ()


class Add(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


# ---------------------------------------------------------------------------
# smart constructors
# ---------------------------------------------------------------------------

ZERO = Rational(0)
ONE = Rational(1)


def lift(x) -> QExpr | None:
    """Wrap Python integers and fractions as rational constants."""
    if isinstance(x, QExpr):
        return x
    if isinstance(x, (Integral, Fraction)):
        return Rational(x)
    return None


def rational(p, q=1) -> QExpr:
    return Rational(Fraction(p, q))


def _is_rat(e: QExpr, value=None) -> bool:
    return isinstance(e, Rational) and (value is None or e.value == value)


def add(a: QExpr, b: QExpr) -> QExpr:
    if _is_rat(a) and _is_rat(b):
        return Rational(a.value + b.value)
    if _is_rat(a, 0):
        return b
    if _is_rat(b, 0):
        return a
    return Add(a, b)


def mul(a: QExpr, b: QExpr) -> QExpr:
    if _is_rat(a) and _is_rat(b):
        return Rational(a.value * b.value)
    if _is_rat(a, 0) or _is_rat(b, 0):
        return ZERO
    if _is_rat(a, 1):
        return b
    if _is_rat(b, 1):
        return a
    return Mul(a, b)


def neg(a: QExpr) -> QExpr:
    if _is_rat(a):
        return Rational(-a.value)
    return Neg(a)


def power(a: QExpr, k: int) -> QExpr:
    k = int(k)
    if _is_rat(a):
        if a.value == 0 and k < 0:
            raise DivisionByZeroError("rational zero raised to a negative power")
        return Rational(a.value**k)
    if k == 1:
        return a
    return Pow(a, k)


def inv(a: QExpr) -> QExpr:
    return power(a, -1)


def sqrt(a) -> QExpr:
    return Sqrt(lift(a))


def conj(a) -> QExpr:
    a = lift(a)
    if _is_rat(a):
        return a
    return Conj(a)


def qint(n: int, level: int = DEFAULT_LEVEL) -> QExpr:
    """[n]_q = (qⁿ − q⁻ⁿ)/(q − q⁻¹) at q = ζ_level (default ζ₂₄)."""
    if n < 0:
        raise ValueError("qint expects n >= 0")
    return QInt(n, level)


def zeta(l: int, k: int = 1) -> QExpr:
    """e^{2πik/l}."""
    if l < 1:
        raise ValueError("zeta expects l >= 1")
    return Zeta(l, k)


Z = ZSym()


def z() -> QExpr:
    return Z


def qsum(terms: Iterable[QExpr]) -> QExpr:
    """Balanced sum (keeps DAG depth logarithmic in the number of terms)."""
    items = [lift(t) for t in terms]
    if not items:
        return ZERO
    while len(items) > 1:
        nxt = [add(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def real_part(e: QExpr) -> QExpr:
    return mul(Rational(Fraction(1, 2)), add(e, conj(e)))


def imag_part(e: QExpr) -> QExpr:
    # (e - conj e) / (2i) = (e - conj e) * (-i/2)
    return mul(mul(Rational(Fraction(-1, 2)), Zeta(4, 1)), add(e, neg(conj(e))))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _qint_ball(n: int, level: int, prec: int) -> acb:
    with working_precision(prec):
        return acb(arb.sin_pi_fmpq(fmpq(2 * n, level)) / arb.sin_pi_fmpq(fmpq(2, level)))


@lru_cache(maxsize=4096)
def _zeta_ball(l: int, k: int, prec: int) -> acb:
    with working_precision(prec):
        return acb(fmpq(2 * k, l)).exp_pi_i()


def _leaf(node: QExpr, prec: int) -> acb:
    if isinstance(node, Rational):
        return acb(fmpq(node.value.numerator, node.value.denominator))
    if isinstance(node, QInt):
        return _qint_ball(node.n, node.level, prec)
    if isinstance(node, Zeta):
        return _zeta_ball(node.l, node.k, prec)
    if isinstance(node, ZSym):
        from .zroot import z_closed_form

        return z_closed_form(prec)
    raise TypeError(f"unknown leaf {type(node).__name__}")


def _apply(node: QExpr, vals: list[acb], prec: int) -> acb:
    if isinstance(node, Add):
        return vals[0] + vals[1]
    if isinstance(node, Mul):
        return vals[0] * vals[1]
    if isinstance(node, Neg):
        return -vals[0]
    if isinstance(node, Conj):
        return vals[0].conjugate()
    if isinstance(node, Pow):
        base = vals[0]
        if node.k < 0:
            if not base.abs_lower() > 0:
                raise DivisionByZeroError(f"inverse of an enclosure containing zero in {node}")
            return (1 / base) ** (-node.k)
        return base**node.k
    if isinstance(node, Sqrt):
        v = vals[0]
        if v.is_zero():
            return acb(0)
        if v.imag.contains(0) and not bool(v.real > 0):
            raise BranchCutError(f"sqrt argument in {node} meets the branch cut")
        return v.sqrt()
    raise TypeError(f"unknown node {type(node).__name__}")


def evaluate_many(exprs: Iterable[QExpr], prec: int = DEFAULT_PRECISION) -> list[Scalar]:
    """Evaluate several expressions sharing one memo table."""
    memo: dict[int, acb] = {}
    keep: list[QExpr] = []  # pins nodes so their ids stay unique while memoized
    out = []
    with working_precision(prec):
        for e in exprs:
            out.append(Scalar(_eval_node(e, prec, memo, keep), prec))
    return out


class Evaluator:
    """Evaluate many expressions over time with one shared memo table.

    Useful when expressions are built incrementally from earlier ones (as in
    exact elimination), so shared subexpressions are evaluated once.
    """

    def __init__(self, prec: int = DEFAULT_PRECISION):
        self.prec = prec
        self._memo: dict[int, acb] = {}
        self._keep: list[QExpr] = []

    def __call__(self, e: QExpr) -> Scalar:
        with working_precision(self.prec):
            return Scalar(_eval_node(e, self.prec, self._memo, self._keep), self.prec)

    def many(self, exprs: Iterable[QExpr]) -> list[Scalar]:
        return [self(e) for e in exprs]


def evaluate(e: QExpr, prec: int = DEFAULT_PRECISION) -> Scalar:
    """Certified enclosure of ``e`` computed at ``prec`` bits."""
    return evaluate_many([e], prec)[0]


def _eval_node(root: QExpr, prec: int, memo: dict[int, acb], keep: list[QExpr]) -> acb:
    # iterative post-order over the DAG; memo keyed by node identity
    stack = [root]
    while stack:
        node = stack[-1]
        nid = id(node)
        if nid in memo:
            stack.pop()
            continue
        kids = node.children
        if not kids:
            memo[nid] = _leaf(node, prec)
            keep.append(node)
            stack.pop()
            continue
        pending = [c for c in kids if id(c) not in memo]
        if pending:
            stack.extend(pending)
            continue
        memo[nid] = _apply(node, [memo[id(c)] for c in kids], prec)
        keep.append(node)
        stack.pop()
    return memo[id(root)]


def node_count(e: QExpr) -> int:
    """Number of distinct nodes in the DAG rooted at ``e``."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.extend(n.children)
    return len(seen)
