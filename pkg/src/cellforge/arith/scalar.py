"""Certified complex balls at an explicit binary precision.

A :class:`Scalar` wraps an Arb complex ball (``flint.acb``) together with the
precision it was produced at.  Arb keeps its working precision in a process
global, so every operation here pins that global for the duration of the call
under a lock.  Callers therefore never see precision as ambient state: the
precision of a result is the larger of its operands' precisions.
"""

from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from fractions import Fraction
from numbers import Integral
from typing import Iterator

from flint import acb, arb, ctx, fmpq

from ..errors import BranchCutError, DivisionByZeroError

DEFAULT_PRECISION = 256
DEFAULT_TOLERANCE = Fraction(1, 2**100)

_LOCK = threading.RLock()


@contextmanager
def working_precision(bits: int) -> Iterator[None]:
    """Temporarily set Arb's working precision (thread-safe, re-entrant)."""
    with _LOCK:
        saved = ctx.prec
        ctx.prec = bits
        try:
            yield
        finally:
            ctx.prec = saved


def to_arb(x, bits: int = DEFAULT_PRECISION) -> arb:
    """Convert a real Python number (exactly, where possible) to an arb."""
    with working_precision(bits):
        if isinstance(x, arb):
            return x
        if isinstance(x, Fraction):
            return arb(fmpq(x.numerator, x.denominator))
        if isinstance(x, Integral):
            return arb(int(x))
        return arb(float(x))


def _to_acb(x, bits: int) -> acb:
    if isinstance(x, acb):
        return x
    if isinstance(x, arb):
        return acb(x)
    if isinstance(x, Fraction):
        return acb(fmpq(x.numerator, x.denominator))
    if isinstance(x, Integral):
        return acb(int(x))
    if isinstance(x, (float, complex)):
        return acb(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a complex ball")


def _coerce(other, bits: int) -> "Scalar | None":
    if isinstance(other, Scalar):
        return other
    to_scalar = getattr(other, "__scalar__", None)
    if to_scalar is not None:
        return to_scalar(bits)
    if isinstance(other, (Integral, Fraction, float, complex, acb, arb)):
        with working_precision(bits):
            return Scalar(_to_acb(other, bits), bits)
    return None


class Scalar:
    """A complex ball: midpoint plus a rigorous error radius.

    Arithmetic rounds outward, so the true value of any expression built
    from exact inputs always lies inside the resulting ball.
    """

    __slots__ = ("_v", "_prec")

    def __init__(self, value=0, prec: int = DEFAULT_PRECISION):
        self._prec = int(prec)
        if isinstance(value, acb):
            self._v = value
        else:
            with working_precision(self._prec):
                self._v = _to_acb(value, self._prec)

    # -- accessors -------------------------------------------------------
    @property
    def prec(self) -> int:
        return self._prec

    @property
    def ball(self) -> acb:
        """The underlying Arb ball (read-only by convention)."""
        return self._v

    @property
    def midpoint(self) -> complex:
        """Midpoint rounded to a double (lossy; for display and numerics)."""
        return complex(float(self._v.real.mid()), float(self._v.imag.mid()))

    @property
    def radius(self) -> float:
        """Upper bound for the distance between the midpoint and any member."""
        re = float(self._v.real.rad())
        im = float(self._v.imag.rad())
        return math.nextafter(math.hypot(re, im), math.inf)

    @property
    def real(self) -> "Scalar":
        with working_precision(self._prec):
            return Scalar(acb(self._v.real), self._prec)

    @property
    def imag(self) -> "Scalar":
        with working_precision(self._prec):
            return Scalar(acb(self._v.imag), self._prec)

    def abs_upper(self) -> float:
        """A float that is certainly ≥ every |x| with x in the ball."""
        with working_precision(self._prec):
            return math.nextafter(float(self._v.abs_upper()), math.inf)

    def abs_lower(self) -> float:
        """A float that is certainly ≤ every |x| with x in the ball."""
        with working_precision(self._prec):
            return max(0.0, math.nextafter(float(self._v.abs_lower()), -math.inf))

    # -- certification ---------------------------------------------------
    def certifies_zero(self, tol=DEFAULT_TOLERANCE) -> bool:
        """True iff |midpoint| + radius < tol, decided in ball arithmetic."""
        with working_precision(max(self._prec, 64)):
            return bool(self._v.abs_upper() < to_arb(tol, self._prec))

    def excludes_zero(self) -> bool:
        with working_precision(self._prec):
            return bool(self._v.abs_lower() > 0)

    def overlaps(self, other) -> bool:
        o = _coerce(other, self._prec)
        return bool(self._v.overlaps(o._v))

    def contains(self, other) -> bool:
        o = _coerce(other, self._prec)
        return bool(self._v.contains(o._v))

    def is_real(self) -> bool:
        """True when the imaginary part is exactly zero."""
        return bool(self._v.imag.is_zero())

    # -- arithmetic ------------------------------------------------------
    def _bin(self, other, op, reverse=False):
        o = _coerce(other, self._prec)
        if o is None:
            return NotImplemented
        bits = max(self._prec, o._prec)
        a, b = (o._v, self._v) if reverse else (self._v, o._v)
        with working_precision(bits):
            return Scalar(op(a, b), bits)

    def __add__(self, other):
        return self._bin(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._bin(other, lambda a, b: a + b, reverse=True)

    def __sub__(self, other):
        return self._bin(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._bin(other, lambda a, b: a - b, reverse=True)

    def __mul__(self, other):
        return self._bin(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._bin(other, lambda a, b: a * b, reverse=True)

    def __truediv__(self, other):
        o = _coerce(other, self._prec)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce(other, self._prec)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __neg__(self) -> "Scalar":
        with working_precision(self._prec):
            return Scalar(-self._v, self._prec)

    def __pos__(self) -> "Scalar":
        return self

    def __pow__(self, k: int) -> "Scalar":
        if not isinstance(k, Integral):
            return NotImplemented
        k = int(k)
        if k < 0:
            return self.inverse() ** (-k)
        with working_precision(self._prec):
            return Scalar(self._v**k, self._prec)

    def __abs__(self) -> "Scalar":
        with working_precision(self._prec):
            return Scalar(acb(abs(self._v)), self._prec)

    def inverse(self) -> "Scalar":
        if not self.excludes_zero():
            raise DivisionByZeroError(f"divisor enclosure {self!r} contains zero")
        with working_precision(self._prec):
            return Scalar(1 / self._v, self._prec)

    def conj(self) -> "Scalar":
        with working_precision(self._prec):
            return Scalar(self._v.conjugate(), self._prec)

    def sqrt(self) -> "Scalar":
        """Principal square root; refuses enclosures that meet (-inf, 0]."""
        v = self._v
        if v.is_zero():
            return Scalar(acb(0), self._prec)
        with working_precision(self._prec):
            on_cut = v.imag.contains(0) and not bool(v.real > 0)
            if on_cut:
                raise BranchCutError(f"sqrt argument {self!r} meets the branch cut")
            return Scalar(v.sqrt(), self._prec)

    def with_precision(self, bits: int) -> "Scalar":
        """Re-tag the ball with another precision (the ball is unchanged)."""
        return Scalar(self._v, bits)

    # -- display ---------------------------------------------------------
    def __complex__(self) -> complex:
        return self.midpoint

    def __float__(self) -> float:
        if not self.is_real():
            raise TypeError("Scalar has a nonzero imaginary part")
        return float(self._v.real.mid())

    def str(self, digits: int = 15) -> str:
        with working_precision(self._prec):
            return self._v.str(digits, radius=True)

    def __repr__(self) -> str:
        return f"Scalar({self.str(12)}, prec={self._prec})"

    __str__ = __repr__


def max_abs_upper(values) -> float:
    """Largest certified upper bound of |x| over an iterable of Scalars."""
    return max((v.abs_upper() for v in values), default=0.0)
