"""Guessing closed forms for positive reals from a bounded dictionary.

Building blocks are monomials m = [2]^a [3]^b [4]^c [5]^d with |exponent| ≤ 3
([1] = 1 and [6] = 2·[2] at q = ζ₂₄ add nothing new), plus the rationals 1/2
and 2.  Entries have one of these shapes::

    m        √m        m1 + m2        m0·(m1 + m2)
    X - 1    for X any of the non-radical shapes above
    √(m1 + m2)        √(m0·(m1 + m2))

The size of an entry is the sum of |exponents| plus one for each '+', each
'-1', each square root and each non-unit rational.  The default bound 7 is the
smallest that reaches every closed form of the published recognition table.
Among entries within tolerance the smallest size wins, then the shortest and
lexicographically first text.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from ..arith import ONE, QExpr, lift, qint, rational, sqrt, to_text
from ..arith.qexpr import mul, power

GENERATORS = (2, 3, 4, 5)
MAX_EXPONENT = 3
DEFAULT_BOUND = 7
DEFAULT_TOL = 5e-6
MAX_INPUT_TOL = 5e-4  # widening for short decimal inputs never goes beyond this

# shape codes
MONO, ROOT, SUM, PSUM, MONO_M1, SUM_M1, PSUM_M1, ROOT_SUM, ROOT_PSUM, RAT, ROOT_RAT = range(11)
_RATS = ((1, 2), (2, 1))


def _q(n: int) -> float:
    return float(np.sin(2 * np.pi * n / 24) / np.sin(2 * np.pi / 24))


@dataclass(frozen=True)
class Recognition:
    expr: QExpr
    size: int
    value: float
    error: float

    @property
    def text(self) -> str:
        return to_text(self.expr)


class RecognitionDictionary:
    """All entries up to ``bound``, stored as parallel arrays (deterministic order)."""

    def __init__(self, bound: int = DEFAULT_BOUND):
        self.bound = bound
        exps = [
            e
            for e in itertools.product(range(-MAX_EXPONENT, MAX_EXPONENT + 1), repeat=len(GENERATORS))
            if sum(map(abs, e)) <= bound
        ]
        exps.sort(key=lambda e: (sum(map(abs, e)), e))
        self.monomials = exps
        qv = np.array([_q(g) for g in GENERATORS])
        self.mono_val = np.array([float(np.prod(qv ** np.array(e))) for e in exps])
        self.mono_size = np.array([sum(map(abs, e)) for e in exps], dtype=np.int64)
        self._build()

    def _build(self):
        B = self.bound
        mv, ms = self.mono_val, self.mono_size
        n = len(mv)
        shapes, a0, a1, a2, sizes, vals = [], [], [], [], [], []

        def emit(shape, i0, i1, i2, size, val):
            k = len(val)
            shapes.append(np.full(k, shape, dtype=np.int8))
            a0.append(np.broadcast_to(np.asarray(i0, dtype=np.int32), (k,)).copy())
            a1.append(np.broadcast_to(np.asarray(i1, dtype=np.int32), (k,)).copy())
            a2.append(np.broadcast_to(np.asarray(i2, dtype=np.int32), (k,)).copy())
            sizes.append(np.broadcast_to(np.asarray(size, dtype=np.int8), (k,)).copy())
            vals.append(np.asarray(val, dtype=float))

        idx = np.arange(n)
        ok = ms <= B
        emit(MONO, idx[ok], -1, -1, ms[ok], mv[ok])
        ok = ms + 1 <= B
        emit(ROOT, idx[ok], -1, -1, ms[ok] + 1, np.sqrt(mv[ok]))
        ok = (ms + 1 <= B) & (ms > 0)
        emit(MONO_M1, idx[ok], -1, -1, ms[ok] + 1, mv[ok] - 1)
        for i, (p, q) in enumerate(_RATS):
            v = p / q
            emit(RAT, [i], -1, -1, [1], [v])
            emit(ROOT_RAT, [i], -1, -1, [2], [np.sqrt(v)])

        # unordered pairs m1 < m2 with s1 + s2 + 1 <= B - (extra for -1 or sqrt)
        i1, i2 = np.triu_indices(n, k=1)
        s12 = ms[i1] + ms[i2] + 1
        keep = s12 <= B
        i1, i2, s12 = i1[keep], i2[keep], s12[keep]
        v12 = mv[i1] + mv[i2]
        emit(SUM, -1, i1, i2, s12, v12)
        ok = s12 + 1 <= B
        emit(SUM_M1, -1, i1[ok], i2[ok], s12[ok] + 1, v12[ok] - 1)
        emit(ROOT_SUM, -1, i1[ok], i2[ok], s12[ok] + 1, np.sqrt(v12[ok]))

        # m0·(m1 + m2) with m0 non-unit
        for i0 in range(1, n):
            s0 = ms[i0]
            ok = s12 + s0 <= B
            if not ok.any():
                continue
            j1, j2, s = i1[ok], i2[ok], s12[ok] + s0
            v = mv[i0] * v12[ok]
            emit(PSUM, i0, j1, j2, s, v)
            ok2 = s + 1 <= B
            emit(PSUM_M1, i0, j1[ok2], j2[ok2], s[ok2] + 1, v[ok2] - 1)
            emit(ROOT_PSUM, i0, j1[ok2], j2[ok2], s[ok2] + 1, np.sqrt(v[ok2]))

        self.shape = np.concatenate(shapes)
        self.i0 = np.concatenate(a0)
        self.i1 = np.concatenate(a1)
        self.i2 = np.concatenate(a2)
        self.size = np.concatenate(sizes)
        self.value = np.concatenate(vals)

    def __len__(self) -> int:
        return len(self.value)

    # -- expressions -----------------------------------------------------------
    def _mono(self, i: int) -> QExpr:
        num, den = ONE, ONE
        for g, e in zip(GENERATORS, self.monomials[i]):
            if e > 0:
                num = mul(num, power(qint(g), e))
            elif e < 0:
                den = mul(den, power(qint(g), -e))
        return num if den is ONE else mul(num, power(den, -1))

    def expr(self, k: int) -> QExpr:
        shape, i0, i1, i2 = int(self.shape[k]), int(self.i0[k]), int(self.i1[k]), int(self.i2[k])
        if shape in (RAT, ROOT_RAT):
            p, q = _RATS[i0]
            r = rational(p) / rational(q) if q != 1 else rational(p)
            return sqrt(r) if shape == ROOT_RAT else r
        if shape in (MONO, ROOT, MONO_M1):
            m = self._mono(i0)
            return {MONO: m, ROOT: sqrt(m), MONO_M1: m - ONE}[shape]
        s = self._mono(i1) + self._mono(i2)
        if shape in (PSUM, PSUM_M1, ROOT_PSUM):
            s = mul(self._mono(i0), s)
        if shape in (SUM_M1, PSUM_M1):
            return s - ONE
        if shape in (ROOT_SUM, ROOT_PSUM):
            return sqrt(s)
        return s

    def entries(self):
        """(size, text, value) for every entry, in dictionary order (for audit dumps)."""
        for k in range(len(self)):
            yield int(self.size[k]), to_text(self.expr(k)), float(self.value[k])

    # -- lookup --------------------------------------------------------------
    def candidates(self, x: float, tol: float) -> np.ndarray:
        return np.nonzero(np.abs(self.value - x) < tol)[0]


_DEFAULT: dict[int, RecognitionDictionary] = {}


def default_dictionary(bound: int = DEFAULT_BOUND) -> RecognitionDictionary:
    if bound not in _DEFAULT:
        _DEFAULT[bound] = RecognitionDictionary(bound)
    return _DEFAULT[bound]


def input_tolerance(x, tol: float = DEFAULT_TOL) -> float:
    """Widen ``tol`` to half a unit in the last printed digit of a decimal string (capped)."""
    if isinstance(x, str):
        exp = Decimal(x.strip()).as_tuple().exponent
        if isinstance(exp, int) and exp < 0:
            return max(tol, min(0.5 * 10.0**exp, MAX_INPUT_TOL))
    return tol


def recognize(x, dictionary: RecognitionDictionary | None = None, tol: float = DEFAULT_TOL) -> Recognition | None:
    """Best dictionary match for the positive real ``x``, or None.

    ``x`` may be a float or a decimal string; a string printed with fewer
    digits than ``tol`` resolves is matched to its own printed precision.
    """
    d = dictionary or default_dictionary()
    eff = input_tolerance(x, tol)
    xv = float(x)
    if abs(xv) < eff:
        return Recognition(lift(0), 0, 0.0, abs(xv))
    cand = d.candidates(xv, eff)
    if len(cand) == 0:
        return None
    smin = d.size[cand].min()
    best = None
    for k in cand[d.size[cand] == smin]:
        e = d.expr(int(k))
        t = to_text(e)
        key = (len(t), t)
        if best is None or key < best[0]:
            best = (key, e, int(k))
    _, e, k = best
    return Recognition(e, int(smin), float(d.value[k]), abs(float(d.value[k]) - xv))
