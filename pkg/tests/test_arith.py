from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellforge.arith import (
    ONE,
    Scalar,
    Z_SELECTION,
    conj,
    evaluate,
    inv,
    parse,
    qint,
    rational,
    sqrt,
    to_text,
    z,
    z_value,
    zeta,
)
from cellforge.errors import BranchCutError, DivisionByZeroError, ParseError


def sine_ratio(n: int) -> float:
    return math.sin(2 * math.pi * n / 24) / math.sin(2 * math.pi / 24)


@pytest.mark.parametrize("n", range(0, 13))
def test_qint_matches_sine_ratio(n):
    v = evaluate(qint(n))
    assert v.is_real()
    assert abs(complex(v.midpoint) - sine_ratio(n)) < 1e-14


def test_qint_two_is_published_value():
    assert abs(float(evaluate(qint(2))) - 1.93185) < 5e-6


def test_qint_twelve_vanishes():
    assert evaluate(qint(12)).certifies_zero()


@pytest.mark.parametrize("n", range(0, 13))
def test_qint_reflection(n):
    assert evaluate(qint(12 - n) - qint(n)).certifies_zero()


@pytest.mark.parametrize(
    "identity",
    [
        "q[2]*q[4]-q[5]-q[3]",
        "q[2]^2-q[3]-1",
        "q[5]-q[3]-1",
        "q[6]-2*q[2]",
        "q[3]^2-q[5]-q[3]-1",
    ],
)
def test_quantum_integer_identities(identity):
    assert evaluate(parse(identity)).certifies_zero()


def test_reciprocal_of_three_is_published_value():
    assert abs(float(evaluate(inv(qint(3)))) - 0.366025) < 5e-7


def test_sqrt_of_two():
    assert abs(float(evaluate(sqrt(qint(2)))) - math.sqrt(sine_ratio(2))) < 1e-14
    # the square root of the published 1.93185 is 1.389910 (not 1.389897)
    assert abs(float(evaluate(sqrt(qint(2)))) - math.sqrt(1.93185)) < 5e-6


@pytest.mark.parametrize(
    "l,k,expected",
    [(1, 0, 1), (8, 5, np.exp(5j * np.pi / 4)), (24, 19, np.exp(2j * np.pi * 19 / 24)), (4, 1, 1j)],
)
def test_zeta(l, k, expected):
    v = evaluate(zeta(l, k))
    assert abs(complex(v.midpoint) - expected) < 1e-14
    assert (abs(v) - 1).certifies_zero()


class TestZRoot:
    def test_defining_polynomial(self):
        zz = z_value(256)
        assert (9 * zz**16 - 14 * zz**8 + 9).certifies_zero()

    def test_unit_modulus(self):
        assert (abs(z_value(256)) - 1).certifies_zero()

    def test_nearest_to_printed_approximation(self):
        roots = np.roots([9] + [0] * 7 + [-14] + [0] * 7 + [9])
        target = complex(-0.996393, 0.0848571)
        best = roots[np.argmin(np.abs(roots - target))]
        assert abs(complex(z_value(128).midpoint) - best) < 1e-12

    def test_eighth_power_is_lower_root(self):
        # the two roots of 9y^2 - 14y + 9 are (7 +- 4 sqrt(2) i)/9
        y = complex(z_value(128).midpoint) ** 8
        assert abs(y - (7 - 4 * math.sqrt(2) * 1j) / 9) < 1e-12
        assert abs(y - (7 + 4 * math.sqrt(2) * 1j) / 9) > 0.5
        assert Z_SELECTION.y_imag_sign == -1

    def test_symbol_evaluates_to_selected_root(self):
        assert (evaluate(z()) - z_value(256)).certifies_zero()

    @pytest.mark.parametrize("prec", [64, 128, 512])
    def test_enclosure_excludes_other_roots(self, prec):
        zz = z_value(prec)
        roots = np.roots([9] + [0] * 7 + [-14] + [0] * 7 + [9])
        mid = complex(zz.midpoint)
        others = [r for r in roots if abs(r - mid) > 1e-6]
        assert len(others) == 15
        assert all(abs(r - mid) > zz.radius for r in others)


class TestErrors:
    def test_division_by_certified_zero(self):
        with pytest.raises(DivisionByZeroError):
            evaluate(inv(qint(12)))

    def test_branch_cut(self):
        with pytest.raises(BranchCutError):
            evaluate(sqrt(rational(-1)))

    def test_parse_error(self):
        with pytest.raises(ParseError):
            parse("q[2]+")


class TestScalar:
    def test_certifies_zero_definition(self):
        s = Scalar(Fraction(1, 2**101), 256)
        assert s.certifies_zero(Fraction(1, 2**100))
        assert not Scalar(Fraction(1, 2**99), 256).certifies_zero(Fraction(1, 2**100))

    def test_radius_shrinks_with_precision(self):
        e = sqrt(qint(3) / qint(5)) * zeta(48, 5)
        assert evaluate(e, 512).radius < evaluate(e, 128).radius < evaluate(e, 64).radius


# -- random expression trees ---------------------------------------------------

leaves = st.one_of(
    st.integers(1, 11).map(qint),
    st.tuples(st.integers(1, 48), st.integers(0, 47)).map(lambda lk: zeta(*lk)),
    st.fractions(min_value=-5, max_value=5, max_denominator=7).filter(lambda f: f != 0).map(rational),
    st.just(z()),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, children).map(lambda ab: ab[0] + ab[1]),
        st.tuples(children, children).map(lambda ab: ab[0] * ab[1]),
        children.map(conj),
        children.map(lambda a: -a),
        st.tuples(children, st.integers(-3, 3)).map(lambda ak: ak[0] ** ak[1]),
    )


exprs = st.recursive(leaves, _combine, max_leaves=8)


@settings(max_examples=1000)
@given(exprs)
def test_interval_soundness(e):
    try:
        lo = evaluate(e, 64)
    except DivisionByZeroError:
        return
    hi = evaluate(e, 128)
    assert lo.contains(Scalar(hi.ball.mid(), 128))
    assert hi.radius <= lo.radius or hi.radius < 1e-30


@given(exprs)
def test_conjugation_compatible(e):
    try:
        a = evaluate(conj(e), 128)
        b = evaluate(e, 128)
    except DivisionByZeroError:
        return
    assert a.overlaps(b.conj())


@given(exprs)
def test_text_round_trip(e):
    t = to_text(e)
    back = parse(t)
    assert to_text(back) == t
    assert back == e


def test_sqrt_of_positive_data_is_real():
    assert evaluate(sqrt(qint(4) / (qint(2) * qint(3) ** 2))).is_real()


def test_one_is_folded():
    assert to_text(ONE * qint(2)) == "q[2]"
