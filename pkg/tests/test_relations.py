from __future__ import annotations

import time
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellforge.arith import qint, rational, zeta
from cellforge.cells import as_morphism, build_u
from cellforge.errors import ParseError
from cellforge.gpa import Morphism, gauge_transform, scale
from cellforge.relations import (
    FAIL,
    INDETERMINATE,
    PASS,
    check_bigon,
    check_hecke_suite,
    check_kuperberg,
    check_kw_aux,
    check_relation,
    check_rotation,
    describe,
    load_relation,
    parse_relation,
)

TOL = Fraction(1, 2**100)
STEMS = ["rotation", "bigon", "square", "r1", "r2", "hecke", "r3", "ba", "ri", "unit"]


@pytest.mark.parametrize("stem", STEMS)
def test_encodings_parse_and_round_trip(stem):
    rel = load_relation(stem)
    again = parse_relation(describe(rel))
    assert again.hom_type == rel.hom_type
    assert len(again.pairs) == len(rel.pairs)
    assert again.inputs() == rel.inputs()


def test_kuperberg_relations_certify(w):
    t0 = time.perf_counter()
    reports = check_kuperberg(w)
    assert time.perf_counter() - t0 < 300
    assert [r.name for r in reports] == ["()", "(i)", "(ii)"]
    assert [r.count for r in reports] == [63, 27, 171]
    for r in reports:
        assert r.status == PASS
        assert r.max_residual.certifies_zero(TOL)
        assert r.precision == 256


def test_hecke_suite_certifies(u):
    reports = check_hecke_suite(u)
    assert [r.name for r in reports] == ["(R1)", "(R2)", "(Hecke)", "(R3)"]
    assert [r.count for r in reports] == [27, 171, 171, 1251]
    assert all(r.status == PASS for r in reports)


def test_auxiliary_relations_certify(w, u):
    reports = check_kw_aux(w, u)
    assert [r.count for r in reports] == [63, 63, 11]
    assert all(r.passed for r in reports)


def test_scaled_w_fails_bigon(w):
    r = check_bigon(scale(rational(2), as_morphism(w)))
    assert r.status == FAIL
    assert r.max_residual.abs_lower() > 1


def test_single_corrupted_weight_fails_rotation(w):
    f = as_morphism(w)
    key = next(k for k, v in f.evaluate(64).items() if v.abs_lower() > 0.1)
    bad = dict(f.items())
    bad[key] = bad[key] * 3
    r = check_rotation(Morphism(w.graph, "-", "++", bad))
    assert r.status == FAIL
    assert r.worst is not None


def test_wrong_hecke_eigenvalue_fails(u):
    (hecke,) = check_hecke_suite(scale(qint(3) / qint(2), u), skip=("r1", "r2", "r3"))
    assert hecke.status == FAIL


def test_unit_relation_is_even_in_w(w):
    # (U) is quadratic in W, so it cannot tell W from -W; the other relations pin the sign of U only
    minus = scale(rational(-1), as_morphism(w))
    (_, _, unit) = check_kw_aux(minus)
    assert unit.passed


def test_unreachable_tolerance_is_indeterminate(w):
    r = check_relation(load_relation("rotation"), {"W": as_morphism(w)}, 256, Fraction(1, 2**3000), cap=512)
    assert r.status == INDETERMINATE
    assert r.precision == 512


def test_missing_generator_is_reported(w):
    with pytest.raises(ParseError, match="U"):
        check_relation(load_relation("r1"), {"W": as_morphism(w)})


@pytest.mark.parametrize(
    "text",
    [
        "hom - ++\nlhs W\nrhs W",
        "relation x\nlhs W\nrhs W",
        "relation x\nhom - ++\nlhs W",
        "relation x\nhom - ++\nfrob W\nlhs W\nrhs W",
        "relation x\nhom - ++ +\nlhs W\nrhs W",
    ],
)
def test_malformed_encodings(text):
    with pytest.raises(ParseError):
        parse_relation(text)


def test_typecheck_reports_side(w):
    rel = parse_relation("relation bad\nhom - -\nlhs W\nrhs W")
    with pytest.raises(ParseError, match="bad"):
        check_relation(rel, {"W": as_morphism(w)})


# -- gauge invariance ---------------------------------------------------------------


phase_maps = st.lists(st.integers(0, 23), min_size=25, max_size=25)


@given(phase_maps)
def test_kuperberg_passes_in_every_gauge(w, ks):
    phases = {e: zeta(24, k) for e, k in zip(w.graph.edges, ks)}
    gw = gauge_transform(as_morphism(w), phases)
    assert all(r.passed for r in check_kuperberg(gw, prec=128))


@given(phase_maps)
def test_hecke_suite_passes_in_every_gauge(w, ks):
    phases = {e: zeta(24, k) for e, k in zip(w.graph.edges, ks)}
    gu = build_u(gauge_transform(as_morphism(w), phases))
    assert all(r.passed for r in check_hecke_suite(gu, prec=128))
