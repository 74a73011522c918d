from __future__ import annotations

import copy
import json
from fractions import Fraction

import numpy as np
import pytest

from cellforge.arith import evaluate, parse, qint, to_text
from cellforge.cells import (
    EmptyBlockError,
    block,
    build_u,
    cell_system_from_json,
    check_integrity,
    closure_residuals,
    compare_block,
    load_w,
    nonempty_blocks,
    orbit_generators,
    printed_idempotency_defect,
    published_blocks,
    triangle_vertices,
)
from cellforge.errors import IntegrityError, ParseError
from cellforge.data import load_json

from published import U96_MISPRINTS

TOL = Fraction(1, 2**100)


def test_generator_and_triangle_counts(w):
    assert len(w.generators) == 21
    assert len(w) == 63
    assert len(orbit_generators(w)) == 21


def test_nonzero_weights(w):
    vals = w.evaluate(256)
    zero = [t for t, v in vals.items() if v.certifies_zero(TOL)]
    nonzero = [t for t, v in vals.items() if v.abs_lower() > 0]
    assert len(zero) + len(nonzero) == 63
    # zeros come in whole rotation orbits
    assert len(zero) % 3 == 0
    assert len(nonzero) == 60


def test_closure_certifies(w):
    res = closure_residuals(w)
    assert len(res) == 63
    assert all(r.certifies_zero(TOL) for _, r in res)


def test_corrupted_closed_json_fails_integrity(w):
    obj = w.to_json(closed=True)
    obj["generators"][0]["coeff"] = to_text(parse(obj["generators"][0]["coeff"]) * 2)
    with pytest.raises(IntegrityError, match="closure"):
        cell_system_from_json(obj, w.graph)


def test_duplicate_generator_is_rejected(w):
    obj = load_json("w_e412.json")
    obj = copy.deepcopy(obj)
    obj["generators"].append(dict(obj["generators"][0]))
    with pytest.raises(IntegrityError):
        cell_system_from_json(obj, w.graph)


def test_malformed_json_is_parse_error(w):
    with pytest.raises(ParseError):
        cell_system_from_json({"generators": [{"a": 1}]}, w.graph)


def test_json_round_trip(w, tmp_path):
    f = tmp_path / "w.json"
    f.write_text(json.dumps(w.to_json(closed=False)), encoding="utf-8")
    again = load_w(str(f))
    check_integrity(again)
    for t in w.weights:
        assert evaluate(again[t] - w[t]).certifies_zero()


# -- blocks -------------------------------------------------------------------


def test_block_count(u):
    blocks = nonempty_blocks(u)
    assert len(blocks) == 35
    assert max(b.size for b in blocks) == 5


def test_empty_block(u):
    with pytest.raises(EmptyBlockError):
        block(u, 8, 8)


def test_trace_of_u19(u):
    assert (block(u, 1, 9).trace() - evaluate(qint(2))).certifies_zero(TOL)


def test_blocks_are_hermitian_idempotents(u, graph):
    two = complex(evaluate(qint(2)).midpoint)
    for b in nonempty_blocks(u):
        assert b.hermiticity_defect().certifies_zero(TOL)
        m = b.numeric()
        assert np.allclose(m @ m, two * m, atol=1e-12)
        # trace = [2] * rank, and the rank is the number of edges back v2 -> v1
        rank = len(graph.edges_between(b.v2, b.v1))
        assert (b.trace() - evaluate(qint(2)) * rank).certifies_zero(TOL)


def _published(v1, v2):
    return next(p for p in published_blocks() if (p.v1, p.v2) == (v1, v2))


@pytest.mark.parametrize("v1,v2", [(3, 9), (4, 9), (5, 9)])
def test_printed_three_by_three_blocks_match(u, v1, v2):
    diffs = compare_block(block(u, v1, v2), _published(v1, v2))
    assert len(diffs) == 9
    assert all(d.certifies_zero(TOL) for _, _, d in diffs)


def test_printed_five_by_five_block(u):
    diffs = compare_block(block(u, 9, 6), _published(9, 6))
    bad = {(i + 1, j + 1) for i, j, d in diffs if not d.certifies_zero(TOL)}
    assert bad == set(U96_MISPRINTS)
    assert all(d.abs_lower() > 1e-3 for i, j, d in diffs if (i + 1, j + 1) in bad)


def test_resolved_readings_match(u):
    resolved = {(p.v1, p.v2): set(p.resolved) for p in published_blocks()}
    assert resolved[(9, 6)] == {(3, 4), (4, 3)}
    assert resolved[(4, 9)] == {(1, 2), (2, 1), (2, 2)}
    for p in published_blocks():
        diffs = {(i, j): d for i, j, d in compare_block(block(u, p.v1, p.v2), p)}
        assert all(diffs[ij].certifies_zero(TOL) for ij in p.resolved)


def test_printed_u96_is_not_an_idempotent():
    # a printed block of U must satisfy M^2 = [2] M; the printed U96 certifiably does not
    assert printed_idempotency_defect(_published(9, 6)).abs_lower() > 0.3


@pytest.mark.parametrize("v1,v2", [(3, 9), (4, 9), (5, 9)])
def test_printed_small_blocks_are_idempotents(v1, v2):
    assert printed_idempotency_defect(_published(v1, v2)).certifies_zero(TOL)


def test_printed_u96_trace_is_wrong():
    p = _published(9, 6)
    tr = sum((evaluate(p.rows[i][i]) for i in range(5)), evaluate(parse("0")))
    # a rank-2 block has trace 2[2]
    assert (tr - evaluate(qint(2)) * 2).abs_lower() > 1e-3


def test_basis_labels(u):
    assert block(u, 9, 6).labels == ["1", "2", "3", "4", "5"]
    assert block(u, 3, 9).labels == ["6^α", "6^β", "10"]
