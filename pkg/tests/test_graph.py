from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from cellforge.arith import evaluate, parse, qint
from cellforge.cells import all_triangles, load_w, triangle_vertices
from cellforge.graph import OrientedGraph, fp_residual, fp_residuals, load_graph

EDGE_LIST = [
    (1, 6), (2, 6), (3, 6), (4, 6), (5, 6), (5, 8), (3, 10), (4, 10), (5, 10), (6, 7), (6, 9), (6, 9),
    (8, 7), (10, 7), (10, 9), (10, 11), (7, 3), (7, 4), (7, 5), (9, 1), (9, 2), (9, 3), (9, 4), (9, 5), (11, 5),
]


def test_vertex_and_edge_counts(graph):
    assert len(graph.vertices) == 11
    assert len(graph.edges) == 25


def test_exactly_one_parallel_pair(graph):
    pairs = {}
    for e in graph.edges:
        pairs.setdefault((e.src, e.dst), []).append(e.label)
    multi = {k: v for k, v in pairs.items() if len(v) > 1}
    assert multi == {(6, 9): ["α", "β"]}


def test_edge_list_matches_reconstruction(graph):
    assert sorted((e.src, e.dst) for e in graph.edges) == sorted(EDGE_LIST)


def test_every_triangle_is_realizable(graph, w):
    # every generator (a, b, c) needs edges a->b, b->c, c->a
    for t in w.generators:
        a, b, c = triangle_vertices(t)
        assert graph.edges_between(a, b) and graph.edges_between(b, c) and graph.edges_between(c, a)
    assert len(all_triangles(graph)) == 63


@pytest.mark.parametrize(
    "v,expr",
    [(1, "q[5]/q[3]"), (6, "q[5]"), (8, "1"), (11, "1"), (7, "q[3]")],
)
def test_fp_entries(graph, v, expr):
    assert evaluate(graph.fp[v] - parse(expr)).certifies_zero()


def test_fp_certifies(graph):
    assert fp_residual(graph).certifies_zero()
    assert len(fp_residuals(graph)) == 22


def test_fp_positive(graph):
    assert all(x.is_real() and float(x) > 0 for x in graph.fp_values().values())


def test_top_eigenvalue_matches_numeric_oracle(graph):
    eig = np.linalg.eigvals(graph.adjacency().astype(float))
    top = max(eig, key=lambda x: x.real)
    assert abs(top - (1 + np.sqrt(3))) < 1e-9
    assert abs(float(evaluate(qint(3))) - (1 + np.sqrt(3))) < 1e-12


def test_vertex_five_balance(graph):
    lam = graph.fp
    lhs = lam[6] + lam[8] + lam[10]
    assert evaluate(lhs - qint(3) * lam[5]).certifies_zero()
    assert evaluate(qint(5) + 1 + qint(3) - qint(3) ** 2).certifies_zero()


def test_deleting_an_edge_breaks_fp(graph):
    edges = tuple(e for e in graph.edges if (e.src, e.dst) != (5, 8))
    broken = dataclasses.replace(graph, edges=edges)
    assert fp_residual(broken).abs_lower() > 0.3


def test_paths_examples(graph):
    ps = graph.paths("++", 3, 9)
    assert len(ps) == 3
    assert [p.vertices() for p in ps] == [(3, 6, 9), (3, 6, 9), (3, 10, 9)]
    assert [p.edges[1].label for p in ps[:2]] == ["α", "β"]
    assert len(graph.paths("+", 8, 7)) == 1
    assert len(graph.paths("-", 1, 9)) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_path_counts_match_adjacency_powers(graph, n):
    a = np.linalg.matrix_power(graph.adjacency(), n)
    idx = {v: i for i, v in enumerate(graph.vertices)}
    counts = np.zeros_like(a)
    for p in graph.paths("+" * n):
        counts[idx[p.start], idx[p.end]] += 1
    assert (counts == a).all()


def test_reversal_bijection(graph):
    for u in graph.vertices:
        for v in graph.vertices:
            assert len(graph.paths("-", u, v)) == len(graph.paths("+", v, u))


def test_paths_are_deterministic(graph):
    fresh = OrientedGraph.from_json(graph.to_json())
    assert fresh.paths("++-") == graph.paths("++-")


def test_json_round_trip(graph, tmp_path):
    f = tmp_path / "g.json"
    f.write_text(json.dumps(graph.to_json()), encoding="utf-8")
    g2 = load_graph(str(f))
    assert g2.edges == graph.edges
    assert all(evaluate(g2.fp[v] - graph.fp[v]).certifies_zero() for v in graph.vertices)


def test_bundled_w_uses_bundled_graph():
    assert load_w().graph.name == "E4^12"
