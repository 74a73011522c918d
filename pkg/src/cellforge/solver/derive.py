"""Recovering a cell system W from its embedding U = W∘W†.

For each pair of vertices (a, c) the block of U on length-2 paths a → c equals
W_ac·W_ac†, where the columns of W_ac are indexed by the edges c → a.  A
pivoted Cholesky factorization U_ac = D·D† therefore fixes W_ac = D·H up to an
r×r matrix H per block (r = number of edges c → a).  The entries of every H
are the unknowns; (RI) and (BA) are linear in W, so they become linear
equations in these unknowns.  The solution is unique up to one overall complex
factor, whose modulus is fixed by relation (U) and whose phase is chosen to
make the first nonzero triangle weight real and positive.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..arith import DEFAULT_PRECISION, DEFAULT_TOLERANCE, ONE, ZERO, QExpr, Scalar, conj, sqrt
from ..arith.qexpr import Evaluator, mul, qsum
from ..cells import CellSystem, all_triangles, build_u, from_morphism, orbit_generators, triangle_key
from ..errors import NoSolutionError, UnderdeterminedError
from ..gpa import Morphism, eval_diagram, hom_basis
from ..graph import OrientedGraph, Path
from ..relations.checks import load_relation
from .linear import solve_rows

RANK_ZERO = 1e-30  # Schur complements below this (at 256 bits) count as zero


def _block_factor(u: Morphism, rows: list[Path], ev: Evaluator) -> list[list[QExpr]]:
    """Columns of a pivoted Cholesky factor D with U_block = D·D† (exact entries)."""
    n = len(rows)

    def entry(i, j):  # row i (target), column j (source)
        return u.get((rows[j], rows[i]), ZERO)

    cols: list[list[QExpr]] = []
    used: set[int] = set()
    while len(cols) < n:
        # Schur-complement diagonal d_j = U_jj - Σ_m |D_jm|²
        diag = {}
        for j in range(n):
            if j in used:
                continue
            d = entry(j, j)
            if cols:
                d = d - qsum([mul(c[j], conj(c[j])) for c in cols])
            diag[j] = d
        j, d = max(diag.items(), key=lambda kv: ev(kv[1]).abs_lower(), default=(None, None))
        if j is None or ev(d).abs_upper() < RANK_ZERO:
            break
        s = sqrt(d)
        col = []
        for i in range(n):
            v = entry(i, j)
            if cols:
                v = v - qsum([mul(c[i], conj(c[j])) for c in cols])
            col.append(v / s if i != j else s)
        cols.append(col)
        used.add(j)
    return cols


def _sides(rel, bindings, graph) -> list[tuple[Morphism, Morphism]]:
    env = dict(bindings)
    for name, d in rel.lets:
        env[name] = eval_diagram(d, env, graph)
    return [(eval_diagram(lhs, env, graph), eval_diagram(rhs, env, graph)) for lhs, rhs in rel.pairs]


def derive_w(u: Morphism, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> CellSystem:
    """A cell system W with build_u(W) = U, normalized by (U) and a phase convention.

    Raises NoSolutionError when U is not of the form W∘W† for a cell system.
    """
    if u.hom_type != ("++", "++"):
        raise NoSolutionError(f"U must lie in Hom(++ → ++), not Hom{u.hom_type}")
    g: OrientedGraph = u.graph
    ev = Evaluator(prec)

    # unknown j = (block, factor column m, edge column e); its W contribution is D[:, m] at edge e
    unknowns: list[tuple] = []
    basis: dict[tuple, dict] = {}
    for a in g.vertices:
        for c in g.vertices:
            rows = g.paths("++", a, c)
            edges = g.paths("-", a, c)
            if not rows:
                continue
            cols = _block_factor(u, rows, ev)
            if len(cols) != len(edges):
                raise NoSolutionError(
                    f"block ({a},{c}) has rank {len(cols)} but {len(edges)} edges {c}→{a}; U is not of cell type"
                )
            for m, col in enumerate(cols):
                for e in edges:
                    j = (a, c, m, e)
                    unknowns.append(j)
                    basis[j] = {(e, p): x for p, x in zip(rows, col) if x is not ZERO}
    if not unknowns:
        raise NoSolutionError("U is zero")

    # (RI) and (BA) are linear in W for fixed U: one column per unknown
    rels = [load_relation("ri"), load_relation("ba")]
    columns: dict[tuple, list[QExpr]] = {}
    for j in unknowns:
        wj = Morphism(g, "-", "++", basis[j])
        vals = []
        for rel in rels:
            keys = hom_basis(g, rel.source, rel.target)
            for lhs, rhs in _sides(rel, {"W": wj, "U": u}, g):
                vals.extend(lhs.get(k, ZERO) - rhs.get(k, ZERO) for k in keys)
        columns[j] = vals
    neq = len(next(iter(columns.values())))
    rows_eq = [({j: columns[j][i] for j in unknowns if columns[j][i] is not ZERO}, ZERO) for i in range(neq)]
    rows_eq = [r for r in rows_eq if r[0]]

    # the solution space should be one complex line; normalize its largest coordinate to 1
    A = np.array([[complex(ev(r[0].get(j, ZERO)).midpoint) for j in unknowns] for r in rows_eq])
    _, sv, vh = np.linalg.svd(A)
    scale_ = sv[0] if len(sv) else 1.0
    nullity = len(unknowns) - int(np.sum(sv > 1e-9 * scale_))
    if nullity == 0:
        raise NoSolutionError("(RI) and (BA) admit only W = 0; U is not of cell type")
    if nullity > 1:
        raise UnderdeterminedError(f"(RI) and (BA) leave {nullity} free directions", nullity)
    null = vh[-1].conj()
    anchor = unknowns[int(np.argmax(np.abs(null)))]
    rows_eq.append(({anchor: ONE}, -ONE))
    h = solve_rows(rows_eq, unknowns, prec)

    w0: dict = {}
    for j in unknowns:
        for key, x in basis[j].items():
            w0.setdefault(key, []).append(mul(h[j], x))
    keys = [triangle_key(t) for t in all_triangles(g)]
    w0m = Morphism(g, "-", "++", {k: qsum(w0[k]) if k in w0 else ZERO for k in keys})

    # |factor| from (U): T†T = 1 is quadratic in W
    (lhs, _), = _sides(load_relation("unit"), {"W": w0m}, g)
    v0 = next(iter(lhs.items()))[1] if len(lhs) else ZERO
    if not ev(v0).excludes_zero():
        raise NoSolutionError("relation (U) cannot normalize the solution")
    # phase: first nonzero triangle weight becomes real and positive
    first = next((k for k in keys if ev(w0m.get(k)).abs_lower() > RANK_ZERO), None)
    w_first = w0m.get(first)
    factor = sqrt(mul(w_first, conj(w_first))) / mul(w_first, sqrt(v0))
    w = Morphism(g, "-", "++", {k: mul(factor, x) for k, x in w0m.items()})

    cells = from_morphism(w)
    _certify(cells, u, prec, tol)
    return cells


def _certify(cells: CellSystem, u: Morphism, prec: int, tol) -> None:
    """build_u(W) must reproduce U entry by entry."""
    rebuilt = build_u(cells).evaluate(prec)
    target = u.evaluate(prec)
    zero = Scalar(0, prec)
    for key in set(rebuilt.keys()) | set(target.keys()):
        diff = rebuilt.get(key, zero) - target.get(key, zero)
        if not diff.certifies_zero(tol):
            raise NoSolutionError(f"derived W does not reproduce U at {key[0]} → {key[1]} (|diff| ≤ {diff.abs_upper():.3e})")


def _integer_left_null(rows: list[list[int]]) -> list[list[int]]:
    """Integer basis of {n : nᵀ·A = 0} for the integer matrix A given by ``rows``."""
    m = len(rows)
    ncol = len(rows[0]) if rows else 0
    # row-reduce Aᵀ (ncol × m) over the rationals
    M = [[Fraction(rows[i][j]) for i in range(m)] for j in range(ncol)]
    pivots: list[int] = []
    r = 0
    for c in range(m):
        p = next((i for i in range(r, ncol) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        piv = M[r][c]
        M[r] = [x / piv for x in M[r]]
        for i in range(ncol):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    out = []
    for free in (c for c in range(m) if c not in pivots):
        v = [Fraction(0)] * m
        v[free] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -M[i][free]
        den = math.lcm(*(x.denominator for x in v))
        out.append([int(x * den) for x in v])
    return out


def gauge_invariants(cells: CellSystem, prec: int = DEFAULT_PRECISION) -> list[Scalar]:
    """Certified values of products of triangle weights that no edge-phase gauge changes.

    Triangles of one rotation orbit share their three edges, so each orbit has a
    single gauge phase.  The invariants are |W_t|² for each nonzero orbit
    representative t, and one product Π W_t^{n_t} (conj(W_t) for n_t < 0) for
    each integer vector n in the left null space of the orbit-edge incidence
    matrix, where the phases cancel.
    """
    g = cells.graph
    vals = cells.evaluate(prec)
    bare = CellSystem(g, cells.weights)  # first triangle of each orbit in basis order
    reps = [t for t in orbit_generators(bare) if vals[t].abs_lower() > 0]
    col = {e: i for i, e in enumerate(g.edges)}
    inc = []
    for t in reps:
        r = [0] * len(col)
        for e in t:
            r[col[e]] += 1
        inc.append(r)
    out = [vals[t] * vals[t].conj() for t in reps]
    for n in _integer_left_null(inc):
        acc = Scalar(1, prec)
        for t, k in zip(reps, n):
            f = vals[t] if k > 0 else vals[t].conj()
            for _ in range(abs(k)):
                acc = acc * f
        out.append(acc)
    return out


def edge_phases(w1: CellSystem, w2: CellSystem, prec: int = 64) -> dict:
    """Per-edge phases g_e with W2_t = (g_ab·g_bc·g_ca)·W1_t, when such phases exist.

    Each nonzero triangle gives one equation Σ_e n_e·θ_e ≡ arg(W2_t/W1_t) mod 2π
    with integer incidence n.  The integer matrix is brought to echelon form by
    unimodular row operations (the right-hand sides are combined
    multiplicatively as unit complex numbers, so no branch of arg is ever
    chosen), then solved by back substitution with free angles set to 0.
    Raises NoSolutionError when the equations are inconsistent.
    """
    edges = list(w1.graph.edges)
    col = {e: i for i, e in enumerate(edges)}
    v1, v2 = w1.evaluate(prec), w2.evaluate(prec)
    rows: list[list[int]] = []
    rhs: list[complex] = []
    for t, a in v1.items():
        za, zb = complex(a.midpoint), complex(v2[t].midpoint)
        if abs(za) < 1e-12 or abs(zb) < 1e-12:
            continue
        r = [0] * len(edges)
        for e in t:
            r[col[e]] += 1
        rows.append(r)
        rhs.append(zb / za / abs(zb / za))

    def combine(i, j, q):  # row_i -= q·row_j
        rows[i] = [x - q * y for x, y in zip(rows[i], rows[j])]
        rhs[i] = rhs[i] * rhs[j] ** (-q)

    pivots: list[tuple[int, int]] = []
    r = 0
    for c in range(len(edges)):
        while True:
            live = [i for i in range(r, len(rows)) if rows[i][c] != 0]
            if not live:
                break
            p = min(live, key=lambda i: abs(rows[i][c]))
            for i in live:
                if i != p:
                    combine(i, p, rows[i][c] // rows[p][c])
            if all(rows[i][c] == 0 for i in live if i != p):
                rows[r], rows[p] = rows[p], rows[r]
                rhs[r], rhs[p] = rhs[p], rhs[r]
                pivots.append((r, c))
                r += 1
                break
    for i in range(r, len(rows)):
        if abs(rhs[i] - 1) > 1e-6:
            raise NoSolutionError("no edge phases relate the two cell systems")
    theta = [0.0] * len(edges)
    for i, c in reversed(pivots):
        rest = sum(rows[i][j] * theta[j] for j in range(c + 1, len(edges)))
        theta[c] = (float(np.angle(rhs[i])) - rest) / rows[i][c]
    return {e: complex(np.exp(1j * theta[col[e]])) for e in edges}
