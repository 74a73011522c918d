"""The polynomial system for an embedding U ∈ Hom(++ → ++), and gauge fixing.

Variables are the endpoint-matched pairs (p, q) of length-2 paths, one
complex unknown each.  A monomial is a tuple of factor codes: ``v`` stands for
x_v and ``~v`` (that is ``-v-1``) for conj(x_v).  Coefficients are exact
QExpr values; their complex values are cached for numerics.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from flint import acb

from ..arith import DEFAULT_PRECISION, ONE, QExpr, Scalar, lift, qint, rational
from ..arith.scalar import working_precision
from ..arith.qexpr import evaluate_many
from ..errors import CellforgeError
from ..gpa import Morphism, coev, compose_all, ev, hom_basis, identity, tensor
from ..graph import Edge, OrientedGraph, Path

Monomial = tuple[int, ...]


def conj_code(v: int) -> int:
    return -v - 1


def decode(code: int) -> tuple[int, bool]:
    """(variable index, conjugated?)"""
    return (code, False) if code >= 0 else (-code - 1, True)


@dataclass
class Equation:
    tag: str
    key: tuple
    terms: dict[Monomial, QExpr]

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def variables(self) -> set[int]:
        return {decode(c)[0] for m in self.terms for c in m}


@dataclass
class PolySystem:
    graph: OrientedGraph
    variables: list[tuple[Path, Path]]
    equations: list[Equation]
    gauge: "GaugeReport | None" = None
    pinned: dict[int, QExpr] = field(default_factory=dict)

    @cached_property
    def index(self) -> dict[tuple[Path, Path], int]:
        return {k: i for i, k in enumerate(self.variables)}

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def count(self, tag: str) -> int:
        return sum(1 for e in self.equations if e.tag == tag)

    def tags(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.equations:
            out[e.tag] = out.get(e.tag, 0) + 1
        return out

    @property
    def max_degree(self) -> int:
        return max(e.degree for e in self.equations)

    def check_well_formed(self) -> None:
        n = self.nvars
        for e in self.equations:
            for v in e.variables():
                if not 0 <= v < n:
                    raise CellforgeError(f"equation {e.tag}{e.key} references undeclared variable {v}")
            if e.degree > 3:
                raise CellforgeError(f"equation {e.tag}{e.key} has degree {e.degree}")

    # -- numerics ------------------------------------------------------------
    @cached_property
    def _compiled(self):
        coeff_exprs = []
        eq_idx, codes = [], []
        for i, e in enumerate(self.equations):
            for mono, c in e.terms.items():
                eq_idx.append(i)
                coeff_exprs.append(c)
                codes.append(mono + (None,) * (3 - len(mono)))
        vals = evaluate_many(coeff_exprs, 64)
        coef = np.array([complex(v.midpoint) for v in vals])
        n = self.nvars
        pad = 2 * n

        def enc(c):
            if c is None:
                return pad
            v, cj = decode(c)
            return v + n if cj else v

        f = np.array([[enc(c) for c in row] for row in codes], dtype=np.int64).reshape(-1, 3)
        return np.array(eq_idx, dtype=np.int64), coef, f

    def evaluate(self, x: np.ndarray, tags: set[str] | None = None) -> np.ndarray:
        """Complex residual of every equation at the assignment ``x``."""
        eq_idx, coef, f = self._compiled
        vals = np.concatenate([x, np.conj(x), [1.0]])
        t = coef * vals[f[:, 0]] * vals[f[:, 1]] * vals[f[:, 2]]
        m = len(self.equations)
        r = np.bincount(eq_idx, weights=t.real, minlength=m) + 1j * np.bincount(eq_idx, weights=t.imag, minlength=m)
        if tags is not None:
            mask = np.array([e.tag in tags for e in self.equations])
            return r[mask]
        return r

    def max_residual(self, x: np.ndarray, tags: set[str] | None = None) -> float:
        r = self.evaluate(x, tags)
        return float(np.abs(r).max()) if len(r) else 0.0

    def certified_residuals(self, values, prec: int = DEFAULT_PRECISION) -> list[Scalar]:
        """Ball enclosures of every equation at an exact (QExpr) or ball assignment."""
        exact = [v for v in values if isinstance(v, QExpr)]
        ev = iter(evaluate_many(exact, prec))
        balls = [next(ev).ball if isinstance(v, QExpr) else v.ball for v in values]
        coeffs = evaluate_many([c for e in self.equations for c in e.terms.values()], prec)
        out = []
        k = 0
        with working_precision(prec):
            conj = [b.conjugate() for b in balls]
            for e in self.equations:
                acc = acb(0)
                for mono in e.terms:
                    t = coeffs[k].ball
                    k += 1
                    for code in mono:
                        v, cj = decode(code)
                        t = t * (conj[v] if cj else balls[v])
                    acc += t
                out.append(Scalar(acc, prec))
        return out

    # -- conversion ------------------------------------------------------------
    def vector(self, u: Morphism, prec: int = 64) -> np.ndarray:
        m = u.evaluate(prec) if u.is_exact else u
        x = np.zeros(self.nvars, dtype=complex)
        for k, c in m.items():
            x[self.index[k]] = complex(c.midpoint)
        return x

    def morphism(self, x) -> Morphism:
        """Assignment (numeric array or list of QExpr) as a morphism."""
        ents = {}
        for k, v in zip(self.variables, x):
            ents[k] = v
        return Morphism(self.graph, "++", "++", ents, validate=False)


def _add(terms: dict, mono: Monomial, c: QExpr) -> None:
    mono = tuple(sorted(mono))
    prev = terms.get(mono)
    terms[mono] = c if prev is None else prev + c


def assemble_system(g: OrientedGraph) -> PolySystem:
    """(R1) both caps, (R2), (Hecke) and (R3) for U on ``g``."""
    variables = hom_basis(g, "++", "++")
    idx = {k: i for i, k in enumerate(variables)}
    q2 = qint(2)
    eqs: list[Equation] = []

    # (R1): linear, coefficients read off the cap composites applied to one-hot U
    caps = _cap_coefficients(g, variables)
    for side, table in caps:
        for key in hom_basis(g, "+", "+"):
            terms: dict = {}
            for v, c in table.get(key, ()):
                _add(terms, (v,), c)
            if key[0] == key[1]:
                _add(terms, (), -q2)
            eqs.append(Equation(f"R1{side}", key, terms))

    # (R2): x_{p,q} - conj(x_{q,p})
    for k in variables:
        p, q = k
        terms = {}
        _add(terms, (idx[k],), ONE)
        _add(terms, (conj_code(idx[(q, p)]),), rational(-1))
        eqs.append(Equation("R2", k, terms))

    # (Hecke): (U∘U)[p→r] - [2] U[p→r]
    out: dict[Path, list] = defaultdict(list)
    for (p, q), i in idx.items():
        out[p].append((q, i))
    for k in variables:
        p, r = k
        terms = {}
        for q, i in out[p]:
            j = idx.get((q, r))
            if j is not None:
                _add(terms, (i, j), ONE)
        _add(terms, (idx[k],), -q2)
        eqs.append(Equation("Hecke", k, terms))

    # (R3): A∘B∘A - A - (B∘A∘B - B) with A = U⊗id, B = id⊗U
    a_out, b_out = _r3_maps(g, variables, idx)
    for key in hom_basis(g, "+++", "+++"):
        P, Q = key
        terms = {}
        for R, v1 in a_out.get(P, ()):
            for S, v2 in b_out.get(R, ()):
                for Q2, v3 in a_out.get(S, ()):
                    if Q2 == Q:
                        _add(terms, (v1, v2, v3), ONE)
        for R, v1 in b_out.get(P, ()):
            for S, v2 in a_out.get(R, ()):
                for Q2, v3 in b_out.get(S, ()):
                    if Q2 == Q:
                        _add(terms, (v1, v2, v3), rational(-1))
        for Q2, v in a_out.get(P, ()):
            if Q2 == Q:
                _add(terms, (v,), rational(-1))
        for Q2, v in b_out.get(P, ()):
            if Q2 == Q:
                _add(terms, (v,), ONE)
        eqs.append(Equation("R3", key, terms))

    sys = PolySystem(g, variables, eqs)
    sys.check_well_formed()
    return sys


def _cap_coefficients(g, variables):
    """For each cap, map (p,q) ∈ Hom(+→+) basis to [(var, coeff)]."""
    plus, minus = identity(g, "+"), identity(g, "-")
    caps = (
        ("r", tensor(plus, ev(g, "+-")), tensor(plus, coev(g, "+-")), lambda u: tensor(u, minus)),
        ("l", tensor(ev(g, "-+"), plus), tensor(coev(g, "-+"), plus), lambda u: tensor(minus, u)),
    )
    out = []
    for side, top, bottom, widen in caps:
        table: dict = defaultdict(list)
        for v, k in enumerate(variables):
            one_hot = Morphism(g, "++", "++", {k: ONE}, validate=False)
            for key, c in compose_all(top, widen(one_hot), bottom).items():
                table[key].append((v, c))
        out.append((side, table))
    return out


def _r3_maps(g, variables, idx):
    """Sparse source→[(target, var)] maps of U⊗id₊ and id₊⊗U on +++ paths."""
    a_out: dict[Path, list] = defaultdict(list)
    b_out: dict[Path, list] = defaultdict(list)
    for (p, q) in variables:
        v = idx[(p, q)]
        for e in g.out_edges(p.end):
            tail = Path("+", p.end, (e,))
            a_out[p.concat(tail)].append((q.concat(tail), v))
        for e in g.in_edges(p.start):
            head = Path("+", e.src, (e,))
            b_out[head.concat(p)].append((head.concat(q), v))
    return a_out, b_out


# ---------------------------------------------------------------------------
# gauge
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaugeReport:
    before: tuple[int, ...]  # sizes of unitary blocks, one per parallel-edge family
    after: tuple[int, ...]
    pinned: tuple[tuple[Path, Path], ...]
    block: tuple[int, int] | None

    @staticmethod
    def _fmt(sizes) -> str:
        counts: dict[int, int] = {}
        for s in sizes:
            counts[s] = counts.get(s, 0) + 1
        parts = []
        for s in sorted(counts, reverse=True):
            n = counts[s]
            parts.append(f"U({s})" + (f"^{n}" if n > 1 else ""))
        return "⊕".join(parts)

    @property
    def before_text(self) -> str:
        return self._fmt(self.before)

    @property
    def after_text(self) -> str:
        return self._fmt(self.after)

    @property
    def torus_rank(self) -> int:
        return len(self.after) if all(s == 1 for s in self.after) else -1

    def to_json(self) -> dict:
        return {
            "before": self.before_text,
            "after": self.after_text,
            "pinned_entries": len(self.pinned),
            "block": list(self.block) if self.block else None,
        }


def edge_families(g: OrientedGraph) -> dict[tuple[int, int], list[Edge]]:
    fam: dict[tuple[int, int], list[Edge]] = defaultdict(list)
    for e in g.edges:
        fam[(e.src, e.dst)].append(e)
    return dict(fam)


def gauge_report(g: OrientedGraph) -> GaugeReport:
    sizes = tuple(sorted((len(es) for es in edge_families(g).values()), reverse=True))
    return GaugeReport(sizes, sizes, (), None)


def designated_block(g: OrientedGraph) -> tuple[int, int, list[Path]]:
    """The smallest block whose paths are one edge followed by a double edge."""
    for (s, t), es in sorted(edge_families(g).items()):
        if len(es) != 2:
            continue
        for e in g.in_edges(s):
            v = e.src
            paths = g.paths("++", v, t)
            if len(paths) == 2 and all(p.edges[1] in es for p in paths):
                return v, t, paths
    raise CellforgeError("graph has no designated multiplicity-2 block")


def gauge_fix(sys: PolySystem) -> PolySystem:
    """Pin the designated 2×2 block to diag([2], 0); reduces U(2) to U(1)⊕U(1)."""
    v1, v2, (pa, pb) = designated_block(sys.graph)
    q2 = qint(2)
    pins = {(pa, pa): q2, (pb, pb): lift(0), (pa, pb): lift(0), (pb, pa): lift(0)}
    eqs = list(sys.equations)
    pinned = dict(sys.pinned)
    for k, val in pins.items():
        i = sys.index[k]
        terms = {(i,): ONE, (): -val}
        eqs.append(Equation("gauge", k, terms))
        pinned[i] = val
    before = gauge_report(sys.graph).before
    after = tuple(sorted([1] * sum(before), reverse=True))
    report = GaugeReport(before, after, tuple(pins), (v1, v2))
    out = PolySystem(sys.graph, sys.variables, eqs, report, pinned)
    out.__dict__["index"] = sys.index
    return out
