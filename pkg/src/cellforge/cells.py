"""The cell system W on E₄¹², the Hecke element U = W∘W†, and Boltzmann blocks.

A labeled triangle is a triple of edges (a→b, b→c, c→a).  Its weight
W_{a,b,c} is the coefficient of the basis element

    ( a ← c  along c→a ,  a → b → c  along a→b, b→c )

of Hom(- → ++).  Only 21 weights are stored; the rest follow from the
rotational rule W_{a,b,c} = √(λ_b/λ_c)·W_{b,c,a}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .arith import DEFAULT_PRECISION, DEFAULT_TOLERANCE, QExpr, Scalar, parse, qint, sqrt, to_text
from .arith.qexpr import evaluate_many
from .data import SCHEMA_VERSION, load_json
from .errors import CellforgeError, IntegrityError, ParseError
from .gpa import Morphism, compose, dagger, hom_basis
from .graph import Edge, OrientedGraph, Path, e412, load_graph

Triangle = tuple[Edge, Edge, Edge]


class EmptyBlockError(CellforgeError, KeyError):
    """No length-2 path joins the requested vertices."""


def triangle_vertices(t: Triangle) -> tuple[int, int, int]:
    return (t[0].src, t[1].src, t[2].src)


def triangle_str(t: Triangle) -> str:
    a, b, c = triangle_vertices(t)
    labels = "".join(e.label for e in t)
    return f"W[{a},{b},{c}]" + (f"({labels})" if labels else "")


def rotate_triangle(t: Triangle) -> Triangle:
    """(a,b,c) ↦ (b,c,a)."""
    return (t[1], t[2], t[0])


def triangle_key(t: Triangle) -> tuple[Path, Path]:
    e_ab, e_bc, e_ca = t
    a = e_ab.src
    return (Path("-", a, (e_ca,)), Path("++", a, (e_ab, e_bc)))


def key_triangle(key: tuple[Path, Path]) -> Triangle:
    p, q = key
    return (q.edges[0], q.edges[1], p.edges[0])


def all_triangles(graph: OrientedGraph) -> list[Triangle]:
    """Every labeled triangle, in the order of the Hom(- → ++) basis."""
    return [key_triangle(k) for k in hom_basis(graph, "-", "++")]


@dataclass(frozen=True, eq=False)
class CellSystem:
    graph: OrientedGraph
    weights: Mapping[Triangle, QExpr]
    generators: tuple[Triangle, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(self.weights))

    def __getitem__(self, t: Triangle) -> QExpr:
        return self.weights[t]

    def __len__(self) -> int:
        return len(self.weights)

    def weight(self, a: int, b: int, c: int, label: str = "") -> QExpr:
        """W_{a,b,c}; ``label`` picks the branch when the triangle uses the double edge."""
        cands = [t for t in self.weights if triangle_vertices(t) == (a, b, c)]
        if label:
            cands = [t for t in cands if label in {e.label for e in t}]
        if len(cands) != 1:
            raise KeyError(f"no unique triangle ({a},{b},{c}) with label {label!r}")
        return self.weights[cands[0]]

    def evaluate(self, prec: int = DEFAULT_PRECISION) -> dict[Triangle, Scalar]:
        ts = list(self.weights)
        return dict(zip(ts, evaluate_many([self.weights[t] for t in ts], prec)))

    def to_json(self, closed: bool = True) -> dict:
        ts = list(self.weights) if closed or not self.generators else list(self.generators)
        gens = []
        for t in ts:
            a, b, c = triangle_vertices(t)
            item: dict = {"a": a, "b": b, "c": c}
            labels = [e.label for e in t if e.label]
            if labels:
                item["edge_label"] = labels[0]
            item["coeff"] = to_text(self.weights[t])
            gens.append(item)
        return {
            "schema": SCHEMA_VERSION,
            "graph_ref": "e412.json",
            "generators": gens,
            "closure": "closed" if closed else "rotational",
        }


def _resolve_triangle(graph: OrientedGraph, a: int, b: int, c: int, label: str) -> Triangle:
    """Find the triangle a→b→c→a; ``label`` selects among parallel edges."""
    out = []
    for e1 in graph.edges_between(a, b):
        for e2 in graph.edges_between(b, c):
            for e3 in graph.edges_between(c, a):
                t = (e1, e2, e3)
                if label and label not in {e.label for e in t}:
                    continue
                out.append(t)
    if len(out) != 1:
        raise IntegrityError(f"generator ({a},{b},{c}) label {label!r} matches {len(out)} triangles")
    return out[0]


def close_rotationally(graph: OrientedGraph, gens: Mapping[Triangle, QExpr]) -> dict[Triangle, QExpr]:
    """Extend generator weights to whole rotation orbits."""
    lam = graph.fp
    weights: dict[Triangle, QExpr] = {}
    for t, w in gens.items():
        a, b, c = triangle_vertices(t)
        orbit = {
            t: w,
            rotate_triangle(t): sqrt(lam[c] / lam[b]) * w,
            rotate_triangle(rotate_triangle(t)): sqrt(lam[a] / lam[b]) * w,
        }
        for s, v in orbit.items():
            if s in weights:
                raise IntegrityError(f"{triangle_str(s)} is generated twice")
            weights[s] = v
    return weights


def closure_residuals(c: CellSystem, prec: int = DEFAULT_PRECISION) -> list[tuple[Triangle, Scalar]]:
    """W_{a,b,c} - √(λ_b/λ_c)·W_{b,c,a} for every triangle."""
    lam = c.graph.fp
    ts = list(c.weights)
    exprs = []
    for t in ts:
        _, b, cc = triangle_vertices(t)
        exprs.append(c.weights[t] - sqrt(lam[b] / lam[cc]) * c.weights[rotate_triangle(t)])
    return list(zip(ts, evaluate_many(exprs, prec)))


def check_integrity(c: CellSystem, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> None:
    expected = set(all_triangles(c.graph))
    got = set(c.weights)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise IntegrityError(
            f"support mismatch: {len(missing)} triangles missing, {len(extra)} not triangles of the graph"
        )
    for t, r in closure_residuals(c, prec):
        if not r.certifies_zero(tol):
            raise IntegrityError(f"closure fails at {triangle_str(t)}: residual {r}")


def cell_system_from_json(obj: dict, graph: OrientedGraph | None = None, check: bool = True) -> CellSystem:
    try:
        if graph is None:
            graph = load_graph(obj.get("graph_ref", "e412.json"))
        closure = obj.get("closure", "rotational")
        gens: dict[Triangle, QExpr] = {}
        for item in obj["generators"]:
            t = _resolve_triangle(graph, int(item["a"]), int(item["b"]), int(item["c"]), item.get("edge_label", ""))
            if t in gens:
                raise IntegrityError(f"duplicate entry {triangle_str(t)}")
            gens[t] = parse(item["coeff"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed cell-system JSON: {exc}") from exc
    if closure == "rotational":
        weights = close_rotationally(graph, gens)
        generators = tuple(gens)
    elif closure == "closed":
        weights, generators = gens, ()
    else:
        raise ParseError(f"unknown closure {closure!r}")
    cs = CellSystem(graph, weights, generators)
    if check:
        check_integrity(cs)
    return cs


def load_w(path=None) -> CellSystem:
    """The bundled cell system: 21 generators closed to 63 triangle weights."""
    obj = load_json(path or "w_e412.json")
    graph = e412() if path is None and obj.get("graph_ref") == "e412.json" else None
    return cell_system_from_json(obj, graph)


def as_morphism(c: CellSystem) -> Morphism:
    """W as an element of Hom(- → ++), zero weights kept explicitly."""
    return Morphism(c.graph, "-", "++", {triangle_key(t): w for t, w in c.weights.items()})


def from_morphism(w: Morphism) -> CellSystem:
    if w.hom_type != ("-", "++"):
        raise IntegrityError(f"a cell system lives in Hom('-' → '++'), not Hom{w.hom_type}")
    return CellSystem(w.graph, {key_triangle(k): v for k, v in w.items()})


def build_u(c: CellSystem | Morphism) -> Morphism:
    """U = W ∘ W† in Hom(++ → ++)."""
    w = as_morphism(c) if isinstance(c, CellSystem) else c
    return compose(w, dagger(w))


# ---------------------------------------------------------------------------
# Boltzmann blocks
# ---------------------------------------------------------------------------


def path_label(p: Path) -> str:
    """Middle vertex of a length-2 path, with the label of any labeled edge."""
    mid = p.vertices()[1]
    labels = "".join(e.label for e in p.edges)
    return f"{mid}^{labels}" if labels else str(mid)


@dataclass(frozen=True, eq=False)
class BoltzmannBlock:
    """U restricted to length-2 paths v1 → · → v2; rows index the target path."""

    v1: int
    v2: int
    paths: tuple[Path, ...]
    matrix: tuple[tuple[object, ...], ...]

    @property
    def size(self) -> int:
        return len(self.paths)

    @property
    def labels(self) -> list[str]:
        return [path_label(p) for p in self.paths]

    def __getitem__(self, ij: tuple[int, int]):
        i, j = ij
        return self.matrix[i][j]

    def evaluate(self, prec: int = DEFAULT_PRECISION) -> "BoltzmannBlock":
        flat = [x for row in self.matrix for x in row]
        exact = [x for x in flat if isinstance(x, QExpr)]
        vals = iter(evaluate_many(exact, prec))
        out = [next(vals) if isinstance(x, QExpr) else x.with_precision(prec) for x in flat]
        n = self.size
        return BoltzmannBlock(self.v1, self.v2, self.paths, tuple(tuple(out[i * n : (i + 1) * n]) for i in range(n)))

    def numeric(self, prec: int = DEFAULT_PRECISION):
        import numpy as np

        ev = self.evaluate(prec)
        return np.array([[complex(x.midpoint) for x in row] for row in ev.matrix])

    def trace(self, prec: int = DEFAULT_PRECISION) -> Scalar:
        ev = self.evaluate(prec)
        return sum((ev.matrix[i][i] for i in range(self.size)), Scalar(0, prec))

    def hermiticity_defect(self, prec: int = DEFAULT_PRECISION) -> Scalar:
        ev = self.evaluate(prec)
        worst = Scalar(0, prec)
        for i in range(self.size):
            for j in range(self.size):
                d = abs(ev.matrix[i][j] - ev.matrix[j][i].conj())
                if d.abs_upper() > worst.abs_upper():
                    worst = d
        return worst

    def to_json(self, prec: int = DEFAULT_PRECISION) -> dict:
        cells = []
        for row in self.matrix:
            out = []
            for x in row:
                if isinstance(x, QExpr):
                    out.append(to_text(x))
                else:
                    out.append({"re": x.real.str(prec // 4), "im": x.imag.str(prec // 4)})
            cells.append(out)
        return {"v1": self.v1, "v2": self.v2, "basis": self.labels, "rows": cells}


def block(u: Morphism, v1: int, v2: int) -> BoltzmannBlock:
    if u.hom_type != ("++", "++"):
        raise IntegrityError(f"block needs U in Hom('++' → '++'), not Hom{u.hom_type}")
    paths = tuple(u.graph.paths("++", v1, v2))
    if not paths:
        raise EmptyBlockError(f"no length-2 path from {v1} to {v2}")
    rows = tuple(tuple(u.get((src, tgt)) for src in paths) for tgt in paths)
    return BoltzmannBlock(v1, v2, paths, rows)


def nonempty_blocks(u: Morphism) -> list[BoltzmannBlock]:
    g = u.graph
    out = []
    for v1 in g.vertices:
        for v2 in g.vertices:
            if g.paths("++", v1, v2):
                out.append(block(u, v1, v2))
    return out


# ---------------------------------------------------------------------------
# printed blocks (test fixtures)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PublishedBlock:
    v1: int
    v2: int
    basis: tuple[str, ...]
    rows: tuple[tuple[QExpr, ...], ...]
    resolved: tuple[tuple[int, int], ...]


def published_blocks(path=None) -> list[PublishedBlock]:
    obj = load_json(path or "published_blocks.json")
    out = []
    for b in obj["blocks"]:
        rows = tuple(tuple(parse(x) for x in row) for row in b["rows"])
        res = tuple((r["row"] - 1, r["col"] - 1) for r in b.get("resolved", ()))
        out.append(PublishedBlock(b["v1"], b["v2"], tuple(b["basis"]), rows, res))
    return out


def compare_block(
    computed: BoltzmannBlock, printed: PublishedBlock, prec: int = DEFAULT_PRECISION
) -> list[tuple[int, int, Scalar]]:
    """|computed - printed| per entry, after checking the basis labels agree."""
    if tuple(computed.labels) != tuple(_norm_label(x) for x in printed.basis):
        raise IntegrityError(f"basis mismatch: {computed.labels} vs {list(printed.basis)}")
    ev = computed.evaluate(prec)
    flat = [x for row in printed.rows for x in row]
    vals = evaluate_many(flat, prec)
    n = computed.size
    return [(i, j, abs(ev.matrix[i][j] - vals[i * n + j])) for i in range(n) for j in range(n)]


def printed_idempotency_defect(printed: PublishedBlock, prec: int = DEFAULT_PRECISION) -> Scalar:
    """Largest |M² - [2]·M| entry of a printed block M.

    Every block of U satisfies this relation, so a printed block whose defect
    certifiably exceeds zero cannot be a block of any solution: at least one of
    its entries is misprinted.
    """
    n = len(printed.rows)
    vals = evaluate_many([x for row in printed.rows for x in row] + [qint(2)], prec)
    m = [vals[i * n : (i + 1) * n] for i in range(n)]
    two = vals[-1]
    worst = Scalar(0, prec)
    for i in range(n):
        for j in range(n):
            sq = sum((m[i][k] * m[k][j] for k in range(n)), Scalar(0, prec))
            d = abs(sq - two * m[i][j])
            if (d.abs_lower(), d.abs_upper()) > (worst.abs_lower(), worst.abs_upper()):
                worst = d
    return worst


def _norm_label(x: str) -> str:
    return x.replace("alpha", "α").replace("beta", "β")


def orbit_generators(c: CellSystem) -> list[Triangle]:
    """One representative per rotation orbit (the stored generators if any)."""
    if c.generators:
        return list(c.generators)
    seen: set[Triangle] = set()
    reps = []
    for t in all_triangles(c.graph):
        if t in seen:
            continue
        reps.append(t)
        seen.update({t, rotate_triangle(t), rotate_triangle(rotate_triangle(t))})
    return reps

