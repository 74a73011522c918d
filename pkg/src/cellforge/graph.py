"""Oriented graphs with Frobenius–Perron data, and the bundled graph E₄¹².

Vertices are the integers used as subscripts of the cell-system weights.
Parallel edges are distinguished by labels (``α``/``β`` for the double edge
6→9 of E₄¹²); simple edges carry the empty label.

A path for a sign string s is a walk that follows an edge forward at each
``+`` and backward at each ``-``.  Paths sort lexicographically by start
vertex and then, step by step, by (edge source, edge target, label), which
for a fixed sign string is the same as ordering by (next vertex, label).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from .arith import DEFAULT_PRECISION, QExpr, Scalar, parse, qint, to_text
from .arith.qexpr import evaluate_many
from .data import SCHEMA_VERSION, load_json
from .errors import IntegrityError, ParseError

_LABEL_ALIASES = {"alpha": "α", "a": "α", "beta": "β", "b": "β"}


def normalize_signs(s: str) -> str:
    """Accept ASCII or typographic minus signs; return an ASCII sign string."""
    out = s.replace("−", "-").replace("–", "-")
    if any(ch not in "+-" for ch in out):
        raise ParseError(f"not a sign string: {s!r}")
    return out


class Edge(NamedTuple):
    src: int
    dst: int
    label: str = ""

    def __str__(self) -> str:
        return f"{self.src}>{self.dst}" + (f":{self.label}" if self.label else "")

    @classmethod
    def parse(cls, text: str) -> "Edge":
        body, _, label = text.partition(":")
        a, sep, b = body.partition(">")
        if not sep:
            raise ParseError(f"bad edge {text!r}")
        label = _LABEL_ALIASES.get(label, label)
        return cls(int(a), int(b), label)


class Path(NamedTuple):
    """A walk for a sign string: start vertex plus the edges traversed."""

    signs: str
    start: int
    edges: tuple[Edge, ...]

    @property
    def end(self) -> int:
        v = self.start
        for sign, e in zip(self.signs, self.edges):
            v = e.dst if sign == "+" else e.src
        return v

    def vertices(self) -> tuple[int, ...]:
        vs = [self.start]
        for sign, e in zip(self.signs, self.edges):
            vs.append(e.dst if sign == "+" else e.src)
        return tuple(vs)

    def concat(self, other: "Path") -> "Path":
        return Path(self.signs + other.signs, self.start, self.edges + other.edges)

    def __str__(self) -> str:
        if not self.edges:
            return f"({self.start})"
        parts = [str(self.start)]
        for sign, e in zip(self.signs, self.edges):
            arrow = "→" if sign == "+" else "←"
            nxt = e.dst if sign == "+" else e.src
            parts.append(f"{arrow}{'(' + e.label + ')' if e.label else ''}{nxt}")
        return "".join(parts)

    def to_json(self) -> list[str]:
        return [f"@{self.start}"] if not self.edges else [str(e) for e in self.edges]

    @classmethod
    def from_json(cls, signs: str, items: list[str]) -> "Path":
        if not signs:
            if len(items) != 1 or not items[0].startswith("@"):
                raise ParseError(f"empty path must be written ['@v'], got {items!r}")
            return cls("", int(items[0][1:]), ())
        edges = tuple(Edge.parse(t) for t in items)
        if len(edges) != len(signs):
            raise ParseError(f"path {items!r} does not match signs {signs!r}")
        start = edges[0].src if signs[0] == "+" else edges[0].dst
        path = cls(signs, start, edges)
        v = start
        for sign, e in zip(signs, edges):
            if (e.src if sign == "+" else e.dst) != v:
                raise ParseError(f"path {items!r} is not a walk for {signs!r}")
            v = e.dst if sign == "+" else e.src
        return path


@dataclass(frozen=True, eq=False)
class OrientedGraph:
    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    fp: dict[int, QExpr]
    labels: dict[int, str] = field(default_factory=dict)
    eigenvalue: QExpr = field(default_factory=lambda: qint(3))
    name: str = ""

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise IntegrityError("duplicate vertex ids")
        seen = set()
        for e in self.edges:
            if e.src not in vs or e.dst not in vs:
                raise IntegrityError(f"edge {e} uses an unknown vertex")
            if e in seen:
                raise IntegrityError(f"parallel edges must carry distinct labels: {e}")
            seen.add(e)
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))

    # -- structure ---------------------------------------------------------
    @cached_property
    def _out(self) -> dict[int, tuple[Edge, ...]]:
        out: dict[int, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            out[e.src].append(e)
        return {v: tuple(sorted(es, key=lambda e: (e.dst, e.label))) for v, es in out.items()}

    @cached_property
    def _in(self) -> dict[int, tuple[Edge, ...]]:
        inn: dict[int, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            inn[e.dst].append(e)
        return {v: tuple(sorted(es, key=lambda e: (e.src, e.label))) for v, es in inn.items()}

    def out_edges(self, v: int) -> tuple[Edge, ...]:
        return self._out[v]

    def in_edges(self, v: int) -> tuple[Edge, ...]:
        return self._in[v]

    def edges_between(self, a: int, b: int) -> tuple[Edge, ...]:
        return tuple(e for e in self._out[a] if e.dst == b)

    def edge(self, a: int, b: int, label: str = "") -> Edge:
        label = _LABEL_ALIASES.get(label, label)
        cands = self.edges_between(a, b)
        if label:
            cands = tuple(e for e in cands if e.label == label)
        if len(cands) != 1:
            raise KeyError(f"no unique edge {a}->{b} with label {label!r}")
        return cands[0]

    def adjacency(self) -> np.ndarray:
        """Adjacency matrix with multiplicity, rows/cols in vertex order."""
        idx = {v: i for i, v in enumerate(self.vertices)}
        a = np.zeros((len(self.vertices),) * 2, dtype=np.int64)
        for e in self.edges:
            a[idx[e.src], idx[e.dst]] += 1
        return a

    def paths(self, signs: str, frm: int | None = None, to: int | None = None) -> list[Path]:
        signs = normalize_signs(signs)
        cache = self.__dict__.setdefault("_path_cache", {})
        key = (signs, frm, to)
        hit = cache.get(key)
        if hit is not None:
            return list(hit)
        starts = self.vertices if frm is None else (frm,)
        result: list[Path] = []
        for v in starts:
            self._walk(signs, v, v, (), to, result)
        cache[key] = tuple(result)
        return result

    def _walk(self, signs, start, v, acc, to, out):
        depth = len(acc)
        if depth == len(signs):
            if to is None or v == to:
                out.append(Path(signs, start, acc))
            return
        if signs[depth] == "+":
            for e in self._out[v]:
                self._walk(signs, start, e.dst, acc + (e,), to, out)
        else:
            for e in self._in[v]:
                self._walk(signs, start, e.src, acc + (e,), to, out)

    # -- Frobenius–Perron data ------------------------------------------------
    def fp_values(self, prec: int = DEFAULT_PRECISION) -> dict[int, Scalar]:
        vals = evaluate_many([self.fp[v] for v in self.vertices], prec)
        return dict(zip(self.vertices, vals))

    def with_edges(self, edges: Iterable[Edge]) -> "OrientedGraph":
        return OrientedGraph(
            tuple(self.vertices), tuple(edges), dict(self.fp), dict(self.labels), self.eigenvalue, self.name
        )

    # -- JSON -----------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "vertices": [{"id": v, "label": self.labels.get(v, str(v))} for v in self.vertices],
            "edges": [{"src": e.src, "dst": e.dst, "label": e.label} for e in self.edges],
            "fp": [{"vertex": v, "expr": to_text(self.fp[v])} for v in self.vertices if v in self.fp],
            "eigenvalue": to_text(self.eigenvalue),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "OrientedGraph":
        try:
            vertices = tuple(int(v["id"]) for v in obj["vertices"])
            labels = {int(v["id"]): str(v.get("label", v["id"])) for v in obj["vertices"]}
            edges = tuple(
                Edge(int(e["src"]), int(e["dst"]), _LABEL_ALIASES.get(e.get("label", ""), e.get("label", "")))
                for e in obj["edges"]
            )
            fp = {int(item["vertex"]): parse(item["expr"]) for item in obj.get("fp", [])}
            eig = parse(obj["eigenvalue"]) if "eigenvalue" in obj else qint(3)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed graph JSON: {exc}") from exc
        return cls(vertices, edges, fp, labels, eig, str(obj.get("name", "")))


def fp_residuals(g: OrientedGraph, prec: int = DEFAULT_PRECISION) -> list[tuple[str, int, Scalar]]:
    """Per-vertex residuals of A·λ = d·λ ("out") and Aᵀ·λ = d·λ ("in")."""
    if set(g.fp) != set(g.vertices):
        raise IntegrityError("graph has no complete Frobenius–Perron vector")
    lam = g.fp_values(prec)
    d = g.eigenvalue.evaluate(prec)
    res = []
    for v in g.vertices:
        out = sum((lam[e.dst] for e in g.out_edges(v)), Scalar(0, prec))
        inn = sum((lam[e.src] for e in g.in_edges(v)), Scalar(0, prec))
        res.append(("out", v, out - d * lam[v]))
        res.append(("in", v, inn - d * lam[v]))
    return res


def fp_residual(g: OrientedGraph, prec: int = DEFAULT_PRECISION) -> Scalar:
    """|residual| ball of the worst vertex equation (either orientation)."""
    worst = max(fp_residuals(g, prec), key=lambda item: item[2].abs_upper())
    return abs(worst[2])


def check_fp_positive(g: OrientedGraph, prec: int = DEFAULT_PRECISION) -> bool:
    return all(v.is_real() and bool(v.ball.real > 0) for v in g.fp_values(prec).values())


def load_graph(path=None) -> OrientedGraph:
    return OrientedGraph.from_json(load_json(path or "e412.json"))


def e412() -> OrientedGraph:
    """The bundled graph E₄¹² (11 vertices, 25 edges, one double edge)."""
    return _E412_CACHE.get()


class _Cache:
    def __init__(self):
        self._g = None
        self._key = None

    def get(self) -> OrientedGraph:
        from .data import data_dir

        key = str(data_dir())
        if self._g is None or key != self._key:
            self._g = load_graph("e412.json")
            self._key = key
        return self._g


_E412_CACHE = _Cache()
