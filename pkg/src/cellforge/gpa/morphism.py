"""Morphisms of the oriented graph planar algebra oGPA(Γ).

A basis element of Hom(s → t) is a pair (p, q) where p is an s-path, q is a
t-path, and both share their start and end vertices.  A morphism is a sparse
map from such pairs to coefficients.  Thinking of (p, q) as the matrix unit
|q⟩⟨p|, composition and tensor product are

    (q, r) ∘ (p, q) = (p, r),      (p, q) ⊗ (p', q') = (pp', qq')

(the tensor vanishing unless the paths chain), and the dagger is the
anti-linear extension of (p, q)† = (q, p).

Coefficients are exact :class:`~cellforge.arith.QExpr` values or certified
:class:`~cellforge.arith.Scalar` balls.  When both kinds meet, exact
coefficients are evaluated at the ball's precision, so composites inherit the
weaker of the two.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from numbers import Number
from typing import Callable, Iterable, Iterator, Mapping

from flint import acb

from ..arith import ONE, ZERO, QExpr, Scalar, lift, parse, qsum, sqrt, to_text
from ..arith.qexpr import evaluate_many
from ..arith.scalar import working_precision
from ..errors import ParseError, TypeMismatchError
from ..graph import OrientedGraph, Path, normalize_signs

Coeff = "QExpr | Scalar"
Key = tuple[Path, Path]


def _lift_coeff(c):
    if isinstance(c, (QExpr, Scalar)):
        return c
    if isinstance(c, (int, Fraction)):
        return lift(c)
    if isinstance(c, Number):
        return Scalar(c, 53)
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class Morphism:
    """An element of Hom(source → target) in oGPA(graph)."""

    __slots__ = ("graph", "source", "target", "_entries", "_sorted", "_prec")

    def __init__(
        self,
        graph: OrientedGraph,
        source: str,
        target: str,
        entries: Mapping[Key, object] | None = None,
        *,
        validate: bool = True,
    ):
        self.graph = graph
        self.source = normalize_signs(source)
        self.target = normalize_signs(target)
        ents: dict[Key, object] = {}
        for key, c in (entries or {}).items():
            if validate:
                self._check_key(key)
            ents[key] = _lift_coeff(c)
        self._entries = ents
        self._sorted = None
        self._prec = _numeric_precision(ents.values())

    def _check_key(self, key: Key) -> None:
        p, q = key
        if p.signs != self.source or q.signs != self.target:
            raise TypeMismatchError(f"pair ({p}, {q}) does not live in Hom({self.source!r} → {self.target!r})")
        if p.start != q.start or p.end != q.end:
            raise TypeMismatchError(f"pair ({p}, {q}) violates the endpoint condition")

    # -- mapping interface ---------------------------------------------------
    def items(self) -> list[tuple[Key, object]]:
        if self._sorted is None:
            self._sorted = sorted(self._entries.items(), key=lambda kv: kv[0])
        return list(self._sorted)

    def keys(self) -> list[Key]:
        return [k for k, _ in self.items()]

    def __iter__(self) -> Iterator[Key]:
        return iter(self.keys())

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __getitem__(self, key: Key):
        return self._entries[key]

    def get(self, key: Key, default=ZERO):
        return self._entries.get(key, default)

    @property
    def hom_type(self) -> tuple[str, str]:
        return (self.source, self.target)

    @property
    def is_exact(self) -> bool:
        return self._prec is None

    @property
    def precision(self) -> int | None:
        """Working precision of numeric coefficients (None when exact)."""
        return self._prec

    def nonzero_count(self, prec: int = 128) -> int:
        m = self.evaluate(prec) if self.is_exact else self
        return sum(1 for _, c in m.items() if not c.ball.is_zero())

    # -- conversion ------------------------------------------------------------
    def evaluate(self, prec: int) -> "Morphism":
        """All coefficients as balls at ``prec`` bits (shared evaluation memo)."""
        keys = list(self._entries)
        exact_keys = [k for k in keys if isinstance(self._entries[k], QExpr)]
        vals = evaluate_many([self._entries[k] for k in exact_keys], prec)
        ents = dict(self._entries)
        for k, v in zip(exact_keys, vals):
            ents[k] = v
        for k in keys:
            c = ents[k]
            if isinstance(c, Scalar) and c.prec != prec:
                ents[k] = c.with_precision(prec)
        return Morphism(self.graph, self.source, self.target, ents, validate=False)

    def map_coeffs(self, fn: Callable) -> "Morphism":
        return Morphism(
            self.graph, self.source, self.target, {k: fn(c) for k, c in self._entries.items()}, validate=False
        )

    # -- algebra ---------------------------------------------------------------
    def __matmul__(self, other: "Morphism") -> "Morphism":
        return compose(self, other)

    def __add__(self, other: "Morphism") -> "Morphism":
        return add(self, other)

    def __sub__(self, other: "Morphism") -> "Morphism":
        return add(self, scale(-1, other))

    def __neg__(self) -> "Morphism":
        return scale(-1, self)

    def __rmul__(self, c) -> "Morphism":
        return scale(c, self)

    @property
    def dag(self) -> "Morphism":
        return dagger(self)

    def __repr__(self) -> str:
        kind = "exact" if self.is_exact else f"{self._prec}-bit"
        return f"Morphism({self.source!r} → {self.target!r}, {len(self)} entries, {kind})"

    # -- JSON --------------------------------------------------------------------
    def to_json(self, prec: int = 256) -> dict:
        entries = []
        for (p, q), c in self.items():
            item = {"p": p.to_json(), "q": q.to_json()}
            if isinstance(c, QExpr):
                item["coeff"] = to_text(c)
            else:
                item["re"] = c.real.str(prec // 4)
                item["im"] = c.imag.str(prec // 4)
            entries.append(item)
        return {"schema": 1, "source": self.source, "target": self.target, "entries": entries}

    @classmethod
    def from_json(cls, graph: OrientedGraph, obj: dict) -> "Morphism":
        try:
            s, t = normalize_signs(obj["source"]), normalize_signs(obj["target"])
            ents = {}
            for item in obj["entries"]:
                p = Path.from_json(s, item["p"])
                q = Path.from_json(t, item["q"])
                if "coeff" in item:
                    ents[(p, q)] = parse(item["coeff"])
                else:
                    ents[(p, q)] = Scalar(complex(float(item.get("re", 0)), float(item.get("im", 0))), 53)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed morphism JSON: {exc}") from exc
        return cls(graph, s, t, ents)


# ---------------------------------------------------------------------------
# coefficient domain handling
# ---------------------------------------------------------------------------


def _numeric_precision(values: Iterable) -> int | None:
    prec = None
    for c in values:
        if isinstance(c, Scalar):
            prec = c.prec if prec is None else max(prec, c.prec)
    return prec


def _common(*ms: Morphism) -> tuple[list[Morphism], int | None]:
    """Bring morphisms into one coefficient domain (exact or balls)."""
    precs = [m.precision for m in ms if m.precision is not None]
    if not precs:
        return list(ms), None
    prec = max(precs)
    return [m.evaluate(prec) if (m.precision != prec or _has_exact(m)) else m for m in ms], prec


def _has_exact(m: Morphism) -> bool:
    return any(isinstance(c, QExpr) for c in m._entries.values())


def _same_graph(*ms: Morphism) -> OrientedGraph:
    g = ms[0].graph
    for m in ms[1:]:
        if m.graph is not g and m.graph.edges != g.edges:
            raise TypeMismatchError("morphisms live on different graphs")
    return g


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def compose(g: Morphism, f: Morphism) -> Morphism:
    """g ∘ f (apply f first)."""
    if f.target != g.source:
        raise TypeMismatchError(
            f"cannot compose: target {f.target!r} of the first map differs from source {g.source!r}"
        )
    graph = _same_graph(f, g)
    (f, g), prec = _common(f, g)
    by_src: dict[Path, list] = defaultdict(list)
    for (q, r), c in g._entries.items():
        by_src[q].append((r, c))
    if prec is not None:
        acc: dict[Key, acb] = {}
        with working_precision(prec):
            for (p, q), c in f._entries.items():
                cv = c.ball
                for r, d in by_src.get(q, ()):
                    key = (p, r)
                    v = d.ball * cv
                    prev = acc.get(key)
                    acc[key] = v if prev is None else prev + v
        ents = {k: Scalar(v, prec) for k, v in acc.items()}
    else:
        terms: dict[Key, list] = defaultdict(list)
        for (p, q), c in f._entries.items():
            for r, d in by_src.get(q, ()):
                terms[(p, r)].append(d * c)
        ents = {k: qsum(ts) for k, ts in terms.items()}
    return Morphism(graph, f.source, g.target, ents, validate=False)


def compose_all(*ms: Morphism) -> Morphism:
    """compose_all(a, b, c) = a ∘ b ∘ c."""
    out = ms[-1]
    for m in reversed(ms[:-1]):
        out = compose(m, out)
    return out


def tensor(f: Morphism, g: Morphism) -> Morphism:
    """f ⊗ g: sign strings concatenate, paths concatenate when they chain."""
    graph = _same_graph(f, g)
    (f, g), prec = _common(f, g)
    by_start: dict[int, list] = defaultdict(list)
    for (p2, q2), d in g._entries.items():
        by_start[p2.start].append((p2, q2, d))
    ents: dict[Key, object] = {}
    if prec is not None:
        with working_precision(prec):
            for (p1, q1), c in f._entries.items():
                cv = c.ball
                for p2, q2, d in by_start.get(p1.end, ()):
                    ents[(p1.concat(p2), q1.concat(q2))] = Scalar(cv * d.ball, prec)
    else:
        for (p1, q1), c in f._entries.items():
            for p2, q2, d in by_start.get(p1.end, ()):
                ents[(p1.concat(p2), q1.concat(q2))] = c * d
    return Morphism(graph, f.source + g.source, f.target + g.target, ents, validate=False)


def tensor_all(*ms: Morphism) -> Morphism:
    out = ms[0]
    for m in ms[1:]:
        out = tensor(out, m)
    return out


def dagger(f: Morphism) -> Morphism:
    ents = {(q, p): c.conj() for (p, q), c in f._entries.items()}
    return Morphism(f.graph, f.target, f.source, ents, validate=False)


def scale(c, f: Morphism) -> Morphism:
    c = _lift_coeff(c)
    if isinstance(c, Scalar) or f.precision is not None:
        prec = max(c.prec if isinstance(c, Scalar) else 0, f.precision or 0)
        f = f.evaluate(prec) if _has_exact(f) or f.precision != prec else f
        cs = c if isinstance(c, Scalar) else c.evaluate(prec)
        return f.map_coeffs(lambda x: cs * x)
    return f.map_coeffs(lambda x: c * x)


def add(*ms: Morphism) -> Morphism:
    first = ms[0]
    for m in ms[1:]:
        if m.hom_type != first.hom_type:
            raise TypeMismatchError(f"cannot add Hom{first.hom_type} and Hom{m.hom_type}")
    graph = _same_graph(*ms)
    ms, prec = _common(*ms)
    terms: dict[Key, list] = defaultdict(list)
    for m in ms:
        for k, c in m._entries.items():
            terms[k].append(c)
    if prec is not None:
        ents = {}
        with working_precision(prec):
            for k, cs in terms.items():
                v = cs[0].ball
                for x in cs[1:]:
                    v = v + x.ball
                ents[k] = Scalar(v, prec)
    else:
        ents = {k: qsum(cs) for k, cs in terms.items()}
    return Morphism(graph, first.source, first.target, ents, validate=False)


def zero(graph: OrientedGraph, source: str, target: str) -> Morphism:
    return Morphism(graph, source, target, {})


def identity(graph: OrientedGraph, signs: str) -> Morphism:
    return Morphism(graph, signs, signs, {(p, p): ONE for p in graph.paths(signs)}, validate=False)


def _lam_ratio(graph: OrientedGraph, num: int, den: int) -> QExpr:
    return sqrt(graph.fp[num] / graph.fp[den])


def ev(graph: OrientedGraph, pair: str) -> Morphism:
    """ev_{(+,-)} : +- → ∅ or ev_{(-,+)} : -+ → ∅."""
    pair = normalize_signs(pair)
    ents = {}
    for e in graph.edges:
        if pair == "+-":
            v = e.src
            ents[(Path("+-", v, (e, e)), Path("", v, ()))] = _lam_ratio(graph, e.dst, e.src)
        elif pair == "-+":
            v = e.dst
            ents[(Path("-+", v, (e, e)), Path("", v, ()))] = _lam_ratio(graph, e.src, e.dst)
        else:
            raise TypeMismatchError(f"ev is defined for '+-' and '-+', not {pair!r}")
    return Morphism(graph, pair, "", ents, validate=False)


def coev(graph: OrientedGraph, pair: str) -> Morphism:
    """coev_{(+,-)} : ∅ → +- and coev_{(-,+)} : ∅ → -+ (daggers of ev)."""
    return dagger(ev(graph, pair))


def rotate(f: Morphism) -> Morphism:
    """One-click rotation of a morphism in Hom(- → ++).

    rot(f) = (g ⊗ id₊) ∘ (id₋ ⊗ coev₋₊) with g = (ev₋₊ ⊗ id₊) ∘ (id₋ ⊗ f).
    In coordinates this is W_{a,b,c} ↦ √(λ_b/λ_a)·W_{c,a,b}.
    """
    if f.hom_type != ("-", "++"):
        raise TypeMismatchError(f"rotate is defined on Hom('-' → '++'), not Hom{f.hom_type}")
    gr = f.graph
    g = compose(tensor(ev(gr, "-+"), identity(gr, "+")), tensor(identity(gr, "-"), f))
    return compose(tensor(g, identity(gr, "+")), tensor(identity(gr, "-"), coev(gr, "-+")))


def hom_basis(graph: OrientedGraph, source: str, target: str) -> list[Key]:
    """Endpoint-matched path pairs of Hom(source → target), sorted."""
    cache = graph.__dict__.setdefault("_hom_cache", {})
    key = (normalize_signs(source), normalize_signs(target))
    if key in cache:
        return list(cache[key])
    by_ends: dict[tuple[int, int], list[Path]] = defaultdict(list)
    for q in graph.paths(key[1]):
        by_ends[(q.start, q.end)].append(q)
    basis = [(p, q) for p in graph.paths(key[0]) for q in by_ends.get((p.start, p.end), ())]
    basis.sort()
    cache[key] = tuple(basis)
    return basis


def hom_dim(graph: OrientedGraph, source: str, target: str) -> int:
    return len(hom_basis(graph, source, target))


def gauge_transform(f: Morphism, phases: Mapping) -> Morphism:
    """Act by one phase per edge: (p, q) ↦ g(q)·conj(g(p))·(p, q).

    ``g(path)`` multiplies g_e over + steps and conj(g_e) over - steps.
    Missing edges default to phase 1.
    """
    phases = {e: _lift_coeff(v) for e, v in phases.items()}

    def g(path: Path):
        out = ONE
        for sign, e in zip(path.signs, path.edges):
            ph = phases.get(e)
            if ph is None:
                continue
            out = out * (ph if sign == "+" else ph.conj())
        return out

    ents = {}
    for (p, q), c in f._entries.items():
        ents[(p, q)] = g(q) * g(p).conj() * c
    return Morphism(f.graph, f.source, f.target, ents, validate=False)
