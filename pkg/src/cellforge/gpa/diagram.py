"""A small expression language for composites in oGPA.

Text form::

    comp(a, b, ...)      a ∘ b ∘ ...   (rightmost applied first)
    tens(a, b, ...)      a ⊗ b ⊗ ...
    dag(a)  rot(a)       dagger, one-click rotation on Hom(- → ++)
    id("+-")  ev("+-")  coev("-+")
    scale("<QExpr text>", a)   add(a, b, ...)   sub(a, b)   neg(a)
    NAME                 a generator supplied by the caller

Relations are stored as data in this form, so correcting a transcription
never requires touching code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from ..arith import QExpr, parse as parse_qexpr, rational, to_text
from ..errors import ParseError, TypeMismatchError
from ..graph import OrientedGraph, normalize_signs
from . import morphism as M


class DiagramExpr:
    def to_text(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class Gen(DiagramExpr):
    name: str

    def to_text(self):
        return self.name


@dataclass(frozen=True)
class Id(DiagramExpr):
    signs: str

    def to_text(self):
        return f'id("{self.signs}")'


@dataclass(frozen=True)
class Ev(DiagramExpr):
    pair: str

    def to_text(self):
        return f'ev("{self.pair}")'


@dataclass(frozen=True)
class Coev(DiagramExpr):
    pair: str

    def to_text(self):
        return f'coev("{self.pair}")'


@dataclass(frozen=True)
class Comp(DiagramExpr):
    items: tuple[DiagramExpr, ...]

    def to_text(self):
        return "comp(" + ", ".join(i.to_text() for i in self.items) + ")"


@dataclass(frozen=True)
class Tens(DiagramExpr):
    items: tuple[DiagramExpr, ...]

    def to_text(self):
        return "tens(" + ", ".join(i.to_text() for i in self.items) + ")"


@dataclass(frozen=True)
class Dag(DiagramExpr):
    arg: DiagramExpr

    def to_text(self):
        return f"dag({self.arg.to_text()})"


@dataclass(frozen=True)
class Rot(DiagramExpr):
    arg: DiagramExpr

    def to_text(self):
        return f"rot({self.arg.to_text()})"


@dataclass(frozen=True, eq=False)
class Scale(DiagramExpr):
    coeff: QExpr
    arg: DiagramExpr

    def to_text(self):
        return f'scale("{to_text(self.coeff)}", {self.arg.to_text()})'


@dataclass(frozen=True)
class Sum(DiagramExpr):
    items: tuple[DiagramExpr, ...]

    def to_text(self):
        return "add(" + ", ".join(i.to_text() for i in self.items) + ")"


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOK = re.compile(r'\s*(?:([A-Za-z_][A-Za-z_0-9]*)|"([^"]*)"|(.))')
_FUNCS = {"comp", "tens", "dag", "rot", "id", "ev", "coev", "scale", "add", "sub", "neg"}


class _P:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOK.match(stripped, pos)
            if m.group(1):
                self.toks.append(("name", m.group(1)))
            elif m.group(2) is not None:
                self.toks.append(("str", m.group(2)))
            else:
                ch = m.group(3)
                if ch not in "(),":
                    raise ParseError(f"unexpected {ch!r} in diagram {text!r}")
                self.toks.append(("op", ch))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "")

    def take(self, kind, value=None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or kind!r} at token {self.i} of diagram {self.text!r}")
        self.i += 1
        return tok[1]

    def args(self) -> list[DiagramExpr]:
        self.take("op", "(")
        out = [self.expr()]
        while self.peek() == ("op", ","):
            self.i += 1
            out.append(self.expr())
        self.take("op", ")")
        return out

    def string_arg(self) -> str:
        self.take("op", "(")
        s = self.take("str")
        self.take("op", ")")
        return s

    def expr(self) -> DiagramExpr:
        name = self.take("name")
        if name not in _FUNCS or self.peek() != ("op", "("):
            return Gen(name)
        if name in ("id", "ev", "coev"):
            signs = normalize_signs(self.string_arg())
            return {"id": Id, "ev": Ev, "coev": Coev}[name](signs)
        if name == "scale":
            self.take("op", "(")
            coeff = parse_qexpr(self.take("str"))
            self.take("op", ",")
            arg = self.expr()
            self.take("op", ")")
            return Scale(coeff, arg)
        args = self.args()
        if name in ("dag", "rot", "neg"):
            if len(args) != 1:
                raise ParseError(f"{name} takes one argument in {self.text!r}")
            if name == "neg":
                return Scale(rational(-1), args[0])
            return Dag(args[0]) if name == "dag" else Rot(args[0])
        if name == "sub":
            if len(args) != 2:
                raise ParseError(f"sub takes two arguments in {self.text!r}")
            return Sum((args[0], Scale(rational(-1), args[1])))
        cls = {"comp": Comp, "tens": Tens, "add": Sum}[name]
        return args[0] if len(args) == 1 else cls(tuple(args))


def parse_diagram(text: str) -> DiagramExpr:
    p = _P(text)
    d = p.expr()
    if p.i != len(p.toks):
        raise ParseError(f"trailing input in diagram {text!r}")
    return d


# ---------------------------------------------------------------------------
# typing and evaluation
# ---------------------------------------------------------------------------


def infer_type(d: DiagramExpr, types: Mapping[str, tuple[str, str]]) -> tuple[str, str]:
    """Return (source, target) of ``d`` or raise naming the failing subterm."""
    if isinstance(d, Gen):
        if d.name not in types:
            raise TypeMismatchError(f"unbound generator {d.name!r}")
        return types[d.name]
    if isinstance(d, Id):
        return (d.signs, d.signs)
    if isinstance(d, Ev):
        _check_pair(d)
        return (d.pair, "")
    if isinstance(d, Coev):
        _check_pair(d)
        return ("", d.pair)
    if isinstance(d, Dag):
        s, t = infer_type(d.arg, types)
        return (t, s)
    if isinstance(d, Rot):
        st = infer_type(d.arg, types)
        if st != ("-", "++"):
            raise TypeMismatchError(f"rot needs Hom('-' → '++') but {d.arg} has Hom{st}")
        return st
    if isinstance(d, Scale):
        return infer_type(d.arg, types)
    if isinstance(d, Comp):
        ts = [infer_type(i, types) for i in d.items]
        for (s_outer, _), (_, t_inner), inner in zip(ts, ts[1:], d.items[1:]):
            if s_outer != t_inner:
                raise TypeMismatchError(f"in {d}: {inner} has target {t_inner!r} but next map expects {s_outer!r}")
        return (ts[-1][0], ts[0][1])
    if isinstance(d, Tens):
        ts = [infer_type(i, types) for i in d.items]
        return ("".join(s for s, _ in ts), "".join(t for _, t in ts))
    if isinstance(d, Sum):
        ts = [infer_type(i, types) for i in d.items]
        for t, item in zip(ts[1:], d.items[1:]):
            if t != ts[0]:
                raise TypeMismatchError(f"in {d}: summand {item} has Hom{t}, expected Hom{ts[0]}")
        return ts[0]
    raise TypeError(f"unknown diagram node {type(d).__name__}")


def _check_pair(d):
    if d.pair not in ("+-", "-+"):
        raise TypeMismatchError(f"{d} needs the pair '+-' or '-+'")


def eval_diagram(
    d: DiagramExpr,
    bindings: Mapping[str, "M.Morphism"],
    graph: OrientedGraph | None = None,
    prec: int | None = None,
) -> "M.Morphism":
    """Evaluate ``d`` with generators taken from ``bindings``.

    When ``prec`` is given, all generators and structure maps are evaluated to
    balls at that precision before composing (fast numeric path).
    """
    if graph is None:
        if not bindings:
            raise TypeMismatchError("eval_diagram needs a graph when no generators are bound")
        graph = next(iter(bindings.values())).graph
    infer_type(d, {k: v.hom_type for k, v in bindings.items()})
    if prec is not None:
        bindings = {k: v.evaluate(prec) for k, v in bindings.items()}
    cache: dict[int, M.Morphism] = {}
    return _eval(d, bindings, graph, prec, cache)


def _leaf(m: "M.Morphism", prec):
    return m.evaluate(prec) if prec is not None else m


def _eval(d, b, graph, prec, cache):
    key = id(d)
    if key in cache:
        return cache[key]
    if isinstance(d, Gen):
        out = b[d.name]
    elif isinstance(d, Id):
        out = _leaf(M.identity(graph, d.signs), prec)
    elif isinstance(d, Ev):
        out = _leaf(M.ev(graph, d.pair), prec)
    elif isinstance(d, Coev):
        out = _leaf(M.coev(graph, d.pair), prec)
    elif isinstance(d, Dag):
        out = M.dagger(_eval(d.arg, b, graph, prec, cache))
    elif isinstance(d, Rot):
        out = M.rotate(_eval(d.arg, b, graph, prec, cache))
    elif isinstance(d, Scale):
        c = d.coeff.evaluate(prec) if prec is not None else d.coeff
        out = M.scale(c, _eval(d.arg, b, graph, prec, cache))
    elif isinstance(d, Comp):
        out = M.compose_all(*[_eval(i, b, graph, prec, cache) for i in d.items])
    elif isinstance(d, Tens):
        out = M.tensor_all(*[_eval(i, b, graph, prec, cache) for i in d.items])
    elif isinstance(d, Sum):
        out = M.add(*[_eval(i, b, graph, prec, cache) for i in d.items])
    else:
        raise TypeError(f"unknown diagram node {type(d).__name__}")
    cache[key] = out
    return out
