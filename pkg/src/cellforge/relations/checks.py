"""Certified checkers for relations stored as ``*.diagram`` files.

File format, one directive per line (``#`` starts a comment)::

    relation <display name>
    hom <source> <target>          ∅ stands for the empty sign string
    let <NAME> = <diagram>         evaluated in order, may use W, U and earlier lets
    lhs <diagram>
    rhs <diagram>                  lhs/rhs lines pair up in order; several pairs
                                   share one ambient Hom space

A relation passes when every coefficient of lhs - rhs certifies zero at the
tolerance, fails when some coefficient certainly exceeds it, and otherwise the
check is repeated at doubled precision up to a cap before being reported as
indeterminate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Mapping, Sequence

from ..arith import DEFAULT_PRECISION, DEFAULT_TOLERANCE, Scalar
from ..arith.scalar import to_arb, working_precision
from ..errors import ParseError
from ..gpa import Morphism, compose, dagger, eval_diagram, hom_basis, parse_diagram
from ..gpa.diagram import DiagramExpr, Gen, infer_type
from ..graph import normalize_signs

RELATIONS_DIR = FsPath(__file__).parent
PRECISION_CAP = 1024

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


@dataclass(frozen=True, eq=False)
class RelationEncoding:
    name: str
    source: str
    target: str
    lets: tuple[tuple[str, DiagramExpr], ...]
    pairs: tuple[tuple[DiagramExpr, DiagramExpr], ...]
    file: str = ""

    @property
    def hom_type(self) -> tuple[str, str]:
        return (self.source, self.target)

    def inputs(self) -> set[str]:
        """Generator names the caller must bind (W and/or U)."""
        bound = {name for name, _ in self.lets}
        used: set[str] = set()
        for _, d in self.lets:
            used |= _gens(d)
        for lhs, rhs in self.pairs:
            used |= _gens(lhs) | _gens(rhs)
        return used - bound

    def typecheck(self, types: Mapping[str, tuple[str, str]]) -> None:
        types = dict(types)
        for name, d in self.lets:
            types[name] = infer_type(d, types)
        for lhs, rhs in self.pairs:
            for side in (lhs, rhs):
                t = infer_type(side, types)
                if t != self.hom_type:
                    raise ParseError(f"{self.name}: side {side} has Hom{t}, expected Hom{self.hom_type}")


def _gens(d) -> set[str]:
    if isinstance(d, Gen):
        return {d.name}
    out: set[str] = set()
    for attr in ("arg", "items"):
        v = getattr(d, attr, None)
        if v is None:
            continue
        for child in v if isinstance(v, tuple) else (v,):
            out |= _gens(child)
    return out


def _signs(tok: str) -> str:
    return "" if tok in ("∅", "empty") else normalize_signs(tok)


def parse_relation(text: str, file: str = "") -> RelationEncoding:
    name = None
    hom = None
    lets: list[tuple[str, DiagramExpr]] = []
    lhs: list[DiagramExpr] = []
    rhs: list[DiagramExpr] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        where = f"{file or '<relation>'}:{lineno}"
        if head == "relation":
            name = rest
        elif head == "hom":
            parts = rest.split()
            if len(parts) != 2:
                raise ParseError(f"{where}: hom needs a source and a target")
            hom = (_signs(parts[0]), _signs(parts[1]))
        elif head == "let":
            var, eq, body = rest.partition("=")
            if not eq:
                raise ParseError(f"{where}: let needs NAME = diagram")
            lets.append((var.strip(), parse_diagram(body.strip())))
        elif head == "lhs":
            lhs.append(parse_diagram(rest))
        elif head == "rhs":
            rhs.append(parse_diagram(rest))
        else:
            raise ParseError(f"{where}: unknown directive {head!r}")
    if name is None or hom is None:
        raise ParseError(f"{file or '<relation>'}: missing relation or hom line")
    if not lhs or len(lhs) != len(rhs):
        raise ParseError(f"{file or '<relation>'}: lhs/rhs lines must pair up")
    return RelationEncoding(name, hom[0], hom[1], tuple(lets), tuple(zip(lhs, rhs)), file)


def load_relation(stem: str) -> RelationEncoding:
    path = RELATIONS_DIR / f"{stem}.diagram"
    return parse_relation(path.read_text(encoding="utf-8"), path.name)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    name: str
    count: int
    max_residual: Scalar
    worst: tuple | None
    status: str
    precision: int
    tolerance: object = DEFAULT_TOLERANCE
    residuals: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def summary(self) -> str:
        return f"{self.name:<8} {self.count:>5}  {self.max_residual.abs_upper():.3e}  {self.status}"

    def to_json(self, verbose: bool = False) -> dict:
        out = {
            "relation": self.name,
            "count": self.count,
            "max_residual_upper": self.max_residual.abs_upper(),
            "worst": None if self.worst is None else [str(self.worst[0]), str(self.worst[1])],
            "status": self.status,
            "precision": self.precision,
        }
        if verbose:
            out["residuals"] = [
                {"p": str(p), "q": str(q), "upper": r.abs_upper()} for (p, q), r in self.residuals
            ]
        return out


def _exceeds(r: Scalar, tol) -> bool:
    with working_precision(max(r.prec, 64)):
        return bool(r.ball.abs_lower() > to_arb(tol, r.prec))


def residuals(
    rel: RelationEncoding, bindings: Mapping[str, Morphism], prec: int
) -> list[tuple[tuple, Scalar]]:
    """|lhs - rhs| per ambient basis element, maximized over the relation's pairs."""
    graph = next(iter(bindings.values())).graph
    env = {k: v.evaluate(prec) for k, v in bindings.items()}
    for name, d in rel.lets:
        env[name] = eval_diagram(d, env, graph, prec)
    basis = hom_basis(graph, rel.source, rel.target)
    worst: dict[tuple, Scalar] = {}
    zero = Scalar(0, prec)
    for lhs, rhs in rel.pairs:
        a = eval_diagram(lhs, env, graph, prec)
        b = eval_diagram(rhs, env, graph, prec)
        for key in basis:
            r = abs(_num(a.get(key, zero), prec) - _num(b.get(key, zero), prec))
            if key not in worst or r.abs_upper() > worst[key].abs_upper():
                worst[key] = r
    return [(k, worst[k]) for k in basis]


def _num(c, prec):
    return c if isinstance(c, Scalar) else c.evaluate(prec)


def check_relation(
    rel: RelationEncoding,
    bindings: Mapping[str, Morphism],
    prec: int = DEFAULT_PRECISION,
    tol=DEFAULT_TOLERANCE,
    cap: int = PRECISION_CAP,
) -> CheckReport:
    missing = rel.inputs() - set(bindings)
    if missing:
        raise ParseError(f"{rel.name} needs generators {sorted(missing)}")
    rel.typecheck({k: v.hom_type for k, v in bindings.items()})
    graph = next(iter(bindings.values())).graph
    count = len(hom_basis(graph, rel.source, rel.target))
    p = prec
    while True:
        res = residuals(rel, bindings, p)
        if res:
            worst_key, worst = max(res, key=lambda kv: kv[1].abs_upper())
        else:
            worst_key, worst = None, Scalar(0, p)
        if all(r.certifies_zero(tol) for _, r in res):
            status = PASS
        elif any(_exceeds(r, tol) for _, r in res):
            status = FAIL
            worst_key, worst = max(res, key=lambda kv: kv[1].abs_lower())
        else:
            status = INDETERMINATE
        if status != INDETERMINATE or p * 2 > cap:
            return CheckReport(rel.name, count, worst, worst_key, status, p, tol, res)
        p *= 2


# ---------------------------------------------------------------------------
# named checks
# ---------------------------------------------------------------------------


def _w_bindings(w) -> dict[str, Morphism]:
    from ..cells import CellSystem, as_morphism

    return {"W": as_morphism(w) if isinstance(w, CellSystem) else w}


def check_rotation(w, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> CheckReport:
    return check_relation(load_relation("rotation"), _w_bindings(w), prec, tol)


def check_bigon(w, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> CheckReport:
    return check_relation(load_relation("bigon"), _w_bindings(w), prec, tol)


def check_square(w, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> CheckReport:
    return check_relation(load_relation("square"), _w_bindings(w), prec, tol)


def check_kuperberg(w, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> list[CheckReport]:
    return [check_rotation(w, prec, tol), check_bigon(w, prec, tol), check_square(w, prec, tol)]


HECKE_SUITE = ("r1", "r2", "hecke", "r3")
KW_AUX = ("ba", "ri", "unit")


def check_hecke_suite(
    u: Morphism, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE, skip: Sequence[str] = ()
) -> list[CheckReport]:
    return [check_relation(load_relation(s), {"U": u}, prec, tol) for s in HECKE_SUITE if s not in skip]


def check_kw_aux(w, u: Morphism | None = None, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> list[CheckReport]:
    b = _w_bindings(w)
    b["U"] = compose(b["W"], dagger(b["W"])) if u is None else u
    return [check_relation(load_relation(s), b, prec, tol) for s in KW_AUX]


def describe(rel: RelationEncoding) -> str:
    lines = [f"relation {rel.name}", f"hom {rel.source or '∅'} {rel.target or '∅'}"]
    lines += [f"let {n} = {d}" for n, d in rel.lets]
    for lhs, rhs in rel.pairs:
        lines += [f"lhs {lhs}", f"rhs {rhs}"]
    return "\n".join(lines)


__all__ = [
    "CheckReport",
    "FAIL",
    "INDETERMINATE",
    "PASS",
    "RelationEncoding",
    "check_bigon",
    "check_hecke_suite",
    "check_kuperberg",
    "check_kw_aux",
    "check_relation",
    "check_rotation",
    "check_square",
    "describe",
    "load_relation",
    "parse_relation",
    "residuals",
]
