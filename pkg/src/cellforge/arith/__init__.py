"""Exact expressions (QExpr) and certified complex balls (Scalar)."""

from __future__ import annotations

from .qexpr import (
    DEFAULT_LEVEL,
    ONE,
    Evaluator,
    ZERO,
    QExpr,
    conj,
    evaluate,
    evaluate_many,
    imag_part,
    inv,
    lift,
    node_count,
    qint,
    qsum,
    rational,
    real_part,
    sqrt,
    z,
    zeta,
)
from .scalar import (
    DEFAULT_PRECISION,
    DEFAULT_TOLERANCE,
    Scalar,
    max_abs_upper,
    working_precision,
)
from .text import parse, to_text
from .zroot import SELECTION as Z_SELECTION
from .zroot import z_value

eval = evaluate  # noqa: A001 - mirrors the documented operation name

__all__ = [
    "DEFAULT_LEVEL",
    "DEFAULT_PRECISION",
    "DEFAULT_TOLERANCE",
    "Evaluator",
    "ONE",
    "ZERO",
    "QExpr",
    "Scalar",
    "Z_SELECTION",
    "conj",
    "eval",
    "evaluate",
    "evaluate_many",
    "imag_part",
    "inv",
    "lift",
    "max_abs_upper",
    "node_count",
    "parse",
    "qint",
    "qsum",
    "rational",
    "real_part",
    "sqrt",
    "to_text",
    "working_precision",
    "z",
    "z_value",
    "zeta",
]
