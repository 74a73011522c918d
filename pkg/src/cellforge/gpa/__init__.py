"""The oriented graph planar algebra: morphisms, structure maps, diagrams."""

from __future__ import annotations

from .diagram import DiagramExpr, eval_diagram, infer_type, parse_diagram
from .morphism import (
    Morphism,
    add,
    coev,
    compose,
    compose_all,
    dagger,
    ev,
    gauge_transform,
    hom_basis,
    hom_dim,
    identity,
    rotate,
    scale,
    tensor,
    tensor_all,
    zero,
)

__all__ = [
    "DiagramExpr",
    "Morphism",
    "add",
    "coev",
    "compose",
    "compose_all",
    "dagger",
    "eval_diagram",
    "ev",
    "gauge_transform",
    "hom_basis",
    "hom_dim",
    "identity",
    "infer_type",
    "parse_diagram",
    "rotate",
    "scale",
    "tensor",
    "tensor_all",
    "zero",
]
