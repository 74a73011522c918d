"""The discovery pipeline: polynomial system, numeric solve, recognition, exact completion."""

from __future__ import annotations

from .derive import derive_w, edge_phases, gauge_invariants
from .linear import CompletionResult, complete_linear, exact_solve, solve_rows, verify_completion
from .numeric import FORMULATIONS, SolveConfig, SolveResult, magnitudes, solve_numeric
from .recognize import (
    DEFAULT_BOUND,
    Recognition,
    RecognitionDictionary,
    default_dictionary,
    input_tolerance,
    recognize,
)
from .system import Equation, GaugeReport, PolySystem, assemble_system, designated_block, gauge_fix, gauge_report

__all__ = [
    "DEFAULT_BOUND",
    "FORMULATIONS",
    "CompletionResult",
    "Equation",
    "GaugeReport",
    "PolySystem",
    "Recognition",
    "RecognitionDictionary",
    "SolveConfig",
    "SolveResult",
    "assemble_system",
    "complete_linear",
    "default_dictionary",
    "derive_w",
    "designated_block",
    "edge_phases",
    "exact_solve",
    "gauge_fix",
    "gauge_invariants",
    "gauge_report",
    "input_tolerance",
    "magnitudes",
    "recognize",
    "solve_numeric",
    "solve_rows",
    "verify_completion",
]
