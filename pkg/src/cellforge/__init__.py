"""Oriented graph planar algebra of E₄¹², its SU(3) cell system and tooling."""

from __future__ import annotations

__version__ = "0.1.0"
