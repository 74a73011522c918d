"""Relation encodings (data files in this directory) and their certified checkers."""

from __future__ import annotations

from .checks import *  # noqa: F401,F403
from .checks import __all__  # noqa: F401
