"""Location of bundled data files (overridable with ``CELLFORGE_DATA``)."""

from __future__ import annotations

import json
import os
from pathlib import Path

ENV_VAR = "CELLFORGE_DATA"
SCHEMA_VERSION = 1


def data_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).with_name("data")


def data_path(name: str) -> Path:
    return data_dir() / name


def load_json(name_or_path: str | os.PathLike) -> dict:
    path = Path(name_or_path)
    if not path.is_absolute() and not path.exists():
        path = data_path(str(name_or_path))
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(obj, path: str | os.PathLike | None = None) -> str:
    text = json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=False) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
