"""Layered settings for the CLI and service: flag > config file > environment.

The config file is a plain key-value text format: one ``key = value`` pair
per line, ``#`` comments and blank lines ignored, values taken verbatim
after stripping. Environment variables are the upper-cased key behind a
``CHARTPIPE_`` prefix, so ``backend_url`` falls back to
``CHARTPIPE_BACKEND_URL``.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Mapping

from .errors import ChartPipeError

ENV_PREFIX = "CHARTPIPE_"

_TRUE_WORDS = frozenset({"1", "true", "yes", "on"})
_FALSE_WORDS = frozenset({"0", "false", "no", "off"})


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep or not key.strip():
            raise ChartPipeError(
                f"{origin}:{line_no}: expected 'key = value', got {line!r}"
            )
        values[key.strip()] = value.strip()
    return values


def load_config_file(path: str | Path) -> dict[str, str]:
    source = Path(path)
    return parse_config_text(source.read_text(encoding="utf-8"), origin=str(source))


def resolve_setting(
    key: str,
    flag_value: object | None,
    file_values: Mapping[str, str],
    env: Mapping[str, str] | None = None,
) -> object | None:
    """Return the highest-precedence value for a setting, or None."""
    if flag_value is not None:
        return flag_value
    if key in file_values:
        return file_values[key]
    if env is None:
        env = os.environ
    return env.get(ENV_PREFIX + key.upper())


def as_int(value: object, key: str) -> int:
    try:
        return int(str(value))
    except ValueError as exc:
        raise ChartPipeError(f"setting {key} must be an integer, got {value!r}") from exc


def as_bool(value: object, key: str) -> bool:
    if isinstance(value, bool):
        return value
    word = str(value).strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ChartPipeError(f"setting {key} must be a boolean, got {value!r}")
