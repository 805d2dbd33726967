"""Minimal TOML-style config reader.

Supports the subset the CLI needs: comments, ``[section]`` headers, and
``key = value`` lines with strings, booleans, integers, floats, and flat
arrays. (The runtime targets Python 3.10, which predates ``tomllib``.)
"""

from __future__ import annotations

import os

from .errors import TelegraspError

__all__ = ["ConfigError", "load_config"]


class ConfigError(TelegraspError, ValueError):
    code = "config"

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def load_config(path: str | os.PathLike) -> dict[str, dict[str, object]]:
    """Parse a config file into ``{section: {key: value}}``.

    Keys before any section header land in the ``""`` section.
    """
    sections: dict[str, dict[str, object]] = {}
    current = sections.setdefault("", {})
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip()
                if not name:
                    raise ConfigError("empty section name", lineno)
                current = sections.setdefault(name, {})
                continue
            if "=" not in line:
                raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ConfigError("empty key", lineno)
            current[key] = _parse_value(value.strip(), lineno)
    return sections


def _parse_value(text: str, lineno: int) -> object:
    if not text:
        raise ConfigError("empty value", lineno)
    comment = _strip_trailing_comment(text)
    text = comment.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(part.strip(), lineno) for part in inner.split(",")]
    return _parse_scalar(text, lineno)


def _strip_trailing_comment(text: str) -> str:
    in_string: str | None = None
    for i, ch in enumerate(text):
        if in_string:
            if ch == in_string:
                in_string = None
        elif ch in "\"'":
            in_string = ch
        elif ch == "#":
            return text[:i]
    return text


def _parse_scalar(text: str, lineno: int) -> object:
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse value {text!r}", lineno) from None
