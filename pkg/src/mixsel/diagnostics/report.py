from __future__ import annotations

import math
from typing import Any, Mapping


def _format_scalar(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_scalar(v) for v in value) + "]"
    return str(value)


def _render(mapping: Mapping[str, Any], indent: int, lines: list[str]) -> None:
    pad = "  " * indent
    for key in sorted(mapping):
        value = mapping[key]
        if isinstance(value, Mapping):
            lines.append(f"{pad}{key}:")
            _render(value, indent + 1, lines)
        else:
            lines.append(f"{pad}{key}: {_format_scalar(value)}")


def render_report(mapping: Mapping[str, Any]) -> str:
    """Deterministic "key: value" text; nested mappings become indented sections."""
    lines: list[str] = []
    _render(mapping, 0, lines)
    return "\n".join(lines) + "\n"


__all__ = ["render_report"]
