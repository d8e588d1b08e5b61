"""Key-value structured text rendering shared by all report types.

The format is one ``key = value`` pair per line under a ``[title]`` header,
locale-independent and full double precision, so reports can be parsed back
with configparser or simple splitting.
"""

from __future__ import annotations

from typing import Any, Mapping


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return "(" + ", ".join(_fmt(v) for v in value) + ")"
    if hasattr(value, "item") and not hasattr(value, "__len__"):  # numpy scalar
        return _fmt(value.item())
    return str(value)


def render_report(title: str, rows: Mapping[str, Any]) -> str:
    lines = [f"[{title}]"]
    for key, value in rows.items():
        lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    """Inverse of render_report, values kept as strings."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("["):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out
