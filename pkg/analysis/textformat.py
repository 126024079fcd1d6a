"""
Line-oriented `key = value` text shared by config files and reports.

Values: quoted strings, true/false, integers, floats (including nan/inf),
and bracketed comma-separated arrays of numbers. '#' starts a comment
outside of quotes; blank lines are ignored.
"""

import math
import re

from analysis.errors import ConfigParseError

_INT   = re.compile(r"^[+-]?\d+$")
_FLOAT = re.compile(r"^[+-]?(\d+\.?\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|nan|inf|infinity)$", re.IGNORECASE)
_KEY   = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*(\.[A-Za-z0-9_\-]+)*$")


def _strip_comment(line):
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


def parse_scalar(raw, key=None, line=None):
    raw = raw.strip()
    if not raw:
        raise ConfigParseError("missing value", key=key, line=line)
    if raw.startswith('"'):
        if len(raw) < 2 or not raw.endswith('"') or '"' in raw[1:-1]:
            raise ConfigParseError(f"unterminated or malformed string {raw}", key=key, line=line)
        return raw[1:-1]
    if raw == "true":
        return True
    if raw == "false":
        return False
    if _INT.match(raw):
        return int(raw)
    if _FLOAT.match(raw):
        return float(raw)
    raise ConfigParseError(f"cannot parse value '{raw}'", key=key, line=line)


def parse_value(raw, key=None, line=None):
    raw = raw.strip()
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigParseError("unterminated array", key=key, line=line)
        body = raw[1:-1].strip()
        if not body:
            return []
        items = [parse_scalar(part, key, line) for part in body.split(",")]
        for item in items:
            if isinstance(item, (bool, str)):
                raise ConfigParseError("arrays may only hold numbers", key=key, line=line)
        return items
    return parse_scalar(raw, key, line)


def parse_assignments(text):
    """Returns [(line_number, key, value), ...] in file order; duplicate keys are errors."""
    entries = []
    seen    = set()
    for number, raw_line in enumerate(text.splitlines(), start=1):
        stripped = _strip_comment(raw_line).strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError("expected 'key = value'", line=number)
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if not _KEY.match(key):
            raise ConfigParseError(f"malformed key '{key}'", line=number)
        if key in seen:
            raise ConfigParseError("duplicate key", key=key, line=number)
        seen.add(key)
        entries.append((number, key, parse_value(raw, key, number)))
    return entries


def format_value(value):
    if hasattr(value, "item") and not isinstance(value, (list, tuple)):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    raise TypeError(f"cannot format value of type {type(value).__name__}")
