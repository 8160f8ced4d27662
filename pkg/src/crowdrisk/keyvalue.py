"""Line-oriented ``key=value`` text with ``#`` comments."""

from __future__ import annotations

from typing import Iterator


class ParseError(ValueError):
    def __init__(self, source: str, lineno: int | None, message: str):
        where = f"{source}:{lineno}" if lineno is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.lineno = lineno


def strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_key_value_lines(text: str, source: str = "<input>") -> Iterator[tuple[int, str, str]]:
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw)
        if not line:
            continue
        if "=" not in line:
            raise ParseError(source, lineno, f"expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(source, lineno, "empty key")
        if key in seen:
            raise ParseError(source, lineno, f"duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        yield lineno, key, value


def parse_scalar(value: str, source: str = "<input>", lineno: int | None = None) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(source, lineno, f"not a number: {value!r}") from None


def parse_bool(value: str, source: str = "<input>", lineno: int | None = None) -> bool:
    v = value.strip().lower()
    if v == "true":
        return True
    if v == "false":
        return False
    raise ParseError(source, lineno, f"expected True or False, got {value!r}")
