from __future__ import annotations

import enum


class ComparisonPolicy(str, enum.Enum):
    # utf-8 (replace), CRLF -> LF, trailing spaces/tabs per line and trailing newlines stripped
    DEFAULT = "default"
    BIT_EXACT = "bit-exact"


def _as_bytes(value: bytes | str) -> bytes:
    return value.encode("utf-8") if isinstance(value, str) else bytes(value)


def normalize_output(value: bytes | str) -> str:
    text = _as_bytes(value).decode("utf-8", errors="replace").replace("\r\n", "\n")
    return "\n".join(line.rstrip(" \t") for line in text.split("\n")).rstrip("\n")


def outputs_match(
    actual: bytes | str,
    expected: bytes | str,
    policy: ComparisonPolicy = ComparisonPolicy.DEFAULT,
) -> bool:
    policy = ComparisonPolicy(policy)
    if policy is ComparisonPolicy.BIT_EXACT:
        return _as_bytes(actual) == _as_bytes(expected)
    return normalize_output(actual) == normalize_output(expected)
