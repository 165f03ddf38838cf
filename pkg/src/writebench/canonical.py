"""Canonical JSON used for byte accounting and stable on-disk records.

Canonical form, fixed once for the whole harness: object keys sorted
lexicographically by code point, no whitespace, UTF-8 encoding. Byte costs,
frozen episode files, and result logs all go through these helpers so that
identical values always serialize to identical bytes.
"""

from __future__ import annotations

import json
from typing import Any


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def dump_bytes(obj: Any) -> bytes:
    return dumps(obj).encode("utf-8")


def byte_len(obj: Any) -> int:
    return len(dump_bytes(obj))


def dumps_fixed(obj: Any, decimals: int = 6) -> str:
    """Canonical JSON with every float printed at a fixed decimal width.

    Result and aggregate files must be byte-identical across reruns, so
    floats are emitted as zero-padded decimal tokens (e.g. 0.500000) instead
    of shortest-repr. Integers and bools are left untouched.
    """
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return f"{obj:.{decimals}f}"
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = (
            f"{json.dumps(str(k), ensure_ascii=False)}:{dumps_fixed(v, decimals)}"
            for k, v in sorted(obj.items())
        )
        return "{" + ",".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps_fixed(v, decimals) for v in obj) + "]"
    raise TypeError(f"unsupported type for fixed-format JSON: {type(obj)!r}")
