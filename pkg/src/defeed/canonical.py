"""Canonical, type-tagged encoding for storage values, transaction payloads and snapshots.

Every value that lands in contract storage or gets hashed goes through here, so
two runs that build the same state produce the same bytes.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any

_RECORDS: dict[str, type] = {}


def record(cls):
    """Register a frozen dataclass so it can round-trip through ``decode``."""
    if not dataclasses.is_dataclass(cls):
        raise TypeError(f"{cls.__name__} is not a dataclass")
    _RECORDS[cls.__name__] = cls
    return cls


def encode(value: Any) -> Any:
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, (bytes, bytearray)):
        return {"b": bytes(value).hex()}
    if isinstance(value, (tuple, list)):
        return {"t": [encode(v) for v in value]}
    if isinstance(value, frozenset):
        items = [encode(v) for v in value]
        return {"s": sorted(items, key=_sort_key)}
    if isinstance(value, dict):
        pairs = [[encode(k), encode(v)] for k, v in value.items()]
        return {"m": sorted(pairs, key=lambda kv: _sort_key(kv[0]))}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        name = type(value).__name__
        if name not in _RECORDS:
            raise TypeError(f"unregistered record type {name}")
        fields = {f.name: encode(getattr(value, f.name)) for f in dataclasses.fields(value)}
        return {"d": name, "f": fields}
    raise TypeError(f"cannot canonically encode {type(value).__name__}")


def decode(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, dict):
        if "b" in obj:
            return bytes.fromhex(obj["b"])
        if "t" in obj:
            return tuple(decode(v) for v in obj["t"])
        if "s" in obj:
            return frozenset(decode(v) for v in obj["s"])
        if "m" in obj:
            return {decode(k): decode(v) for k, v in obj["m"]}
        if "d" in obj:
            cls = _RECORDS[obj["d"]]
            return cls(**{k: decode(v) for k, v in obj["f"].items()})
    raise ValueError(f"malformed canonical object: {obj!r}")


def _sort_key(encoded: Any) -> str:
    return json.dumps(encoded, sort_keys=True, separators=(",", ":"))


def dumps(value: Any) -> bytes:
    return json.dumps(encode(value), sort_keys=True, separators=(",", ":")).encode()


def loads(data: bytes | str) -> Any:
    return decode(json.loads(data))
