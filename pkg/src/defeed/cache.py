"""Cache entry lifecycle used by the management contract."""

from __future__ import annotations

from dataclasses import dataclass

from . import canonical
from .protocol import INFINITE, CacheEntry


@canonical.record
@dataclass(frozen=True)
class CacheStats:
    hits: int = 0
    misses: int = 0
    evictions: int = 0

    def bump(self, **deltas: int) -> CacheStats:
        return CacheStats(*(getattr(self, k) + deltas.get(k, 0) for k in ("hits", "misses", "evictions")))


def classify(entry: CacheEntry | None, height: int) -> str:
    """'hit', 'miss' or 'expired' for a lookup at ``height``."""
    if entry is None or not entry.x:
        return "miss"
    return "expired" if entry.expired(height) else "hit"


def make_entry(name: str, owner_hash: bytes, payload: bytes, height: int, ttl_blocks: int = INFINITE) -> CacheEntry:
    return CacheEntry(1, name, owner_hash, payload, height, ttl_blocks)


def overwrite(current: CacheEntry | None, new: CacheEntry) -> CacheEntry:
    """Last write wins; ties at the same height go to the newer write."""
    if current is not None and current.created_at > new.created_at:
        return current
    return new
