"""Pool windows: batching same-owner requests that arrive within a block window."""

from __future__ import annotations

import random
from dataclasses import replace

from .crypto import hash_addresses
from .protocol import PoolWindow

DEFAULT_WINDOW_BLOCKS = 3
DEFAULT_MAX_BATCH = 256


def join_or_open(window: PoolWindow | None, name: str, height: int, requestor: bytes, requestor_hash: bytes,
                 next_id: int, window_blocks: int) -> tuple[PoolWindow, bool]:
    """Add a request to the open window for ``name`` or open a fresh one; returns (window, opened)."""
    if window is None or window.expired(height):
        window = PoolWindow(next_id, name, height, window_blocks)
        opened = True
    else:
        opened = False
    window = replace(
        window,
        requestor_hashes=window.requestor_hashes + (bytes(requestor_hash),),
        requestors=window.requestors + (bytes(requestor),),
    )
    return window, opened


def aggregate_hash(window: PoolWindow) -> bytes:
    """K(A_r1, ..., A_rn) over member addresses in arrival order."""
    return bytes(hash_addresses(*window.requestors))


def _van_der_corput(i: int, base: int = 2) -> float:
    q, denom = 0.0, 1.0
    while i:
        i, digit = divmod(i, base)
        denom *= base
        q += digit / denom
    return q


def spread_arrivals(n: int, horizon_blocks: int, seed: int) -> list[int]:
    """Arrival block offsets for ``n`` requesters spread over ``horizon_blocks``.

    A low-discrepancy sequence with a seeded rotation: requests land roughly
    evenly over the horizon, and adding requesters only ever adds arrivals,
    so pooled totals grow monotonically with ``n``.
    """
    offset = random.Random(seed).random()
    return sorted(int(horizon_blocks * ((_van_der_corput(i + 1) + offset) % 1.0)) for i in range(n))


def greedy_windows(arrivals: list[int], window_blocks: int = DEFAULT_WINDOW_BLOCKS,
                   max_batch: int = DEFAULT_MAX_BATCH) -> list[list[int]]:
    """Group sorted arrival heights into windows the way the contract does; returns member indices."""
    groups: list[list[int]] = []
    opened = None
    for i, h in enumerate(arrivals):
        if opened is None or h >= opened + window_blocks or len(groups[-1]) >= max_batch:
            groups.append([])
            opened = h
        groups[-1].append(i)
    return groups
