"""State vectors, deltas and notification sets for the subscribe extension."""

from __future__ import annotations

from typing import Sequence

from .crypto import keccak256

Changes = tuple[tuple[int, int], ...]


class LengthMismatch(ValueError):
    pass


def compute_delta(before: Sequence[int], after: Sequence[int]) -> Changes:
    """N(S' - S): the non-zero (1-based index, delta) pairs, in index order."""
    if len(before) != len(after):
        raise LengthMismatch(f"state length changed from {len(before)} to {len(after)}")
    return tuple((i, b - a) for i, (a, b) in enumerate(zip(before, after), start=1) if b != a)


def apply_changes(state: Sequence[int], changes: Changes) -> tuple[int, ...]:
    values = list(state)
    for index, delta in changes:
        values[index - 1] += delta
    return tuple(values)


def payload_vector(payload: bytes) -> tuple[int]:
    """One-element state vector for owners whose data is opaque bytes.

    Holds the first 8 bytes of the payload digest as a signed integer, so any
    payload change shows up as a non-zero delta.
    """
    return (int.from_bytes(keccak256(payload)[:8], "big", signed=True),)
