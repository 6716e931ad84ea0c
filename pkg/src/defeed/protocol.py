"""Data types exchanged by the data-feed contracts and recorded in their logs."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import canonical
from .crypto import ZERO_DIGEST

ERROR_NAME_MISSING = "The name doesn't exist."

INTERACTIONS = ("reg", "req", "for", "query", "reply", "resp")
OUTCOMES = ("served", "name-missing", "denied", "receive-failed")

INFINITE = -1


@canonical.record
@dataclass(frozen=True)
class AttributeTuple:
    """Registry record: flag ``x``, name ``y``, hashed owner address ``z``, delay ``t``, cached data ``d``.

    ``t`` and ``d`` are ``None`` when the pool or cache extension does not use them.
    """

    x: int
    y: str
    z: bytes
    t: int | None = None
    d: bytes | None = None

    def __post_init__(self):
        if self.x not in (0, 1):
            raise ValueError("flag must be 0 or 1")
        if self.x == 1 and (not self.y or bytes(self.z) == ZERO_DIGEST):
            raise ValueError("a registered tuple needs a name and a non-zero owner hash")

    @property
    def registered(self) -> bool:
        return self.x == 1


MISSING = AttributeTuple(0, "", ZERO_DIGEST)


@canonical.record
@dataclass(frozen=True)
class ProtocolMessage:
    interaction: str
    name: str
    requestor_hashes: tuple[bytes, ...] = ()
    payload: bytes | None = None
    error: str | None = None
    request_id: int = 0

    def __post_init__(self):
        if self.interaction not in INTERACTIONS:
            raise ValueError(f"unknown interaction {self.interaction!r}")
        if self.interaction == "resp" and (self.payload is None) == (self.error is None):
            raise ValueError("a resp message carries exactly one of payload and error")


@canonical.record
@dataclass(frozen=True)
class AuditRecord:
    block_height: int
    requestor_hash: bytes
    owner_name: str
    outcome: str
    gas_used: int = 0
    request_id: int = 0

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")


@canonical.record
@dataclass(frozen=True)
class CacheEntry:
    x: int
    name: str
    z: bytes
    d: bytes
    created_at: int
    ttl_blocks: int = INFINITE

    def expired(self, height: int) -> bool:
        return self.ttl_blocks != INFINITE and height >= self.created_at + self.ttl_blocks


@canonical.record
@dataclass(frozen=True)
class PoolWindow:
    window_id: int
    owner_name: str
    opened_at: int
    window_blocks: int
    requestor_hashes: tuple[bytes, ...] = ()
    requestors: tuple[bytes, ...] = ()

    @property
    def closes_at(self) -> int:
        return self.opened_at + self.window_blocks

    def expired(self, height: int) -> bool:
        return height >= self.closes_at


@canonical.record
@dataclass(frozen=True)
class PendingRequest:
    """A forwarded request waiting for its response at the management contract."""

    name: str
    requestor_hashes: tuple[bytes, ...]
    aggregate_hash: bytes
    window_id: int = 0


@canonical.record
@dataclass(frozen=True)
class Proposal:
    proposal_id: int
    new_center: bytes
    approvals: frozenset = field(default_factory=frozenset)
    executed: bool = False


# Log events carried in receipts next to protocol messages.


@dataclass(frozen=True)
class AuditEvent:
    index: int
    record: AuditRecord


@dataclass(frozen=True)
class PoolEvent:
    action: str  # open | join | flush
    window_id: int
    owner_name: str
    batch_size: int
    open_block: int
    close_block: int


@dataclass(frozen=True)
class CacheEvent:
    action: str  # hit | miss | create | evict
    name: str


@dataclass(frozen=True)
class NotificationEvent:
    owner_name: str
    subscriber: bytes
    changes: tuple[tuple[int, int], ...]
    delivered: bool
    error: str = ""


@dataclass(frozen=True)
class GovernanceEvent:
    action: str
    proposal_id: int
    member: bytes
    outcome: str
