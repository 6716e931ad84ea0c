"""Committee rules: majority threshold and the byte strings members sign."""

from __future__ import annotations

from dataclasses import dataclass

from . import canonical
from .crypto import Address, KeyPair, derive_address, sign


def approval_threshold(n: int) -> int:
    if n < 1:
        raise ValueError("committee must be non-empty")
    return n // 2 + 1


def approval_message(proposal_id: int, new_center: bytes, manager: bytes) -> bytes:
    return canonical.dumps(("approve", proposal_id, bytes(new_center), bytes(manager)))


def vet_message(name: str, owner: bytes, action: str, nonce: int, manager: bytes) -> bytes:
    return canonical.dumps(("vet", name, bytes(owner), action, nonce, bytes(manager)))


def permission_message(requestor_hash: bytes, allowed: bool, nonce: int, manager: bytes) -> bytes:
    return canonical.dumps(("permission", bytes(requestor_hash), allowed, nonce, bytes(manager)))


@dataclass(frozen=True)
class Committee:
    keys: tuple[KeyPair, ...]

    def __post_init__(self):
        if not self.keys:
            raise ValueError("committee must be non-empty")

    @classmethod
    def generate(cls, n: int, label: str = "committee", scheme: str = "ecdsa") -> Committee:
        return cls(tuple(KeyPair.generate(f"{label}-{i}", scheme) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.keys)

    @property
    def threshold(self) -> int:
        return approval_threshold(self.n)

    @property
    def members(self) -> tuple[Address, ...]:
        return tuple(k.address for k in self.keys)

    @property
    def public_keys(self) -> tuple[bytes, ...]:
        return tuple(k.public_key for k in self.keys)

    def endorse(self, message: bytes, signers) -> tuple[tuple[bytes, bytes], ...]:
        """(member address, signature) pairs from the given member indices."""
        return tuple((bytes(self.keys[i].address), sign(self.keys[i], message)) for i in signers)


def member_of(public_keys, addr: bytes) -> bytes | None:
    for pk in public_keys:
        if derive_address(pk) == bytes(addr):
            return pk
    return None
