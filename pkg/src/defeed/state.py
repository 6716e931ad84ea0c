"""Journaled world state shared by the ledger and the VM."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable

from . import canonical
from .crypto import ZERO_DIGEST, Address, Digest32, keccak256


@canonical.record
@dataclass(frozen=True)
class AccountState:
    nonce: int = 0
    balance: int = 0
    storage_root: bytes = ZERO_DIGEST
    code_hash: bytes = ZERO_DIGEST


@dataclass
class ContractInstance:
    address: Address
    behavior_id: str
    code_hash: Digest32
    storage: dict[bytes, Any] = field(default_factory=dict)

    def storage_root(self) -> Digest32:
        if not self.storage:
            return ZERO_DIGEST
        items = sorted(self.storage.items())
        return keccak256(canonical.dumps(tuple((k, v) for k, v in items)))


def slot(*parts) -> bytes:
    """Storage key: keccak over the canonical encoding of a field path."""
    return bytes(keccak256(canonical.dumps(parts)))


class WorldState:
    def __init__(self):
        self.accounts: dict[Address, AccountState] = {}
        self.contracts: dict[Address, ContractInstance] = {}
        self._journal: list[Callable[[], None]] = []
        self._dirty: set[Address] = set()

    # journal
    def mark(self) -> int:
        return len(self._journal)

    def revert_to(self, mark: int) -> None:
        while len(self._journal) > mark:
            self._journal.pop()()

    def clear_journal(self) -> None:
        self._journal.clear()

    # accounts
    def account(self, addr: Address) -> AccountState:
        return self.accounts.get(addr) or AccountState()

    def put_account(self, addr: Address, state: AccountState) -> None:
        previous = self.accounts.get(addr)

        def undo():
            if previous is None:
                self.accounts.pop(addr, None)
            else:
                self.accounts[addr] = previous

        self._journal.append(undo)
        self.accounts[addr] = state

    def balance(self, addr: Address) -> int:
        return self.account(addr).balance

    def add_balance(self, addr: Address, delta: int) -> None:
        acct = self.account(addr)
        if acct.balance + delta < 0:
            raise ValueError("balance would go negative")
        self.put_account(addr, replace(acct, balance=acct.balance + delta))

    def bump_nonce(self, addr: Address) -> None:
        acct = self.account(addr)
        self.put_account(addr, replace(acct, nonce=acct.nonce + 1))

    # contracts
    def add_contract(self, contract: ContractInstance) -> None:
        addr = contract.address
        self._journal.append(lambda: self.contracts.pop(addr, None))
        self.contracts[addr] = contract
        acct = self.account(addr)
        self.put_account(addr, replace(acct, code_hash=contract.code_hash))

    def sload(self, addr: Address, key: bytes, default=None):
        return self.contracts[addr].storage.get(key, default)

    def sstore(self, addr: Address, key: bytes, value) -> None:
        storage = self.contracts[addr].storage
        missing = key not in storage
        previous = storage.get(key)

        def undo():
            self._dirty.add(addr)
            if missing:
                storage.pop(key, None)
            else:
                storage[key] = previous

        self._journal.append(undo)
        self._dirty.add(addr)
        if value is None:
            storage.pop(key, None)
        else:
            storage[key] = value

    # commitments
    def refresh_storage_roots(self, everything: bool = False) -> None:
        targets = list(self.contracts) if everything else [a for a in self._dirty if a in self.contracts]
        self._dirty.clear()
        for addr in targets:
            contract = self.contracts[addr]
            acct = self.account(addr)
            root = contract.storage_root()
            if acct.storage_root != root:
                self.accounts[addr] = replace(acct, storage_root=root)

    def state_root(self) -> Digest32:
        self.refresh_storage_roots()
        items = tuple((bytes(a), self.accounts[a]) for a in sorted(self.accounts))
        return keccak256(canonical.dumps(items))
