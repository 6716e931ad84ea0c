"""A deployed data-feed system on a fresh ledger, plus log indexers over its receipts."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Iterable

from . import contracts as C
from .crypto import Address, KeyPair, hash_addresses
from .gas import DEFAULT_SCHEDULE, GasSchedule
from .governance import Committee, approval_message, permission_message, vet_message
from .ledger import Ledger, LedgerConfig, Receipt, create_address, make_transaction
from .pool import DEFAULT_MAX_BATCH, DEFAULT_WINDOW_BLOCKS
from .protocol import (
    INFINITE,
    MISSING,
    AttributeTuple,
    AuditEvent,
    AuditRecord,
    CacheEntry,
    CacheEvent,
    GovernanceEvent,
    NotificationEvent,
    PoolEvent,
    PoolWindow,
)
from .state import slot
from .timing import FIXED, IntervalModel
from .vm import TRACE_HEADER

FUNDING = 10**24
DEPLOY_GAS = 3_000_000
CALL_GAS = 1_000_000


@dataclass(frozen=True)
class WorldConfig:
    pool: bool = False
    cache: bool = False
    subscribe: bool = False
    window_blocks: int = DEFAULT_WINDOW_BLOCKS
    ttl_blocks: int = INFINITE
    max_batch: int = DEFAULT_MAX_BATCH
    committee_size: int = 3
    scheme: str = "ecdsa"
    interval: IntervalModel = FIXED
    seed: int = 0
    block_gas_limit: int = 30_000_000
    max_txs_per_block: int | None = None
    base_fee: int = 1
    priority_fee: int = 1
    auto_flush: bool = True

    def ledger_config(self) -> LedgerConfig:
        return LedgerConfig(self.interval, self.seed, self.block_gas_limit, self.max_txs_per_block, self.base_fee)


@dataclass(frozen=True)
class Party:
    """A contract together with the EOA that controls it."""

    label: str
    key: KeyPair
    address: Address

    @property
    def hash(self) -> bytes:
        return bytes(hash_addresses(self.address))


@dataclass(frozen=True)
class GovernanceAttempt:
    digest: bytes
    action: str
    proposal_id: int
    member: bytes


class DeFeedWorld:
    def __init__(self, config: WorldConfig = WorldConfig(), schedule: GasSchedule = DEFAULT_SCHEDULE):
        self.config = config
        self.schedule = schedule
        self.ledger = Ledger(schedule, config.ledger_config())
        self.keys: dict[str, KeyPair] = {}
        self.committee = Committee.generate(config.committee_size, f"{config.seed}-committee", config.scheme)
        for key in self.committee.keys:
            self.ledger.mint(key.address, FUNDING)
        self.deployer = self.eoa("deployer")
        self.keeper = self.eoa("keeper")
        self.owners: dict[str, Party] = {}
        self.requestors: list[Party] = []
        self._gov: list[GovernanceAttempt] = []
        self._nonce = 0

        nonce = self.ledger.pending_nonce(self.deployer.address)
        self.dfm = create_address(self.deployer.address, nonce)
        first_center = create_address(self.deployer.address, nonce + 1)
        d1 = self.submit(self.deployer, None, "", ("dfm", first_center, self.committee.public_keys, config.pool,
                                                   config.cache, config.window_blocks, config.ttl_blocks,
                                                   config.max_batch), gas_limit=DEPLOY_GAS)
        d2 = self.submit(self.deployer, None, "", ("dfc", self.dfm, config.pool, config.subscribe),
                         gas_limit=DEPLOY_GAS)
        self.mine()
        self.deploy_receipts = {"dfm": self.receipt(d1), "dfc": self.receipt(d2)}
        failed = {k: r.error for k, r in self.deploy_receipts.items() if not r.ok}
        if failed:
            raise RuntimeError(f"core deployment failed: {failed}")
        if config.pool and config.auto_flush:
            self.ledger.add_block_hook(self._flush_expired)

    # ----- accounts and transactions
    def eoa(self, label: str) -> KeyPair:
        if label not in self.keys:
            key = KeyPair.generate(f"{self.config.seed}:{label}", self.config.scheme)
            self.ledger.mint(key.address, FUNDING)
            self.keys[label] = key
        return self.keys[label]

    def submit(self, key: KeyPair, target: bytes | None, function: str = "", args: tuple = (), *,
               gas_limit: int = CALL_GAS, priority_fee: int | None = None, value: int = 0,
               now: float | None = None) -> bytes:
        fee = self.config.priority_fee if priority_fee is None else priority_fee
        tx = make_transaction(key, self.ledger.pending_nonce(key.address), target, function, args, gas_limit,
                              self.config.base_fee, fee, value)
        return bytes(self.ledger.submit_transaction(tx, now))

    def mine(self, blocks: int = 1):
        block = None
        for _ in range(blocks):
            block = self.ledger.advance()
        return block

    def receipt(self, digest: bytes) -> Receipt:
        return self.ledger.receipt(digest)

    def transact(self, key: KeyPair, target: bytes | None, function: str = "", args: tuple = (), **kw) -> Receipt:
        digest = self.submit(key, target, function, args, **kw)
        self.mine()
        return self.receipt(digest)

    @property
    def height(self) -> int:
        return self.ledger.height

    # ----- storage reads (off-chain view of on-chain state)
    def read(self, addr: bytes, *path, default=None):
        contract = self.ledger.state.contracts.get(Address(addr))
        if contract is None:
            return default
        return contract.storage.get(slot(*path), default)

    @property
    def center(self) -> Address:
        return Address(self.read(self.dfm, "center"))

    def gamma(self, name: str, center: bytes | None = None) -> AttributeTuple:
        return self.read(center or self.center, "gamma", name) or MISSING

    def registered_names(self, center: bytes | None = None) -> tuple[str, ...]:
        return self.read(center or self.center, "names", default=())

    def center_active(self, center: bytes | None = None) -> bool:
        return bool(self.read(center or self.center, "active"))

    def cache_entry(self, name: str) -> CacheEntry | None:
        return self.read(self.dfm, "cache", name)

    def window(self, name: str) -> PoolWindow | None:
        return self.read(self.dfm, "window", name)

    def open_windows(self) -> tuple[str, ...]:
        return self.read(self.dfm, "open_windows", default=())

    def subscriptions(self, name: str, center: bytes | None = None) -> frozenset[bytes]:
        return frozenset(self.read(center or self.center, "subs", name, default=()))

    def declared_state(self, name: str):
        return self.read(self.center, "state", name)

    def is_denied(self, party: Party) -> bool:
        return bool(self.read(self.dfm, "denied", party.hash))

    def inbox(self, party: Party) -> list[tuple]:
        n = self.read(party.address, "inbox_len", default=0)
        return [self.read(party.address, "inbox", i) for i in range(n)]

    def notes(self, party: Party) -> list[tuple]:
        n = self.read(party.address, "notes_len", default=0)
        return [self.read(party.address, "note", i) for i in range(n)]

    def stored_audit(self) -> list[AuditRecord]:
        n = self.read(self.dfm, "audit_len", default=0)
        return [self.read(self.dfm, "audit", i) for i in range(n)]

    def proposal(self, proposal_id: int):
        return self.read(self.dfm, "proposal", proposal_id)

    # ----- participants
    def add_owner(self, name: str, payload: bytes = b"", *, register: bool = True, label: str | None = None,
                  mine: bool = True) -> Party:
        label = label or f"owner:{name}"
        key = self.eoa(label)
        addr = create_address(key.address, self.ledger.pending_nonce(key.address))
        self.submit(key, None, "", ("owner", self.dfm, bytes(payload)), gas_limit=DEPLOY_GAS)
        party = Party(label, key, addr)
        if register:
            self.submit(key, addr, C.SIG_OWNER_REGISTER, (name,))
        if mine:
            self.mine()
        self.owners[name] = party
        return party

    def add_requestor(self, label: str | None = None, *, mine: bool = True) -> Party:
        label = label or f"requestor:{len(self.requestors)}"
        key = self.eoa(label)
        addr = create_address(key.address, self.ledger.pending_nonce(key.address))
        self.submit(key, None, "", ("requestor", self.dfm), gas_limit=DEPLOY_GAS)
        if mine:
            self.mine()
        party = Party(label, key, addr)
        self.requestors.append(party)
        return party

    def add_requestors(self, n: int) -> list[Party]:
        parties = [self.add_requestor(mine=False) for _ in range(n)]
        self.mine()
        while self.ledger.mempool_size:
            self.mine()
        return parties

    def add_relay(self, label: str = "relay") -> Party:
        key = self.eoa(label)
        addr = create_address(key.address, self.ledger.pending_nonce(key.address))
        self.transact(key, None, "", ("relay",), gas_limit=DEPLOY_GAS)
        return Party(label, key, addr)

    def deploy_center(self, label: str = "deployer") -> Address:
        key = self.eoa(label)
        addr = create_address(key.address, self.ledger.pending_nonce(key.address))
        receipt = self.transact(key, None, "", ("dfc", self.dfm, self.config.pool, self.config.subscribe),
                                gas_limit=DEPLOY_GAS)
        if not receipt.ok:
            raise RuntimeError(f"center deployment failed: {receipt.error}")
        return addr

    # ----- protocol operations (submit only; call mine() to include)
    def request(self, requestor: Party, name: str, **kw) -> bytes:
        return self.submit(requestor.key, requestor.address, C.SIG_REQUESTOR_REQUEST, (name,), **kw)

    def request_direct(self, requestor: Party, owner: Party, **kw) -> bytes:
        return self.submit(requestor.key, requestor.address, C.SIG_REQUEST_DIRECT, (owner.address,), **kw)

    def register(self, owner: Party, name: str) -> bytes:
        return self.submit(owner.key, owner.address, C.SIG_OWNER_REGISTER, (name,))

    def subscribe(self, requestor: Party, name: str) -> bytes:
        return self.submit(requestor.key, requestor.address, C.SIG_SUBSCRIBE, (name,))

    def unsubscribe(self, requestor: Party, name: str) -> bytes:
        return self.submit(requestor.key, requestor.address, C.SIG_UNSUBSCRIBE, (name,))

    def set_payload(self, owner: Party, payload: bytes) -> bytes:
        return self.submit(owner.key, owner.address, C.SIG_SET_PAYLOAD, (bytes(payload),))

    def set_state(self, owner: Party, values) -> bytes:
        return self.submit(owner.key, owner.address, C.SIG_SET_STATE, (tuple(values),))

    def set_faulty(self, requestor: Party, faulty: bool = True) -> bytes:
        return self.submit(requestor.key, requestor.address, C.SIG_SET_FAULTY, (faulty,))

    def invalidate(self, name: str, member: int = 0) -> bytes:
        return self.submit(self.committee.keys[member], self.dfm, C.SIG_INVALIDATE, (name,))

    # ----- governance
    def _gov_submit(self, key: KeyPair, function: str, args: tuple, action: str, proposal_id: int,
                    member: bytes) -> bytes:
        digest = self.submit(key, self.dfm, function, args)
        self._gov.append(GovernanceAttempt(digest, action, proposal_id, bytes(member)))
        return digest

    def propose(self, member: int | KeyPair, new_center: bytes) -> bytes:
        key = self.committee.keys[member] if isinstance(member, int) else member
        return self._gov_submit(key, C.SIG_PROPOSE, (Address(new_center),), "propose", 0, key.address)

    def approval_signature(self, signer: int | KeyPair, proposal_id: int, new_center: bytes) -> bytes:
        from .crypto import sign

        key = self.committee.keys[signer] if isinstance(signer, int) else signer
        return sign(key, approval_message(proposal_id, new_center, self.dfm))

    def approve(self, member: int, proposal_id: int, new_center: bytes, *, signature: bytes | None = None,
                submitter: KeyPair | None = None, claimed_member: bytes | None = None) -> bytes:
        key = self.committee.keys[member]
        sig = signature if signature is not None else self.approval_signature(member, proposal_id, new_center)
        claimed = bytes(claimed_member) if claimed_member is not None else bytes(key.address)
        return self._gov_submit(submitter or key, C.SIG_APPROVE, (proposal_id, claimed, sig), "approve",
                                proposal_id, claimed)

    def execute_update(self, proposal_id: int, submitter: KeyPair | None = None) -> bytes:
        key = submitter or self.committee.keys[0]
        return self._gov_submit(key, C.SIG_EXECUTE, (proposal_id,), "execute", proposal_id, key.address)

    def update_center(self, approvers: Iterable[int] | None = None, new_center: bytes | None = None) -> dict:
        """Deploy (if needed), propose, approve and execute a center replacement; returns receipts by step."""
        approvers = list(range(self.committee.threshold)) if approvers is None else list(approvers)
        new_center = new_center or self.deploy_center()
        proposer = approvers[0] if approvers else 0
        r_prop = self.receipt(self._mined(self.propose(proposer, new_center)))
        pid = r_prop.result if r_prop.ok else 0
        approvals = [self.receipt(self._mined(self.approve(m, pid, new_center))) for m in approvers[1:]]
        r_exec = self.receipt(self._mined(self.execute_update(pid)))
        return {"center": Address(new_center), "proposal_id": pid, "propose": r_prop, "approvals": approvals,
                "execute": r_exec}

    def _mined(self, digest: bytes) -> bytes:
        self.mine()
        return digest

    def next_nonce(self) -> int:
        self._nonce += 1
        return self._nonce

    def vet(self, name: str, owner: bytes, action: str, signers: Iterable[int], *, nonce: int | None = None,
            submitter: int = 0) -> bytes:
        nonce = self.next_nonce() if nonce is None else nonce
        message = vet_message(name, owner, action, nonce, self.dfm)
        approvals = self.committee.endorse(message, signers)
        key = self.committee.keys[submitter]
        return self._gov_submit(key, C.SIG_VET, (name, Address(owner), action, nonce, approvals), action, 0,
                                key.address)

    def set_permission(self, requestor: Party | bytes, allowed: bool, signers: Iterable[int], *,
                       nonce: int | None = None, submitter: int = 0) -> bytes:
        rhash = requestor.hash if isinstance(requestor, Party) else bytes(requestor)
        nonce = self.next_nonce() if nonce is None else nonce
        approvals = self.committee.endorse(permission_message(rhash, allowed, nonce, self.dfm), signers)
        key = self.committee.keys[submitter]
        return self._gov_submit(key, C.SIG_PERMISSION, (rhash, allowed, nonce, approvals),
                                "allow" if allowed else "deny", 0, key.address)

    # ----- pool keeper
    def _flush_expired(self, ledger: Ledger, height: int) -> None:
        for name in self.open_windows():
            window = self.window(name)
            if window is not None and window.expired(height):
                ledger.system_call(self.keeper.address, self.dfm, C.SIG_FLUSH, name)

    # ----- indexers
    def all_receipts(self) -> list[Receipt]:
        return [r for block in self.ledger.blocks for r in block.receipts]

    def audit_log(self) -> list[AuditRecord]:
        """Audit records with ``gas_used`` set to the recording receipt's gas split across its records."""
        rows = []
        for r in self.all_receipts():
            events = [e for e in r.emitted if isinstance(e, AuditEvent)]
            for e in events:
                rows.append(replace(e.record, gas_used=r.gas_used // len(events)))
        return rows

    def pool_log(self) -> list[dict[str, Any]]:
        windows: dict[int, dict[str, Any]] = {}
        for r in self.all_receipts():
            touched = set()
            for e in r.emitted:
                if not isinstance(e, PoolEvent):
                    continue
                row = windows.setdefault(e.window_id, {"windowId": e.window_id, "ownerName": e.owner_name,
                                                       "batchSize": 0, "openBlock": e.open_block,
                                                       "closeBlock": None, "totalGas": 0})
                row["batchSize"] = e.batch_size
                if e.action == "flush":
                    row["closeBlock"] = e.close_block
                if e.window_id not in touched:
                    row["totalGas"] += r.gas_used
                    touched.add(e.window_id)
        return [windows[k] for k in sorted(windows)]

    def cache_stats(self) -> list[dict[str, Any]]:
        names = sorted({e.name for r in self.all_receipts() for e in r.emitted if isinstance(e, CacheEvent)})
        saved_per_hit = self.schedule.core_request_gas() - self.schedule.cache_hit_gas()
        rows = []
        for name in names:
            stats = self.read(self.dfm, "cache_stats", name)
            hits, misses, evictions = (stats.hits, stats.misses, stats.evictions) if stats else (0, 0, 0)
            rows.append({"name": name, "hits": hits, "misses": misses, "evictions": evictions,
                         "gasSavedEstimate": hits * saved_per_hit})
        return rows

    def notification_events(self) -> list[tuple[int, NotificationEvent]]:
        return [(r.block_height, e) for r in self.all_receipts() for e in r.emitted
                if isinstance(e, NotificationEvent)]

    def notification_log(self) -> list[dict[str, Any]]:
        """Delivered notifications; failed deliveries are in :meth:`notification_failures`."""
        return [
            {"block": h, "ownerName": e.owner_name, "subscriber": e.subscriber,
             "changedIndices": [i for i, _ in e.changes], "deltas": [d for _, d in e.changes]}
            for h, e in self.notification_events() if e.delivered
        ]

    def notification_failures(self) -> list[tuple[int, NotificationEvent]]:
        return [(h, e) for h, e in self.notification_events() if not e.delivered]

    def governance_log(self) -> list[dict[str, Any]]:
        rows = []
        for attempt in self._gov:
            try:
                r = self.receipt(attempt.digest)
            except KeyError:
                continue
            pid = attempt.proposal_id
            if attempt.action == "propose" and r.ok:
                pid = r.result
            outcome = "ok" if r.ok else (r.error or "reverted").split(":")[0]
            rows.append({"block": r.block_height, "proposalId": pid, "action": attempt.action,
                         "member": attempt.member, "outcome": outcome})
        return rows

    def center_changes(self) -> list[tuple[int, bytes]]:
        """(block, new center) for every successful update execution."""
        out = []
        for r in self.all_receipts():
            for e in r.emitted:
                if isinstance(e, GovernanceEvent) and e.action == "execute":
                    out.append((r.block_height, bytes(r.result)))
        return out

    def trace_text(self, receipt: Receipt) -> str:
        return "\n".join([TRACE_HEADER] + [t.line() for t in receipt.trace]) + "\n"

    def state_root(self) -> bytes:
        return bytes(self.ledger.state_root())
