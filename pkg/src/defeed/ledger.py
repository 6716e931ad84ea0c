"""A single-miner ledger: nonce-ordered signed transactions, fixed-interval blocks, fee accounting.

Fees follow ``fee = gasUsed * (baseFee + priorityFee)`` and are credited to the
miner account, so the sum of all balances never changes after genesis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from . import canonical
from .crypto import ZERO_DIGEST, Address, Digest32, KeyPair, derive_address, function_selector, keccak256, sign, verify
from .gas import DEFAULT_SCHEDULE, GasSchedule
from .state import AccountState, ContractInstance, WorldState
from .timing import FIXED, IntervalModel
from .vm import VM, BlockInfo, OutOfGas, Revert, TraceEntry, TxContext, code_hash_of

SNAPSHOT_FORMAT = "defeed-snapshot/1"
MINER = Address(keccak256(b"defeed-miner")[-20:])


class LedgerError(Exception):
    pass


class TransactionRejected(LedgerError):
    pass


class NoBlockError(LedgerError):
    pass


class NotFoundError(LedgerError, KeyError):
    pass


def create_address(sender: bytes, nonce: int) -> Address:
    return Address(keccak256(b"create" + bytes(sender) + nonce.to_bytes(8, "big"))[-20:])


@dataclass(frozen=True)
class Transaction:
    sender: Address
    nonce: int
    target: Address | None
    function: str
    args: tuple
    gas_limit: int
    base_fee: int
    priority_fee: int
    public_key: bytes
    value: int = 0
    signature: bytes = b""

    @property
    def selector(self) -> bytes:
        return function_selector(self.function) if self.function else b""

    @property
    def price(self) -> int:
        return self.base_fee + self.priority_fee

    def payload(self) -> bytes:
        return canonical.dumps(
            (
                bytes(self.sender),
                self.nonce,
                bytes(self.target) if self.target is not None else None,
                self.selector,
                self.args,
                self.gas_limit,
                self.base_fee,
                self.priority_fee,
                self.value,
            )
        )

    @property
    def digest(self) -> Digest32:
        return keccak256(self.payload() + self.signature)

    def signed_by(self, key: KeyPair) -> Transaction:
        return replace(self, public_key=key.public_key, signature=sign(key, self.payload()))


@dataclass
class Receipt:
    tx_digest: Digest32
    sender: Address
    gas_used: int
    status: str
    fee_paid: int
    block_height: int
    emitted: list[Any] = field(default_factory=list)
    trace: list[TraceEntry] = field(default_factory=list)
    kind: str = "tx"
    error: str | None = None
    contract_address: Address | None = None
    result: Any = None

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def frames(self, signature: str) -> list[TraceEntry]:
        return [t for t in self.trace if t.signature == signature]


@dataclass(frozen=True)
class Block:
    height: int
    timestamp: float
    parent_digest: bytes
    transactions: tuple[Transaction, ...]
    state_root: bytes
    receipts: tuple[Receipt, ...] = ()

    @property
    def digest(self) -> Digest32:
        header = (
            self.height,
            repr(float(self.timestamp)),
            bytes(self.parent_digest),
            tuple(bytes(t.digest) for t in self.transactions),
            tuple(bytes(r.tx_digest) for r in self.receipts if r.kind == "system"),
            bytes(self.state_root),
        )
        return keccak256(canonical.dumps(header))


@dataclass(frozen=True)
class LedgerConfig:
    interval: IntervalModel = FIXED
    seed: int = 0
    block_gas_limit: int = 30_000_000
    max_txs_per_block: int | None = None
    base_fee: int = 1
    # blocks a valid tx may wait in a full mempool; theta = max interval * this
    queue_depth_bound: int = 2
    genesis_time: float = 0.0


@dataclass
class _Pending:
    tx: Transaction
    seq: int
    submitted_at: float


class Ledger:
    def __init__(self, schedule: GasSchedule = DEFAULT_SCHEDULE, config: LedgerConfig = LedgerConfig(),
                 genesis: dict[Address, int] | None = None):
        self.schedule = schedule
        self.config = config
        self.state = WorldState()
        self.vm = VM(self.state, schedule)
        self.miner = MINER
        self.minted = 0
        for addr, amount in (genesis or {}).items():
            self.state.accounts[Address(addr)] = AccountState(balance=amount)
            self.minted += amount
        self.state.clear_journal()
        genesis_block = Block(0, config.genesis_time, ZERO_DIGEST, (), self.state.state_root())
        self.blocks: list[Block] = [genesis_block]
        self.receipts: dict[bytes, Receipt] = {}
        self._mempool: list[_Pending] = []
        self._seq = 0
        self._submitted: dict[bytes, float] = {}
        self._included: dict[bytes, int] = {}
        self._hooks: list[Callable[[Ledger, int], None]] = []
        self._building: BlockInfo | None = None
        self._block_receipts: list[Receipt] = []
        self._sampler = config.interval.sampler(config.seed)

    # ----- queries
    @property
    def head(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.head.height

    @property
    def now(self) -> float:
        return self.head.timestamp

    @property
    def theta(self) -> float:
        return self.config.interval.max_interval * self.config.queue_depth_bound

    def account(self, addr: bytes) -> AccountState:
        return self.state.account(Address(addr))

    def balance(self, addr: bytes) -> int:
        return self.state.balance(Address(addr))

    def total_balance(self) -> int:
        return sum(a.balance for a in self.state.accounts.values())

    def pending_nonce(self, addr: bytes) -> int:
        addr = Address(addr)
        return self.account(addr).nonce + sum(1 for p in self._mempool if p.tx.sender == addr)

    @property
    def mempool_size(self) -> int:
        return len(self._mempool)

    def add_block_hook(self, hook: Callable[[Ledger, int], None]) -> None:
        """Run ``hook(ledger, height)`` at the start of every block, before user transactions."""
        self._hooks.append(hook)

    def mint(self, addr: bytes, amount: int) -> None:
        """Faucet credit between blocks; tracked in ``minted`` so conservation stays checkable."""
        if self._building is not None:
            raise LedgerError("cannot mint while a block is being built")
        if amount < 0:
            raise ValueError("mint amount must be non-negative")
        self.state.add_balance(Address(addr), amount)
        self.state.clear_journal()
        self.minted += amount

    # ----- submission
    def submit_transaction(self, tx: Transaction, now: float | None = None) -> Digest32:
        now = self.now if now is None else now
        if derive_address(tx.public_key) != tx.sender or not verify(tx.public_key, tx.payload(), tx.signature):
            raise TransactionRejected("bad signature")
        if tx.nonce != self.pending_nonce(tx.sender):
            raise TransactionRejected(f"stale or out-of-order nonce {tx.nonce}, expected {self.pending_nonce(tx.sender)}")
        if tx.gas_limit < self.schedule.intrinsic:
            raise TransactionRejected("gas limit below intrinsic cost")
        if tx.base_fee < self.config.base_fee:
            raise TransactionRejected("base fee below chain base fee")
        reserved = sum(p.tx.gas_limit * p.tx.price + p.tx.value for p in self._mempool if p.tx.sender == tx.sender)
        if self.balance(tx.sender) < reserved + tx.gas_limit * tx.price + tx.value:
            raise TransactionRejected("insufficient balance for gas limit")
        digest = tx.digest
        self._mempool.append(_Pending(tx, self._seq, now))
        self._seq += 1
        self._submitted[bytes(digest)] = now
        return digest

    # ----- block production
    def next_block_time(self) -> float:
        return self.now + self._sampler.next()

    def reseed_intervals(self, seed: int) -> None:
        """Restart the block-interval draw sequence, e.g. at the start of a measured phase."""
        self._sampler = self.config.interval.sampler(seed)

    def advance(self) -> Block:
        """Mine at the next time drawn from the configured interval model."""
        return self.mine_block(self.next_block_time())

    def mine_block(self, now: float) -> Block:
        if now < self.now + self.config.interval.min_interval - 1e-9:
            raise NoBlockError(f"block at {now} is earlier than {self.now} + {self.config.interval.min_interval}")
        height = self.height + 1
        self._building = BlockInfo(height, now)
        self._block_receipts = []
        try:
            for hook in self._hooks:
                hook(self, height)
            included = self._fill_block()
        finally:
            self._building = None
        block = Block(height, now, self.head.digest, tuple(included), self.state.state_root(),
                      tuple(self._block_receipts))
        self.blocks.append(block)
        for tx in included:
            self._included[bytes(tx.digest)] = height
        return block

    def _fill_block(self) -> list[Transaction]:
        included: list[Transaction] = []
        gas_budget = self.config.block_gas_limit
        cap = self.config.max_txs_per_block
        skipped: set[int] = set()
        while cap is None or len(included) < cap:
            ready = [
                p for p in self._mempool
                if p.seq not in skipped and p.tx.nonce == self.account(p.tx.sender).nonce
            ]
            if not ready:
                break
            ready.sort(key=lambda p: (-p.tx.priority_fee, p.seq))
            chosen = next((p for p in ready if p.tx.gas_limit <= gas_budget), None)
            if chosen is None:
                break
            self._mempool.remove(chosen)
            tx = chosen.tx
            if self.balance(tx.sender) < tx.gas_limit * tx.price + tx.value:
                self._drop_sender(tx.sender)
                continue
            receipt = self._execute(tx)
            gas_budget -= receipt.gas_used
            included.append(tx)
        return included

    def _drop_sender(self, sender: Address) -> None:
        self._mempool = [p for p in self._mempool if p.tx.sender != sender]

    def _execute(self, tx: Transaction) -> Receipt:
        state, info = self.state, self._building
        state.clear_journal()
        state.bump_nonce(tx.sender)
        mark = state.mark()
        txc = TxContext(tx.sender, info)
        intrinsic = self.schedule.intrinsic
        budget = tx.gas_limit - intrinsic
        status, error, created, result, used = "success", None, None, None, 0
        try:
            if tx.target is None:
                behavior_id, *ctor_args = tx.args
                create_cost = self.schedule.deploy_cost(behavior_id) - intrinsic if behavior_id in self.schedule.deploy else 0
                if create_cost > budget:
                    used = budget
                    raise OutOfGas("deployment exceeds gas limit")
                created = create_address(tx.sender, tx.nonce)
                if tx.value:
                    state.add_balance(tx.sender, -tx.value)
                    state.add_balance(created, tx.value)
                used = create_cost
                used += self.vm.create(created, behavior_id, tx.sender, tuple(ctor_args), budget - create_cost, txc)
            elif tx.target in state.contracts:
                if tx.value:
                    state.add_balance(tx.sender, -tx.value)
                    state.add_balance(tx.target, tx.value)
                result, used = self.vm.call(tx.sender, tx.target, tx.function, tx.args, budget, 1, txc)
            elif tx.function:
                raise Revert(f"no contract at {tx.target}", "no-code")
            else:
                state.add_balance(tx.sender, -tx.value)
                state.add_balance(tx.target, tx.value)
        except Revert as exc:
            state.revert_to(mark)
            txc.events.clear()
            status, error, created = "reverted", f"{exc.code}: {exc.reason}", None
            used = budget if isinstance(exc, OutOfGas) else max(used, exc.gas_used)
        gas_used = intrinsic + used
        fee = gas_used * tx.price
        state.add_balance(tx.sender, -fee)
        state.add_balance(self.miner, fee)
        state.clear_journal()
        receipt = Receipt(tx.digest, tx.sender, gas_used, status, fee, info.height, list(txc.events),
                          list(txc.trace), "tx", error, created, result)
        self.receipts[bytes(tx.digest)] = receipt
        self._block_receipts.append(receipt)
        return receipt

    def system_call(self, sender: bytes, target: bytes, function: str, *args, gas_limit: int = 10_000_000) -> Receipt:
        """Execute a hook-initiated call during block building: no signature, no intrinsic cost.

        The caller still pays ``gas_used * base_fee`` to the miner.
        """
        if self._building is None:
            raise LedgerError("system calls are only allowed from block hooks")
        sender, target = Address(sender), Address(target)
        state = self.state
        state.clear_journal()
        txc = TxContext(sender, self._building)
        digest = keccak256(canonical.dumps(("system", self._building.height, len(self._block_receipts),
                                            bytes(sender), bytes(target), function, args)))
        status, error, result = "success", None, None
        try:
            result, used = self.vm.call(sender, target, function, args, gas_limit, 1, txc)
        except Revert as exc:
            state.revert_to(0)
            txc.events.clear()
            status, error, used = "reverted", f"{exc.code}: {exc.reason}", exc.gas_used
        fee = used * self.config.base_fee
        state.add_balance(sender, -fee)
        state.add_balance(self.miner, fee)
        state.clear_journal()
        receipt = Receipt(digest, sender, used, status, fee, self._building.height, list(txc.events),
                          list(txc.trace), "system", error, None, result)
        self.receipts[bytes(digest)] = receipt
        self._block_receipts.append(receipt)
        return receipt

    def simulate(self, sender: bytes, target: bytes, function: str, *args, gas_limit: int = 10_000_000):
        """Dry-run a call against the head state and roll everything back; returns (result, gas, trace)."""
        state = self.state
        state.clear_journal()
        txc = TxContext(Address(sender), BlockInfo(self.height + 1, self.now))
        try:
            result, used = self.vm.call(Address(sender), Address(target), function, args, gas_limit, 1, txc)
        finally:
            state.revert_to(0)
            state.clear_journal()
        return result, used, txc.trace

    # ----- inspection
    def receipt(self, digest: bytes) -> Receipt:
        try:
            return self.receipts[bytes(digest)]
        except KeyError:
            raise NotFoundError(f"unknown transaction 0x{bytes(digest).hex()}") from None

    def inclusion_height(self, digest: bytes) -> int:
        try:
            return self._included[bytes(digest)]
        except KeyError:
            raise NotFoundError(f"transaction 0x{bytes(digest).hex()} not included") from None

    def confirmation_delay(self, digest: bytes) -> float:
        height = self.inclusion_height(digest)
        return self.blocks[height].timestamp - self._submitted[bytes(digest)]

    def submitted_at(self, digest: bytes) -> float:
        return self._submitted[bytes(digest)]

    def state_root(self) -> Digest32:
        return self.state.state_root()

    # ----- snapshots
    def export_snapshot(self) -> str:
        """Canonical JSON snapshot of the head state.

        Field order: format, height, timestamp, blockDigest, stateRoot, miner, accounts.
        Each account: address, nonce, balance, storageRoot, codeHash, behavior, storage,
        accounts sorted by address and storage sorted by slot.
        """
        self.state.refresh_storage_roots(everything=True)
        accounts = []
        for addr in sorted(self.state.accounts):
            acct = self.state.accounts[addr]
            contract = self.state.contracts.get(addr)
            accounts.append({
                "address": "0x" + bytes(addr).hex(),
                "nonce": acct.nonce,
                "balance": str(acct.balance),
                "storageRoot": bytes(acct.storage_root).hex(),
                "codeHash": bytes(acct.code_hash).hex(),
                "behavior": contract.behavior_id if contract else None,
                "storage": [[k.hex(), canonical.encode(v)] for k, v in sorted(contract.storage.items())]
                if contract else [],
            })
        doc = {
            "format": SNAPSHOT_FORMAT,
            "height": self.height,
            "timestamp": self.now,
            "blockDigest": bytes(self.head.digest).hex(),
            "stateRoot": bytes(self.head.state_root).hex(),
            "miner": "0x" + bytes(self.miner).hex(),
            "accounts": accounts,
        }
        return json.dumps(doc, indent=1, separators=(",", ": ")) + "\n"

    @classmethod
    def import_snapshot(cls, text: str, schedule: GasSchedule = DEFAULT_SCHEDULE,
                        config: LedgerConfig | None = None) -> Ledger:
        doc = json.loads(text)
        if doc.get("format") != SNAPSHOT_FORMAT:
            raise LedgerError(f"unsupported snapshot format {doc.get('format')!r}")
        config = config or LedgerConfig()
        ledger = cls(schedule, replace(config, genesis_time=doc["timestamp"]))
        state = ledger.state
        state.accounts.clear()
        for item in doc["accounts"]:
            addr = Address(item["address"])
            state.accounts[addr] = AccountState(
                item["nonce"], int(item["balance"]), bytes.fromhex(item["storageRoot"]), bytes.fromhex(item["codeHash"])
            )
            if item["behavior"] is not None:
                storage = {bytes.fromhex(k): canonical.decode(v) for k, v in item["storage"]}
                state.contracts[addr] = ContractInstance(addr, item["behavior"], code_hash_of(item["behavior"]), storage)
        state.clear_journal()
        root = state.state_root()
        if bytes(root).hex() != doc["stateRoot"]:
            raise LedgerError("snapshot state root mismatch")
        head = Block(doc["height"], doc["timestamp"], bytes.fromhex(doc["blockDigest"]), (), root)
        ledger.blocks = [head]
        ledger.miner = Address(doc["miner"])
        ledger.minted = ledger.total_balance()
        return ledger


def make_transaction(key: KeyPair, nonce: int, target: bytes | None, function: str = "", args: tuple = (),
                     gas_limit: int = 5_000_000, base_fee: int = 1, priority_fee: int = 1, value: int = 0) -> Transaction:
    tx = Transaction(key.address, nonce, Address(target) if target is not None else None, function, tuple(args),
                     gas_limit, base_fee, priority_fee, key.public_key, value)
    return tx.signed_by(key)
