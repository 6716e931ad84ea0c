"""Contract execution: behaviors as host-language state machines, metered nested calls.

A contract is a :class:`ContractInstance` whose ``behavior_id`` names a
:class:`Behavior` subclass. Public entries are methods decorated with
:func:`entry`; they are dispatched by the 4-byte selector of their signature
text, the way calldata is routed on Ethereum.

Gas is charged by handlers through :meth:`Context.charge`. Every frame reports
inclusive gas (its own charges plus its children's), and every frame is atomic:
a revert rolls back its storage, balance and event effects.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, field
from typing import Any, ClassVar

from .crypto import Address, Digest32, function_selector, keccak256
from .gas import GasSchedule
from .state import ContractInstance, WorldState, slot

DEFAULT_MAX_DEPTH = 8

BEHAVIORS: dict[str, Behavior] = {}


class Revert(Exception):
    code = "revert"

    def __init__(self, reason: str = "", code: str | None = None):
        super().__init__(reason or self.code)
        self.reason = reason or self.code
        if code:
            self.code = code
        self.gas_used = 0


class OutOfGas(Revert):
    code = "out-of-gas"


class AccessDenied(Revert):
    code = "access-denied"


class MaxDepthExceeded(Revert):
    code = "max-depth"


class UnknownSelector(Revert):
    code = "unknown-selector"


def entry(signature: str):
    def mark(fn):
        fn.__entry_signature__ = signature
        return fn

    return mark


class Behavior:
    behavior_id: ClassVar[str] = ""
    entries: ClassVar[dict[bytes, tuple[str, str]]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        table = {}
        for name in dir(cls):
            sig = getattr(getattr(cls, name), "__entry_signature__", None)
            if sig is not None:
                table[function_selector(sig)] = (sig, name)
        cls.entries = table
        if cls.behavior_id:
            BEHAVIORS[cls.behavior_id] = cls()

    def construct(self, ctx: Context, *args) -> None:
        pass


def code_hash_of(behavior_id: str) -> Digest32:
    return keccak256(behavior_id.encode())


@dataclass
class CallFrame:
    caller: Address
    callee: Address
    selector: bytes
    args: tuple
    gas_budget: int
    depth: int
    gas_used: int = 0


@dataclass(frozen=True)
class TraceEntry:
    depth: int
    caller: Address
    callee: Address
    selector: bytes
    signature: str
    gas_used: int
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def line(self) -> str:
        return (
            f"{self.depth}\t0x{bytes(self.caller).hex()}\t0x{bytes(self.callee).hex()}\t"
            f"0x{self.selector.hex()}\t{self.gas_used}\t{self.status}\t{self.signature}"
        )


TRACE_HEADER = "depth\tcaller\tcallee\tselector\tgasUsed\tstatus\tsignature"


@dataclass
class BlockInfo:
    height: int
    timestamp: float


@dataclass
class TxContext:
    origin: Address
    block: BlockInfo
    trace: list[TraceEntry] = field(default_factory=list)
    events: list[Any] = field(default_factory=list)


class Context:
    """What a handler sees while it runs inside one call frame."""

    def __init__(self, vm: VM, frame: CallFrame, tx: TxContext):
        self.vm = vm
        self.frame = frame
        self.tx = tx

    @property
    def address(self) -> Address:
        return self.frame.callee

    @property
    def caller(self) -> Address:
        return self.frame.caller

    @property
    def origin(self) -> Address:
        return self.tx.origin

    @property
    def height(self) -> int:
        return self.tx.block.height

    @property
    def timestamp(self) -> float:
        return self.tx.block.timestamp

    @property
    def schedule(self) -> GasSchedule:
        return self.vm.schedule

    @property
    def gas_left(self) -> int:
        return self.frame.gas_budget - self.frame.gas_used

    def charge(self, label: str, times: int = 1) -> None:
        self.charge_gas(self.vm.schedule.cost(label) * times)

    def charge_gas(self, amount: int) -> None:
        if self.frame.gas_used + amount > self.frame.gas_budget:
            self.frame.gas_used = self.frame.gas_budget
            raise OutOfGas(f"out of gas in {self.frame.selector.hex()}")
        self.frame.gas_used += amount

    # storage
    def sload(self, *path, default=None):
        return self.vm.state.sload(self.address, slot(*path), default)

    def sstore(self, *path_and_value) -> None:
        *path, value = path_and_value
        self.vm.state.sstore(self.address, slot(*path), value)

    def sdelete(self, *path) -> None:
        self.vm.state.sstore(self.address, slot(*path), None)

    # guards
    def require(self, condition: bool, reason: str, code: str = "revert") -> None:
        if not condition:
            raise Revert(reason, code)

    def access_only(self, allowed: bytes) -> None:
        access_only(self.frame, allowed)

    def is_contract(self, addr: bytes) -> bool:
        return Address(addr) in self.vm.state.contracts if len(addr) == 20 else False

    def behavior_id_of(self, addr: bytes) -> str | None:
        contract = self.vm.state.contracts.get(Address(addr)) if len(addr) == 20 else None
        return contract.behavior_id if contract else None

    def emit(self, event: Any) -> None:
        self.tx.events.append(event)

    # nested calls
    def call(self, target: bytes, signature: str, *args, gas: int | None = None):
        """Call another contract; a revert in the callee bubbles up."""
        budget = self.gas_left if gas is None else min(gas, self.gas_left)
        try:
            result, used = self.vm.call(
                self.address, Address(target), signature, args, budget, self.frame.depth + 1, self.tx
            )
        except Revert as exc:
            self.frame.gas_used += exc.gas_used
            raise
        self.frame.gas_used += used
        return result

    def try_call(self, target: bytes, signature: str, *args, gas: int | None = None):
        """Isolated call: returns (ok, result_or_exception) and never reverts the caller."""
        try:
            return True, self.call(target, signature, *args, gas=gas)
        except OutOfGas as exc:
            if self.gas_left <= 0:
                raise
            return False, exc
        except Revert as exc:
            return False, exc


def access_only(frame: CallFrame, allowed: bytes) -> None:
    """Pass iff the frame's caller is ``allowed``; otherwise revert with access-denied."""
    if bytes(frame.caller) != bytes(allowed):
        raise AccessDenied(f"caller {frame.caller} is not {Address(allowed) if len(allowed) == 20 else allowed!r}")


class VM:
    def __init__(self, state: WorldState, schedule: GasSchedule, max_depth: int = DEFAULT_MAX_DEPTH):
        self.state = state
        self.schedule = schedule
        self.max_depth = max_depth

    def behavior_of(self, addr: Address) -> Behavior | None:
        contract = self.state.contracts.get(addr)
        return BEHAVIORS.get(contract.behavior_id) if contract else None

    def create(self, address: Address, behavior_id: str, creator: Address, args: tuple, budget: int, tx: TxContext):
        if behavior_id not in BEHAVIORS:
            raise Revert(f"unknown behavior {behavior_id!r}", "unknown-behavior")
        self.state.add_contract(ContractInstance(address, behavior_id, code_hash_of(behavior_id)))
        frame = CallFrame(creator, address, b"\x00\x00\x00\x00", args, budget, 1)
        behavior = BEHAVIORS[behavior_id]
        try:
            inspect.signature(behavior.construct).bind(None, *args)
        except TypeError as exc:
            raise Revert(f"bad constructor arguments: {exc}", "bad-arguments") from None
        behavior.construct(Context(self, frame, tx), *args)
        return frame.gas_used

    def call(self, caller: Address, callee: Address, signature: str | bytes, args: tuple, budget: int,
             depth: int, tx: TxContext):
        if isinstance(signature, str):
            selector, sig_text = function_selector(signature), signature
        else:
            selector, sig_text = bytes(signature), ""
        frame = CallFrame(caller, callee, selector, tuple(args), max(budget, 0), depth)
        index = len(tx.trace)
        tx.trace.append(None)
        mark = self.state.mark()
        events_mark = len(tx.events)
        try:
            if depth > self.max_depth:
                raise MaxDepthExceeded(f"depth {depth} exceeds {self.max_depth}")
            contract = self.state.contracts.get(callee)
            if contract is None:
                raise Revert(f"no contract at {callee}", "no-code")
            behavior = BEHAVIORS[contract.behavior_id]
            found = behavior.entries.get(selector)
            if found is None:
                raise UnknownSelector(f"selector 0x{selector.hex()} not found")
            sig_text, method_name = found
            method = getattr(behavior, method_name)
            try:
                inspect.signature(method).bind(None, *frame.args)
            except TypeError as exc:
                raise Revert(f"bad arguments for {sig_text}: {exc}", "bad-arguments") from None
            if frame.gas_budget <= 0:
                raise OutOfGas("no gas forwarded")
            try:
                result = method(Context(self, frame, tx), *frame.args)
            except (TypeError, ValueError, KeyError, IndexError, AttributeError) as exc:
                # malformed calldata reaching a handler reverts, as it would on-chain
                raise Revert(f"invalid input: {exc}", "invalid-input") from exc
        except Revert as exc:
            self.state.revert_to(mark)
            del tx.events[events_mark:]
            exc.gas_used = frame.gas_used
            tx.trace[index] = TraceEntry(depth, caller, callee, selector, sig_text, frame.gas_used, f"revert:{exc.code}")
            raise
        tx.trace[index] = TraceEntry(depth, caller, callee, selector, sig_text, frame.gas_used, "ok")
        return result, frame.gas_used
