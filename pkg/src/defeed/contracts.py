"""Contract behaviors: management (proxy/router), center (registry/logic), owner, requestor, relay.

Core request, one transaction, depth 7::

    C_r.request -> C_DFM.request -> C_DFC.forward -> C_o.reply -> C_DFC.respond
                -> C_DFM.deliver -> C_r.receive

The owner's ``reply`` guard asks the management contract for the current center
on every call, so it keeps working after the center is replaced.
"""

from __future__ import annotations

from dataclasses import replace

from . import cache as cachelib
from . import governance as gov
from . import pool as poollib
from .crypto import ZERO_DIGEST, Address, hash_addresses, verify
from .protocol import (
    ERROR_NAME_MISSING,
    INFINITE,
    AttributeTuple,
    AuditEvent,
    AuditRecord,
    CacheEvent,
    GovernanceEvent,
    NotificationEvent,
    PendingRequest,
    PoolEvent,
    PoolWindow,
    Proposal,
    ProtocolMessage,
)
from .subscribe import LengthMismatch, compute_delta, payload_vector
from .vm import Behavior, Context, entry

# entry signatures used across contracts
SIG_CENTER = "center()"
SIG_REQUEST = "request(string,bytes32)"
SIG_FLUSH = "flush(string)"
SIG_DELIVER = "deliver(uint256,bytes32,bytes,string)"
SIG_AUDIT = "audit(uint256,string,string)"
SIG_INVALIDATE = "invalidate(string)"
SIG_GET_SUBSCRIBE = "getSubscribe(string)"
SIG_DROP_SUBSCRIBE = "dropSubscribe(string)"
SIG_PROPOSE = "propose(address)"
SIG_APPROVE = "approve(uint256,address,bytes)"
SIG_EXECUTE = "executeUpdate(uint256)"
SIG_VET = "vetRegistration(string,address,string,uint256,bytes[])"
SIG_PERMISSION = "setPermission(bytes32,bool,uint256,bytes[])"

SIG_FORWARD = "forward(uint256,string,int256)"
SIG_RESPOND = "respond(uint256,bytes)"
SIG_REGISTER = "register(string)"
SIG_SYNC_SUBSCRIBE = "syncSubscribe(string,address,bool)"
SIG_PUBLISH_STATE = "publishState(int256[])"
SIG_PUBLISH_PAYLOAD = "publishPayload(bytes)"
SIG_DEACTIVATE = "deactivate()"
SIG_EXPORT = "exportRegistry()"
SIG_IMPORT = "importRegistry(bytes)"
SIG_ADMIN_REGISTRATION = "adminRegistration(string,address,string)"

SIG_REPLY = "reply(uint256)"
SIG_RESPONSE = "response()"
SIG_OWNER_REGISTER = "registerName(string)"
SIG_SET_PAYLOAD = "setPayload(bytes)"
SIG_SET_STATE = "setState(int256[])"

SIG_REQUESTOR_REQUEST = "request(string)"
SIG_RECEIVE = "receive(uint256,string,bytes,string)"
SIG_SUBSCRIBE = "subscribe(string)"
SIG_UNSUBSCRIBE = "unsubscribe(string)"
SIG_NOTIFY = "notify(string,int256[2][])"
SIG_REQUEST_DIRECT = "requestDirect(address)"
SIG_RECEIVE_DIRECT = "receiveDirect(bytes)"
SIG_SET_FAULTY = "setFaulty(bool)"

SIG_RELAY = "relay(address,string,bytes)"

# center entries that only the management contract may enter
MANAGED_CENTER_ENTRIES = (
    SIG_FORWARD,
    SIG_SYNC_SUBSCRIBE,
    SIG_DEACTIVATE,
    SIG_EXPORT,
    SIG_IMPORT,
    SIG_ADMIN_REGISTRATION,
)


def _owner_hash(addr: bytes) -> bytes:
    return bytes(hash_addresses(addr))


class Management(Behavior):
    """C_DFM: routing proxy. Holds the center address, requests, pool, cache, audit log and committee."""

    behavior_id = "dfm"

    def construct(self, ctx: Context, center, committee_keys=(), pool=False, cache=False,
                  window_blocks=poollib.DEFAULT_WINDOW_BLOCKS, ttl_blocks=INFINITE,
                  max_batch=poollib.DEFAULT_MAX_BATCH):
        ctx.require(window_blocks >= 1, "window must be at least one block")
        ctx.require(max_batch >= 1, "batch size must be positive")
        ctx.sstore("center", bytes(center))
        ctx.sstore("config", (bool(pool), bool(cache), int(window_blocks), int(ttl_blocks), int(max_batch)))
        keys = tuple(bytes(k) for k in committee_keys)
        members = []
        for pk in keys:
            member = gov.derive_address(pk)
            ctx.sstore("pubkey", bytes(member), pk)
            members.append(bytes(member))
        ctx.sstore("members", tuple(sorted(members)))
        ctx.sstore("next_request", 1)
        ctx.sstore("next_window", 1)
        ctx.sstore("next_proposal", 1)
        ctx.sstore("audit_len", 0)
        ctx.sstore("open_windows", ())

    # helpers
    @staticmethod
    def config(ctx: Context):
        pool, cache, window, ttl, max_batch = ctx.sload("config")
        return pool, cache, window, ttl, max_batch

    @staticmethod
    def _center(ctx: Context) -> Address:
        return Address(ctx.sload("center"))

    @staticmethod
    def _next(ctx: Context, counter: str) -> int:
        value = ctx.sload(counter)
        ctx.sstore(counter, value + 1)
        return value

    @staticmethod
    def _audit(ctx: Context, requestor_hash: bytes, name: str, outcome: str, request_id: int) -> None:
        index = ctx.sload("audit_len")
        rec = AuditRecord(ctx.height, bytes(requestor_hash), name, outcome, 0, request_id)
        ctx.sstore("audit", index, rec)
        ctx.sstore("audit_len", index + 1)
        ctx.emit(AuditEvent(index, rec))

    def _deliver_one(self, ctx: Context, request_id: int, name: str, requestor_hash: bytes,
                     payload: bytes, error: str) -> bool:
        ctx.charge("dfm_deliver_member")
        target = ctx.sload("addr_of", requestor_hash)
        ok = False
        if target is not None:
            ok, _ = ctx.try_call(target, SIG_RECEIVE, request_id, name, payload, error,
                                 gas=ctx.schedule.notify_stipend)
        if error:
            outcome = "name-missing"
        else:
            outcome = "served" if ok else "receive-failed"
        self._audit(ctx, requestor_hash, name, outcome, request_id)
        ctx.emit(ProtocolMessage("resp", name, (bytes(requestor_hash),), None if error else payload,
                                 error or None, request_id))
        return ok

    def _members(self, ctx: Context) -> tuple[bytes, ...]:
        return ctx.sload("members")

    def _count_endorsements(self, ctx: Context, message: bytes, approvals) -> int:
        signers = set()
        for item in approvals:
            if not isinstance(item, tuple) or len(item) != 2:
                continue
            member, sig = item
            pk = ctx.sload("pubkey", bytes(member))
            if pk is not None and verify(pk, message, sig):
                signers.add(bytes(member))
        return len(signers)

    def _threshold(self, ctx: Context) -> int:
        return gov.approval_threshold(len(self._members(ctx)))

    # protocol entries
    @entry(SIG_CENTER)
    def center(self, ctx: Context):
        ctx.charge("dfm_center_view")
        return self._center(ctx)

    @entry(SIG_REQUEST)
    def request(self, ctx: Context, name: str, requestor_hash: bytes):
        ctx.require(isinstance(name, str) and name != "", "empty name", "invalid-input")
        ctx.require(ctx.is_contract(ctx.caller), "requestor must be a contract", "not-contract")
        ctx.require(bytes(requestor_hash) == _owner_hash(ctx.caller), "requestor hash does not match caller",
                    "bad-hash")
        requestor_hash = bytes(requestor_hash)
        pool, cache, window_blocks, ttl, max_batch = self.config(ctx)
        ctx.emit(ProtocolMessage("req", name, (requestor_hash,)))
        ctx.sstore("addr_of", requestor_hash, bytes(ctx.caller))
        request_id = self._next(ctx, "next_request")

        if ctx.sload("denied", requestor_hash):
            ctx.charge("dfm_deny")
            self._audit(ctx, requestor_hash, name, "denied", request_id)
            return 0

        if cache:
            entry_ = ctx.sload("cache", name)
            state = cachelib.classify(entry_, ctx.height)
            stats = ctx.sload("cache_stats", name, default=cachelib.CacheStats())
            if state == "hit":
                ctx.charge("dfm_cache_hit")
                ctx.sstore("cache_stats", name, stats.bump(hits=1))
                ctx.emit(CacheEvent("hit", name))
                self._deliver_one(ctx, request_id, name, requestor_hash, entry_.d, "")
                return request_id
            ctx.charge("dfm_cache_lookup")
            if state == "expired":
                ctx.sdelete("cache", name)
                stats = stats.bump(evictions=1)
                ctx.emit(CacheEvent("evict", name))
            ctx.sstore("cache_stats", name, stats.bump(misses=1))
            ctx.emit(CacheEvent("miss", name))

        if pool:
            ctx.charge("dfm_pool_enqueue")
            current = ctx.sload("window", name)
            window, opened = poollib.join_or_open(current, name, ctx.height, ctx.caller, requestor_hash,
                                                  ctx.sload("next_window"), window_blocks)
            if opened:
                self._next(ctx, "next_window")
                ctx.sstore("open_windows", ctx.sload("open_windows") + (name,))
            ctx.sstore("window", name, window)
            ctx.emit(PoolEvent("open" if opened else "join", window.window_id, name,
                               len(window.requestors), window.opened_at, window.closes_at))
            if len(window.requestors) >= max_batch:
                self._flush_window(ctx, name, window)
            return request_id

        ctx.charge("dfm_request")
        ctx.sstore("req", request_id, PendingRequest(name, (requestor_hash,), requestor_hash))
        ctx.emit(ProtocolMessage("for", name, (requestor_hash,), request_id=request_id))
        ctx.call(self._center(ctx), SIG_FORWARD, request_id, name, 0)
        return request_id

    def _flush_window(self, ctx: Context, name: str, window: PoolWindow) -> int:
        ctx.charge("dfm_flush")
        ctx.sdelete("window", name)
        ctx.sstore("open_windows", tuple(n for n in ctx.sload("open_windows") if n != name))
        request_id = self._next(ctx, "next_request")
        aggregate = poollib.aggregate_hash(window)
        ctx.sstore("req", request_id, PendingRequest(name, window.requestor_hashes, aggregate, window.window_id))
        ctx.emit(PoolEvent("flush", window.window_id, name, len(window.requestors), window.opened_at, ctx.height))
        ctx.emit(ProtocolMessage("for", name, (aggregate,), request_id=request_id))
        ctx.call(self._center(ctx), SIG_FORWARD, request_id, name, window.window_blocks)
        return request_id

    @entry(SIG_FLUSH)
    def flush(self, ctx: Context, name: str):
        """Close the window for ``name`` once it has expired; callable by the block keeper or anyone."""
        window = ctx.sload("window", name)
        ctx.require(window is not None, f"no open window for {name!r}", "no-window")
        ctx.require(window.expired(ctx.height), "window still open", "window-open")
        return self._flush_window(ctx, name, window)

    @entry(SIG_DELIVER)
    def deliver(self, ctx: Context, request_id: int, owner_hash: bytes, payload: bytes, error: str):
        ctx.access_only(self._center(ctx))
        req = ctx.sload("req", request_id)
        ctx.require(req is not None, f"unknown request {request_id}", "unknown-request")
        ctx.sdelete("req", request_id)
        delivered = 0
        for h in req.requestor_hashes:
            delivered += self._deliver_one(ctx, request_id, req.name, h, payload, error)
        _, cache, _, ttl, _ = self.config(ctx)
        if cache and not error:
            ctx.charge("dfm_create_cache")
            new = cachelib.make_entry(req.name, bytes(owner_hash), payload, ctx.height, ttl)
            ctx.sstore("cache", req.name, cachelib.overwrite(ctx.sload("cache", req.name), new))
            ctx.emit(CacheEvent("create", req.name))
        return delivered

    @entry(SIG_AUDIT)
    def audit(self, ctx: Context, request_id: int, name: str, outcome: str):
        ctx.access_only(self._center(ctx))
        ctx.charge("dfm_audit")
        req = ctx.sload("req", request_id)
        requestor_hash = req.requestor_hashes[0] if req and len(req.requestor_hashes) == 1 else (
            req.aggregate_hash if req else bytes(ZERO_DIGEST))
        self._audit(ctx, requestor_hash, name, outcome, request_id)

    @entry(SIG_INVALIDATE)
    def invalidate(self, ctx: Context, name: str):
        """Drop the cache entry for ``name``; the center or any committee member may ask."""
        is_member = ctx.caller == ctx.origin and bytes(ctx.caller) in self._members(ctx)
        if not is_member:
            ctx.access_only(self._center(ctx))
        ctx.charge("dfm_invalidate")
        if ctx.sload("cache", name) is None:
            return False
        ctx.sdelete("cache", name)
        stats = ctx.sload("cache_stats", name, default=cachelib.CacheStats())
        ctx.sstore("cache_stats", name, stats.bump(evictions=1))
        ctx.emit(CacheEvent("evict", name))
        return True

    @entry(SIG_GET_SUBSCRIBE)
    def get_subscribe(self, ctx: Context, name: str):
        ctx.charge("dfm_get_subscribe")
        ctx.require(ctx.is_contract(ctx.caller), "subscriber must be a contract", "not-contract")
        ctx.require(not ctx.sload("denied", _owner_hash(ctx.caller)), "subscriber is denied", "denied")
        return ctx.call(self._center(ctx), SIG_SYNC_SUBSCRIBE, name, bytes(ctx.caller), True)

    @entry(SIG_DROP_SUBSCRIBE)
    def drop_subscribe(self, ctx: Context, name: str):
        ctx.charge("dfm_get_subscribe")
        return ctx.call(self._center(ctx), SIG_SYNC_SUBSCRIBE, name, bytes(ctx.caller), False)

    # governance entries
    @entry(SIG_PROPOSE)
    def propose(self, ctx: Context, new_center: bytes):
        ctx.charge("dfm_propose")
        member = bytes(ctx.caller)
        ctx.require(ctx.caller == ctx.origin and member in self._members(ctx), "proposer is not a member",
                    "not-member")
        ctx.require(ctx.behavior_id_of(new_center) == Center.behavior_id, "target is not a center contract",
                    "bad-target")
        ctx.require(bytes(new_center) != bytes(self._center(ctx)), "target is already the center", "bad-target")
        proposal_id = self._next(ctx, "next_proposal")
        ctx.sstore("proposal", proposal_id, Proposal(proposal_id, bytes(new_center), frozenset({member})))
        ctx.emit(GovernanceEvent("propose", proposal_id, member, "ok"))
        return proposal_id

    @entry(SIG_APPROVE)
    def approve(self, ctx: Context, proposal_id: int, member: bytes, signature: bytes):
        ctx.charge("dfm_approve")
        prop = ctx.sload("proposal", proposal_id)
        ctx.require(prop is not None, f"unknown proposal {proposal_id}", "unknown-proposal")
        ctx.require(not prop.executed, "proposal already executed", "executed")
        pk = ctx.sload("pubkey", bytes(member))
        ctx.require(pk is not None, "approver is not a member", "not-member")
        message = gov.approval_message(proposal_id, prop.new_center, ctx.address)
        ctx.require(verify(pk, message, signature), "bad approval signature", "bad-signature")
        approvals = prop.approvals | {bytes(member)}
        ctx.sstore("proposal", proposal_id, replace(prop, approvals=approvals))
        ctx.emit(GovernanceEvent("approve", proposal_id, bytes(member), "ok"))
        return len(approvals)

    @entry(SIG_EXECUTE)
    def execute_update(self, ctx: Context, proposal_id: int):
        ctx.charge("dfm_execute_update")
        prop = ctx.sload("proposal", proposal_id)
        ctx.require(prop is not None, f"unknown proposal {proposal_id}", "unknown-proposal")
        ctx.require(not prop.executed, "proposal already executed", "executed")
        ctx.require(len(prop.approvals) >= self._threshold(ctx), "not enough approvals", "threshold")
        old = self._center(ctx)
        ctx.call(old, SIG_DEACTIVATE)
        exported = ctx.call(old, SIG_EXPORT)
        ctx.call(prop.new_center, SIG_IMPORT, exported)
        ctx.sstore("center", bytes(prop.new_center))
        ctx.sstore("proposal", proposal_id, replace(prop, executed=True))
        ctx.emit(GovernanceEvent("execute", proposal_id, bytes(ctx.caller), "ok"))
        return Address(prop.new_center)

    @entry(SIG_VET)
    def vet_registration(self, ctx: Context, name: str, owner: bytes, action: str, nonce: int, approvals):
        ctx.charge("dfm_vet")
        ctx.require(action in ("register", "deregister"), f"unknown action {action!r}", "invalid-input")
        ctx.require(not ctx.sload("nonce_used", nonce), "nonce already used", "replay")
        message = gov.vet_message(name, owner, action, nonce, ctx.address)
        ctx.require(self._count_endorsements(ctx, message, approvals) >= self._threshold(ctx),
                    "not enough valid approvals", "threshold")
        ctx.sstore("nonce_used", nonce, True)
        ctx.call(self._center(ctx), SIG_ADMIN_REGISTRATION, name, bytes(owner), action)
        if action == "deregister":
            if ctx.sload("window", name) is not None:
                ctx.sdelete("window", name)
                ctx.sstore("open_windows", tuple(n for n in ctx.sload("open_windows") if n != name))
            if ctx.sload("cache", name) is not None:
                ctx.sdelete("cache", name)
                stats = ctx.sload("cache_stats", name, default=cachelib.CacheStats())
                ctx.sstore("cache_stats", name, stats.bump(evictions=1))
                ctx.emit(CacheEvent("evict", name))
        ctx.emit(GovernanceEvent(action, 0, bytes(ctx.caller), "ok"))
        return True

    @entry(SIG_PERMISSION)
    def set_permission(self, ctx: Context, requestor_hash: bytes, allowed: bool, nonce: int, approvals):
        ctx.charge("dfm_set_permission")
        ctx.require(not ctx.sload("nonce_used", nonce), "nonce already used", "replay")
        message = gov.permission_message(requestor_hash, allowed, nonce, ctx.address)
        ctx.require(self._count_endorsements(ctx, message, approvals) >= self._threshold(ctx),
                    "not enough valid approvals", "threshold")
        ctx.sstore("nonce_used", nonce, True)
        if allowed:
            ctx.sdelete("denied", bytes(requestor_hash))
        else:
            ctx.sstore("denied", bytes(requestor_hash), True)
        ctx.emit(GovernanceEvent("allow" if allowed else "deny", 0, bytes(ctx.caller), "ok"))
        return True


class Center(Behavior):
    """C_DFC: name registry, query dispatch, response checking, subscriptions."""

    behavior_id = "dfc"

    def construct(self, ctx: Context, manager, pool=False, subscribe=False):
        ctx.sstore("dfm", bytes(manager))
        ctx.sstore("config", (bool(pool), bool(subscribe)))
        ctx.sstore("active", True)
        ctx.sstore("names", ())

    @staticmethod
    def _manager(ctx: Context) -> Address:
        return Address(ctx.sload("dfm"))

    def _guard(self, ctx: Context) -> None:
        ctx.access_only(self._manager(ctx))
        self._require_active(ctx)

    @staticmethod
    def _require_active(ctx: Context) -> None:
        ctx.require(ctx.sload("active"), "center is inactive", "inactive")

    @staticmethod
    def lookup(ctx: Context, name: str) -> AttributeTuple | None:
        return ctx.sload("gamma", name)

    def _put(self, ctx: Context, gamma: AttributeTuple, owner: bytes) -> None:
        name = gamma.y
        ctx.sstore("gamma", name, gamma)
        ctx.sstore("owner_addr", name, bytes(owner))
        ctx.sstore("owner_name", bytes(gamma.z), name)
        names = ctx.sload("names")
        if name not in names:
            ctx.sstore("names", tuple(sorted(names + (name,))))

    def _remove(self, ctx: Context, name: str) -> None:
        gamma = self.lookup(ctx, name)
        if gamma is None:
            return
        ctx.sdelete("gamma", name)
        ctx.sdelete("owner_addr", name)
        ctx.sdelete("owner_name", bytes(gamma.z))
        ctx.sdelete("subs", name)
        ctx.sdelete("state", name)
        ctx.sstore("names", tuple(n for n in ctx.sload("names") if n != name))

    @entry(SIG_REGISTER)
    def register(self, ctx: Context, name: str):
        ctx.charge("dfc_register")
        self._require_active(ctx)
        ctx.require(isinstance(name, str) and name != "", "empty name", "invalid-input")
        ctx.require(ctx.is_contract(ctx.caller), "owner must be a contract", "not-contract")
        ctx.require(self.lookup(ctx, name) is None, f"name {name!r} already registered", "duplicate-name")
        owner_hash = _owner_hash(ctx.caller)
        ctx.require(ctx.sload("owner_name", owner_hash) is None, "owner already registered", "duplicate-owner")
        pool, _ = ctx.sload("config")
        gamma = AttributeTuple(1, name, owner_hash, INFINITE if pool else None)
        self._put(ctx, gamma, ctx.caller)
        ctx.emit(ProtocolMessage("reg", name, (owner_hash,)))
        return gamma

    @entry(SIG_FORWARD)
    def forward(self, ctx: Context, request_id: int, name: str, delay: int):
        self._guard(ctx)
        ctx.charge("dfc_forward")
        if not ctx.sload("warmed"):
            ctx.charge("dfc_warmup")
            ctx.sstore("warmed", True)
        gamma = self.lookup(ctx, name)
        if gamma is None:
            ctx.call(self._manager(ctx), SIG_DELIVER, request_id, bytes(ZERO_DIGEST), b"", ERROR_NAME_MISSING)
            return False
        if delay and gamma.t != delay:
            ctx.sstore("gamma", name, replace(gamma, t=delay))
        ctx.sstore("pending", request_id, name)
        ctx.emit(ProtocolMessage("query", name, request_id=request_id))
        ctx.call(ctx.sload("owner_addr", name), SIG_REPLY, request_id)
        return True

    @entry(SIG_RESPOND)
    def respond(self, ctx: Context, request_id: int, payload: bytes):
        ctx.charge("dfc_respond")
        self._require_active(ctx)
        name = ctx.sload("pending", request_id)
        gamma = self.lookup(ctx, name) if name is not None else None
        if gamma is None or _owner_hash(ctx.caller) != bytes(gamma.z):
            ctx.call(self._manager(ctx), SIG_AUDIT, request_id, name or "", "denied")
            return False
        ctx.sdelete("pending", request_id)
        ctx.call(self._manager(ctx), SIG_DELIVER, request_id, bytes(gamma.z), bytes(payload), "")
        return True

    @entry(SIG_SYNC_SUBSCRIBE)
    def sync_subscribe(self, ctx: Context, name: str, subscriber: bytes, on: bool):
        self._guard(ctx)
        ctx.charge("dfc_sync_subscribe")
        ctx.require(self.lookup(ctx, name) is not None, f"unknown name {name!r}", "unknown-name")
        subs = set(ctx.sload("subs", name, default=()))
        changed = (bytes(subscriber) not in subs) if on else (bytes(subscriber) in subs)
        if on:
            subs.add(bytes(subscriber))
        else:
            subs.discard(bytes(subscriber))
        ctx.sstore("subs", name, tuple(sorted(subs)))
        return changed

    def _publish(self, ctx: Context, values: tuple[int, ...]) -> int:
        ctx.charge("dfc_publish")
        self._require_active(ctx)
        name = ctx.sload("owner_name", _owner_hash(ctx.caller))
        _, subscribe = ctx.sload("config")
        if name is None or not subscribe:
            return 0
        previous = ctx.sload("state", name)
        ctx.sstore("state", name, values)
        if previous is None:
            # first publish declares the vector; nobody is notified, but a cached copy may predate it
            ctx.call(self._manager(ctx), SIG_INVALIDATE, name)
            return 0
        try:
            changes = compute_delta(previous, values)
        except LengthMismatch as exc:
            ctx.require(False, str(exc), "length-mismatch")
        if not changes:
            return 0
        for subscriber in ctx.sload("subs", name, default=()):
            ctx.charge("dfc_notify_member")
            ok, result = ctx.try_call(subscriber, SIG_NOTIFY, name, changes, gas=ctx.schedule.notify_stipend)
            ctx.emit(NotificationEvent(name, subscriber, changes, ok, "" if ok else str(result)))
        ctx.call(self._manager(ctx), SIG_INVALIDATE, name)
        return len(changes)

    @entry(SIG_PUBLISH_STATE)
    def publish_state(self, ctx: Context, values):
        return self._publish(ctx, tuple(int(v) for v in values))

    @entry(SIG_PUBLISH_PAYLOAD)
    def publish_payload(self, ctx: Context, payload: bytes):
        return self._publish(ctx, payload_vector(bytes(payload)))

    @entry(SIG_DEACTIVATE)
    def deactivate(self, ctx: Context):
        self._guard(ctx)
        ctx.charge("dfc_deactivate")
        ctx.sstore("active", False)

    @entry(SIG_EXPORT)
    def export_registry(self, ctx: Context):
        ctx.access_only(self._manager(ctx))
        ctx.charge("dfc_export")
        return tuple(
            (self.lookup(ctx, n), ctx.sload("owner_addr", n), ctx.sload("subs", n, default=()), ctx.sload("state", n))
            for n in ctx.sload("names")
        )

    @entry(SIG_IMPORT)
    def import_registry(self, ctx: Context, records):
        self._guard(ctx)
        ctx.charge("dfc_import")
        ctx.charge("dfc_import_per_tuple", len(records))
        for gamma, owner, subs, state in records:
            self._remove(ctx, gamma.y)
            self._put(ctx, gamma, owner)
            if subs:
                ctx.sstore("subs", gamma.y, tuple(subs))
            if state is not None:
                ctx.sstore("state", gamma.y, tuple(state))
        return len(records)

    @entry(SIG_ADMIN_REGISTRATION)
    def admin_registration(self, ctx: Context, name: str, owner: bytes, action: str):
        self._guard(ctx)
        ctx.charge("dfc_admin_registration")
        ctx.require(name != "", "empty name", "invalid-input")
        if action == "deregister":
            ctx.require(self.lookup(ctx, name) is not None, f"unknown name {name!r}", "unknown-name")
            self._remove(ctx, name)
            return True
        ctx.require(ctx.is_contract(owner), "owner must be a contract", "not-contract")
        previous_name = ctx.sload("owner_name", _owner_hash(owner))
        if previous_name is not None:
            self._remove(ctx, previous_name)
        self._remove(ctx, name)
        pool, _ = ctx.sload("config")
        self._put(ctx, AttributeTuple(1, name, _owner_hash(owner), INFINITE if pool else None), owner)
        return True


class Owner(Behavior):
    """C_o: holds the payload κ (and optionally a numeric state vector) and answers queries."""

    behavior_id = "owner"

    def construct(self, ctx: Context, manager, payload=b""):
        ctx.sstore("dfm", bytes(manager))
        ctx.sstore("controller", bytes(ctx.caller))
        ctx.sstore("payload", bytes(payload))

    def _controller_only(self, ctx: Context) -> None:
        ctx.access_only(ctx.sload("controller"))

    def _center(self, ctx: Context) -> Address:
        return Address(ctx.call(ctx.sload("dfm"), SIG_CENTER))

    @entry(SIG_OWNER_REGISTER)
    def register_name(self, ctx: Context, name: str):
        self._controller_only(ctx)
        ctx.charge("owner_register")
        return ctx.call(self._center(ctx), SIG_REGISTER, name)

    @entry(SIG_REPLY)
    def reply(self, ctx: Context, request_id: int):
        ctx.charge("owner_reply")
        center = self._center(ctx)
        ctx.access_only(center)
        payload = ctx.sload("payload")
        ctx.emit(ProtocolMessage("reply", "", payload=payload, request_id=request_id))
        return ctx.call(center, SIG_RESPOND, request_id, payload)

    @entry(SIG_RESPONSE)
    def response(self, ctx: Context):
        """Unprotected direct-call baseline: hand the payload straight back to the caller."""
        ctx.charge("owner_response")
        return ctx.call(ctx.caller, SIG_RECEIVE_DIRECT, ctx.sload("payload"))

    @entry(SIG_SET_PAYLOAD)
    def set_payload(self, ctx: Context, payload: bytes):
        self._controller_only(ctx)
        ctx.charge("owner_set_payload")
        ctx.sstore("payload", bytes(payload))
        return ctx.call(self._center(ctx), SIG_PUBLISH_PAYLOAD, bytes(payload))

    @entry(SIG_SET_STATE)
    def set_state(self, ctx: Context, values):
        self._controller_only(ctx)
        ctx.charge("owner_set_state")
        values = tuple(int(v) for v in values)
        ctx.sstore("state", values)
        return ctx.call(self._center(ctx), SIG_PUBLISH_STATE, values)


class Requestor(Behavior):
    """C_r: asks for data through the management contract and records what comes back."""

    behavior_id = "requestor"

    def construct(self, ctx: Context, manager):
        ctx.sstore("dfm", bytes(manager))
        ctx.sstore("controller", bytes(ctx.caller))
        ctx.sstore("inbox_len", 0)
        ctx.sstore("notes_len", 0)

    def _controller_only(self, ctx: Context) -> None:
        ctx.access_only(ctx.sload("controller"))

    def _append(self, ctx: Context, counter: str, key: str, item) -> None:
        n = ctx.sload(counter)
        ctx.sstore(key, n, item)
        ctx.sstore(counter, n + 1)

    @entry(SIG_REQUESTOR_REQUEST)
    def request(self, ctx: Context, name: str):
        self._controller_only(ctx)
        ctx.charge("requestor_request")
        return ctx.call(ctx.sload("dfm"), SIG_REQUEST, name, _owner_hash(ctx.address))

    @entry(SIG_RECEIVE)
    def receive(self, ctx: Context, request_id: int, name: str, payload: bytes, error: str):
        ctx.charge("requestor_receive")
        ctx.access_only(ctx.sload("dfm"))
        ctx.require(not ctx.sload("faulty"), "receiver is faulty", "faulty")
        self._append(ctx, "inbox_len", "inbox", (request_id, name, bytes(payload), error, ctx.height))

    @entry(SIG_SUBSCRIBE)
    def subscribe(self, ctx: Context, name: str):
        self._controller_only(ctx)
        ctx.charge("requestor_subscribe")
        return ctx.call(ctx.sload("dfm"), SIG_GET_SUBSCRIBE, name)

    @entry(SIG_UNSUBSCRIBE)
    def unsubscribe(self, ctx: Context, name: str):
        self._controller_only(ctx)
        ctx.charge("requestor_subscribe")
        return ctx.call(ctx.sload("dfm"), SIG_DROP_SUBSCRIBE, name)

    @entry(SIG_NOTIFY)
    def notify(self, ctx: Context, name: str, changes):
        ctx.charge("requestor_notify")
        ctx.require(not ctx.sload("faulty"), "receiver is faulty", "faulty")
        self._append(ctx, "notes_len", "note", (name, tuple(changes), bytes(ctx.caller), ctx.height))

    @entry(SIG_REQUEST_DIRECT)
    def request_direct(self, ctx: Context, owner: bytes):
        self._controller_only(ctx)
        ctx.charge("requestor_request_direct")
        return ctx.call(owner, SIG_RESPONSE)

    @entry(SIG_RECEIVE_DIRECT)
    def receive_direct(self, ctx: Context, payload: bytes):
        ctx.charge("requestor_receive_direct")
        self._append(ctx, "inbox_len", "inbox", (0, "", bytes(payload), "", ctx.height))

    @entry(SIG_SET_FAULTY)
    def set_faulty(self, ctx: Context, faulty: bool):
        self._controller_only(ctx)
        ctx.sstore("faulty", bool(faulty))


class Relay(Behavior):
    """Forwards an arbitrary call; used to probe access guards from a contract caller."""

    behavior_id = "relay"

    @entry(SIG_RELAY)
    def relay(self, ctx: Context, target: bytes, signature: str, args):
        ctx.charge("relay_call")
        return ctx.call(target, signature, *tuple(args))
