"""Drivers shared by the pool tests and the acceptance suite."""

from conftest import NAME, PAYLOAD, make_world

from defeed import contracts as C
from defeed.protocol import PoolEvent


def pool_world(n_requestors=3, names=(NAME,), **kw):
    w = make_world(pool=True, **kw)
    owners = {name: w.add_owner(name, PAYLOAD + name.encode()) for name in names}
    rs = w.add_requestors(n_requestors)
    return w, owners, rs


def replies(w):
    return [t for rec in w.all_receipts() for t in rec.frames(C.SIG_REPLY) if t.ok]


def run_contract(plan, window_blocks, max_batch):
    """Replay (block, name) arrivals against the contracts; returns the world and (name, members) per flush."""
    w, _, rs = pool_world(4, names=tuple("xyz"), window_blocks=window_blocks, max_batch=max_batch)
    base = w.height + 1
    by_block: dict[int, list[tuple[int, str]]] = {}
    for rid, (block, name) in enumerate(plan):
        by_block.setdefault(block, []).append((rid, name))
    digest_of = {}
    for b in range(20):
        for rid, name in by_block.get(b, ()):
            digest_of[rid] = w.request(rs[rid % len(rs)], name)
        w.mine()
    for _ in range(window_blocks + 2):
        w.mine()
    window_of = {}
    for rid, d in digest_of.items():
        rec = w.receipt(d)
        assert rec.ok and rec.block_height == base + plan[rid][0]
        (ev,) = [e for e in rec.emitted if isinstance(e, PoolEvent) and e.action in ("open", "join")]
        window_of[rid] = ev.window_id
    flush_order = [e.window_id for rec in w.all_receipts() for e in rec.emitted
                   if isinstance(e, PoolEvent) and e.action == "flush"]
    batches = []
    for wid in flush_order:
        members = sorted((rid for rid, x in window_of.items() if x == wid), key=lambda rid: (plan[rid][0], rid))
        batches.append((plan[members[0]][1], members))
    return w, batches
