import pytest
from conftest import NAME, PAYLOAD, make_world
from hypothesis import given, settings
from hypothesis import strategies as st
from harness import pool_world, replies, run_contract
from oracles import pool_replay

from defeed import contracts as C
from defeed.crypto import hash_addresses
from defeed.export import POOL_COLUMNS, pool_csv
from defeed.pool import greedy_windows, spread_arrivals
from defeed.protocol import INFINITE, ProtocolMessage


def test_registration_sets_infinite_delay_then_window():
    w, _, rs = pool_world(1)
    assert w.gamma(NAME).t == INFINITE == -1
    w.request(rs[0], NAME)
    w.mine(4)
    assert w.gamma(NAME).t == 3


def test_three_requests_share_one_forward():
    w, _, rs = pool_world(3)
    for r in rs:
        w.request(r, NAME)
    w.mine()
    window = w.window(NAME)
    assert window.requestors == tuple(r.address for r in rs)
    assert w.open_windows() == (NAME,)
    w.mine(3)
    flushes = [r for r in w.all_receipts() if r.kind == "system"]
    assert len(flushes) == 1
    (fwd,) = [m for m in flushes[0].emitted if isinstance(m, ProtocolMessage) and m.interaction == "for"]
    assert fwd.requestor_hashes == (bytes(hash_addresses(*(r.address for r in rs))),)
    assert len(replies(w)) == 1
    payloads = {w.inbox(r)[0][2] for r in rs}
    assert payloads == {PAYLOAD + NAME.encode()}
    resp = [m for m in flushes[0].emitted if isinstance(m, ProtocolMessage) and m.interaction == "resp"]
    assert [m.requestor_hashes for m in resp] == [(r.hash,) for r in rs]
    assert w.open_windows() == ()


def test_request_after_close_opens_fresh_window():
    w, _, rs = pool_world(2)
    w.request(rs[0], NAME)
    w.mine(3)
    w.request(rs[1], NAME)
    w.mine(4)
    log = w.pool_log()
    assert [row["batchSize"] for row in log] == [1, 1]
    assert log[0]["windowId"] != log[1]["windowId"]
    assert len(replies(w)) == 2


def test_single_member_window_behaves_like_core():
    pw, _, (pr,) = pool_world(1)
    cw = make_world()
    cw.add_owner(NAME, PAYLOAD + NAME.encode())
    (cr,) = cw.add_requestors(1)
    totals = []
    for w, r in ((pw, pr), (cw, cr)):
        start = w.height
        w.request(r, NAME)
        w.mine(5)
        totals.append(sum(x.gas_used for b in w.ledger.blocks[start + 1:] for x in b.receipts))
    assert [row["batchSize"] for row in pw.pool_log()] == [1]
    assert pw.inbox(pr)[0][1:4] == cw.inbox(cr)[0][1:4]
    assert totals[0] == totals[1] == 149524


def test_batched_pool_cheaper_than_core():
    for n in range(1, 7):
        totals = {}
        for pool in (False, True):
            w = make_world(pool=pool)
            w.add_owner(NAME, PAYLOAD)
            rs = w.add_requestors(n)
            start = w.height
            for r in rs:
                w.request(r, NAME)
            w.mine(5)
            totals[pool] = sum(r.gas_used for b in w.ledger.blocks[start + 1:] for r in b.receipts)
        if n == 1:
            assert totals[True] == totals[False]
        else:
            assert totals[True] < totals[False]


def test_flush_rules():
    w, _, rs = pool_world(1)
    rec = w.transact(w.eoa("anyone"), w.dfm, C.SIG_FLUSH, (NAME,))
    assert "no-window" in rec.error
    w.request(rs[0], NAME)
    w.mine()
    rec = w.transact(w.eoa("anyone"), w.dfm, C.SIG_FLUSH, (NAME,))
    assert "window-open" in rec.error
    assert not [r for r in w.all_receipts() if r.kind == "system"]


def test_manual_flush_without_keeper():
    w, _, rs = pool_world(2, auto_flush=False)
    for r in rs:
        w.request(r, NAME)
    w.mine(4)
    assert w.open_windows() == (NAME,)
    rec = w.transact(w.eoa("anyone"), w.dfm, C.SIG_FLUSH, (NAME,))
    assert rec.ok and all(w.inbox(r) for r in rs)


def test_max_batch_forces_early_flush():
    w, _, rs = pool_world(3, max_batch=2)
    for r in rs:
        w.request(r, NAME)
    w.mine()
    assert [row["batchSize"] for row in w.pool_log()] == [2, 1]
    assert w.inbox(rs[0]) and w.inbox(rs[1]) and not w.inbox(rs[2])
    w.mine(3)
    assert w.inbox(rs[2])


def test_distinct_names_never_share_a_window():
    w, _, rs = pool_world(4, names=("a", "b"))
    for r, name in zip(rs, "abab"):
        w.request(r, name)
    w.mine(4)
    log = w.pool_log()
    assert sorted((row["ownerName"], row["batchSize"]) for row in log) == [("a", 2), ("b", 2)]
    assert [w.inbox(r)[0][2] for r in rs] == [PAYLOAD + n.encode() for n in "abab"]


def test_pool_csv():
    w, _, rs = pool_world(2)
    for r in rs:
        w.request(r, NAME)
    w.mine(4)
    lines = pool_csv(w).splitlines()
    assert lines[0] == ",".join(POOL_COLUMNS)
    window_id, name, size, opened, closed, gas = lines[1].split(",")
    assert (name, size) == (NAME, "2") and int(closed) == int(opened) + 3 and int(gas) > 0


# ----- oracle equivalence

arrival_plans = st.lists(st.tuples(st.integers(0, 19), st.sampled_from("xyz")), max_size=50)


@settings(max_examples=60)
@given(arrival_plans, st.integers(1, 4), st.sampled_from([2, 3, 5, 256]))
def test_batches_match_replay_oracle(plan, window_blocks, max_batch):
    w, batches = run_contract(plan, window_blocks, max_batch)
    arrivals = [(block, rid, name) for rid, (block, name) in enumerate(plan)]
    assert batches == pool_replay(arrivals, window_blocks, max_batch)
    # one owner query per window, and every member got the owner's payload
    assert len(replies(w)) == len(batches)
    assert sum(len(w.inbox(r)) for r in w.requestors) == len(plan)


@given(st.lists(st.integers(0, 30), max_size=40), st.integers(1, 5), st.integers(1, 6))
def test_greedy_windows_matches_oracle(arrivals, window_blocks, max_batch):
    arrivals = sorted(arrivals)
    expected = [ids for _, ids in pool_replay([(b, i, "n") for i, b in enumerate(arrivals)], window_blocks,
                                              max_batch)]
    assert greedy_windows(arrivals, window_blocks, max_batch) == expected


@given(st.integers(1, 120), st.integers(1, 200), st.integers(0, 10**6))
def test_spread_arrivals_shape(n, horizon, seed):
    arrivals = spread_arrivals(n, horizon, seed)
    assert len(arrivals) == n and arrivals == sorted(arrivals)
    assert all(0 <= a < horizon for a in arrivals)
    assert spread_arrivals(n, horizon, seed) == arrivals
    # adding a requester only adds an arrival
    bigger = spread_arrivals(n + 1, horizon, seed)
    for a in set(arrivals):
        assert bigger.count(a) >= arrivals.count(a)


@pytest.mark.parametrize("window_blocks", [0, -1])
def test_bad_window_rejected(window_blocks):
    with pytest.raises(RuntimeError):
        pool_world(1, window_blocks=window_blocks)
