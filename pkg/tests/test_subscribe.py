import pytest
from conftest import NAME, make_world
from hypothesis import given
from hypothesis import strategies as st
from oracles import delta_oracle

from defeed import contracts as C
from defeed.export import NOTIFICATION_COLUMNS, notification_csv
from defeed.gas import gas_to_usd
from defeed.subscribe import LengthMismatch, apply_changes, compute_delta, payload_vector


def test_delta_example():
    assert compute_delta((3, 5, 7), (3, 9, 6)) == ((2, 4), (3, -1))
    assert compute_delta((1, 2), (1, 2)) == ()
    assert compute_delta((), ()) == ()


def test_length_change_rejected():
    with pytest.raises(LengthMismatch):
        compute_delta((1, 2), (1, 2, 3))


vectors = st.integers(0, 12).flatmap(
    lambda n: st.tuples(st.lists(st.integers(-2**255, 2**255), min_size=n, max_size=n),
                        st.lists(st.integers(-2**255, 2**255), min_size=n, max_size=n)))


@given(vectors)
def test_delta_matches_oracle(pair):
    before, after = pair
    changes = compute_delta(before, after)
    assert set(changes) == delta_oracle(before, after)
    assert [i for i, _ in changes] == sorted(i for i, _ in changes)
    assert apply_changes(before, changes) == tuple(after)


@given(st.lists(st.lists(st.integers(-50, 50), min_size=4, max_size=4), min_size=1, max_size=30))
def test_deltas_telescope(walk):
    """Summing the per-step deltas of a walk gives the end-to-end delta."""
    totals = [0] * 4
    for a, b in zip(walk, walk[1:]):
        for i, d in compute_delta(a, b):
            totals[i - 1] += d
    assert set(compute_delta(walk[0], walk[-1])) == {(i + 1, d) for i, d in enumerate(totals) if d}


def test_payload_vector_tracks_changes():
    assert payload_vector(b"a") == payload_vector(b"a")
    assert compute_delta(payload_vector(b"a"), payload_vector(b"b"))


# ----- contract behaviour

def sub_world(n=3, state=(3, 5, 7)):
    w = make_world(subscribe=True)
    owner = w.add_owner(NAME, b"")
    rs = w.add_requestors(n)
    w.set_state(owner, state)
    w.mine()
    return w, owner, rs


def test_subscribe_cost_and_registry():
    w, owner, (r1, r2, r3) = sub_world()
    rec = w.transact(r1.key, r1.address, C.SIG_SUBSCRIBE, (NAME,))
    assert rec.ok and rec.result is True and rec.gas_used == 50094
    assert round(gas_to_usd(rec.gas_used), 2) == 0.35
    again = w.transact(r1.key, r1.address, C.SIG_SUBSCRIBE, (NAME,))
    assert again.ok and again.result is False
    assert w.subscriptions(NAME) == frozenset({bytes(r1.address)})
    assert "unknown-name" in w.transact(r2.key, r2.address, C.SIG_SUBSCRIBE, ("ghost",)).error


def test_every_subscriber_notified_once():
    w, owner, rs = sub_world()
    for r in rs:
        w.subscribe(r, NAME)
    w.mine()
    w.set_state(owner, (3, 9, 6))
    w.mine()
    for r in rs:
        ((name, changes, caller, _),) = w.notes(r)
        assert (name, changes, caller) == (NAME, ((2, 4), (3, -1)), bytes(w.center))


def test_zero_change_write_is_silent():
    w, owner, (r1, *_) = sub_world()
    w.subscribe(r1, NAME)
    w.mine()
    rec = w.transact(owner.key, owner.address, C.SIG_SET_STATE, ((3, 5, 7),))
    assert rec.ok and w.notes(r1) == [] and not rec.frames(C.SIG_NOTIFY)


def test_length_change_reverts_publish():
    w, owner, _ = sub_world()
    rec = w.transact(owner.key, owner.address, C.SIG_SET_STATE, ((1, 2),))
    assert "length-mismatch" in rec.error
    assert w.declared_state(NAME) == (3, 5, 7)


def test_first_publish_only_declares():
    w = make_world(subscribe=True)
    owner = w.add_owner(NAME, b"")
    (r,) = w.add_requestors(1)
    w.subscribe(r, NAME)
    w.mine()
    w.set_state(owner, (1, 1))
    w.mine()
    assert w.notes(r) == [] and w.declared_state(NAME) == (1, 1)


def test_faulty_subscriber_is_isolated():
    w, owner, (r1, r2, r3) = sub_world()
    for r in (r1, r2, r3):
        w.subscribe(r, NAME)
    w.set_faulty(r2)
    w.mine()
    rec = w.transact(owner.key, owner.address, C.SIG_SET_STATE, ((4, 5, 7),))
    assert rec.ok
    assert len(w.notes(r1)) == len(w.notes(r3)) == 1 and w.notes(r2) == []
    ((_, failure),) = w.notification_failures()
    assert failure.subscriber == bytes(r2.address) and "faulty" in failure.error
    assert {row["subscriber"] for row in w.notification_log()} == {bytes(r1.address), bytes(r3.address)}


def test_unsubscribe_stops_notifications():
    w, owner, (r1, r2, _) = sub_world()
    w.subscribe(r1, NAME)
    w.subscribe(r2, NAME)
    w.mine()
    w.unsubscribe(r1, NAME)
    w.mine()
    w.set_state(owner, (0, 0, 0))
    w.mine()
    assert w.notes(r1) == [] and len(w.notes(r2)) == 1
    assert w.subscriptions(NAME) == frozenset({bytes(r2.address)})


def test_subscribe_disabled_world_never_notifies():
    w = make_world()
    owner = w.add_owner(NAME, b"")
    (r,) = w.add_requestors(1)
    w.subscribe(r, NAME)
    w.set_state(owner, (1,))
    w.mine()
    w.set_state(owner, (2,))
    w.mine()
    assert w.notes(r) == [] and w.notification_events() == []


@given(st.lists(st.tuples(st.sampled_from(["sub", "unsub"]), st.integers(0, 3)), max_size=20))
def test_registry_is_set_of_current_subscribers(ops):
    w, _, rs = sub_world(4)
    expected = set()
    for op, i in ops:
        if op == "sub":
            w.subscribe(rs[i], NAME)
            expected.add(bytes(rs[i].address))
        else:
            w.unsubscribe(rs[i], NAME)
            expected.discard(bytes(rs[i].address))
    w.mine()
    assert w.subscriptions(NAME) == frozenset(expected)


def test_notification_csv():
    w, owner, (r1, *_) = sub_world()
    w.subscribe(r1, NAME)
    w.mine()
    w.set_state(owner, (3, 9, 6))
    w.mine()
    lines = notification_csv(w).splitlines()
    assert lines[0] == ",".join(NOTIFICATION_COLUMNS)
    assert len(lines) == 2 and NAME in lines[1]
