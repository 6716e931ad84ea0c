import pytest
from conftest import NAME, PAYLOAD, make_world
from hypothesis import given
from hypothesis import strategies as st

from defeed import contracts as C
from defeed.crypto import KeyPair
from defeed.export import GOVERNANCE_COLUMNS, governance_csv
from defeed.governance import Committee, approval_threshold, vet_message
from defeed.protocol import ERROR_NAME_MISSING


def mined(w, digest):
    w.mine()
    return w.receipt(digest)


def gov_world(committee_size=5, **kw):
    w = make_world(committee_size=committee_size, **kw)
    owner = w.add_owner(NAME, PAYLOAD)
    return w, owner, w.add_requestors(2)


@pytest.mark.parametrize("n,t", [(1, 1), (2, 2), (3, 2), (4, 3), (5, 3), (9, 5)])
def test_threshold(n, t):
    assert approval_threshold(n) == t


@given(st.integers(1, 200))
def test_threshold_is_strict_majority(n):
    t = approval_threshold(n)
    assert 2 * t > n and 2 * (t - 1) <= n


def test_empty_committee_rejected():
    with pytest.raises(ValueError):
        approval_threshold(0)
    with pytest.raises(ValueError):
        Committee(())


# ----- proposals

def test_propose_rules():
    w, owner, _ = gov_world()
    new = w.deploy_center()
    rec = mined(w, w.propose(0, new))
    assert rec.ok and rec.result == 1 and w.proposal(1).approvals == frozenset({bytes(w.committee.keys[0].address)})
    assert "not-member" in mined(w, w.propose(w.eoa("outsider"), new)).error
    assert "bad-target" in mined(w, w.propose(1, owner.address)).error
    assert "bad-target" in mined(w, w.propose(1, w.eoa("plain").address)).error
    assert "bad-target" in mined(w, w.propose(1, w.center)).error


def test_approve_rules():
    w, _, _ = gov_world()
    new = w.deploy_center()
    pid = mined(w, w.propose(0, new)).result
    assert mined(w, w.approve(1, pid, new)).result == 2
    assert mined(w, w.approve(1, pid, new)).result == 2  # idempotent
    outsider = KeyPair.generate("outsider", "test")
    forged = w.approval_signature(outsider, pid, new)
    rec = mined(w, w.approve(2, pid, new, signature=forged))
    assert "bad-signature" in rec.error
    wrong_proposal = w.approval_signature(2, pid + 1, new)
    assert "bad-signature" in mined(w, w.approve(2, pid, new, signature=wrong_proposal)).error
    assert "not-member" in mined(w, w.approve(2, pid, new, claimed_member=outsider.address)).error
    assert "unknown-proposal" in mined(w, w.approve(2, 99, new)).error
    assert len(w.proposal(pid).approvals) == 2


def test_relayed_approval_counts_for_signer():
    w, _, _ = gov_world()
    new = w.deploy_center()
    pid = mined(w, w.propose(0, new)).result
    rec = mined(w, w.approve(3, pid, new, submitter=w.eoa("courier")))
    assert rec.ok and bytes(w.committee.keys[3].address) in w.proposal(pid).approvals


def test_execute_cost_and_threshold():
    w, _, _ = gov_world()
    new = w.deploy_center()
    pid = mined(w, w.propose(0, new)).result
    mined(w, w.approve(1, pid, new))
    rec = mined(w, w.execute_update(pid))
    assert "threshold" in rec.error and w.center != new
    mined(w, w.approve(2, pid, new))
    rec = mined(w, w.execute_update(pid))
    assert rec.ok and rec.gas_used == 33241 and w.center == new
    assert "executed" in mined(w, w.execute_update(pid)).error
    assert "executed" in mined(w, w.approve(3, pid, new)).error
    assert "unknown-proposal" in mined(w, w.execute_update(42)).error


# ----- after an update

def test_old_center_is_retired():
    w, owner, (r1, r2) = gov_world(3)
    old = w.center
    out = w.update_center()
    assert out["execute"].ok and w.center == out["center"] != old
    assert not w.center_active(old) and w.center_active()
    w.mine()
    start = len(w.all_receipts())
    w.request(r1, NAME)
    w.mine()
    frames = [t for rec in w.all_receipts()[start:] for t in rec.trace]
    assert not any(t.callee == old for t in frames)
    assert w.inbox(r1)[-1][2] == PAYLOAD
    relay = w.add_relay()
    rec = w.transact(relay.key, relay.address, C.SIG_RELAY, (old, C.SIG_RESPOND, (1, b"x")))
    assert "inactive" in rec.error
    assert w.center_changes() == [(out["execute"].block_height, bytes(w.center))]


def test_update_preserves_registry_subscriptions_and_state():
    w = make_world(committee_size=3, subscribe=True)
    a = w.add_owner("a", b"1")
    b = w.add_owner("b", b"2")
    (r,) = w.add_requestors(1)
    w.subscribe(r, "a")
    w.set_state(a, (1, 2))
    w.mine()
    old = w.center
    before = {n: w.gamma(n) for n in ("a", "b")}
    w.update_center()
    assert {n: w.gamma(n) for n in ("a", "b")} == before
    assert w.registered_names() == w.registered_names(old) == ("a", "b")
    assert w.subscriptions("a") == frozenset({bytes(r.address)})
    assert w.declared_state("a") == (1, 2)
    w.set_state(a, (1, 3))
    w.mine()
    ((_, changes, caller, _),) = w.notes(r)
    assert changes == ((2, 1),) and caller == bytes(w.center)
    assert b.hash == w.gamma("b").z


def test_request_before_update_completes():
    w, _, (r1, r2) = gov_world(3)
    new = w.deploy_center()
    pid = mined(w, w.propose(0, new)).result
    mined(w, w.approve(1, pid, new))
    w.request(r1, NAME)
    w.mine()
    execute = w.execute_update(pid)
    w.request(r2, NAME)
    w.mine()
    assert w.receipt(execute).ok
    assert w.inbox(r1)[0][2] == w.inbox(r2)[0][2] == PAYLOAD


def test_pooled_window_survives_update():
    w, _, (r1, _) = gov_world(3, pool=True)
    w.request(r1, NAME)
    w.mine()
    w.update_center()
    w.mine(3)
    assert w.inbox(r1)[0][2] == PAYLOAD


# ----- vetting

def test_deregister_vet():
    w, owner, (r1, r2) = gov_world(3, cache=True, subscribe=True)
    w.request(r1, NAME)
    w.subscribe(r2, NAME)
    w.mine()
    assert w.cache_entry(NAME) is not None
    assert "threshold" in mined(w, w.vet(NAME, owner.address, "deregister", [0])).error
    rec = mined(w, w.vet(NAME, owner.address, "deregister", [0, 2]))
    assert rec.ok and not w.gamma(NAME).registered
    assert w.cache_entry(NAME) is None and w.subscriptions(NAME) == frozenset()
    w.request(r1, NAME)
    w.mine()
    assert w.inbox(r1)[-1][2:4] == (b"", ERROR_NAME_MISSING)


def test_deregister_clears_open_window():
    w, owner, (r1, _) = gov_world(3, pool=True)
    w.request(r1, NAME)
    w.mine()
    assert mined(w, w.vet(NAME, owner.address, "deregister", [0, 1])).ok
    assert w.window(NAME) is None and w.open_windows() == ()


def test_register_vet_and_replay():
    w, _, _ = gov_world(3)
    other = w.add_owner("other", b"o", register=False)
    rec = mined(w, w.vet("other", other.address, "register", [1, 2], nonce=77))
    assert rec.ok and w.gamma("other").z == other.hash
    again = mined(w, w.vet("other", other.address, "deregister", [1, 2], nonce=77))
    assert "replay" in again.error and w.gamma("other").registered
    bad = mined(w, w.vet("x", w.eoa("plain").address, "register", [0, 1]))
    assert "not-contract" in bad.error


def test_duplicated_endorsements_count_once():
    w, owner, _ = gov_world(5)
    nonce = w.next_nonce()
    valid = w.committee.endorse(vet_message(NAME, owner.address, "deregister", nonce, w.dfm), [0])
    wrong_message = w.committee.endorse(b"", [1, 2])
    approvals = valid * 3 + wrong_message + (("junk",),)
    key = w.committee.keys[0]
    rec = w.transact(key, w.dfm, C.SIG_VET, (NAME, owner.address, "deregister", nonce, approvals))
    assert "threshold" in rec.error and w.gamma(NAME).registered


def test_governance_csv():
    w, _, _ = gov_world(3)
    w.update_center()
    lines = governance_csv(w).splitlines()
    assert lines[0] == ",".join(GOVERNANCE_COLUMNS)
    assert [line.split(",")[2] for line in lines[1:]] == ["propose", "approve", "execute"]
    assert all(line.split(",")[4] == "ok" for line in lines[1:])
