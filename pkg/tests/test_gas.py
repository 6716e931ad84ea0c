import dataclasses

import pytest
from conftest import NAME, PAYLOAD
from hypothesis import given, settings
from hypothesis import strategies as st

from defeed import DeFeedWorld, WorldConfig
from defeed import contracts as C
from defeed.gas import (
    DEFAULT_SCHEDULE,
    ETHER_TO_USD,
    GAS_TO_ETHER,
    CalibrationError,
    CalibrationTargets,
    GasSchedule,
    calibrate,
    gas_to_usd,
)


def test_default_schedule_is_calibrated_defaults():
    assert DEFAULT_SCHEDULE == calibrate(CalibrationTargets())
    assert DEFAULT_SCHEDULE.core_request_gas() == 137000
    assert DEFAULT_SCHEDULE.core_request_gas(first=True) == 149524
    assert DEFAULT_SCHEDULE.cache_hit_gas() == 60145
    assert DEFAULT_SCHEDULE.normal_request_gas() == 75000
    assert DEFAULT_SCHEDULE.pool_member_gas() == 69000


def test_all_costs_non_negative():
    for name, value in DEFAULT_SCHEDULE.as_dict().items():
        if name == "deploy":
            assert all(v > 0 for v in value.values())
        else:
            assert value >= 0, name


@pytest.mark.parametrize("change,fragment", [
    ({"cache_subsequent": 221668}, "cache hit"),
    ({"pool_member": 137000}, "pooled"),
    ({"steady_request": 150000}, "steady-state"),
    ({"request": 150000}, "request phase"),
    ({"cache_initial": 149524, "cache_subsequent": 1}, "cache miss"),
])
def test_inconsistent_targets_rejected(change, fragment):
    with pytest.raises(CalibrationError) as exc:
        calibrate(CalibrationTargets(**change))
    assert any(fragment in v for v in exc.value.violations)


def test_unreachable_targets_name_the_component():
    with pytest.raises(CalibrationError) as exc:
        calibrate(CalibrationTargets(subscribe=100))
    assert any(v.startswith("dfm_get_subscribe") for v in exc.value.violations)


def test_usd_conversion():
    assert gas_to_usd(0) == 0
    assert gas_to_usd(10**8) == pytest.approx(10**8 * GAS_TO_ETHER * ETHER_TO_USD)
    assert round(gas_to_usd(50094), 2) == 0.35
    assert round(gas_to_usd(874393), 2) == 6.12


@settings(max_examples=25)
@given(st.integers(-3000, 3000), st.integers(-3000, 3000), st.integers(-2000, 2000), st.integers(0, 20000))
def test_calibrated_receipts_hit_their_targets(d_single, d_steady, d_hit, d_miss):
    base = CalibrationTargets()
    targets = dataclasses.replace(
        base,
        single_request=base.single_request + d_single,
        steady_request=base.steady_request + d_steady,
        cache_subsequent=base.cache_subsequent + d_hit,
        cache_initial=base.cache_initial + d_miss,
    )
    try:
        schedule = calibrate(targets)
    except CalibrationError:
        return
    w = DeFeedWorld(WorldConfig(cache=True, scheme="test"), schedule)
    w.add_owner(NAME, PAYLOAD)
    r1, r2 = w.add_requestors(2)
    miss = w.transact(r1.key, r1.address, C.SIG_REQUESTOR_REQUEST, (NAME,))
    hit = w.transact(r2.key, r2.address, C.SIG_REQUESTOR_REQUEST, (NAME,))
    assert (miss.gas_used, hit.gas_used) == (targets.cache_initial, targets.cache_subsequent)
    c = DeFeedWorld(WorldConfig(scheme="test"), schedule)
    c.add_owner(NAME, PAYLOAD)
    q1, q2 = c.add_requestors(2)
    first = c.transact(q1.key, q1.address, C.SIG_REQUESTOR_REQUEST, (NAME,))
    steady = c.transact(q2.key, q2.address, C.SIG_REQUESTOR_REQUEST, (NAME,))
    assert (first.gas_used, steady.gas_used) == (targets.single_request, targets.steady_request)


def test_base_schedule_is_respected():
    base = dataclasses.replace(GasSchedule(), owner_reply=30000)
    schedule = calibrate(base=base)
    assert schedule.owner_reply == 30000
    assert schedule.core_request_gas() == 137000
