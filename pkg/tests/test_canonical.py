import pytest
from hypothesis import given
from hypothesis import strategies as st

from defeed import canonical
from defeed.protocol import AttributeTuple, AuditRecord, CacheEntry, ProtocolMessage

scalars = st.one_of(st.none(), st.booleans(), st.integers(), st.text(max_size=20), st.binary(max_size=20))
values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=4).map(tuple),
        st.frozensets(scalars, max_size=4),
        st.dictionaries(st.text(max_size=5), inner, max_size=4),
    ),
    max_leaves=20,
)


@given(values)
def test_round_trip(value):
    assert canonical.loads(canonical.dumps(value)) == value


@given(st.dictionaries(st.text(max_size=5), st.integers(), max_size=6))
def test_dict_encoding_ignores_insertion_order(d):
    reordered = dict(reversed(list(d.items())))
    assert canonical.dumps(d) == canonical.dumps(reordered)


def test_records_round_trip():
    items = [
        AttributeTuple(1, "vehicle2", b"\x11" * 32, -1, None),
        AuditRecord(4, b"\x22" * 32, "vehicle2", "served", 0, 3),
        CacheEntry(1, "vehicle2", b"\x11" * 32, b"kappa", 9),
        ProtocolMessage("resp", "vehicle2", (b"\x33" * 32,), b"k", None, 1),
    ]
    for item in items:
        assert canonical.loads(canonical.dumps(item)) == item


def test_bool_and_int_are_distinct():
    assert canonical.dumps(True) != canonical.dumps(1)


def test_unregistered_dataclass_rejected():
    from dataclasses import dataclass

    @dataclass
    class Loose:
        a: int

    with pytest.raises(TypeError):
        canonical.dumps(Loose(1))


def test_malformed_object_rejected():
    with pytest.raises(ValueError):
        canonical.decode({"zz": 1})
