import pytest

from defeed import bench
from defeed.bench import (
    GAS_CURVE_COLUMNS,
    PAPER_COUNTS,
    THROUGHPUT_COLUMNS,
    ScenarioError,
    ScenarioSpec,
    gas_curve_csv,
    measure_table1,
    parse_scenarios,
    report,
    rows_from_csv,
    run_many,
    run_scenario,
    run_throughput,
    single_request_gas,
    sweep,
    throughput_csv,
)
from defeed.timing import FIXED

SCENARIOS = """
[pool-small]
mode = pool
requesters = 5
seed = 3
window_blocks = 2

[cache-jitter]
mode = cache
requesters = 4
jitter = yes
ttl_blocks = 10
"""


def test_parse_scenarios():
    a, b = parse_scenarios(SCENARIOS)
    assert a == ScenarioSpec("pool-small", "pool", 5, 3, False, 2)
    assert (b.name, b.mode, b.requesters, b.jitter, b.ttl_blocks) == ("cache-jitter", "cache", 4, True, 10)


@pytest.mark.parametrize("text,fragment", [
    ("[x]\nmode = pool\ncolour = red\n", "unknown key"),
    ("[x]\nmode = teleport\n", "unknown mode"),
    ("[x]\nrequesters = many\n", "integer"),
    ("[x]\nrequesters = 0\n", "at least 1"),
    ("[x]\njitter = maybe\n", "boolean"),
    ("[x]\nttl_blocks = 0\n", "ttl_blocks"),
    ("", "no scenarios"),
    ("mode = pool\n", "malformed"),
])
def test_bad_scenarios_rejected(text, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        parse_scenarios(text)


def test_report_files_and_round_trip(tmp_path):
    rows = sweep(("pool",), (1, 5))
    csv_path, summary = report(rows, tmp_path / "out")
    text = csv_path.read_text()
    assert text.splitlines()[0] == ",".join(GAS_CURVE_COLUMNS)
    assert (tmp_path / "out" / "summary.txt").read_text() == summary
    again = rows_from_csv(text)
    assert [(r.mode, r.n, r.total_gas) for r in again] == [(r.mode, r.n, r.total_gas) for r in rows]
    assert gas_curve_csv(again) == text


def test_report_rejects_empty_rows(tmp_path):
    with pytest.raises(ValueError):
        report([], tmp_path)
    with pytest.raises(ValueError):
        rows_from_csv("a,b\n1,2\n")


def test_report_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="cannot write report"):
        report(sweep(("pool",), (1,)), blocker / "sub")


@pytest.fixture(scope="module")
def curves():
    return sweep(("defeed", "pool", "cache", "normal"), PAPER_COUNTS)


def test_sweep_shape(curves):
    pool_cache = [r for r in curves if r.mode in ("pool", "cache")]
    assert len(pool_cache) == 12
    assert len(gas_curve_csv(pool_cache).splitlines()) == 13


def test_gas_grows_with_requesters(curves):
    for mode in ("defeed", "pool", "cache", "normal"):
        gas = [r.total_gas for r in curves if r.mode == mode]
        assert gas == sorted(gas) and len(set(gas)) == len(gas), mode


def test_savings_ordering(curves):
    by = {(r.mode, r.n): r for r in curves}
    for n in PAPER_COUNTS:
        assert by[("defeed", n)].saving_pct == 0
        assert by[("normal", n)].total_gas < by[("defeed", n)].total_gas
    for n in (50, 100):
        assert by[("cache", n)].saving_pct > by[("pool", n)].saving_pct > 0
    assert by[("defeed", 100)].total_gas == 13712524


def test_scenarios_are_deterministic():
    specs = [ScenarioSpec(f"{m}-7", m, 7, seed=5, jitter=True) for m in bench.MODES]
    first = run_many(specs)
    assert run_many(specs) == first
    assert run_many(specs, workers=2) == first


def test_seed_changes_pool_arrivals():
    a = run_scenario(ScenarioSpec("a", "pool", 30, seed=1))
    b = run_scenario(ScenarioSpec("b", "pool", 30, seed=2))
    assert a.state_root != b.state_root


def test_cost_table_measurements():
    for row in measure_table1():
        assert row.gas == row.reference_gas, row.operation
    assert single_request_gas() == (149524, 75000)


def test_fixed_interval_latency():
    rep = run_throughput("cache", trials=2, operations=5, interval=FIXED)
    assert set(rep.latencies) == {12.0}
    assert rep.confirmation_summary() == {"min": 12.0, "max": 12.0, "mean": 12.0}
    assert rep.latency_summary()["p95"] == 12.0


def test_jittered_intervals_are_whole_slots():
    rep = run_throughput("defeed", trials=3, operations=10)
    assert set(rep.intervals) <= {12.0, 24.0, 36.0}
    assert all(lat in (12.0, 24.0, 36.0) for lat in rep.latencies)
    assert run_throughput("defeed", trials=3, operations=10).latencies == rep.latencies


def test_throughput_modes():
    with pytest.raises(ScenarioError):
        run_throughput("normal", trials=1, operations=1)
    reports = [run_throughput(m, trials=1, operations=3) for m in bench.THROUGHPUT_MODES]
    lines = throughput_csv(reports).splitlines()
    assert lines[0] == ",".join(THROUGHPUT_COLUMNS) and len(lines) == 1 + len(reports)
    by = {r.mode: r for r in reports}
    # update runs several transactions per operation
    assert by["update"].median_ops_per_second < by["cache"].median_ops_per_second


def test_mixed_workload_mean_gas_between_hit_and_request():
    reports = [run_throughput(m, trials=2, operations=10) for m in bench.THROUGHPUT_MODES]
    gas = [g for r in reports for g in r.gas]
    assert 60145 < sum(gas) / len(gas) < 143781
