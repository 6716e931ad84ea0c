"""Experiment scenarios: gas curves per mode, cost table, throughput and latency."""

from __future__ import annotations

import configparser
import csv
import io
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import contracts as C
from .gas import DEFAULT_SCHEDULE, GasSchedule, gas_to_usd
from .pool import spread_arrivals
from .protocol import INFINITE
from .timing import FIXED, JITTER, IntervalModel
from .world import DeFeedWorld, WorldConfig

MODES = ("normal", "defeed", "pool", "cache", "subscribe", "update")
PAPER_COUNTS = (1, 5, 10, 20, 50, 100)
DEFAULT_HORIZON = 90
GAS_CURVE_COLUMNS = ("mode", "n", "totalGas", "totalUSD", "savingPct")
OWNER_NAME = "vehicle2"
OWNER_PAYLOAD = b"speed=42;lane=3"

# (operation, reference gas, reference USD)
TABLE1 = (
    ("Deploy C_DFM", 874393, 6.12),
    ("Deploy C_DFC", 1427517, 9.90),
    ("Request", 143781, 1.00),
    ("Update", 33241, 0.23),
    ("Subscribe", 50094, 0.35),
    ("Cache(initial)", 221668, 1.55),
    ("Cache(subsequent)", 60145, 0.42),
)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "scenario"
    mode: str = "defeed"
    requesters: int = 1
    seed: int = 0
    jitter: bool = False
    window_blocks: int = 3
    ttl_blocks: int = INFINITE
    horizon_blocks: int = DEFAULT_HORIZON

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.requesters < 1:
            raise ScenarioError("requesters must be at least 1")
        if self.window_blocks < 1:
            raise ScenarioError("window_blocks must be at least 1")
        if self.horizon_blocks < 1:
            raise ScenarioError("horizon_blocks must be at least 1")
        if self.ttl_blocks < 1 and self.ttl_blocks != INFINITE:
            raise ScenarioError("ttl_blocks must be positive or -1 for no expiry")

    def world_config(self) -> WorldConfig:
        return WorldConfig(
            pool=self.mode == "pool",
            cache=self.mode == "cache",
            subscribe=self.mode == "subscribe",
            window_blocks=self.window_blocks,
            ttl_blocks=self.ttl_blocks,
            interval=JITTER if self.jitter else FIXED,
            seed=self.seed,
        )


@dataclass(frozen=True)
class ScenarioResult:
    spec: ScenarioSpec
    total_gas: int
    transactions: int
    blocks: int
    state_root: str

    @property
    def total_usd(self) -> float:
        return gas_to_usd(self.total_gas)


@dataclass(frozen=True)
class GasRow:
    mode: str
    n: int
    total_gas: int
    total_usd: float
    saving_pct: float

    def csv_row(self) -> list[str]:
        return [self.mode, str(self.n), str(self.total_gas), f"{self.total_usd:.2f}", f"{self.saving_pct:.2f}"]


# ----- scenarios

def _setup(spec: ScenarioSpec, schedule: GasSchedule) -> tuple[DeFeedWorld, object, list]:
    world = DeFeedWorld(spec.world_config(), schedule)
    owner = world.add_owner(OWNER_NAME, OWNER_PAYLOAD)
    requestors = world.add_requestors(spec.requesters)
    return world, owner, requestors


def _drain(world: DeFeedWorld, limit: int = 1000) -> None:
    for _ in range(limit):
        if not world.ledger.mempool_size and not world.open_windows():
            return
        world.mine()
    raise RuntimeError("scenario did not settle")


def run_scenario(spec: ScenarioSpec, schedule: GasSchedule = DEFAULT_SCHEDULE) -> ScenarioResult:
    """Deploy, run the mode's request pattern, and sum the gas of every receipt after setup."""
    return execute_scenario(spec, schedule)[0]


def execute_scenario(spec: ScenarioSpec, schedule: GasSchedule = DEFAULT_SCHEDULE) -> tuple[ScenarioResult, DeFeedWorld]:
    world, owner, requestors = _setup(spec, schedule)
    start = world.height
    n = spec.requesters

    if spec.mode == "normal":
        for r in requestors:
            world.request_direct(r, owner)
    elif spec.mode in ("defeed", "cache"):
        for r in requestors:
            world.request(r, OWNER_NAME)
    elif spec.mode == "pool":
        arrivals = spread_arrivals(n, spec.horizon_blocks, spec.seed)
        by_block: dict[int, list] = {}
        for r, b in zip(requestors, arrivals):
            by_block.setdefault(b, []).append(r)
        for b in range(spec.horizon_blocks):
            for r in by_block.get(b, ()):
                world.request(r, OWNER_NAME)
            world.mine()
    elif spec.mode == "subscribe":
        for r in requestors:
            world.subscribe(r, OWNER_NAME)
        world.mine()
        world.set_payload(owner, OWNER_PAYLOAD + b";v1")
        world.mine()
        world.set_payload(owner, OWNER_PAYLOAD + b";v2")
    elif spec.mode == "update":
        for r in requestors:
            world.request(r, OWNER_NAME)
        world.mine()
        world.update_center()
    _drain(world)

    receipts = [r for block in world.ledger.blocks[start + 1:] for r in block.receipts]
    failed = [r for r in receipts if not r.ok]
    if failed:
        raise RuntimeError(f"scenario {spec.name}: {len(failed)} failed receipts, first: {failed[0].error}")
    result = ScenarioResult(spec, sum(r.gas_used for r in receipts), len(receipts),
                            world.height - start, world.state_root().hex())
    return result, world


def _run_one(args):
    spec, schedule = args
    return run_scenario(spec, schedule)


def run_many(specs: list[ScenarioSpec], schedule: GasSchedule = DEFAULT_SCHEDULE,
             workers: int = 1) -> list[ScenarioResult]:
    """Run independent scenarios, optionally in worker processes; results keep input order."""
    if workers <= 1 or len(specs) <= 1:
        return [run_scenario(s, schedule) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, [(s, schedule) for s in specs]))


def gas_curve(results: list[ScenarioResult], baselines: dict[tuple[int, int], int] | None = None) -> list[GasRow]:
    """Rows with saving relative to plain data-feed requests at the same requester count and seed."""
    baselines = dict(baselines or {})
    for res in results:
        if res.spec.mode == "defeed":
            baselines[(res.spec.requesters, res.spec.seed)] = res.total_gas
    rows = []
    for res in results:
        key = (res.spec.requesters, res.spec.seed)
        if key not in baselines:
            baselines[key] = run_scenario(replace(res.spec, mode="defeed", name="baseline")).total_gas
        base = baselines[key]
        saving = 100.0 * (base - res.total_gas) / base
        rows.append(GasRow(res.spec.mode, res.spec.requesters, res.total_gas, res.total_usd, saving))
    return rows


def sweep(modes=("defeed", "pool", "cache"), counts=PAPER_COUNTS, seed: int = 0, jitter: bool = False,
          window_blocks: int = 3, ttl_blocks: int = INFINITE, workers: int = 1,
          schedule: GasSchedule = DEFAULT_SCHEDULE) -> list[GasRow]:
    modes = list(modes)
    needed = modes if "defeed" in modes else modes + ["defeed"]
    specs = [ScenarioSpec(f"{m}-{n}", m, n, seed, jitter, window_blocks, ttl_blocks)
             for m in needed for n in counts]
    results = run_many(specs, schedule, workers)
    rows = gas_curve(results)
    return [row for row in rows if row.mode in modes]


# ----- cost table

@dataclass(frozen=True)
class CostRow:
    operation: str
    gas: int
    usd: float
    reference_gas: int
    reference_usd: float


def _respond_subtree_gas(receipt) -> int:
    """Gas of the respond frame (which contains deliver and receive) in a request trace."""
    return sum(t.gas_used for t in receipt.trace if t.signature == C.SIG_RESPOND and t.ok)


def measure_table1(schedule: GasSchedule = DEFAULT_SCHEDULE, seed: int = 0) -> list[CostRow]:
    """Measure each cost-table operation from simulated receipts.

    "Request" is the request leg of the first request: the full receipt minus the
    respond subtree, which the end-to-end figure counts separately.
    """
    measured: dict[str, int] = {}
    core = DeFeedWorld(WorldConfig(subscribe=True, seed=seed), schedule)
    measured["Deploy C_DFM"] = core.deploy_receipts["dfm"].gas_used
    measured["Deploy C_DFC"] = core.deploy_receipts["dfc"].gas_used
    core.add_owner(OWNER_NAME, OWNER_PAYLOAD)
    r1, r2 = core.add_requestors(2)
    req = core.transact(r1.key, r1.address, C.SIG_REQUESTOR_REQUEST, (OWNER_NAME,))
    measured["Request"] = req.gas_used - _respond_subtree_gas(req)
    measured["Subscribe"] = core.transact(r2.key, r2.address, C.SIG_SUBSCRIBE, (OWNER_NAME,)).gas_used
    measured["Update"] = core.update_center()["execute"].gas_used

    cached = DeFeedWorld(WorldConfig(cache=True, seed=seed), schedule)
    cached.add_owner(OWNER_NAME, OWNER_PAYLOAD)
    c1, c2 = cached.add_requestors(2)
    measured["Cache(initial)"] = cached.transact(c1.key, c1.address, C.SIG_REQUESTOR_REQUEST, (OWNER_NAME,)).gas_used
    measured["Cache(subsequent)"] = cached.transact(c2.key, c2.address, C.SIG_REQUESTOR_REQUEST,
                                                    (OWNER_NAME,)).gas_used
    return [CostRow(op, measured[op], gas_to_usd(measured[op]), g, usd) for op, g, usd in TABLE1]


def single_request_gas(schedule: GasSchedule = DEFAULT_SCHEDULE) -> tuple[int, int]:
    """(first data-feed request end to end, direct normal request)."""
    w = DeFeedWorld(WorldConfig(), schedule)
    owner = w.add_owner(OWNER_NAME, OWNER_PAYLOAD)
    r = w.add_requestor()
    first = w.transact(r.key, r.address, C.SIG_REQUESTOR_REQUEST, (OWNER_NAME,)).gas_used
    normal = w.transact(r.key, r.address, C.SIG_REQUEST_DIRECT, (owner.address,)).gas_used
    return first, normal


# ----- throughput

THROUGHPUT_MODES = ("pool", "cache", "subscribe", "update", "defeed")


@dataclass(frozen=True)
class TrialStats:
    mode: str
    seed: int
    operations: int
    transactions: int
    elapsed: float
    latencies: tuple[float, ...]
    intervals: tuple[float, ...]
    gas: tuple[int, ...]

    @property
    def tps(self) -> float:
        """Confirmed transactions per second."""
        return self.transactions / self.elapsed

    @property
    def ops_per_second(self) -> float:
        return self.operations / self.elapsed


@dataclass(frozen=True)
class ThroughputReport:
    mode: str
    trials: tuple[TrialStats, ...] = field(default_factory=tuple)

    def _all(self, attr):
        return [x for t in self.trials for x in getattr(t, attr)]

    @property
    def tps(self) -> float:
        return sum(t.transactions for t in self.trials) / sum(t.elapsed for t in self.trials)

    @property
    def median_ops_per_second(self) -> float:
        return statistics.median(t.ops_per_second for t in self.trials)

    @property
    def latencies(self) -> list[float]:
        return self._all("latencies")

    @property
    def intervals(self) -> list[float]:
        return self._all("intervals")

    @property
    def gas(self) -> list[int]:
        return self._all("gas")

    def latency_summary(self) -> dict[str, float]:
        lat = sorted(self.latencies)
        p95 = lat[min(len(lat) - 1, int(round(0.95 * (len(lat) - 1))))]
        return {"mean": statistics.fmean(lat), "median": statistics.median(lat), "p95": p95}

    def confirmation_summary(self) -> dict[str, float]:
        iv = self.intervals
        return {"min": min(iv), "max": max(iv), "mean": statistics.fmean(iv)}


def _throughput_trial(mode: str, operations: int, seed: int, interval: IntervalModel,
                      schedule: GasSchedule) -> TrialStats:
    config = WorldConfig(pool=mode == "pool", cache=mode == "cache", subscribe=mode == "subscribe",
                         interval=interval, seed=seed)
    world = DeFeedWorld(config, schedule)
    owner = world.add_owner(OWNER_NAME, OWNER_PAYLOAD)
    requestors = world.add_requestors(operations if mode in ("subscribe", "pool") else 1)
    centers = []
    if mode == "cache":
        world.transact(requestors[0].key, requestors[0].address, C.SIG_REQUESTOR_REQUEST, (OWNER_NAME,))
    if mode == "update":
        centers = [world.deploy_center() for _ in range(operations)]

    world.ledger.reseed_intervals(seed)
    latencies, gas, submitted = [], [], 0
    start_height = world.height
    start = world.ledger.now

    def step(submit):
        nonlocal submitted
        digest = submit()
        world.mine()
        latencies.append(world.ledger.confirmation_delay(digest))
        gas.append(world.receipt(digest).gas_used)
        submitted += 1
        return world.receipt(digest)

    for i in range(operations):
        if mode == "pool":
            step(lambda: world.request(requestors[i], OWNER_NAME))
        elif mode in ("cache", "defeed"):
            step(lambda: world.request(requestors[0], OWNER_NAME))
        elif mode == "subscribe":
            step(lambda: world.subscribe(requestors[i], OWNER_NAME))
            step(lambda: world.set_payload(owner, OWNER_PAYLOAD + f";v{i}".encode()))
        elif mode == "update":
            receipt = step(lambda: world.propose(0, centers[i]))
            pid = receipt.result
            for m in range(1, world.committee.threshold):
                step(lambda: world.approve(m, pid, centers[i]))
            step(lambda: world.execute_update(pid))
    elapsed = world.ledger.now - start
    system_gas = [r.gas_used for b in world.ledger.blocks[start_height + 1:] for r in b.receipts
                  if r.kind == "system"]
    blocks = world.ledger.blocks[start_height:]
    intervals = tuple(b.timestamp - a.timestamp for a, b in zip(blocks, blocks[1:]))
    return TrialStats(mode, seed, operations, submitted, elapsed, tuple(latencies), intervals,
                      tuple(gas) + tuple(system_gas))


def run_throughput(mode: str = "defeed", trials: int = 15, operations: int = 20, seed: int = 0,
                   interval: IntervalModel = JITTER, schedule: GasSchedule = DEFAULT_SCHEDULE) -> ThroughputReport:
    """Sequential submission: each transaction is sent when the previous one confirms."""
    if mode not in THROUGHPUT_MODES:
        raise ScenarioError(f"no throughput workload for mode {mode!r}")
    return ThroughputReport(mode, tuple(
        _throughput_trial(mode, operations, seed * 1000 + t, interval, schedule) for t in range(trials)
    ))


# ----- scenario files and reports

SCENARIO_KEYS = {f.name for f in fields(ScenarioSpec)} - {"name"}


def _coerce(spec_field: str, raw: str):
    if spec_field == "mode":
        return raw.strip()
    if spec_field == "jitter":
        value = raw.strip().lower()
        if value in ("1", "true", "yes", "on"):
            return True
        if value in ("0", "false", "no", "off"):
            return False
        raise ScenarioError(f"jitter must be a boolean, got {raw!r}")
    try:
        return int(raw)
    except ValueError:
        raise ScenarioError(f"{spec_field} must be an integer, got {raw!r}") from None


def parse_scenarios(text: str) -> list[ScenarioSpec]:
    """INI-style scenario file: one ``[section]`` per scenario, keys from :class:`ScenarioSpec`."""
    parser = configparser.ConfigParser(default_section="__defaults_unused__", interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None
    specs = []
    for section in parser.sections():
        items = dict(parser.items(section))
        unknown = sorted(set(items) - SCENARIO_KEYS)
        if unknown:
            raise ScenarioError(f"[{section}]: unknown key(s) {', '.join(unknown)}")
        kwargs = {k: _coerce(k, v) for k, v in items.items()}
        specs.append(ScenarioSpec(name=section, **kwargs))
    if not specs:
        raise ScenarioError("scenario file defines no scenarios")
    return specs


def load_scenarios(path: str | os.PathLike) -> list[ScenarioSpec]:
    return parse_scenarios(Path(path).read_text())


def gas_curve_csv(rows: list[GasRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GAS_CURVE_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_row())
    return buf.getvalue()


def summary_text(rows: list[GasRow]) -> str:
    lines = [f"{'mode':<10}{'n':>5}{'gas':>14}{'USD':>10}{'saving%':>10}"]
    for r in rows:
        lines.append(f"{r.mode:<10}{r.n:>5}{r.total_gas:>14}{r.total_usd:>10.2f}{r.saving_pct:>10.2f}")
    return "\n".join(lines) + "\n"


def report(rows: list[GasRow], out_dir: str | os.PathLike) -> tuple[Path, str]:
    """Write ``gas_curve.csv`` and ``summary.txt`` into ``out_dir``; returns (csv path, summary)."""
    if not rows:
        raise ValueError("report needs at least one scenario row")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "gas_curve.csv"
        csv_path.write_text(gas_curve_csv(rows))
        summary = summary_text(rows)
        (out / "summary.txt").write_text(summary)
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc.strerror or exc}") from exc
    return csv_path, summary


def rows_from_csv(text: str) -> list[GasRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != GAS_CURVE_COLUMNS:
        raise ValueError(f"expected columns {','.join(GAS_CURVE_COLUMNS)}")
    return [GasRow(r["mode"], int(r["n"]), int(r["totalGas"]), float(r["totalUSD"]), float(r["savingPct"]))
            for r in reader]


def spec_dict(spec: ScenarioSpec) -> dict:
    return asdict(spec)


THROUGHPUT_COLUMNS = ("mode", "trials", "tps", "medianOpsPerSecond", "latencyMean", "latencyMedian",
                      "latencyP95", "confirmationMin", "confirmationMax", "confirmationMean", "meanGas")


def throughput_csv(reports: list[ThroughputReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(THROUGHPUT_COLUMNS)
    for rep in reports:
        lat, conf = rep.latency_summary(), rep.confirmation_summary()
        writer.writerow([rep.mode, len(rep.trials), f"{rep.tps:.4f}", f"{rep.median_ops_per_second:.4f}",
                         f"{lat['mean']:.2f}", f"{lat['median']:.2f}", f"{lat['p95']:.2f}", f"{conf['min']:.2f}",
                         f"{conf['max']:.2f}", f"{conf['mean']:.2f}", f"{statistics.fmean(rep.gas):.0f}"])
    return buf.getvalue()
