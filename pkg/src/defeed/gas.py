"""Gas schedule, calibration against measured targets, and USD conversion.

Handlers charge named costs from a :class:`GasSchedule`. ``calibrate`` solves
the free components of the schedule so that whole-transaction receipts land on
the target figures; the structural split (how much of a request is spent in
the forward/reply frames, and so on) stays fixed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

GAS_TO_ETHER = 2.42e-8
ETHER_TO_USD = 289.42


def gas_to_usd(gas: int | float) -> float:
    return gas * GAS_TO_ETHER * ETHER_TO_USD


class CalibrationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("inconsistent calibration targets: " + "; ".join(violations))


@dataclass(frozen=True)
class CalibrationTargets:
    deploy_cdfm: int = 874393
    deploy_cdfc: int = 1427517
    request: int = 143781
    update: int = 33241
    subscribe: int = 50094
    cache_initial: int = 221668
    cache_subsequent: int = 60145
    single_request: int = 149524
    normal_request: int = 75000
    # steady-state request cost, 13.7 Mgas / 100 requests
    steady_request: int = 137000
    pool_member: int = 69000


@dataclass(frozen=True)
class GasSchedule:
    intrinsic: int = 21000

    # deployments (whole receipt, intrinsic included)
    deploy: dict = field(
        default_factory=lambda: {
            "dfm": 874393,
            "dfc": 1427517,
            "owner": 412650,
            "requestor": 386210,
            "relay": 198400,
        }
    )

    # requestor contract
    requestor_request: int = 8000
    requestor_receive: int = 1500
    requestor_subscribe: int = 4000
    requestor_notify: int = 2200
    requestor_request_direct: int = 8000
    requestor_receive_direct: int = 1500

    # management contract
    dfm_request: int = 42257
    dfm_deny: int = 6100
    dfm_cache_hit: int = 28145
    dfm_cache_lookup: int = 2100
    dfm_create_cache: int = 70044
    dfm_pool_enqueue: int = 37000
    dfm_flush: int = 5257
    dfm_deliver_member: int = 1500
    dfm_center_view: int = 1000
    dfm_get_subscribe: int = 15094
    dfm_invalidate: int = 2900
    dfm_audit: int = 2400
    dfm_propose: int = 24000
    dfm_approve: int = 9100
    dfm_execute_update: int = 4241
    dfm_vet: int = 18500
    dfm_set_permission: int = 11000

    # center contract
    dfc_forward: int = 30000
    dfc_warmup: int = 12524
    dfc_respond: int = 2743
    dfc_register: int = 46200
    dfc_sync_subscribe: int = 10000
    dfc_publish: int = 9800
    dfc_notify_member: int = 1700
    dfc_deactivate: int = 1000
    dfc_export: int = 1000
    dfc_import: int = 1000
    dfc_import_per_tuple: int = 5000
    dfc_admin_registration: int = 21400

    # owner contract
    owner_reply: int = 29000
    owner_response: int = 44500
    owner_set_payload: int = 22100
    owner_set_state: int = 7300
    owner_register: int = 5000

    relay_call: int = 2600
    notify_stipend: int = 40000

    def cost(self, label: str) -> int:
        return getattr(self, label)

    def deploy_cost(self, behavior_id: str) -> int:
        return self.deploy[behavior_id]

    def as_dict(self) -> dict:
        return asdict(self)

    # derived per-operation expectations, used by docs, reports and tests
    def core_request_gas(self, *, first: bool = False) -> int:
        return (
            self.intrinsic
            + self.requestor_request
            + self.dfm_request
            + self.dfc_forward
            + self.owner_reply
            + self.dfm_center_view
            + self.respond_phase_gas()
            + (self.dfc_warmup if first else 0)
        )

    def respond_phase_gas(self, members: int = 1) -> int:
        return self.dfc_respond + members * (self.dfm_deliver_member + self.requestor_receive)

    def pool_member_gas(self) -> int:
        return (
            self.intrinsic
            + self.requestor_request
            + self.dfm_pool_enqueue
            + self.dfm_deliver_member
            + self.requestor_receive
        )

    def pool_window_gas(self) -> int:
        return self.dfm_flush + self.dfc_forward + self.owner_reply + self.dfm_center_view + self.dfc_respond

    def cache_hit_gas(self) -> int:
        return (
            self.intrinsic
            + self.requestor_request
            + self.dfm_cache_hit
            + self.dfm_deliver_member
            + self.requestor_receive
        )

    def normal_request_gas(self) -> int:
        return (
            self.intrinsic
            + self.requestor_request_direct
            + self.owner_response
            + self.requestor_receive_direct
        )


def calibrate(targets: CalibrationTargets = CalibrationTargets(), base: GasSchedule | None = None) -> GasSchedule:
    """Solve the residual schedule entries so simulated receipts equal ``targets``.

    Raises :class:`CalibrationError` listing every violated ordering when the
    targets cannot be met with non-negative component costs.
    """
    base = base or GasSchedule()
    t = targets
    violations = []
    if not t.cache_subsequent < t.cache_initial:
        violations.append("cache hit cost must be below cache miss cost")
    if not t.pool_member < t.steady_request:
        violations.append("pooled marginal cost must be below plain request cost")
    if not t.steady_request <= t.single_request:
        violations.append("steady-state request cannot exceed the first request")
    if not t.request <= t.single_request:
        violations.append("request phase cannot exceed the end-to-end request")
    if not t.single_request < t.cache_initial:
        violations.append("cache miss must cost more than an uncached request")
    if violations:
        raise CalibrationError(violations)

    delivery = base.dfm_deliver_member + base.requestor_receive
    warmup = t.single_request - t.steady_request
    respond_own = t.single_request - t.request - delivery
    dfm_request = (
        t.request
        - warmup
        - base.intrinsic
        - base.requestor_request
        - base.dfc_forward
        - base.owner_reply
        - base.dfm_center_view
    )
    cache_create = t.cache_initial - t.single_request - base.dfm_cache_lookup
    cache_hit = t.cache_subsequent - base.intrinsic - base.requestor_request - delivery
    enqueue = t.pool_member - base.intrinsic - base.requestor_request - delivery
    flush = t.steady_request - t.pool_member - (
        base.dfc_forward + base.owner_reply + base.dfm_center_view + respond_own
    )
    response = t.normal_request - base.intrinsic - base.requestor_request_direct - base.requestor_receive_direct
    get_subscribe = t.subscribe - base.intrinsic - base.requestor_subscribe - base.dfc_sync_subscribe
    execute_update = t.update - base.intrinsic - (
        base.dfc_deactivate + base.dfc_export + base.dfc_import + base.dfc_import_per_tuple
    )

    solved = {
        "dfc_warmup": warmup,
        "dfc_respond": respond_own,
        "dfm_request": dfm_request,
        "dfm_create_cache": cache_create,
        "dfm_cache_hit": cache_hit,
        "dfm_pool_enqueue": enqueue,
        "dfm_flush": flush,
        "owner_response": response,
        "dfm_get_subscribe": get_subscribe,
        "dfm_execute_update": execute_update,
    }
    negative = [f"{name} would be {value}" for name, value in solved.items() if value < 0]
    if negative:
        raise CalibrationError(negative)
    deploy = dict(base.deploy, dfm=t.deploy_cdfm, dfc=t.deploy_cdfc)
    return replace(base, deploy=deploy, **solved)


DEFAULT_SCHEDULE = calibrate()
