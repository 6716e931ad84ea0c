"""Deterministic simulator for a cross-contract data-feed protocol on a miniature Ethereum-like ledger."""

from . import contracts as _contracts  # noqa: F401  registers contract behaviors
from .crypto import Address, KeyPair, derive_address, function_selector, keccak256, sign, verify
from .gas import DEFAULT_SCHEDULE, CalibrationTargets, GasSchedule, calibrate, gas_to_usd
from .ledger import Ledger, LedgerConfig, Transaction, make_transaction
from .protocol import ERROR_NAME_MISSING, AttributeTuple, AuditRecord, ProtocolMessage
from .subscribe import compute_delta
from .timing import FIXED, JITTER, IntervalModel
from .world import DeFeedWorld, WorldConfig

__version__ = "0.1.0"

__all__ = [
    "Address",
    "AttributeTuple",
    "AuditRecord",
    "CalibrationTargets",
    "DEFAULT_SCHEDULE",
    "DeFeedWorld",
    "ERROR_NAME_MISSING",
    "FIXED",
    "GasSchedule",
    "IntervalModel",
    "JITTER",
    "KeyPair",
    "Ledger",
    "LedgerConfig",
    "ProtocolMessage",
    "Transaction",
    "WorldConfig",
    "calibrate",
    "compute_delta",
    "derive_address",
    "function_selector",
    "gas_to_usd",
    "keccak256",
    "make_transaction",
    "sign",
    "verify",
]
