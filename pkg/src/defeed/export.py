"""CSV and text exports of the world's logs.

Column orders:

- audit: blockHeight, requestorHash, ownerName, outcome, gasUsed
- pool: windowId, ownerName, batchSize, openBlock, closeBlock, totalGas
- cache: name, hits, misses, evictions, gasSavedEstimate
- notifications: block, ownerName, subscriber, changedIndices, deltas
  (index and delta lists are ';'-separated, in index order)
- governance: block, proposalId, action, member, outcome

Bytes are written as 0x-prefixed lowercase hex.
"""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path
from typing import Any, Iterable

from .world import DeFeedWorld

AUDIT_COLUMNS = ("blockHeight", "requestorHash", "ownerName", "outcome", "gasUsed")
POOL_COLUMNS = ("windowId", "ownerName", "batchSize", "openBlock", "closeBlock", "totalGas")
CACHE_COLUMNS = ("name", "hits", "misses", "evictions", "gasSavedEstimate")
NOTIFICATION_COLUMNS = ("block", "ownerName", "subscriber", "changedIndices", "deltas")
GOVERNANCE_COLUMNS = ("block", "proposalId", "action", "member", "outcome")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bytes, bytearray)):
        return "0x" + bytes(value).hex()
    if isinstance(value, (list, tuple)):
        return ";".join(_cell(v) for v in value)
    return str(value)


def to_csv(columns: Iterable[str], rows: Iterable[dict[str, Any]]) -> str:
    columns = tuple(columns)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def audit_csv(world: DeFeedWorld) -> str:
    rows = [
        {"blockHeight": r.block_height, "requestorHash": r.requestor_hash, "ownerName": r.owner_name,
         "outcome": r.outcome, "gasUsed": r.gas_used}
        for r in world.audit_log()
    ]
    return to_csv(AUDIT_COLUMNS, rows)


def pool_csv(world: DeFeedWorld) -> str:
    return to_csv(POOL_COLUMNS, world.pool_log())


def cache_csv(world: DeFeedWorld) -> str:
    return to_csv(CACHE_COLUMNS, world.cache_stats())


def notification_csv(world: DeFeedWorld) -> str:
    return to_csv(NOTIFICATION_COLUMNS, world.notification_log())


def governance_csv(world: DeFeedWorld) -> str:
    return to_csv(GOVERNANCE_COLUMNS, world.governance_log())


def trace_text(world: DeFeedWorld, digests: Iterable[bytes] | None = None) -> str:
    """Tab-separated call trace: one header, then one line per frame, receipts separated by a '#' line."""
    receipts = [world.receipt(d) for d in digests] if digests is not None else world.all_receipts()
    out = []
    for r in receipts:
        out.append(f"# tx 0x{bytes(r.tx_digest).hex()} block {r.block_height} {r.kind} {r.status} gas {r.gas_used}")
        out.append(world.trace_text(r).rstrip("\n"))
    return "\n".join(out) + "\n"


def write_logs(world: DeFeedWorld, out_dir: str | os.PathLike) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "audit.csv": audit_csv(world),
        "pool.csv": pool_csv(world),
        "cache.csv": cache_csv(world),
        "notifications.csv": notification_csv(world),
        "governance.csv": governance_csv(world),
        "trace.tsv": trace_text(world),
        "snapshot.json": world.ledger.export_snapshot(),
    }
    paths = []
    for name, text in files.items():
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        paths.append(path)
    return paths
