"""Newline-delimited JSON trace records with a stable field order."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

EVENT_KINDS = frozenset({
    "radio_on", "radio_off", "tx_start", "tx_end", "rx_ok", "rx_collision",
    "beacon", "ack", "state",
})


class TraceRecorder:
    """Collects (time_us, node_id, event_kind, fields) records in memory.

    A disabled recorder drops everything, which keeps long sweeps cheap.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.records: list[tuple[int, int, str, dict[str, Any]]] = []

    def emit(self, t: int, node: int, kind: str, **fields: Any) -> None:
        if self.enabled:
            self.records.append((t, node, kind, fields))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[tuple[int, int, str, dict[str, Any]]]:
        return iter(self.records)

    def select(self, kind: str | None = None, node: int | None = None,
               **match: Any) -> list[tuple[int, int, str, dict[str, Any]]]:
        out = []
        for rec in self.records:
            if kind is not None and rec[2] != kind:
                continue
            if node is not None and rec[1] != node:
                continue
            if any(rec[3].get(k) != v for k, v in match.items()):
                continue
            out.append(rec)
        return out


def format_record(t: int, node: int, kind: str, fields: dict[str, Any]) -> str:
    head = {"time_us": t, "node_id": node, "event_kind": kind}
    head.update(fields)
    return json.dumps(head, separators=(",", ":"))


def emit_trace(events: Iterable[tuple[int, int, str, dict[str, Any]]], path: str | Path) -> Path:
    """Write trace records as UTF-8 JSON lines, one record per line."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for t, node, kind, fields in events:
            fh.write(format_record(t, node, kind, fields))
            fh.write("\n")
    return path


def read_trace(path: str | Path) -> list[dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
