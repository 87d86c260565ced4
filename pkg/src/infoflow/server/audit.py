"""Append-only invocation audit log.

One canonical XML record per line, sequence numbers gap-free from 1. Appends
are serialized through a single lock; the file is opened per append so the
log is durable and greppable while the server runs.
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from pathlib import Path

from infoflow.model.values import Value, encode_value
from infoflow.protocol import documents, xmlio


def _now() -> datetime:
    return datetime.now(timezone.utc)


class AuditLog:
    def __init__(self, path: str | Path, clock=None):
        self.path = Path(path)
        self._clock = clock or _now
        self._lock = threading.Lock()
        self._sequence = self._last_sequence()

    def _last_sequence(self) -> int:
        if not self.path.exists():
            return 0
        last = 0
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    last = documents.decode_audit_record(xmlio.parse(line)).sequence
        return last

    def append(
        self,
        user: str,
        action: str,
        outcome: str,
        service: str | None = None,
        params: tuple[tuple[str, str], ...] = (),
    ) -> documents.AuditRecordDoc:
        with self._lock:
            self._sequence += 1
            record = documents.AuditRecordDoc(
                sequence=self._sequence,
                timestamp=encode_value(Value.timestamp(self._clock())),
                user=user,
                action=action,
                outcome=outcome,
                service=service,
                params=params,
            )
            line = xmlio.render(documents.audit_record_el(record))
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
            return record

    def read_since(self, since: int) -> list[documents.AuditRecordDoc]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = documents.decode_audit_record(xmlio.parse(line))
                if record.sequence > since:
                    out.append(record)
        return out
