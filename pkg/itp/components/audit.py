"""Hash-chained audit trail.

Each component writes its own log, one JSON record per line. A record's
``chain_hash`` is sha256(previous chain hash + canonical record), starting
from a fixed genesis value, so editing any persisted record breaks the chain."""
import dataclasses
import hashlib
import json
import logging
import os
import pathlib
import threading
from dataclasses import asdict, dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple

from itp.errors import ChainBroken
from itp.model import utcnow

logger = logging.getLogger(__name__)

GENESIS = "0" * 64


class EventKind(str, Enum):
    RECEIVED = "received"
    VERIFIED = "verified"
    AUTHORIZED = "authorized"
    PROCESSED = "processed"
    FORWARDED = "forwarded"
    REJECTED = "rejected"


@dataclass(frozen=True)
class AuditEvent:
    sequence: int
    at: datetime
    component: str
    kind: EventKind
    message_id: str = ""
    application_id: str = ""
    actor_dns: Tuple[str, ...] = ()
    detail: str = ""
    chain_hash: str = ""

    def canonical(self) -> str:
        body = {'sequence': self.sequence, 'at': self.at.isoformat(), 'component': self.component,
                'kind': self.kind.value, 'message_id': self.message_id, 'application_id': self.application_id,
                'actor_dns': list(self.actor_dns), 'detail': self.detail}
        return json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def to_json(self) -> str:
        record = json.loads(self.canonical())
        record['chain_hash'] = self.chain_hash
        return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def to_dict(self) -> dict:
        record = asdict(self)
        record['at'] = self.at.isoformat()
        record['kind'] = self.kind.value
        record['actor_dns'] = list(self.actor_dns)
        return record

    @classmethod
    def from_json(cls, line: str) -> "AuditEvent":
        record = json.loads(line)
        return cls(sequence=int(record['sequence']), at=datetime.fromisoformat(record['at']),
                   component=record['component'], kind=EventKind(record['kind']),
                   message_id=record['message_id'], application_id=record['application_id'],
                   actor_dns=tuple(record['actor_dns']), detail=record['detail'],
                   chain_hash=record['chain_hash'])

    def carries(self, identifier: str) -> bool:
        return identifier in (self.message_id, self.application_id)


def chain(previous: str, event: AuditEvent) -> str:
    return hashlib.sha256((previous + event.canonical()).encode("utf-8")).hexdigest()


class AuditLog:
    """Single-writer audit log of one component; in memory when ``path`` is None."""

    def __init__(self, path: Optional[pathlib.Path] = None, clock=utcnow):
        self.path = pathlib.Path(path) if path is not None else None
        self._clock = clock
        self._lock = threading.Lock()
        self.events: List[AuditEvent] = []
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        try:
            lines = self.path.read_text(encoding="utf-8").splitlines()
        except OSError as err:
            raise ChainBroken(f"cannot read audit log {self.path}: {err}") from err
        previous = GENESIS
        for ix, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                event = AuditEvent.from_json(line)
            except (ValueError, KeyError, TypeError) as err:
                raise ChainBroken(f"{self.path}:{ix + 1}: unreadable record") from err
            if event.chain_hash != chain(previous, event):
                raise ChainBroken(f"{self.path}:{ix + 1}: chain hash mismatch")
            self.events.append(event)
            previous = event.chain_hash
        logger.debug("audit log %s: %d records, chain intact", self.path, len(self.events))

    @property
    def head(self) -> str:
        return self.events[-1].chain_hash if self.events else GENESIS

    def append(self, component: str, kind: EventKind, message_id: str = "", application_id: str = "",
               actor_dns: Iterable[str] = (), detail: str = "") -> AuditEvent:
        with self._lock:
            event = AuditEvent(sequence=len(self.events) + 1, at=self._clock(), component=component,
                               kind=EventKind(kind), message_id=message_id, application_id=application_id,
                               actor_dns=tuple(actor_dns), detail=detail)
            event = dataclasses.replace(event, chain_hash=chain(self.head, event))
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(event.to_json() + "\n")
                    f.flush()
                    os.fsync(f.fileno())
            self.events.append(event)
        return event

    def verify(self) -> bool:
        previous = GENESIS
        for event in self.events:
            if event.chain_hash != chain(previous, event):
                return False
            previous = event.chain_hash
        return True

    def trace(self, identifier: str) -> List[AuditEvent]:
        return [event for event in self.events if event.carries(identifier)]


def audit_append(log: AuditLog, component: str, kind: EventKind, **kwargs) -> AuditEvent:
    return log.append(component, kind, **kwargs)


def audit_trace(identifier: str, *logs: AuditLog) -> List[AuditEvent]:
    """Events carrying ``identifier`` (message or application id) across all
    ``logs``, ordered by time, then by each log's sequence."""
    events = [event for log in logs for event in log.trace(identifier)]
    return sorted(events, key=lambda event: (event.at, event.sequence))


def load_logs(paths: Sequence[pathlib.Path]) -> List[AuditLog]:
    return [AuditLog(path) for path in paths]
