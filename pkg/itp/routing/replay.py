"""At-most-once admission of messages and applications per component.

Durable state is an append-only log of ``kind|id|component|iso-timestamp``
lines (values percent-encoded). At startup the log is replayed into a pydal
index; every fresh admission is appended and fsynced before it is reported."""
import logging
import os
import pathlib
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import List, Optional, Tuple
from urllib.parse import quote, unquote

from itp.errors import StorePersistenceFailure
from itp.model import Message, utcnow
from itp.store import StoreTable, connect

logger = logging.getLogger(__name__)

MESSAGE = "message"
APPLICATION = "application"


@dataclass(frozen=True)
class Admission:
    fresh: bool
    detail: str = ""
    collisions: Tuple[str, ...] = ()

    def __bool__(self):
        return self.fresh


def _encode(value: str) -> str:
    return quote(value, safe="")


class ReplayStore:
    """Seen message ids and (application id, component) pairs.

    Single writer: the in-memory pydal index belongs to the thread that built
    the store, and ``admit`` from any other thread raises RuntimeError."""

    def __init__(self, log_path: Optional[pathlib.Path] = None, clock=utcnow):
        self.log_path = pathlib.Path(log_path) if log_path is not None else None
        self._clock = clock
        self._owner = threading.get_ident()
        self.db = connect()
        self.messages = StoreTable(self.db, 'seen_message')
        self.applications = StoreTable(self.db, 'seen_application')
        if self.log_path is not None:
            self._reload()

    def _index(self, kind: str, identifier: str, component: str, at: datetime):
        at = at.astimezone(timezone.utc).replace(tzinfo=None) if at.tzinfo else at  # pydal keeps naive UTC
        if kind == MESSAGE:
            self.messages.add_row(message_id=identifier, component=component, first_seen=at)
        else:
            self.applications.add_row(application_id=identifier, component=component, first_seen=at)

    def _reload(self):
        if not self.log_path.exists():
            return
        count = 0
        try:
            lines = self.log_path.read_text(encoding="utf-8").splitlines()
        except OSError as err:
            raise StorePersistenceFailure(f"cannot read replay log {self.log_path}: {err}") from err
        for ix, line in enumerate(lines):
            if not line.strip():
                continue
            parts = line.split("|")
            if len(parts) != 4 or parts[0] not in (MESSAGE, APPLICATION):
                # a torn last line is what a crash mid-append leaves behind
                if ix == len(lines) - 1:
                    logger.warning("ignoring incomplete last line of %s", self.log_path)
                    continue
                raise StorePersistenceFailure(f"{self.log_path}:{ix + 1}: not a replay record")
            kind, identifier, component, at = (unquote(p) for p in parts)
            self._index(kind, identifier, component, datetime.fromisoformat(at))
            count += 1
        logger.info("replay store loaded %d records from %s", count, self.log_path)

    def _append(self, records: List[Tuple[str, str, str, datetime]]):
        if self.log_path is None:
            return
        text = "".join("|".join((kind, _encode(identifier), _encode(component), _encode(at.isoformat()))) + "\n"
                       for kind, identifier, component, at in records)
        try:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with self.log_path.open("a", encoding="utf-8") as f:
                f.write(text)
                f.flush()
                os.fsync(f.fileno())
        except OSError as err:
            raise StorePersistenceFailure(f"cannot append to replay log {self.log_path}: {err}") from err

    def seen_message(self, message_id: str, component: str) -> bool:
        return self.messages.count(message_id=message_id, component=component) > 0

    def seen_application(self, application_id: str, component: str) -> bool:
        return self.applications.count(application_id=application_id, component=component) > 0

    def first_seen(self, application_id: str, component: str) -> Optional[datetime]:
        row = self.applications.get(application_id=application_id, component=component)
        return row.first_seen if row else None

    def admit(self, msg: Message, component: str) -> Admission:
        """Fresh iff the message id and every application id are unseen at
        ``component``; a fresh decision is recorded before it is returned.
        A message with any replayed application is rejected as a whole."""
        if threading.get_ident() != self._owner:
            raise RuntimeError(f"replay store of thread {self._owner} used from thread {threading.get_ident()}")
        if self.seen_message(msg.id, component):
            logger.warning("%s: replay of message %s", component, msg.id)
            return Admission(False, f"message id {msg.id} seen", (msg.id,))
        collisions = tuple(app.id for app in msg.applications if self.seen_application(app.id, component))
        if collisions:
            logger.warning("%s: replay of application %s in message %s", component, ", ".join(collisions),
                           msg.id)
            return Admission(False, f"application id {', '.join(collisions)} seen", collisions)
        at = self._clock()
        records = [(MESSAGE, msg.id, component, at)]
        records.extend((APPLICATION, app.id, component, at) for app in msg.applications)
        self._append(records)
        for record in records:
            self._index(*record)
        logger.info("%s admitted message %s", component, msg.id)
        return Admission(True)


def admit(msg: Message, component: str, store: ReplayStore) -> Admission:
    return store.admit(msg, component)
