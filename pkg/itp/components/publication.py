"""Publication store and notification outbox of Directory Services."""
import logging
import os
import pathlib
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, List, Optional, Tuple
from urllib.parse import quote, unquote

from itp.errors import StorePersistenceFailure
from itp.model import is_identifier, utcnow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Notification:
    email: str
    application_id: str
    attachment_count: int
    at: datetime


@dataclass(frozen=True)
class PublicationRecord:
    application_id: str
    published: bool
    certificates: Tuple = ()  # CertificateBlob
    notification: Optional[Notification] = None

    def __post_init__(self):
        if self.published and not self.certificates:
            raise ValueError(f"application {self.application_id} published without certificates")


class PublicationStore:
    """``<application-id>/<usage>.cert`` files, each holding one encoded certificate."""

    def __init__(self, directory: pathlib.Path):
        self.directory = pathlib.Path(directory)

    def _target(self, application_id: str) -> pathlib.Path:
        target = self.directory / application_id
        if not is_identifier(application_id) or target.resolve().parent != self.directory.resolve():
            raise StorePersistenceFailure(f"{application_id!r} does not name a directory of the publication store")
        return target

    def publish(self, application_id: str, certificates: Dict[str, str]) -> List[pathlib.Path]:
        target = self._target(application_id)
        written = []
        try:
            target.mkdir(parents=True, exist_ok=True)
            for usage, encoded in certificates.items():
                path = target / f"{usage}.cert"
                tmp = target / f".{usage}.cert.tmp"
                tmp.write_text(encoded + "\n", encoding="ascii")
                os.replace(tmp, path)
                written.append(path)
        except OSError as err:
            raise StorePersistenceFailure(f"cannot publish {application_id}: {err}") from err
        logger.info("published %d certificates for %s", len(written), application_id)
        return written

    def published(self, application_id: str) -> Dict[str, str]:
        target = self._target(application_id)
        if not target.is_dir():
            return {}
        return {path.stem: path.read_text(encoding="ascii").strip() for path in sorted(target.glob("*.cert"))}


class Outbox:
    """Notification records ``email|application-id|count|iso-timestamp``, one per line.

    Nothing is mailed; the outbox is what an SMTP relay would pick up."""

    def __init__(self, path: Optional[pathlib.Path] = None, clock=utcnow):
        self.path = pathlib.Path(path) if path is not None else None
        self._clock = clock
        self._sent: List[Notification] = []

    def send(self, to: str, application_id: str, attachments: int = 0) -> Notification:
        notification = Notification(email=to, application_id=application_id, attachment_count=attachments,
                                    at=self._clock())
        if self.path is not None:
            line = "|".join((quote(to, safe="@"), quote(application_id, safe=""), str(attachments),
                             notification.at.isoformat()))
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(line + "\n")
            except OSError as err:
                raise StorePersistenceFailure(f"cannot write outbox {self.path}: {err}") from err
        self._sent.append(notification)
        logger.info("notification for %s to %s with %d attachments", application_id, to, attachments)
        return notification

    def records(self) -> List[Notification]:
        if self.path is None or not self.path.exists():
            return list(self._sent)
        records = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            email, application_id, count, at = line.split("|")
            records.append(Notification(unquote(email), unquote(application_id), int(count),
                                        datetime.fromisoformat(at)))
        return records
