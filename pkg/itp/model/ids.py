"""Identifier generation.

Ids keep the timestamp shape of the protocol examples (``20040202164445``)
followed by six hex digits of entropy."""
import os
import threading
from datetime import datetime, timezone
from typing import Optional

TIMESTAMP_FORMAT = "%Y%m%d%H%M%S"
SUFFIX_BYTES = 3


def utcnow() -> datetime:
    return datetime.now(tz=timezone.utc)


def generate_id(clock: datetime, entropy: bytes) -> str:
    """``YYYYMMDDHHMMSS`` of ``clock`` (UTC) plus the first three entropy bytes in hex."""
    if clock.tzinfo is not None:
        clock = clock.astimezone(timezone.utc)
    suffix = bytes(entropy[:SUFFIX_BYTES]).rjust(SUFFIX_BYTES, b"\0")
    return clock.strftime(TIMESTAMP_FORMAT) + suffix.hex()


class IdGenerator:
    """Fresh ids for one process.

    Within one second the suffix walks a counter from a random start, so up to
    2**24 ids per second are pairwise distinct. The clock never moves backwards."""

    def __init__(self, clock=utcnow):
        self._clock = clock
        self._lock = threading.Lock()
        self._last: Optional[datetime] = None
        self._counter = 0

    def __call__(self) -> str:
        with self._lock:
            now = self._clock().astimezone(timezone.utc).replace(microsecond=0)
            if self._last is not None and now <= self._last:
                now = self._last
                self._counter = (self._counter + 1) % (1 << 24)
            else:
                self._last = now
                self._counter = int.from_bytes(os.urandom(SUFFIX_BYTES), "big")
            return generate_id(now, self._counter.to_bytes(SUFFIX_BYTES, "big"))


new_id = IdGenerator()
