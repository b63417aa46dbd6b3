"""Byte transports between components: in-memory queues, file mailboxes and framed TCP.

A transport moves the canonical bytes of one message; it does not parse them."""
import itertools
import logging
import os
import pathlib
import queue
import socket
import struct
import threading
import time
from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

from itp.errors import TransportFailure
from itp.model import is_identifier
from itp.routing.registry import ComponentRegistryEntry, TransportKind

logger = logging.getLogger(__name__)

MAILBOX_SUFFIX = ".itp.xml"
FRAME_HEADER = struct.Struct(">I")
MAX_FRAME = 16 * 1024 * 1024
POLL_INTERVAL = 0.05


class Transport(ABC):
    kind: TransportKind

    @abstractmethod
    def deliver(self, entry: ComponentRegistryEntry, message_id: str, data: bytes):
        """Hands ``data`` to the inbox of ``entry``; raises TransportFailure."""

    @abstractmethod
    def fetch(self, entry: ComponentRegistryEntry, timeout: Optional[float] = None) -> Optional[bytes]:
        """Takes the next pending document from the inbox of ``entry``, or None
        when nothing arrives within ``timeout`` seconds (None: do not wait)."""

    def listen(self, entry: ComponentRegistryEntry):
        pass

    def close(self):
        pass


class InMemoryTransport(Transport):
    kind = TransportKind.IN_MEMORY

    def __init__(self):
        self._queues: Dict[str, queue.Queue] = dict()
        self._lock = threading.Lock()

    def _queue(self, address: str) -> queue.Queue:
        with self._lock:
            return self._queues.setdefault(address, queue.Queue())

    def deliver(self, entry, message_id, data):
        self._queue(entry.address).put(bytes(data))

    def fetch(self, entry, timeout=None):
        inbox = self._queue(entry.address)
        try:
            if timeout:
                return inbox.get(timeout=timeout)
            return inbox.get_nowait()
        except queue.Empty:
            return None


class FileTransport(Transport):
    """One directory per component; one ``<message-id>.itp.xml`` file per message.

    Writers create ``.<message-id>.tmp`` and rename it, so readers never see a
    partial file. Consumed files move to ``archive/``."""
    kind = TransportKind.FILE

    def deliver(self, entry, message_id, data):
        inbox = pathlib.Path(entry.address)
        if not is_identifier(message_id):
            raise TransportFailure(f"{message_id!r} cannot name a mailbox file")
        tmp = inbox / f".{message_id}.tmp"
        try:
            inbox.mkdir(parents=True, exist_ok=True)
            with tmp.open("wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, inbox / f"{message_id}{MAILBOX_SUFFIX}")
        except OSError as err:
            raise TransportFailure(f"cannot write to mailbox {inbox}: {err}") from err

    def _pending(self, inbox: pathlib.Path):
        files = [p for p in inbox.glob(f"*{MAILBOX_SUFFIX}") if p.is_file()]
        return sorted(files, key=lambda p: (p.stat().st_mtime_ns, p.name))

    def _archive(self, path: pathlib.Path):
        archive = path.parent / "archive"
        archive.mkdir(exist_ok=True)
        target = archive / path.name
        for n in itertools.count(1):
            if not target.exists():
                break
            target = archive / f"{path.name}.{n}"
        os.replace(path, target)

    def fetch(self, entry, timeout=None):
        inbox = pathlib.Path(entry.address)
        deadline = time.monotonic() + (timeout or 0)
        while True:
            try:
                pending = self._pending(inbox) if inbox.is_dir() else []
                if pending:
                    data = pending[0].read_bytes()
                    self._archive(pending[0])
                    return data
            except OSError as err:
                raise TransportFailure(f"cannot read mailbox {inbox}: {err}") from err
            if time.monotonic() >= deadline:
                return None
            time.sleep(POLL_INTERVAL)


def split_address(address: str) -> Tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise TransportFailure(f"{address!r} is not a host:port address")
    return host.strip("[]"), int(port)


def _receive_exactly(conn: socket.socket, size: int) -> bytes:
    chunks = []
    remaining = size
    while remaining > 0:
        chunk = conn.recv(min(remaining, 65536))
        if not chunk:
            raise ConnectionError("connection closed inside a frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


class _Listener(threading.Thread):
    def __init__(self, address: str, inbox: queue.Queue):
        super().__init__(name=f"itp-listener-{address}", daemon=True)
        host, port = split_address(address)
        self.inbox = inbox
        self.sock = socket.socket(socket.AF_INET6 if ":" in host else socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, port))
        self.sock.listen(16)
        self._stopped = threading.Event()

    def run(self):
        while not self._stopped.is_set():
            try:
                conn, peer = self.sock.accept()
            except OSError:
                break
            with conn:
                try:
                    conn.settimeout(30)
                    (size,) = FRAME_HEADER.unpack(_receive_exactly(conn, FRAME_HEADER.size))
                    if size > MAX_FRAME:
                        logger.warning("dropped %d byte frame from %s", size, peer)
                        continue
                    self.inbox.put(_receive_exactly(conn, size))
                except (OSError, ConnectionError, struct.error) as err:
                    logger.warning("incomplete frame from %s: %s", peer, err)

    def stop(self):
        self._stopped.set()
        try:
            self.sock.close()
        except OSError:
            pass


class TcpTransport(Transport):
    """4-byte big-endian length prefix, then the document; one connection per message."""
    kind = TransportKind.TCP

    def __init__(self, connect_timeout: float = 10.0):
        self.connect_timeout = connect_timeout
        self._listeners: Dict[str, _Listener] = dict()
        self._lock = threading.Lock()

    def listen(self, entry):
        with self._lock:
            if entry.address in self._listeners:
                return
            try:
                listener = _Listener(entry.address, queue.Queue())
            except OSError as err:
                raise TransportFailure(f"cannot listen on {entry.address}: {err}") from err
            listener.start()
            self._listeners[entry.address] = listener
        logger.info("%s listening on %s", entry.name, entry.address)

    def deliver(self, entry, message_id, data):
        if len(data) > MAX_FRAME:
            raise TransportFailure(f"message {message_id} exceeds the frame limit")
        host, port = split_address(entry.address)
        try:
            with socket.create_connection((host, port), timeout=self.connect_timeout) as conn:
                conn.sendall(FRAME_HEADER.pack(len(data)) + data)
        except OSError as err:
            raise TransportFailure(f"cannot deliver {message_id} to {entry.address}: {err}") from err

    def fetch(self, entry, timeout=None):
        self.listen(entry)
        inbox = self._listeners[entry.address].inbox
        try:
            if timeout:
                return inbox.get(timeout=timeout)
            return inbox.get_nowait()
        except queue.Empty:
            return None

    def close(self):
        with self._lock:
            for listener in self._listeners.values():
                listener.stop()
            self._listeners.clear()


def default_transports() -> Dict[TransportKind, Transport]:
    return {TransportKind.IN_MEMORY: InMemoryTransport(),
            TransportKind.FILE: FileTransport(),
            TransportKind.TCP: TcpTransport()}
