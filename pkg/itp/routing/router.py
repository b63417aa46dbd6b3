import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, Optional

from itp.codec import parse, serialize
from itp.errors import MisroutedMessage
from itp.model import Message, utcnow
from itp.routing.registry import ComponentRegistry, TransportKind
from itp.routing.transports import Transport, default_transports

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeliveryReceipt:
    message_id: str
    recipient: str
    transport: TransportKind
    delivered_at: datetime


class Router:
    """Dispatches messages to the transport their recipient is registered with."""

    def __init__(self, registry: ComponentRegistry, transports: Optional[Dict[TransportKind, Transport]] = None,
                 clock=utcnow):
        self.registry = registry
        self.transports = transports if transports is not None else default_transports()
        self._clock = clock

    def _transport(self, kind: TransportKind) -> Transport:
        return self.transports[kind]

    def send(self, msg: Message) -> DeliveryReceipt:
        entry = self.registry.resolve(msg.recipient)
        data = serialize(msg)
        self._transport(entry.transport).deliver(entry, msg.id, data)
        receipt = DeliveryReceipt(message_id=msg.id, recipient=entry.name, transport=entry.transport,
                                  delivered_at=self._clock())
        logger.info("sent %s from %s to %s via %s (%d bytes)", msg.id, msg.sender, entry.name,
                    entry.transport.value, len(data))
        return receipt

    def receive_bytes(self, name: str, timeout: Optional[float] = None) -> Optional[bytes]:
        entry = self.registry.resolve(name)
        return self._transport(entry.transport).fetch(entry, timeout)

    def receive(self, name: str, timeout: Optional[float] = None) -> Optional[Message]:
        """Next message for ``name``, parsed and validated, or None after ``timeout``."""
        data = self.receive_bytes(name, timeout)
        if data is None:
            return None
        msg = parse(data)
        if msg.recipient != name:
            logger.warning("message %s for %s arrived at %s", msg.id, msg.recipient, name)
            raise MisroutedMessage(f"message {msg.id} is addressed to {msg.recipient}, not {name}")
        logger.info("%s received %s from %s", name, msg.id, msg.sender)
        return msg

    def listen(self, name: str):
        entry = self.registry.resolve(name)
        self._transport(entry.transport).listen(entry)

    def close(self):
        for transport in self.transports.values():
            transport.close()
