"""Inbound handlers of the reference components, looked up by component name."""
import logging
from dataclasses import dataclass
from functools import wraps
from typing import Callable, Dict, Optional

from itp.components.audit import AuditLog
from itp.components.certificates import VirtualCAs
from itp.components.publication import Outbox, PublicationStore
from itp.errors import UnknownComponent
from itp.profiles import ProfileRegistry
from itp.routing import ReplayStore
from itp.security import KeyPairRecord, TrustStore

logger = logging.getLogger(__name__)

COMPONENT_HANDLERS: Dict[str, Callable] = dict()


@dataclass
class ComponentContext:
    """Everything one component needs to process a message."""
    name: str
    signing_key: Optional[KeyPairRecord]
    trust: TrustStore
    profiles: ProfileRegistry
    replay: ReplayStore
    audit: AuditLog
    virtual_cas: Optional[VirtualCAs] = None
    publication: Optional[PublicationStore] = None
    outbox: Optional[Outbox] = None


def component_handler(name: str):
    """Registers the decorated function as the inbound handler of ``name``.
    A handler takes (message, context) and returns the messages to forward."""

    def decorator_handler(func):
        COMPONENT_HANDLERS[name] = func

        @wraps(func)
        def wrapper(*args, **kwargs):
            return func(*args, **kwargs)

        return wrapper

    return decorator_handler


def get_handler(name: str) -> Callable:
    try:
        return COMPONENT_HANDLERS[name]
    except KeyError:
        raise UnknownComponent(f"no inbound handler for component {name!r}") from None
