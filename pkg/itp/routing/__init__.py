from .registry import ComponentRegistry, ComponentRegistryEntry, TransportKind, load_registry
from .transports import FileTransport, InMemoryTransport, TcpTransport, Transport, default_transports
from .router import DeliveryReceipt, Router
from .replay import Admission, ReplayStore, admit
