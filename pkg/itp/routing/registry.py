"""Symbolic component names resolved to a transport and an address."""
import logging
import pathlib
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, Optional

import strictyaml as sy
from strictyaml.ruamel.error import YAMLError

from itp.errors import ConfigError, DuplicateComponentName, InvalidComponentName, UnknownComponent
from itp.model import is_component_name

logger = logging.getLogger(__name__)


class TransportKind(str, Enum):
    IN_MEMORY = "in-memory"
    FILE = "file"
    TCP = "tcp"


@dataclass(frozen=True)
class ComponentRegistryEntry:
    name: str
    transport: TransportKind
    address: str  # mailbox directory, host:port, or a queue name
    signing_key_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'transport', TransportKind(self.transport))


class ComponentRegistry:
    def __init__(self):
        self._entries: Dict[str, ComponentRegistryEntry] = dict()
        self._lock = threading.Lock()

    def register_component(self, entry: ComponentRegistryEntry):
        if not is_component_name(entry.name):
            raise InvalidComponentName(f"{entry.name!r} is not a component name")
        with self._lock:
            if entry.name in self._entries:
                raise DuplicateComponentName(f"component {entry.name} is already registered")
            self._entries[entry.name] = entry
        logger.debug("registered %s via %s at %s", entry.name, entry.transport.value, entry.address)

    def resolve(self, name: str) -> ComponentRegistryEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownComponent(f"no component named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[ComponentRegistryEntry]:
        return iter(list(self._entries.values()))

    def __len__(self):
        return len(self._entries)


def registry_schema() -> sy.Map:
    entry = sy.Map({
        'name': sy.Str(),
        'transport': sy.Enum([kind.value for kind in TransportKind]),
        'address': sy.Str(),
        sy.Optional('signing_key'): sy.Str(),
    })
    return sy.Map({'components': sy.Seq(entry)})


def load_registry(path: pathlib.Path) -> ComponentRegistry:
    """Reads a ``components.yaml`` document. Relative file mailboxes resolve
    against the document's directory."""
    path = pathlib.Path(path)
    try:
        parsed = sy.load(path.read_text(encoding="utf-8"), registry_schema())
    except OSError as err:
        raise ConfigError(f"cannot read component registry {path}: {err}") from err
    except YAMLError as err:
        raise ConfigError(f"{path}: {err}") from err
    registry = ComponentRegistry()
    for item in parsed.data['components']:
        address = item['address']
        if item['transport'] == TransportKind.FILE.value and not pathlib.Path(address).is_absolute():
            address = str(path.parent / address)
        registry.register_component(ComponentRegistryEntry(name=item['name'], transport=item['transport'],
                                                           address=address,
                                                           signing_key_id=item.get('signing_key')))
    return registry
