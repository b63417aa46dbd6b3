"""The ITP object model: message, application, profile fields and signature blocks.

All values are frozen; the mutators below return modified copies."""
import dataclasses
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import FrozenSet, List, Optional, Sequence, Tuple, Union

from itp.errors import DuplicateApplicationId, EmptyMessage, InvalidFieldName

__all__ = [
    "VERSION", "ALL", "is_identifier", "is_component_name", "is_field_name",
    "EncryptedField", "FieldValue", "Scope", "ProfileField", "SignatureBlock", "Application", "Message",
    "new_application", "build_message", "get_field", "field_names", "set_field", "remove_field",
    "append_signature", "clear_signatures", "replace_application",
]

VERSION = "1.0"

#: scope of a signature over a whole application (or message), signature blocks excluded
ALL = "ALL"

FIELD_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")
RESERVED_CHARACTERS = frozenset('<>&"\'')
# ids name mailbox files and publication directories
PATH_CHARACTERS = frozenset('/\\')


def is_identifier(value) -> bool:
    if not isinstance(value, str) or value in ("", ".", ".."):
        return False
    for _c in value:
        if _c.isspace() or not _c.isprintable() or _c in RESERVED_CHARACTERS or _c in PATH_CHARACTERS:
            return False
    return True


def is_component_name(value) -> bool:
    return isinstance(value, str) and len(value.strip()) > 0 and value.isprintable()


def is_field_name(value) -> bool:
    return isinstance(value, str) and FIELD_NAME.match(value) is not None


@dataclass(frozen=True)
class EncryptedField:
    algorithm: str
    recipient_key_id: str
    ciphertext: str  # Base64
    wrapped_key: str  # Base64


FieldValue = Union[str, EncryptedField]
Scope = Union[str, Tuple[str, ...]]


@dataclass(frozen=True)
class ProfileField:
    name: str
    value: FieldValue

    @property
    def encrypted(self) -> bool:
        return isinstance(self.value, EncryptedField)


@dataclass(frozen=True)
class SignatureBlock:
    signer_dn: str
    key_id: str
    algorithm: str
    digest_algorithm: str
    scope: Scope
    created_at: datetime
    signature_value: str  # Base64

    @property
    def covers_all(self) -> bool:
        return self.scope == ALL


@dataclass(frozen=True)
class Application:
    id: str
    profile_id: str
    fields: Tuple[ProfileField, ...] = ()
    signatures: Tuple[SignatureBlock, ...] = ()
    # provenance of remove_field; not part of the document
    removed_fields: FrozenSet[str] = field(default=frozenset(), compare=False)


@dataclass(frozen=True)
class Message:
    id: str
    sender: str
    recipient: str
    applications: Tuple[Application, ...]
    signatures: Tuple[SignatureBlock, ...] = ()
    version: str = VERSION

    def application(self, application_id: str) -> Optional[Application]:
        for app in self.applications:
            if app.id == application_id:
                return app
        return None


def new_application(application_id: str, profile_id: str, fields: Sequence[Tuple[str, FieldValue]] = ()) -> Application:
    app = Application(id=application_id, profile_id=profile_id)
    for name, value in fields:
        app = set_field(app, name, value)
    return app


def build_message(sender: str, recipient: str, apps: Sequence[Application],
                  message_id: Optional[str] = None) -> Message:
    """Wraps applications into a fresh, unsigned version 1.0 message."""
    if len(apps) == 0:
        raise EmptyMessage("a message carries at least one application")
    seen = set()
    for app in apps:
        if app.id in seen:
            raise DuplicateApplicationId(f"application id {app.id} appears twice")
        seen.add(app.id)
    if message_id is None:
        from itp.model.ids import new_id
        message_id = new_id()
    return Message(id=message_id, sender=sender, recipient=recipient, applications=tuple(apps))


def get_field(app: Application, name: str) -> Optional[FieldValue]:
    for _f in app.fields:
        if _f.name == name:
            return _f.value
    return None


def field_names(app: Application) -> List[str]:
    return [_f.name for _f in app.fields]


def set_field(app: Application, name: str, value: FieldValue, after: Optional[str] = None) -> Application:
    """Sets ``name`` to ``value``. An existing field keeps its position; a new one is
    appended, or placed right behind ``after`` when that field exists."""
    if not is_field_name(name):
        raise InvalidFieldName(f"{name!r} is not a valid element name")
    new_field = ProfileField(name, value)
    fields = list(app.fields)
    for ix, _f in enumerate(fields):
        if _f.name == name:
            fields[ix] = new_field
            return dataclasses.replace(app, fields=tuple(fields))
    names = field_names(app)
    if after is not None and after in names:
        fields.insert(names.index(after) + 1, new_field)
    else:
        fields.append(new_field)
    return dataclasses.replace(app, fields=tuple(fields))


def remove_field(app: Application, name: str) -> Application:
    """Drops the field; the removal is remembered so earlier signatures over it
    are reported advisory-broken instead of invalid."""
    if name not in field_names(app):
        return app
    fields = tuple(_f for _f in app.fields if _f.name != name)
    return dataclasses.replace(app, fields=fields, removed_fields=app.removed_fields | {name})


def append_signature(app: Application, block: SignatureBlock) -> Application:
    return dataclasses.replace(app, signatures=app.signatures + (block,))


def clear_signatures(app: Application) -> Application:
    return dataclasses.replace(app, signatures=())


def replace_application(msg: Message, app: Application) -> Message:
    apps = tuple(app if _a.id == app.id else _a for _a in msg.applications)
    return dataclasses.replace(msg, applications=apps)
