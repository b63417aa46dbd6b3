"""Programmatic grammar checks for ITP models (there is no DTD or schema file)."""
import base64
import binascii
import re
from dataclasses import dataclass
from datetime import datetime
from typing import List

from itp.model import (ALL, VERSION, Application, EncryptedField, Message, SignatureBlock, is_component_name,
                       is_field_name, is_identifier)

XML_INVALID_CHARACTERS = re.compile("[^\u0009\u000A\u000D\u0020-\uD7FF\uE000-\uFFFD\U00010000-\U0010FFFF]")


@dataclass(frozen=True)
class SchemaViolation:
    path: str
    rule: str
    detail: str

    def __str__(self):
        return f"{self.path}: {self.rule}: {self.detail}"


def is_base64(text) -> bool:
    if not isinstance(text, str) or len(text) == 0:
        return False
    try:
        base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError):
        return False
    return True


def is_xml_text(text) -> bool:
    return isinstance(text, str) and XML_INVALID_CHARACTERS.search(text) is None


def validate_signature(block: SignatureBlock, path: str, message_level: bool = False) -> List[SchemaViolation]:
    problems = []
    for attr in ('signer_dn', 'key_id', 'algorithm', 'digest_algorithm'):
        value = getattr(block, attr)
        if not isinstance(value, str) or len(value.strip()) == 0:
            problems.append(SchemaViolation(path, "signature-shape", f"{attr} is empty"))
        elif not is_xml_text(value):
            problems.append(SchemaViolation(path, "xml-text", f"{attr} holds characters XML cannot carry"))
    if block.scope == ALL:
        pass
    elif message_level:
        problems.append(SchemaViolation(path, "signature-shape", "message signatures cover the whole message"))
    elif isinstance(block.scope, tuple) and len(block.scope) > 0:
        for name in block.scope:
            if not is_field_name(name):
                problems.append(SchemaViolation(path, "signature-shape", f"scope names invalid field {name!r}"))
        if len(set(block.scope)) != len(block.scope):
            problems.append(SchemaViolation(path, "signature-shape", "scope lists a field twice"))
    else:
        problems.append(SchemaViolation(path, "signature-shape", "scope is neither ALL nor a field list"))
    if not isinstance(block.created_at, datetime) or block.created_at.tzinfo is None:
        problems.append(SchemaViolation(path, "signature-shape", "created-at is not a UTC timestamp"))
    if not is_base64(block.signature_value):
        problems.append(SchemaViolation(path, "signature-shape", "signature value is not Base64"))
    return problems


def validate_application(app: Application, path: str) -> List[SchemaViolation]:
    problems = []
    if not is_identifier(app.id):
        problems.append(SchemaViolation(path + "/@id", "identifier", f"{app.id!r} is not a valid identifier"))
    if not isinstance(app.profile_id, str) or len(app.profile_id.strip()) == 0:
        problems.append(SchemaViolation(path + "/profile/@id", "required", "profile id is empty"))
    elif not is_xml_text(app.profile_id):
        problems.append(SchemaViolation(path + "/profile/@id", "xml-text",
                                        "profile id holds characters XML cannot carry"))
    seen = set()
    for _f in app.fields:
        field_path = f"{path}/profile/{_f.name}"
        if not is_field_name(_f.name):
            problems.append(SchemaViolation(field_path, "element-name", f"{_f.name!r} is not a valid field name"))
        if _f.name in seen:
            problems.append(SchemaViolation(field_path, "unique", f"field {_f.name} appears twice"))
        seen.add(_f.name)
        if isinstance(_f.value, EncryptedField):
            enc = _f.value
            if len(enc.algorithm.strip()) == 0 or len(enc.recipient_key_id.strip()) == 0:
                problems.append(SchemaViolation(field_path, "encrypted-shape", "algorithm or key name missing"))
            if not is_base64(enc.ciphertext) or not is_base64(enc.wrapped_key):
                problems.append(SchemaViolation(field_path, "encrypted-shape", "cipher or wrapped key is not Base64"))
        elif not is_xml_text(_f.value):
            problems.append(SchemaViolation(field_path, "xml-text", "value holds characters XML cannot carry"))
    for ix, block in enumerate(app.signatures):
        problems.extend(validate_signature(block, f"{path}/ds:Signature[{ix + 1}]"))
    return problems


def validate(msg: Message) -> List[SchemaViolation]:
    """Returns every grammar violation of ``msg``; an empty list means valid."""
    problems = []
    if msg.version != VERSION:
        problems.append(SchemaViolation("/message/@version", "version", f"version {msg.version!r} is not {VERSION!r}"))
    if not is_identifier(msg.id):
        problems.append(SchemaViolation("/message/@id", "identifier", f"{msg.id!r} is not a valid identifier"))
    for part in ('sender', 'recipient'):
        value = getattr(msg, part)
        if not is_component_name(value):
            problems.append(SchemaViolation(f"/message/{part}", "required", f"{part} is missing or empty"))
        elif not is_xml_text(value):
            problems.append(SchemaViolation(f"/message/{part}", "xml-text",
                                            f"{part} holds characters XML cannot carry"))
    if len(msg.applications) == 0:
        problems.append(SchemaViolation("/message/application", "cardinality", "at least one application is required"))
    seen = set()
    for ix, app in enumerate(msg.applications):
        path = f"/message/application[{ix + 1}]"
        if app.id in seen:
            problems.append(SchemaViolation(path + "/@id", "unique", f"application id {app.id} appears twice"))
        seen.add(app.id)
        problems.extend(validate_application(app, path))
    for ix, block in enumerate(msg.signatures):
        problems.extend(validate_signature(block, f"/message/ds:Signature[{ix + 1}]", message_level=True))
    return problems
