"""Canonical serialization.

The canonical form is what gets signed: UTF-8, no XML declaration, no whitespace
between elements, ``version`` before ``id`` on ``<message>``, fields in stored
order, signature blocks last. Equal models always give identical bytes.

``ds:`` and ``xenc:`` are fixed prefixes written as literal text; documents carry
no namespace declarations for them."""
import logging
from datetime import datetime, timezone
from typing import Optional, Union

from lxml import etree

from itp.errors import CodecError, InvalidModel, UnknownScopeField
from itp.model import ALL, Application, EncryptedField, Message, SignatureBlock, field_names, get_field
from itp.codec.validation import validate

logger = logging.getLogger(__name__)

DS_NS = "http://www.w3.org/2000/09/xmldsig#"
XENC_NS = "http://www.w3.org/2001/04/xmlenc#"
NSMAP = {'ds': DS_NS, 'xenc': XENC_NS}
DECLARATIONS = tuple(f' xmlns:{prefix}="{uri}"'.encode() for prefix, uri in NSMAP.items())
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"
TIMESTAMP_FORMAT_FRACTION = "%Y-%m-%dT%H:%M:%S.%fZ"


def ds(tag: str) -> str:
    return f"{{{DS_NS}}}{tag}"


def xenc(tag: str) -> str:
    return f"{{{XENC_NS}}}{tag}"


def format_timestamp(moment: datetime) -> str:
    moment = moment.astimezone(timezone.utc)
    if moment.microsecond:
        return moment.strftime(TIMESTAMP_FORMAT_FRACTION)
    return moment.strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    for fmt in (TIMESTAMP_FORMAT, TIMESTAMP_FORMAT_FRACTION):
        try:
            return datetime.strptime(text, fmt).replace(tzinfo=timezone.utc)
        except ValueError:
            continue
    raise ValueError(f"{text!r} is not a UTC timestamp")


def _text_element(parent, tag: str, text: str):
    el = etree.SubElement(parent, tag)
    el.text = text
    return el


def _field_element(parent, name: str, value):
    el = etree.SubElement(parent, name)
    if isinstance(value, EncryptedField):
        enc = etree.SubElement(el, xenc("EncryptedData"))
        _text_element(enc, xenc("EncryptionMethod"), value.algorithm)
        _text_element(enc, xenc("KeyName"), value.recipient_key_id)
        _text_element(enc, xenc("CipherValue"), value.ciphertext)
        _text_element(enc, xenc("EncryptedKey"), value.wrapped_key)
    else:
        el.text = value
    return el


def _signed_info_element(block: SignatureBlock, parent=None):
    if parent is None:
        info = etree.Element(ds("SignedInfo"), nsmap={'ds': DS_NS})
    else:
        info = etree.SubElement(parent, ds("SignedInfo"))
    _text_element(info, ds("SignerDN"), block.signer_dn)
    _text_element(info, ds("KeyId"), block.key_id)
    _text_element(info, ds("SignatureMethod"), block.algorithm)
    _text_element(info, ds("DigestMethod"), block.digest_algorithm)
    scope = etree.SubElement(info, ds("Scope"))
    if block.scope == ALL:
        etree.SubElement(scope, ds("All"))
    else:
        for name in block.scope:
            _text_element(scope, ds("Field"), name)
    _text_element(info, ds("CreatedAt"), format_timestamp(block.created_at))
    return info


def _signature_element(parent, block: SignatureBlock):
    sig = etree.SubElement(parent, ds("Signature"))
    _signed_info_element(block, sig)
    _text_element(sig, ds("SignatureValue"), block.signature_value)
    return sig


def application_element(app: Application, parent=None, with_signatures: bool = True):
    if parent is None:
        el = etree.Element("application", nsmap=NSMAP)
    else:
        el = etree.SubElement(parent, "application")
    el.set("id", app.id)
    profile = etree.SubElement(el, "profile")
    profile.set("id", app.profile_id)
    for _f in app.fields:
        _field_element(profile, _f.name, _f.value)
    if with_signatures:
        for block in app.signatures:
            _signature_element(el, block)
    return el


def message_element(msg: Message, with_signatures: bool = True):
    root = etree.Element("message", nsmap=NSMAP)
    root.set("version", msg.version)
    root.set("id", msg.id)
    _text_element(root, "sender", msg.sender)
    _text_element(root, "recipient", msg.recipient)
    for app in msg.applications:
        application_element(app, root)
    if with_signatures:
        for block in msg.signatures:
            _signature_element(root, block)
    return root


def _to_bytes(element, pretty: bool = False) -> bytes:
    data = etree.tostring(element, encoding="utf-8", xml_declaration=False, pretty_print=pretty)
    # declarations only sit in the first start tag; lxml escapes ">" in attribute values
    end = data.index(b">")
    head = data[:end]
    for declaration in DECLARATIONS:
        head = head.replace(declaration, b"")
    return head + data[end:]


def _checked(msg: Message) -> Message:
    problems = validate(msg)
    if problems:
        raise InvalidModel(problems)
    return msg


def serialize(msg: Message) -> bytes:
    return _to_bytes(message_element(_checked(msg)))


def pretty_print(msg: Message) -> bytes:
    """Indented rendering for people; parses back to the same model."""
    return _to_bytes(message_element(_checked(msg)), pretty=True)


def canonicalize_scope(target: Union[Application, Message], scope) -> bytes:
    """Bytes covered by a signature of ``scope`` over ``target``.

    ALL on an application: the application without its signature blocks.
    ALL on a message: the message without its message-level signature blocks.
    A field list: each listed field in listed order, wrapped with the application
    and profile ids so it cannot be spliced into another application."""
    if isinstance(target, Message):
        if scope != ALL:
            raise CodecError("message signatures cover the whole message")
        return _to_bytes(message_element(target, with_signatures=False))
    if scope == ALL:
        return _to_bytes(application_element(target, with_signatures=False))
    present = field_names(target)
    missing = [name for name in scope if name not in present]
    if missing:
        raise UnknownScopeField(f"application {target.id} has no field {', '.join(missing)}")
    chunks = []
    for name in scope:
        wrapper = etree.Element("scopedField", nsmap=NSMAP)
        wrapper.set("application", target.id)
        wrapper.set("profile", target.profile_id)
        _field_element(wrapper, name, get_field(target, name))
        chunks.append(_to_bytes(wrapper))
    return b"".join(chunks)


def canonical_signed_info(block: SignatureBlock, digest_value: Optional[str]) -> bytes:
    """The bytes a signature value is computed over: the block's metadata plus the
    Base64 digest of the scope bytes."""
    info = _signed_info_element(block)
    _text_element(info, ds("DigestValue"), digest_value or "")
    return _to_bytes(info)
