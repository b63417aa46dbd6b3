"""Parsing ITP documents into the object model.

Whitespace between elements is insignificant. Comments and processing
instructions are ignored, except inside ``<profile>`` where they are rejected.
Unknown children of ``<profile>`` are ordinary fields."""
import logging
import re
from typing import List, Optional, Tuple, Union

from lxml import etree

from itp.errors import InvalidDocument, MalformedDocument
from itp.model import ALL, Application, EncryptedField, Message, ProfileField, SignatureBlock
from itp.codec.serializer import DECLARATIONS, NSMAP, ds, parse_timestamp, xenc
from itp.codec.validation import SchemaViolation, validate

logger = logging.getLogger(__name__)

SIGNED_INFO_PARTS = ('SignerDN', 'KeyId', 'SignatureMethod', 'DigestMethod', 'Scope', 'CreatedAt')
ENCRYPTED_PARTS = ('EncryptionMethod', 'KeyName', 'CipherValue', 'EncryptedKey')


PROLOG_ITEM = re.compile(rb'\s*(?:<\?.*?\?>|<!--.*?-->|<!DOCTYPE(?:[^\[>]|\[.*?\])*>)', re.S)
ROOT_TAG = re.compile(rb'\s*<[^\s/>]+')
BOM = b"\xef\xbb\xbf"


def bind_prefixes(data: bytes) -> bytes:
    """Declares the fixed ``ds`` and ``xenc`` prefixes on the root element unless
    the document already does."""
    pos = len(BOM) if data.startswith(BOM) else 0
    while True:
        item = PROLOG_ITEM.match(data, pos)
        if item is None or item.end() == pos:
            break
        pos = item.end()
    root = ROOT_TAG.match(data, pos)
    if root is None:
        return data
    start_tag = data[root.end():data.find(b">", root.end())]
    missing = b"".join(declaration for prefix, declaration in zip(NSMAP, DECLARATIONS)
                       if not re.search(rb'\sxmlns:' + prefix.encode() + rb'\s*=', start_tag))
    return data[:root.end()] + missing + data[root.end():]


def _parser() -> etree.XMLParser:
    return etree.XMLParser(resolve_entities=False, no_network=True, load_dtd=False, huge_tree=False)


def _is_markup(node) -> bool:
    return node.tag is etree.Comment or node.tag is etree.ProcessingInstruction


def _blank(text: Optional[str]) -> bool:
    return text is None or text.strip() == ""


def _joined_text(element) -> str:
    """Text of a leaf element; comments inside it do not split the value."""
    return (element.text or "") + "".join(child.tail or "" for child in element if _is_markup(child))


class _Reader:
    """Walks one document, collecting structural violations as it goes."""

    def __init__(self):
        self.problems: List[SchemaViolation] = []

    def flag(self, path: str, rule: str, detail: str):
        self.problems.append(SchemaViolation(path, rule, detail))

    def children(self, element, path: str, markup_allowed: bool = True):
        if not _blank(element.text):
            self.flag(path, "mixed-content", "unexpected text")
        for child in element:
            if not _blank(child.tail):
                self.flag(path, "mixed-content", "unexpected text")
            if _is_markup(child):
                if not markup_allowed:
                    self.flag(path, "markup", "comments and processing instructions are not allowed here")
                continue
            yield child

    def attributes(self, element, path: str, allowed: Tuple[str, ...]):
        for name in element.attrib:
            if name not in allowed:
                self.flag(f"{path}/@{name}", "unexpected-attribute", f"attribute {name} is not part of ITP")

    def leaf_text(self, element, path: str) -> str:
        for child in element:
            if not _is_markup(child):
                self.flag(path, "nested", "element carries child elements")
        return _joined_text(element)

    def single(self, element, path: str, wanted: Tuple[str, ...], ns=ds) -> dict:
        found = {}
        for child in self.children(element, path):
            name = etree.QName(child).localname if child.tag.startswith("{") else child.tag
            if child.tag not in {ns(w) for w in wanted}:
                self.flag(f"{path}/{name}", "unexpected-element", f"{name} is not allowed here")
            elif name in found:
                self.flag(f"{path}/{name}", "unique", f"{name} appears twice")
            else:
                found[name] = child
        return found

    def signature(self, element, path: str) -> SignatureBlock:
        parts = self.single(element, path, ('SignedInfo', 'SignatureValue'))
        info = {}
        if 'SignedInfo' in parts:
            info = self.single(parts['SignedInfo'], path + "/ds:SignedInfo", SIGNED_INFO_PARTS)
        text = {name: self.leaf_text(info[name], f"{path}/ds:{name}").strip()
                for name in SIGNED_INFO_PARTS if name in info and name != 'Scope'}
        scope: Union[str, Tuple[str, ...]] = ()
        if 'Scope' in info:
            scope = self.scope(info['Scope'], path + "/ds:SignedInfo/ds:Scope")
        created_at = None
        if text.get('CreatedAt'):
            try:
                created_at = parse_timestamp(text['CreatedAt'])
            except ValueError:
                created_at = None
        value = ""
        if 'SignatureValue' in parts:
            value = self.leaf_text(parts['SignatureValue'], path + "/ds:SignatureValue").strip()
        return SignatureBlock(signer_dn=text.get('SignerDN', ""), key_id=text.get('KeyId', ""),
                              algorithm=text.get('SignatureMethod', ""), digest_algorithm=text.get('DigestMethod', ""),
                              scope=scope, created_at=created_at, signature_value=value)

    def scope(self, element, path: str) -> Union[str, Tuple[str, ...]]:
        names = []
        everything = False
        for child in self.children(element, path):
            if child.tag == ds("All"):
                everything = True
            elif child.tag == ds("Field"):
                names.append(self.leaf_text(child, path + "/ds:Field").strip())
            else:
                self.flag(path, "unexpected-element", f"{child.tag} is not a scope entry")
        if everything and names:
            self.flag(path, "signature-shape", "scope is both ALL and a field list")
        return ALL if everything else tuple(names)

    def field(self, element, path: str) -> ProfileField:
        name = element.tag
        if name.startswith("{"):
            self.flag(path, "element-name", "fields carry no namespace")
            name = etree.QName(element).localname
        for child in element:
            if _is_markup(child):
                self.flag(path, "markup", "comments and processing instructions are not allowed in a profile")
        nodes = [child for child in element if not _is_markup(child)]
        if len(nodes) == 0:
            return ProfileField(name, _joined_text(element))
        if len(nodes) > 1 or nodes[0].tag != xenc("EncryptedData"):
            self.flag(path, "nested", "a field holds text or one xenc:EncryptedData element")
        if not _blank(element.text) or any(not _blank(n.tail) for n in nodes):
            self.flag(path, "mixed-content", "encrypted field carries extra text")
        parts = self.single(nodes[0], path + "/xenc:EncryptedData", ENCRYPTED_PARTS, ns=xenc)
        text = {part: self.leaf_text(parts[part], f"{path}/xenc:{part}").strip() if part in parts else ""
                for part in ENCRYPTED_PARTS}
        return ProfileField(name, EncryptedField(algorithm=text['EncryptionMethod'],
                                                 recipient_key_id=text['KeyName'],
                                                 ciphertext=text['CipherValue'],
                                                 wrapped_key=text['EncryptedKey']))

    def application(self, element, path: str) -> Application:
        self.attributes(element, path, ('id',))
        profile_id = ""
        fields = []
        signatures = []
        profiles = 0
        for child in self.children(element, path):
            if child.tag == "profile":
                profiles += 1
                if profiles > 1:
                    self.flag(path + "/profile", "unique", "an application has exactly one profile")
                    continue
                self.attributes(child, path + "/profile", ('id',))
                profile_id = child.get("id", "")
                for field_el in self.children(child, path + "/profile", markup_allowed=False):
                    fields.append(self.field(field_el, f"{path}/profile/{field_el.tag}"))
            elif child.tag == ds("Signature"):
                signatures.append(self.signature(child, f"{path}/ds:Signature[{len(signatures) + 1}]"))
            else:
                self.flag(f"{path}/{child.tag}", "unexpected-element", f"{child.tag} is not allowed in an application")
        if profiles == 0:
            self.flag(path + "/profile", "required", "an application has exactly one profile")
        return Application(id=element.get("id", ""), profile_id=profile_id, fields=tuple(fields),
                           signatures=tuple(signatures))

    def message(self, root) -> Message:
        if root.tag != "message":
            self.flag("/", "root", f"document root is {root.tag}, not message")
        self.attributes(root, "/message", ('version', 'id'))
        header = {}
        applications = []
        signatures = []
        for child in self.children(root, "/message"):
            if child.tag in ("sender", "recipient"):
                if child.tag in header:
                    self.flag(f"/message/{child.tag}", "unique", f"{child.tag} appears twice")
                    continue
                header[child.tag] = self.leaf_text(child, f"/message/{child.tag}")
            elif child.tag == "application":
                applications.append(self.application(child, f"/message/application[{len(applications) + 1}]"))
            elif child.tag == ds("Signature"):
                signatures.append(self.signature(child, f"/message/ds:Signature[{len(signatures) + 1}]"))
            else:
                self.flag(f"/message/{child.tag}", "unexpected-element", f"{child.tag} is not allowed in a message")
        return Message(id=root.get("id", ""), sender=header.get("sender", ""), recipient=header.get("recipient", ""),
                       applications=tuple(applications), signatures=tuple(signatures),
                       version=root.get("version", ""))


def parse(data: Union[bytes, str]) -> Message:
    """Parses and validates one ITP document."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = etree.fromstring(bind_prefixes(data), parser=_parser())
    except etree.XMLSyntaxError as err:
        raise MalformedDocument(str(err)) from err
    reader = _Reader()
    msg = reader.message(root)
    problems = reader.problems + validate(msg)
    if problems:
        logger.debug("rejected document with %d violations", len(problems))
        raise InvalidDocument(problems)
    return msg
