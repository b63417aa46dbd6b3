"""``itp-simple-cert/1`` certificates and the virtual CAs that issue them.

A certificate is a small XML document::

    <certificate format="itp-simple-cert/1">
      <payload>base64(tbsCertificate)</payload>
      <issuerSignature>base64(signature over the tbsCertificate bytes)</issuerSignature>
    </certificate>

carried in a profile field as Base64 of the whole document."""
import base64
import binascii
import logging
import threading
from dataclasses import dataclass
from datetime import datetime
from typing import Dict, Iterator, Optional

from lxml import etree

from itp.codec import format_timestamp, parse_timestamp
from itp.errors import KeystoreError, MalformedDocument, UnknownVirtualCA, UsageViolation
from itp.model import utcnow
from itp.security import KeyPairRecord, Keystore, KeyUsage, TrustStore
from itp.security.algorithms import get_signature_scheme
from itp.store import StoreTable

logger = logging.getLogger(__name__)

FORMAT_ID = "itp-simple-cert/1"
KEY_USAGES = ("encryption", "signature", "non-repudiation")

TBS_PARTS = ('subject', 'keyUsage', 'issuer', 'issuerKeyId', 'serial', 'issuedAt', 'subjectKeyAlgorithm',
             'subjectPublicKey')


@dataclass(frozen=True)
class CertificateInfo:
    subject_dn: str
    key_usage: str
    issuer: str
    issuer_key_id: str
    serial: int
    issued_at: datetime
    subject_key_algorithm: str
    subject_public_key: str

    def to_bytes(self) -> bytes:
        root = etree.Element("tbsCertificate")
        values = (self.subject_dn, self.key_usage, self.issuer, self.issuer_key_id, str(self.serial),
                  format_timestamp(self.issued_at), self.subject_key_algorithm, self.subject_public_key)
        for tag, value in zip(TBS_PARTS, values):
            etree.SubElement(root, tag).text = value
        return etree.tostring(root, encoding="utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> "CertificateInfo":
        try:
            root = etree.fromstring(data, parser=etree.XMLParser(resolve_entities=False, no_network=True))
        except etree.XMLSyntaxError as err:
            raise MalformedDocument(f"certificate payload: {err}") from err
        values = {child.tag: child.text or "" for child in root if isinstance(child.tag, str)}
        if root.tag != "tbsCertificate" or set(values) != set(TBS_PARTS):
            raise MalformedDocument("certificate payload is not a tbsCertificate")
        try:
            return cls(subject_dn=values['subject'], key_usage=values['keyUsage'], issuer=values['issuer'],
                       issuer_key_id=values['issuerKeyId'], serial=int(values['serial']),
                       issued_at=parse_timestamp(values['issuedAt']),
                       subject_key_algorithm=values['subjectKeyAlgorithm'],
                       subject_public_key=values['subjectPublicKey'])
        except ValueError as err:
            raise MalformedDocument(f"certificate payload: {err}") from err


@dataclass(frozen=True)
class CertificateBlob:
    format_id: str
    payload: str  # Base64 tbsCertificate
    issuer_signature: str  # Base64

    @property
    def info(self) -> CertificateInfo:
        try:
            return CertificateInfo.from_bytes(base64.b64decode(self.payload, validate=True))
        except (binascii.Error, ValueError) as err:
            raise MalformedDocument("certificate payload is not Base64") from err

    def encode(self) -> str:
        """The profile field value: Base64 of the certificate document."""
        root = etree.Element("certificate")
        root.set("format", self.format_id)
        etree.SubElement(root, "payload").text = self.payload
        etree.SubElement(root, "issuerSignature").text = self.issuer_signature
        return base64.b64encode(etree.tostring(root, encoding="utf-8")).decode("ascii")

    @classmethod
    def decode(cls, text: str) -> "CertificateBlob":
        try:
            root = etree.fromstring(base64.b64decode(text, validate=True),
                                    parser=etree.XMLParser(resolve_entities=False, no_network=True))
        except (binascii.Error, ValueError, etree.XMLSyntaxError) as err:
            raise MalformedDocument(f"not an encoded certificate: {err}") from err
        if root.tag != "certificate":
            raise MalformedDocument(f"certificate document root is {root.tag}")
        payload = root.findtext("payload")
        signature = root.findtext("issuerSignature")
        if payload is None or signature is None:
            raise MalformedDocument("certificate lacks payload or issuerSignature")
        return cls(format_id=root.get("format", ""), payload=payload.strip(), issuer_signature=signature.strip())


class VirtualCA:
    """One CA identity hosted in the Certification component.

    Serial numbers and the issuance ledger live in the ``issued_certificate``
    table, so they carry over restarts."""

    def __init__(self, name: str, key: KeyPairRecord, ledger: StoreTable):
        if key.usage is not KeyUsage.CA_SIGNING:
            raise UsageViolation(f"virtual CA {name} needs a ca-signing key, {key.key_id} is {key.usage.value}")
        self.name = name
        self.key = key
        self.ledger = ledger
        self._lock = threading.Lock()

    def next_serial(self) -> int:
        top = self.ledger.maximum('serial', ca_name=self.name)
        return (top or 0) + 1

    def issued_count(self, application_id: Optional[str] = None) -> int:
        if application_id is None:
            return self.ledger.count(ca_name=self.name)
        return self.ledger.count(ca_name=self.name, application_id=application_id)


def issue_certificate(subject_dn: str, usage: str, ca: VirtualCA, subject_public_key: str,
                      subject_key_algorithm: str = "", application_id: Optional[str] = None,
                      clock: Optional[datetime] = None) -> CertificateBlob:
    if ca.key.usage is not KeyUsage.CA_SIGNING:
        raise UsageViolation(f"key {ca.key.key_id} is not a ca-signing key")
    if usage not in KEY_USAGES:
        raise UsageViolation(f"{usage!r} is not a certificate key usage")
    scheme = get_signature_scheme(ca.key.algorithm)
    issued_at = clock if clock is not None else utcnow().replace(microsecond=0)
    with ca._lock:
        serial = ca.next_serial()
        info = CertificateInfo(subject_dn=subject_dn, key_usage=usage, issuer=ca.name, issuer_key_id=ca.key.key_id,
                               serial=serial, issued_at=issued_at, subject_key_algorithm=subject_key_algorithm,
                               subject_public_key=subject_public_key)
        tbs = info.to_bytes()
        blob = CertificateBlob(format_id=FORMAT_ID, payload=base64.b64encode(tbs).decode("ascii"),
                               issuer_signature=base64.b64encode(scheme.sign(ca.key.private_der(), tbs))
                               .decode("ascii"))
        ca.ledger.add_row(ca_name=ca.name, serial=serial, subject_dn=subject_dn, usage=usage,
                          application_id=application_id, blob=blob.encode(),
                          issued_at=issued_at.replace(tzinfo=None))
    logger.info("%s issued %s certificate %d for %s", ca.name, usage, serial, subject_dn)
    return blob


def verify_certificate(blob: CertificateBlob, trust: TrustStore) -> bool:
    """True when the issuer signature verifies under the named virtual CA's ca-signing key."""
    if blob.format_id != FORMAT_ID:
        return False
    try:
        info = blob.info
        tbs = base64.b64decode(blob.payload, validate=True)
        signature = base64.b64decode(blob.issuer_signature, validate=True)
    except (MalformedDocument, binascii.Error, ValueError):
        return False
    record = trust.get(info.issuer_key_id)
    if record is None or record.usage is not KeyUsage.CA_SIGNING or record.owner_dn != info.issuer:
        return False
    try:
        return get_signature_scheme(record.algorithm).verify(record.public_der(), tbs, signature)
    except (KeystoreError, UsageViolation, ValueError):
        return False


class VirtualCAs:
    """Virtual CAs by name; at most one signing key per name."""

    def __init__(self, ledger: StoreTable):
        self.ledger = ledger
        self._cas: Dict[str, VirtualCA] = dict()

    def add(self, name: str, key: KeyPairRecord) -> VirtualCA:
        if name in self._cas:
            raise KeystoreError(f"virtual CA {name} already has a signing key")
        self._cas[name] = VirtualCA(name, key, self.ledger)
        return self._cas[name]

    def get(self, name: str) -> VirtualCA:
        try:
            return self._cas[name]
        except KeyError:
            raise UnknownVirtualCA(f"no virtual CA named {name!r}") from None

    def issued_count(self, application_id: str) -> int:
        return self.ledger.count(application_id=application_id)

    def __contains__(self, name: str) -> bool:
        return name in self._cas

    def __iter__(self) -> Iterator[VirtualCA]:
        return iter(self._cas.values())

    @classmethod
    def from_keystore(cls, keystore: Keystore, ledger: StoreTable) -> "VirtualCAs":
        cas = cls(ledger)
        for record in keystore:
            if record.usage is KeyUsage.CA_SIGNING and record.has_private:
                cas.add(record.owner_dn, record)
        return cas
