"""Key pairs, the keystore file and the verification-only trust store.

Keystore line format::

    key-id | algorithm-id | usage | owner-subject-dn | base64(public) | base64(private, optional)
"""
import base64
import dataclasses
import hashlib
import logging
import pathlib
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Union

from itp.errors import KeystoreError, UnknownKey, UnsupportedAlgorithm
from itp.security.algorithms import get_encryption_scheme, get_signature_scheme

logger = logging.getLogger(__name__)


class KeyUsage(str, Enum):
    OPERATIONAL_SIGNING = "operational-signing"
    CA_SIGNING = "ca-signing"
    ENCRYPTION = "encryption"


@dataclass(frozen=True)
class KeyPairRecord:
    key_id: str
    algorithm: str
    usage: KeyUsage
    owner_dn: str
    public_key: str  # Base64 SubjectPublicKeyInfo DER
    private_key: Optional[str] = None  # Base64 PKCS#8 DER

    @property
    def has_private(self) -> bool:
        return bool(self.private_key)

    def public_der(self) -> bytes:
        return base64.b64decode(self.public_key)

    def private_der(self) -> bytes:
        return base64.b64decode(self.private_key or "")

    def public_only(self) -> "KeyPairRecord":
        return dataclasses.replace(self, private_key=None)


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def keygen(algorithm: str, owner: str, usage: Union[KeyUsage, str]) -> KeyPairRecord:
    """Generates a fresh key pair; the key id is a fingerprint of the public key."""
    try:
        usage = KeyUsage(usage)
    except ValueError:
        raise UnsupportedAlgorithm(f"unknown key usage {usage!r}") from None
    if usage is KeyUsage.ENCRYPTION:
        scheme = get_encryption_scheme(algorithm)
    else:
        scheme = get_signature_scheme(algorithm)
    public, private = scheme.generate()
    key_id = hashlib.sha256(public).hexdigest()[:20]
    logger.info("generated %s key %s for %s", usage.value, key_id, owner)
    return KeyPairRecord(key_id=key_id, algorithm=algorithm, usage=usage, owner_dn=owner,
                         public_key=_b64(public), private_key=_b64(private))


def format_record(record: KeyPairRecord) -> str:
    return " | ".join((record.key_id, record.algorithm, record.usage.value, record.owner_dn,
                       record.public_key, record.private_key or ""))


def parse_record(line: str, line_number: int = 0) -> KeyPairRecord:
    parts = [part.strip() for part in line.split("|")]
    if len(parts) == 5:
        parts.append("")
    if len(parts) != 6:
        raise KeystoreError(f"line {line_number}: expected 6 '|'-separated columns, found {len(parts)}")
    key_id, algorithm, usage, owner, public, private = parts
    try:
        usage = KeyUsage(usage)
    except ValueError:
        raise KeystoreError(f"line {line_number}: unknown key usage {usage!r}") from None
    if not key_id or not algorithm or not owner or not public:
        raise KeystoreError(f"line {line_number}: empty column")
    return KeyPairRecord(key_id=key_id, algorithm=algorithm, usage=usage, owner_dn=owner,
                         public_key=public, private_key=private or None)


class _KeyIndex:
    def __init__(self, records: Iterable[KeyPairRecord] = ()):
        self._by_id: Dict[str, KeyPairRecord] = dict()
        self._by_owner: Dict[str, List[KeyPairRecord]] = defaultdict(list)
        for record in records:
            self.add(record)

    def _prepare(self, record: KeyPairRecord) -> KeyPairRecord:
        return record

    def add(self, record: KeyPairRecord) -> KeyPairRecord:
        if record.key_id in self._by_id:
            raise KeystoreError(f"key id {record.key_id} is already present")
        if "|" in record.owner_dn or "\n" in record.owner_dn:
            raise KeystoreError(f"owner {record.owner_dn!r} cannot be stored")
        record = self._prepare(record)
        self._by_id[record.key_id] = record
        self._by_owner[record.owner_dn].append(record)
        return record

    def get(self, key_id: str) -> Optional[KeyPairRecord]:
        return self._by_id.get(key_id)

    def by_owner(self, owner_dn: str) -> List[KeyPairRecord]:
        return list(self._by_owner.get(owner_dn, []))

    def __iter__(self) -> Iterator[KeyPairRecord]:
        return iter(self._by_id.values())

    def __len__(self):
        return len(self._by_id)


class TrustStore(_KeyIndex):
    """Verification-only key records, indexed by key id and owner DN."""

    def _prepare(self, record):
        return record.public_only()

    @classmethod
    def from_keystore(cls, keystore: "Keystore") -> "TrustStore":
        return cls(keystore)


class Keystore(_KeyIndex):
    """Complete key records as kept in a keystore file."""

    def find(self, owner_dn: str, usage: Union[KeyUsage, str] = KeyUsage.OPERATIONAL_SIGNING) -> KeyPairRecord:
        usage = KeyUsage(usage)
        for record in self.by_owner(owner_dn):
            if record.usage is usage and record.has_private:
                return record
        raise UnknownKey(f"no {usage.value} key with private part for {owner_dn!r}")

    def require(self, key_id: str) -> KeyPairRecord:
        record = self.get(key_id)
        if record is None:
            raise UnknownKey(f"no key {key_id!r} in keystore")
        return record

    def dumps(self) -> str:
        lines = ["# key-id | algorithm-id | usage | owner-subject-dn | base64(public) | base64(private)"]
        lines.extend(format_record(record) for record in self)
        return "\n".join(lines) + "\n"

    def save(self, path: pathlib.Path):
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.tmp")
        tmp.write_text(self.dumps(), encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def loads(cls, text: str) -> "Keystore":
        store = cls()
        for ix, line in enumerate(text.splitlines()):
            line = line.strip()
            if len(line) == 0 or line.startswith("#"):
                continue
            store.add(parse_record(line, ix + 1))
        return store

    @classmethod
    def load(cls, path: pathlib.Path, missing_ok: bool = False) -> "Keystore":
        path = pathlib.Path(path)
        if not path.exists():
            if missing_ok:
                return cls()
            raise KeystoreError(f"keystore {path} does not exist")
        return cls.loads(path.read_text(encoding="utf-8"))
