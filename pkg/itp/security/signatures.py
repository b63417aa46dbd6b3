"""Signing and verification of applications and messages.

A signature value is computed over the canonical SignedInfo of its block, which
carries the signer, key id, algorithms, scope, creation time and the digest of
the scope bytes. Blocks are appended; earlier blocks are never touched."""
import base64
import binascii
import dataclasses
import logging
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, List, Optional, Set, Tuple, Union

from itp.codec import canonical_signed_info, canonicalize_scope
from itp.errors import CodecError, ItpError, PrivateKeyRequired, UnsupportedAlgorithm, UsageViolation
from itp.model import ALL, Application, Message, Scope, SignatureBlock, append_signature, field_names, utcnow
from itp.security.algorithms import DEFAULT_DIGEST, DIGESTS, digest, get_signature_scheme
from itp.security.keys import KeyPairRecord, KeyUsage, TrustStore

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    ADVISORY_BROKEN = "advisory-broken"


@dataclass(frozen=True)
class SignatureVerdict:
    signer_dn: str
    scope: Scope
    verdict: Verdict
    key_id: str = ""
    application_id: Optional[str] = None  # None for message-level blocks
    detail: str = ""

    @property
    def valid(self) -> bool:
        return self.verdict is Verdict.VALID

    def to_dict(self) -> dict:
        return {'signer': self.signer_dn, 'scope': self.scope if self.scope == ALL else list(self.scope),
                'verdict': self.verdict.value, 'key_id': self.key_id, 'application': self.application_id,
                'detail': self.detail}


@dataclass(frozen=True)
class VerificationReport:
    verdicts: Tuple[SignatureVerdict, ...] = ()

    @property
    def overall(self) -> bool:
        return all(v.valid for v in self.verdicts if v.verdict is not Verdict.ADVISORY_BROKEN)

    def for_application(self, application_id: str) -> "VerificationReport":
        return VerificationReport(tuple(v for v in self.verdicts if v.application_id == application_id))

    def valid_signers(self, application_id: Optional[str] = None) -> Set[str]:
        return {v.signer_dn for v in self.verdicts if v.valid and v.application_id == application_id}

    def to_dict(self) -> dict:
        return {'overall': self.overall, 'verdicts': [v.to_dict() for v in self.verdicts]}


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _normalize_scope(scope) -> Scope:
    if scope == ALL:
        return ALL
    if isinstance(scope, str):
        return (scope,)
    return tuple(scope)


def _signing_key(key: KeyPairRecord):
    if key.usage is not KeyUsage.OPERATIONAL_SIGNING:
        raise UsageViolation(f"key {key.key_id} has usage {key.usage.value}, operational-signing is required")
    if not key.has_private:
        raise PrivateKeyRequired(f"key {key.key_id} has no private part")
    return get_signature_scheme(key.algorithm)


def _make_block(target: Union[Application, Message], scope: Scope, key: KeyPairRecord, signer_dn: str,
                clock: Optional[datetime], digest_algorithm: str) -> SignatureBlock:
    scheme = _signing_key(key)
    if digest_algorithm not in DIGESTS:
        raise UnsupportedAlgorithm(f"no digest algorithm {digest_algorithm!r}")
    created_at = clock if clock is not None else utcnow().replace(microsecond=0)
    block = SignatureBlock(signer_dn=signer_dn, key_id=key.key_id, algorithm=key.algorithm,
                           digest_algorithm=digest_algorithm, scope=scope, created_at=created_at,
                           signature_value="")
    scope_digest = _b64(digest(digest_algorithm, canonicalize_scope(target, scope)))
    value = scheme.sign(key.private_der(), canonical_signed_info(block, scope_digest))
    return dataclasses.replace(block, signature_value=_b64(value))


def sign(app: Application, scope, key: KeyPairRecord, signer_dn: str, clock: Optional[datetime] = None,
         digest_algorithm: str = DEFAULT_DIGEST) -> Application:
    """Appends a signature by ``signer_dn`` over ``scope`` (ALL or field names)."""
    block = _make_block(app, _normalize_scope(scope), key, signer_dn, clock, digest_algorithm)
    logger.debug("%s signed application %s over %s", signer_dn, app.id, block.scope)
    return append_signature(app, block)


def sign_message(msg: Message, key: KeyPairRecord, signer_dn: str, clock: Optional[datetime] = None,
                 digest_algorithm: str = DEFAULT_DIGEST) -> Message:
    block = _make_block(msg, ALL, key, signer_dn, clock, digest_algorithm)
    logger.debug("%s signed message %s", signer_dn, msg.id)
    return dataclasses.replace(msg, signatures=msg.signatures + (block,))


def _check(block: SignatureBlock, target: Union[Application, Message], trust: TrustStore,
           application_id: Optional[str]) -> SignatureVerdict:
    def verdict(kind: Verdict, detail: str = "") -> SignatureVerdict:
        return SignatureVerdict(signer_dn=block.signer_dn, scope=block.scope, verdict=kind, key_id=block.key_id,
                                application_id=application_id, detail=detail)

    if isinstance(target, Application) and block.scope != ALL:
        missing = [name for name in block.scope if name not in field_names(target)]
        if missing:
            return verdict(Verdict.ADVISORY_BROKEN, f"signed fields no longer present: {', '.join(missing)}")
    record = trust.get(block.key_id)
    if record is None:
        return verdict(Verdict.INVALID, f"unknown key {block.key_id}")
    if record.usage is not KeyUsage.OPERATIONAL_SIGNING:
        return verdict(Verdict.INVALID, f"key {record.key_id} is a {record.usage.value} key")
    if record.owner_dn != block.signer_dn:
        return verdict(Verdict.INVALID, f"key {record.key_id} belongs to {record.owner_dn}")
    if record.algorithm != block.algorithm:
        return verdict(Verdict.INVALID, f"key {record.key_id} is not a {block.algorithm} key")
    try:
        scheme = get_signature_scheme(block.algorithm)
        scope_digest = _b64(digest(block.digest_algorithm, canonicalize_scope(target, block.scope)))
        signature = base64.b64decode(block.signature_value, validate=True)
        ok = scheme.verify(record.public_der(), canonical_signed_info(block, scope_digest), signature)
    except (ItpError, binascii.Error, ValueError) as err:
        return verdict(Verdict.INVALID, str(err))
    if ok:
        return verdict(Verdict.VALID)
    if isinstance(target, Application) and block.scope == ALL and target.removed_fields:
        removed = ", ".join(sorted(target.removed_fields))
        return verdict(Verdict.ADVISORY_BROKEN, f"application changed after signing, removed: {removed}")
    return verdict(Verdict.INVALID, "signature does not match the signed content")


def _verify_blocks(blocks: Iterable[SignatureBlock], target, trust, application_id) -> List[SignatureVerdict]:
    return [_check(block, target, trust, application_id) for block in blocks]


def verify(target: Union[Application, Message], trust: TrustStore) -> VerificationReport:
    """Checks every signature block in ``target``. A message report holds the
    message-level blocks first, then each application's blocks."""
    if isinstance(target, Application):
        verdicts = _verify_blocks(target.signatures, target, trust, target.id)
    else:
        verdicts = _verify_blocks(target.signatures, target, trust, None)
        for app in target.applications:
            verdicts.extend(_verify_blocks(app.signatures, app, trust, app.id))
    report = VerificationReport(tuple(verdicts))
    if not report.overall:
        logger.info("verification of %s failed: %s", target.id,
                    "; ".join(f"{v.signer_dn}: {v.detail}" for v in verdicts if v.verdict is Verdict.INVALID))
    return report
