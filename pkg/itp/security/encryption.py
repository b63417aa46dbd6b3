"""Field-level hybrid encryption.

A fresh AES-256-GCM content key encrypts the field value; the content key is
wrapped to the recipient's public key. The application id and field name are
bound in as associated data."""
import base64
import binascii
import logging

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from itp.errors import (AlreadyEncrypted, DecryptionFailure, FieldAbsent, NotEncrypted, PrivateKeyRequired,
                        UsageViolation)
from itp.model import Application, EncryptedField, get_field, set_field
from itp.security.algorithms import get_encryption_scheme, random_bytes
from itp.security.keys import KeyPairRecord, KeyUsage

logger = logging.getLogger(__name__)

NONCE_SIZE = 12


def _associated_data(app: Application, field_name: str) -> bytes:
    return f"{app.id}\n{field_name}".encode("utf-8")


def encrypt_field(app: Application, field_name: str, recipient: KeyPairRecord) -> Application:
    value = get_field(app, field_name)
    if value is None:
        raise FieldAbsent(f"application {app.id} has no field {field_name}")
    if isinstance(value, EncryptedField):
        raise AlreadyEncrypted(f"{field_name} of {app.id} is already encrypted")
    if recipient.usage is not KeyUsage.ENCRYPTION:
        raise UsageViolation(f"key {recipient.key_id} has usage {recipient.usage.value}, encryption is required")
    scheme = get_encryption_scheme(recipient.algorithm)
    content_key = AESGCM.generate_key(bit_length=256)
    nonce = random_bytes(NONCE_SIZE)
    ciphertext = AESGCM(content_key).encrypt(nonce, value.encode("utf-8"), _associated_data(app, field_name))
    wrapped = scheme.wrap(recipient.public_der(), content_key)
    logger.debug("encrypted %s of %s for key %s", field_name, app.id, recipient.key_id)
    return set_field(app, field_name, EncryptedField(
        algorithm=recipient.algorithm, recipient_key_id=recipient.key_id,
        ciphertext=base64.b64encode(nonce + ciphertext).decode("ascii"),
        wrapped_key=base64.b64encode(wrapped).decode("ascii")))


def decrypt_field(app: Application, field_name: str, key: KeyPairRecord) -> Application:
    value = get_field(app, field_name)
    if value is None:
        raise FieldAbsent(f"application {app.id} has no field {field_name}")
    if not isinstance(value, EncryptedField):
        raise NotEncrypted(f"{field_name} of {app.id} is not encrypted")
    if key.usage is not KeyUsage.ENCRYPTION:
        raise UsageViolation(f"key {key.key_id} has usage {key.usage.value}, encryption is required")
    if not key.has_private:
        raise PrivateKeyRequired(f"key {key.key_id} has no private part")
    if key.algorithm != value.algorithm:
        raise DecryptionFailure(f"{field_name} is encrypted with {value.algorithm}, "
                                f"key {key.key_id} is {key.algorithm}")
    scheme = get_encryption_scheme(value.algorithm)
    try:
        blob = base64.b64decode(value.ciphertext, validate=True)
        wrapped = base64.b64decode(value.wrapped_key, validate=True)
    except (binascii.Error, ValueError) as err:
        raise DecryptionFailure(f"{field_name} of {app.id} is not valid Base64") from err
    if len(blob) <= NONCE_SIZE:
        raise DecryptionFailure(f"{field_name} of {app.id} is truncated")
    content_key = scheme.unwrap(key.private_der(), wrapped)
    try:
        plaintext = AESGCM(content_key).decrypt(blob[:NONCE_SIZE], blob[NONCE_SIZE:],
                                                _associated_data(app, field_name))
        text = plaintext.decode("utf-8")
    except (InvalidTag, ValueError) as err:
        raise DecryptionFailure(f"{field_name} of {app.id} does not decrypt") from err
    return set_field(app, field_name, text)
