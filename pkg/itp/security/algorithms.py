"""Registry of the signature, key-wrapping and digest algorithms ITP can use.

Schemes register themselves with a decorator, so a new algorithm is one more
class in this module (or any module imported before use)."""
import hashlib
import os
from abc import ABC, abstractmethod
from typing import Dict, Tuple

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec, ed25519, padding, rsa, x25519
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.keywrap import InvalidUnwrap, aes_key_unwrap, aes_key_wrap

from itp.errors import DecryptionFailure, KeystoreError, UnsupportedAlgorithm

DEFAULT_SIGNATURE = "ed25519"
DEFAULT_ENCRYPTION = "x25519-aes256gcm"
DEFAULT_DIGEST = "sha256"
DIGESTS = ("sha256", "sha384", "sha512")

SIGNATURE_SCHEMES: Dict[str, "SignatureScheme"] = dict()
ENCRYPTION_SCHEMES: Dict[str, "EncryptionScheme"] = dict()


def signature_scheme(algorithm_id: str):
    """Registers the decorated class under ``algorithm_id``."""

    def decorator(cls):
        SIGNATURE_SCHEMES[algorithm_id] = cls()
        cls.algorithm_id = algorithm_id
        return cls

    return decorator


def encryption_scheme(algorithm_id: str):
    def decorator(cls):
        ENCRYPTION_SCHEMES[algorithm_id] = cls()
        cls.algorithm_id = algorithm_id
        return cls

    return decorator


def get_signature_scheme(algorithm_id: str) -> "SignatureScheme":
    try:
        return SIGNATURE_SCHEMES[algorithm_id]
    except KeyError:
        raise UnsupportedAlgorithm(f"no signature scheme {algorithm_id!r}") from None


def get_encryption_scheme(algorithm_id: str) -> "EncryptionScheme":
    try:
        return ENCRYPTION_SCHEMES[algorithm_id]
    except KeyError:
        raise UnsupportedAlgorithm(f"no encryption scheme {algorithm_id!r}") from None


def digest(algorithm_id: str, data: bytes) -> bytes:
    if algorithm_id not in DIGESTS:
        raise UnsupportedAlgorithm(f"no digest algorithm {algorithm_id!r}")
    return hashlib.new(algorithm_id, data).digest()


def _der_pair(private_key) -> Tuple[bytes, bytes]:
    public = private_key.public_key().public_bytes(serialization.Encoding.DER,
                                                    serialization.PublicFormat.SubjectPublicKeyInfo)
    private = private_key.private_bytes(serialization.Encoding.DER, serialization.PrivateFormat.PKCS8,
                                        serialization.NoEncryption())
    return public, private


def _load_private(der: bytes, expected):
    try:
        key = serialization.load_der_private_key(der, password=None)
    except ValueError as err:
        raise KeystoreError("private key is not PKCS#8 DER") from err
    if not isinstance(key, expected):
        raise KeystoreError(f"private key is a {type(key).__name__}, not a {expected.__name__}")
    return key


def _load_public(der: bytes, expected):
    try:
        key = serialization.load_der_public_key(der)
    except ValueError as err:
        raise KeystoreError("public key is not SubjectPublicKeyInfo DER") from err
    if not isinstance(key, expected):
        raise KeystoreError(f"public key is a {type(key).__name__}, not a {expected.__name__}")
    return key


class SignatureScheme(ABC):
    algorithm_id: str

    @abstractmethod
    def generate(self) -> Tuple[bytes, bytes]:
        """Returns (public DER, private DER)."""

    @abstractmethod
    def sign(self, private_der: bytes, data: bytes) -> bytes:
        pass

    @abstractmethod
    def verify(self, public_der: bytes, data: bytes, signature: bytes) -> bool:
        pass


@signature_scheme("ed25519")
class Ed25519Scheme(SignatureScheme):
    def generate(self):
        return _der_pair(ed25519.Ed25519PrivateKey.generate())

    def sign(self, private_der, data):
        return _load_private(private_der, ed25519.Ed25519PrivateKey).sign(data)

    def verify(self, public_der, data, signature):
        try:
            _load_public(public_der, ed25519.Ed25519PublicKey).verify(signature, data)
        except InvalidSignature:
            return False
        return True


@signature_scheme("ecdsa-p256-sha256")
class EcdsaP256Scheme(SignatureScheme):
    def generate(self):
        return _der_pair(ec.generate_private_key(ec.SECP256R1()))

    def sign(self, private_der, data):
        return _load_private(private_der, ec.EllipticCurvePrivateKey).sign(data, ec.ECDSA(hashes.SHA256()))

    def verify(self, public_der, data, signature):
        try:
            _load_public(public_der, ec.EllipticCurvePublicKey).verify(signature, data, ec.ECDSA(hashes.SHA256()))
        except InvalidSignature:
            return False
        return True


@signature_scheme("rsa-pss-sha256")
class RsaPssScheme(SignatureScheme):
    PADDING = padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=padding.PSS.MAX_LENGTH)

    def generate(self):
        return _der_pair(rsa.generate_private_key(public_exponent=65537, key_size=2048))

    def sign(self, private_der, data):
        return _load_private(private_der, rsa.RSAPrivateKey).sign(data, self.PADDING, hashes.SHA256())

    def verify(self, public_der, data, signature):
        try:
            _load_public(public_der, rsa.RSAPublicKey).verify(signature, data, self.PADDING, hashes.SHA256())
        except InvalidSignature:
            return False
        return True


class EncryptionScheme(ABC):
    """Wraps a content key to a recipient public key."""
    algorithm_id: str

    @abstractmethod
    def generate(self) -> Tuple[bytes, bytes]:
        pass

    @abstractmethod
    def wrap(self, public_der: bytes, content_key: bytes) -> bytes:
        pass

    @abstractmethod
    def unwrap(self, private_der: bytes, wrapped: bytes) -> bytes:
        """Raises DecryptionFailure when ``wrapped`` was not made for this key."""


@encryption_scheme("x25519-aes256gcm")
class X25519Scheme(EncryptionScheme):
    """Ephemeral X25519 agreement, HKDF-SHA256 key-encryption key, AES key wrap."""
    INFO = b"itp content key wrap"

    def _kek(self, shared: bytes, ephemeral: bytes) -> bytes:
        return HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=self.INFO + ephemeral).derive(shared)

    def generate(self):
        return _der_pair(x25519.X25519PrivateKey.generate())

    def wrap(self, public_der, content_key):
        recipient = _load_public(public_der, x25519.X25519PublicKey)
        ephemeral = x25519.X25519PrivateKey.generate()
        ephemeral_raw = ephemeral.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
        kek = self._kek(ephemeral.exchange(recipient), ephemeral_raw)
        return ephemeral_raw + aes_key_wrap(kek, content_key)

    def unwrap(self, private_der, wrapped):
        if len(wrapped) <= 32:
            raise DecryptionFailure("wrapped key is truncated")
        private = _load_private(private_der, x25519.X25519PrivateKey)
        ephemeral_raw = wrapped[:32]
        try:
            shared = private.exchange(x25519.X25519PublicKey.from_public_bytes(ephemeral_raw))
            return aes_key_unwrap(self._kek(shared, ephemeral_raw), wrapped[32:])
        except (InvalidUnwrap, ValueError) as err:
            raise DecryptionFailure("content key does not unwrap with this key") from err


@encryption_scheme("rsa-oaep-aes256gcm")
class RsaOaepScheme(EncryptionScheme):
    PADDING = padding.OAEP(mgf=padding.MGF1(algorithm=hashes.SHA256()), algorithm=hashes.SHA256(), label=None)

    def generate(self):
        return _der_pair(rsa.generate_private_key(public_exponent=65537, key_size=2048))

    def wrap(self, public_der, content_key):
        return _load_public(public_der, rsa.RSAPublicKey).encrypt(content_key, self.PADDING)

    def unwrap(self, private_der, wrapped):
        try:
            return _load_private(private_der, rsa.RSAPrivateKey).decrypt(wrapped, self.PADDING)
        except ValueError as err:
            raise DecryptionFailure("content key does not unwrap with this key") from err


def random_bytes(size: int) -> bytes:
    return os.urandom(size)
