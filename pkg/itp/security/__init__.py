from .algorithms import (DEFAULT_DIGEST, DEFAULT_ENCRYPTION, DEFAULT_SIGNATURE, DIGESTS, ENCRYPTION_SCHEMES,
                         SIGNATURE_SCHEMES, digest)
from .keys import KeyPairRecord, KeyUsage, Keystore, TrustStore, keygen
from .signatures import SignatureVerdict, Verdict, VerificationReport, sign, sign_message, verify
from .authorization import AuthorizationDecision, AuthorizationPolicy, authorize
from .encryption import decrypt_field, encrypt_field
