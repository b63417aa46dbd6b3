"""Exceptions raised by the ITP packages.

Library code raises these; only ``itp.cli`` turns them into exit statuses."""
from typing import List, Sequence


class ItpError(Exception):
    pass


class ConfigError(ItpError):
    pass


# model

class ModelError(ItpError):
    pass


class InvalidIdentifier(ModelError):
    pass


class InvalidFieldName(ModelError):
    pass


class EmptyMessage(ModelError):
    pass


class DuplicateApplicationId(ModelError):
    pass


# codec

class CodecError(ItpError):
    pass


class MalformedDocument(CodecError):
    """The input is not well-formed XML."""


class InvalidDocument(CodecError):
    """The input is well-formed but breaks the ITP grammar."""

    def __init__(self, violations: Sequence):
        self.violations: List = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class InvalidModel(InvalidDocument):
    """A model handed to the serializer does not validate."""


class UnknownScopeField(CodecError):
    pass


# security

class SecurityError(ItpError):
    pass


class UnsupportedAlgorithm(SecurityError):
    pass


class UsageViolation(SecurityError):
    pass


class PrivateKeyRequired(SecurityError):
    pass


class UnknownKey(SecurityError):
    pass


class KeystoreError(SecurityError):
    pass


class FieldAbsent(SecurityError):
    pass


class AlreadyEncrypted(SecurityError):
    pass


class NotEncrypted(SecurityError):
    pass


class DecryptionFailure(SecurityError):
    pass


# routing

class RoutingError(ItpError):
    pass


class DuplicateComponentName(RoutingError):
    pass


class InvalidComponentName(RoutingError, ConfigError):
    """A registry entry whose name is empty or not printable."""


class UnknownComponent(RoutingError):
    pass


class TransportFailure(RoutingError):
    """Transient delivery problem; the send may be retried."""


class MisroutedMessage(RoutingError):
    pass


class StorePersistenceFailure(RoutingError):
    pass


# profiles

class ProfileError(ItpError):
    pass


class DuplicateProfileId(ProfileError):
    pass


class InconsistentSpec(ProfileError):
    pass


class StageNotFound(ProfileError):
    pass


class UnknownProfile(ProfileError):
    pass


class ProfileConfigError(ProfileError):
    pass


# components

class ComponentError(ItpError):
    pass


class CredentialRejected(ComponentError):
    pass


class ReplayRejected(ComponentError):
    pass


class SignatureInvalid(ComponentError):
    pass


class AuthorizationDenied(ComponentError):
    pass


class StageViolation(ComponentError):
    pass


class UnknownVirtualCA(ComponentError):
    pass


class ChainBroken(ComponentError):
    pass
