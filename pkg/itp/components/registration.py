"""Registration: vets an end-entity request and opens the application."""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

from itp.components.audit import EventKind
from itp.components.handlers import ComponentContext
from itp.codec import validate
from itp.errors import CredentialRejected, InvalidModel, PrivateKeyRequired
from itp.model import ALL, Message, build_message, new_application, new_id, replace_application
from itp.profiles import MULTICERT, next_hop
from itp.security import DEFAULT_DIGEST, KeyPairRecord, digest, sign

logger = logging.getLogger(__name__)


def hash_revocation_password(password: str, digest_algorithm: str = DEFAULT_DIGEST) -> str:
    return digest(digest_algorithm, password.encode("utf-8")).hex()


@dataclass(frozen=True)
class Intake:
    """An end entity's request as Registration takes it in."""
    subject_dn: str
    client_name: str
    revocation_password_hash: str
    email: str
    publicly_available: bool = True

    @classmethod
    def from_password(cls, subject_dn: str, client_name: str, password: str, email: str,
                      publicly_available: bool = True, digest_algorithm: str = DEFAULT_DIGEST) -> "Intake":
        return cls(subject_dn, client_name, hash_revocation_password(password, digest_algorithm), email,
                   publicly_available)

    def fields(self):
        return (("clientName", self.client_name),
                ("subjectDN", self.subject_dn),
                ("revocationPassword", self.revocation_password_hash),
                ("email", self.email),
                ("publiclyAvailable", "true" if self.publicly_available else "false"))


def accept_all(intake: Intake) -> bool:
    return True


def registration_process(intake: Intake, ctx: ComponentContext,
                         credential_check: Callable[[Intake], bool] = accept_all,
                         profile_id: str = MULTICERT, application_id: Optional[str] = None,
                         message_id: Optional[str] = None) -> Message:
    """Builds the signed request message for the next stage of ``profile_id``.
    Operators co-sign it afterwards with :func:`operator_sign`."""
    if not credential_check(intake):
        ctx.audit.append(ctx.name, EventKind.REJECTED, detail=f"credentials of {intake.subject_dn} rejected")
        raise CredentialRejected(f"credentials of {intake.subject_dn} rejected")
    if ctx.signing_key is None:
        raise PrivateKeyRequired(f"{ctx.name} has no signing key")
    spec = ctx.profiles.lookup(profile_id)
    recipient = next_hop(spec, ctx.name)
    app = new_application(application_id or new_id(), profile_id, intake.fields())
    app = sign(app, ALL, ctx.signing_key, ctx.name)
    msg = build_message(ctx.name, recipient, [app], message_id)
    problems = validate(msg)
    if problems:
        raise InvalidModel(problems)
    ctx.audit.append(ctx.name, EventKind.PROCESSED, message_id=msg.id, application_id=app.id,
                     actor_dns=(ctx.name,), detail=f"request of {intake.subject_dn} registered")
    logger.info("%s registered application %s for %s", ctx.name, app.id, intake.subject_dn)
    return msg


def operator_sign(msg: Message, key: KeyPairRecord, operator_dn: str, application_id: Optional[str] = None,
                  scope=ALL) -> Message:
    """An operator's co-signature over one application, or over every application."""
    for app in msg.applications:
        if application_id is None or app.id == application_id:
            msg = replace_application(msg, sign(app, scope, key, operator_dn))
    return msg
