"""Checks every receiving component runs before it touches a message."""
import logging
from typing import List

from itp.components.audit import EventKind
from itp.components.handlers import ComponentContext
from itp.errors import AuthorizationDenied, ProfileError, ReplayRejected, SignatureInvalid, StageViolation
from itp.model import Message
from itp.profiles import next_hop, validate_stage
from itp.security import Verdict, VerificationReport, authorize, verify

logger = logging.getLogger(__name__)


def reject(ctx: ComponentContext, msg: Message, error, application_id: str = "", actors=()):
    ctx.audit.append(ctx.name, EventKind.REJECTED, message_id=msg.id, application_id=application_id,
                     actor_dns=actors, detail=str(error))
    logger.warning("%s rejected %s: %s", ctx.name, msg.id, error)
    raise error


def admit_and_verify(msg: Message, ctx: ComponentContext) -> VerificationReport:
    """Replay check, then every signature in the message; both audited."""
    ctx.audit.append(ctx.name, EventKind.RECEIVED, message_id=msg.id, detail=f"from {msg.sender}")
    admission = ctx.replay.admit(msg, ctx.name)
    if not admission:
        reject(ctx, msg, ReplayRejected(admission.detail))
    report = verify(msg, ctx.trust)
    for app in msg.applications:
        ctx.audit.append(ctx.name, EventKind.VERIFIED, message_id=msg.id, application_id=app.id,
                         actor_dns=sorted(report.valid_signers(app.id)),
                         detail="signatures valid" if report.for_application(app.id).overall else "signature invalid")
    if not report.overall:
        broken = [f"{v.signer_dn} ({v.detail})" for v in report.verdicts if v.verdict is Verdict.INVALID]
        reject(ctx, msg, SignatureInvalid(f"invalid signatures in {msg.id}: {'; '.join(broken)}"))
    return report


def check_stage(msg: Message, ctx: ComponentContext, report: VerificationReport) -> List[str]:
    """Stage fields and authorization of every application; returns their next hops."""
    hops = set()
    for app in msg.applications:
        try:
            spec = ctx.profiles.lookup(app.profile_id)
            violations = validate_stage(app, spec, ctx.name)
        except ProfileError as err:
            reject(ctx, msg, StageViolation(f"application {app.id}: {err}"), app.id)
        if violations:
            reject(ctx, msg, StageViolation(f"application {app.id}: {', '.join(violations)}"), app.id)
        decision = authorize(app, spec.policy(ctx.name), report)
        if not decision:
            reject(ctx, msg, AuthorizationDenied(f"application {app.id}: {decision.reason}"), app.id,
                   decision.operators)
        ctx.audit.append(ctx.name, EventKind.AUTHORIZED, message_id=msg.id, application_id=app.id,
                         actor_dns=decision.operators,
                         detail=f"authorized by {len(decision.operators)} operators")
        hops.add(next_hop(spec, ctx.name))
    return sorted(hops, key=lambda hop: hop or "")


