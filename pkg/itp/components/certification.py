"""Certification: checks a request, issues its certificates and forwards it."""
import logging
from typing import List

from itp.components.audit import EventKind
from itp.components.certificates import issue_certificate
from itp.components.handlers import ComponentContext, component_handler
from itp.components.stages import admit_and_verify, check_stage, reject
from itp.errors import PrivateKeyRequired, StageViolation, UnknownVirtualCA
from itp.model import ALL, Application, Message, build_message, clear_signatures, get_field, remove_field, set_field
from itp.profiles import CERTIFICATE_USAGES, CERTIFICATION
from itp.security import DEFAULT_ENCRYPTION, DEFAULT_SIGNATURE, keygen, sign

logger = logging.getLogger(__name__)


def _certify(app: Application, ctx: ComponentContext, msg_id: str) -> Application:
    spec = ctx.profiles.lookup(app.profile_id)
    stage = spec.stage(ctx.name)
    subject_dn = get_field(app, "subjectDN")
    client_name = get_field(app, "clientName")
    ca = ctx.virtual_cas.get(client_name)
    serials = []
    after = "clientName"
    for name, usage in CERTIFICATE_USAGES.items():
        if name not in stage.produced:
            continue
        # subject key pairs are made here; the private halves leave out of band
        if usage == "encryption":
            subject_key = keygen(DEFAULT_ENCRYPTION, subject_dn, "encryption")
        else:
            subject_key = keygen(DEFAULT_SIGNATURE, subject_dn, "operational-signing")
        blob = issue_certificate(subject_dn, usage, ca, subject_key.public_key, subject_key.algorithm,
                                 application_id=app.id)
        serials.append(blob.info.serial)
        app = set_field(app, name, blob.encode(), after=after)
        after = name
    for name in sorted(stage.consumed):
        app = remove_field(app, name)
    app = sign(clear_signatures(app), ALL, ctx.signing_key, ctx.name)
    ctx.audit.append(ctx.name, EventKind.PROCESSED, message_id=msg_id, application_id=app.id, actor_dns=(ca.name,),
                     detail=f"issued {len(serials)} certificates, serials {', '.join(map(str, serials))}")
    return app


def certification_process(msg: Message, ctx: ComponentContext) -> Message:
    """Admit, verify, check the stage and authorization of every application,
    then issue certificates and forward to the next hop."""
    if ctx.signing_key is None:
        raise PrivateKeyRequired(f"{ctx.name} has no signing key")
    report = admit_and_verify(msg, ctx)
    hops = check_stage(msg, ctx, report)
    if len(hops) != 1 or hops[0] is None:
        reject(ctx, msg, StageViolation(f"applications of {msg.id} do not share one next hop"))
    for app in msg.applications:
        client_name = get_field(app, "clientName")
        if ctx.virtual_cas is None or client_name not in ctx.virtual_cas:
            reject(ctx, msg, UnknownVirtualCA(f"application {app.id}: no virtual CA {client_name!r}"), app.id)
    apps = [_certify(app, ctx, msg.id) for app in msg.applications]
    out = build_message(ctx.name, hops[0], apps)
    for app in apps:
        ctx.audit.append(ctx.name, EventKind.FORWARDED, message_id=out.id, application_id=app.id,
                         detail=f"to {out.recipient}")
    logger.info("%s forwarded %s as %s to %s", ctx.name, msg.id, out.id, out.recipient)
    return out


@component_handler(CERTIFICATION)
def handle_certification(msg: Message, ctx: ComponentContext) -> List[Message]:
    return [certification_process(msg, ctx)]
