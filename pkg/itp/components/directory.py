"""Directory Services: publishes certificates and notifies the subject."""
import logging
from typing import Dict, List

from itp.components.audit import EventKind
from itp.components.certificates import CertificateBlob, verify_certificate
from itp.components.handlers import ComponentContext, component_handler
from itp.components.publication import PublicationRecord
from itp.components.stages import admit_and_verify, check_stage, reject
from itp.errors import MalformedDocument, SignatureInvalid, StorePersistenceFailure
from itp.model import Application, Message, get_field
from itp.profiles import CERTIFICATE_USAGES, DIRECTORY

logger = logging.getLogger(__name__)


def _certificates(msg: Message, app: Application, ctx: ComponentContext) -> Dict[str, CertificateBlob]:
    blobs = {}
    for name, usage in CERTIFICATE_USAGES.items():
        value = get_field(app, name)
        if value is None:
            continue
        try:
            blob = CertificateBlob.decode(value)
        except MalformedDocument as err:
            reject(ctx, msg, SignatureInvalid(f"application {app.id}: {name} is not a certificate ({err})"), app.id)
        if not verify_certificate(blob, ctx.trust):
            reject(ctx, msg, SignatureInvalid(f"application {app.id}: {name} does not verify under its CA"), app.id)
        blobs[usage] = blob
    return blobs


def directory_process(msg: Message, ctx: ComponentContext) -> List[PublicationRecord]:
    """One PublicationRecord per application. The notification is recorded
    whether or not the certificates are published."""
    if ctx.publication is None or ctx.outbox is None:
        raise StorePersistenceFailure(f"{ctx.name} has no publication store or outbox")
    report = admit_and_verify(msg, ctx)
    check_stage(msg, ctx, report)
    # every certificate is checked before anything is published or notified
    checked = [(app, _certificates(msg, app, ctx)) for app in msg.applications]
    records = []
    for app, blobs in checked:
        published = get_field(app, "publiclyAvailable") == "true" and len(blobs) > 0
        if published:
            ctx.publication.publish(app.id, {usage: blob.encode() for usage, blob in blobs.items()})
        notification = ctx.outbox.send(get_field(app, "email"), app.id, attachments=len(blobs))
        ctx.audit.append(ctx.name, EventKind.PROCESSED, message_id=msg.id, application_id=app.id,
                         detail=f"{'published' if published else 'not published'}, "
                                f"notified {notification.email} with {len(blobs)} certificates")
        records.append(PublicationRecord(application_id=app.id, published=published,
                                         certificates=tuple(blobs.values()), notification=notification))
    return records


@component_handler(DIRECTORY)
def handle_directory(msg: Message, ctx: ComponentContext) -> List[Message]:
    directory_process(msg, ctx)
    return []
