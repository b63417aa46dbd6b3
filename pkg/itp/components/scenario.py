"""The MultiCert walk-through: Registration, two operators, Certification and
Directory Services exchanging files through their mailboxes."""
import logging
import pathlib
from dataclasses import dataclass, field
from typing import Dict, List

from itp.codec import serialize
from itp.components.audit import AuditEvent, AuditLog, EventKind, audit_trace
from itp.components.certificates import VirtualCAs
from itp.components.directory import directory_process
from itp.components.handlers import ComponentContext
from itp.components.publication import Notification, Outbox, PublicationRecord, PublicationStore
from itp.components.registration import Intake, operator_sign, registration_process
from itp.components.runner import serve
from itp.errors import ConfigError, TransportFailure
from itp.model import Message, get_field
from itp.profiles import CERTIFICATION, DIRECTORY, OPERATORS, REGISTRATION, builtin_profiles
from itp.routing import ComponentRegistry, ComponentRegistryEntry, ReplayStore, Router, TransportKind
from itp.security import DEFAULT_SIGNATURE, Keystore, KeyUsage, TrustStore, keygen
from itp.store import StoreTable, connect

logger = logging.getLogger(__name__)

HOST_A = "Host A"
REQUEST_MESSAGE_ID = "20040202164445"
REQUEST_APPLICATION_ID = "20040202164832"

ALICE = Intake(subject_dn="CN=Alice,OU=OrgUnitName,O=OrgName,C=DE",
               client_name=HOST_A,
               revocation_password_hash="7c4a8 ... 8941c",
               email="alice@orgunitname.orgname.de",
               publicly_available=True)

CERTIFICATE_DB = "sqlite://certificates.sqlite"
HOP_TIMEOUT = 10.0


def slug(component: str) -> str:
    return component.lower().replace(" ", "-")


@dataclass
class ScenarioResult:
    application_id: str
    hop1: Message
    hop2: Message
    hop1_bytes: bytes
    hop2_bytes: bytes
    publications: List[PublicationRecord]
    notifications: List[Notification]
    trace: List[AuditEvent]
    chain_intact: bool
    issued: int
    paths: Dict[str, pathlib.Path] = field(default_factory=dict)

    @property
    def operators(self) -> List[str]:
        dns = {dn for event in self.trace if event.kind is EventKind.AUTHORIZED for dn in event.actor_dns}
        return sorted(dns)

    @property
    def components(self) -> List[str]:
        return sorted({event.component for event in self.trace})

    def to_dict(self) -> dict:
        return {
            'application_id': self.application_id,
            'hop1': {'message_id': self.hop1.id, 'sender': self.hop1.sender, 'recipient': self.hop1.recipient,
                     'subjectDN': get_field(self.hop1.applications[0], "subjectDN")},
            'hop2': {'message_id': self.hop2.id, 'sender': self.hop2.sender, 'recipient': self.hop2.recipient,
                     'subjectDN': get_field(self.hop2.applications[0], "subjectDN")},
            'published': [record.published for record in self.publications],
            'certificates': sum(len(record.certificates) for record in self.publications),
            'issued': self.issued,
            'notifications': [{'email': n.email, 'attachments': n.attachment_count} for n in self.notifications],
            'operators': self.operators,
            'components': self.components,
            'chain_intact': self.chain_intact,
            'trace': [event.to_dict() for event in self.trace],
        }


def scenario_keystore() -> Keystore:
    """Operational keys of the two sending components and three operators,
    plus the ca-signing key of the ``Host A`` virtual CA."""
    keystore = Keystore()
    for owner in (REGISTRATION, CERTIFICATION) + tuple(OPERATORS):
        keystore.add(keygen(DEFAULT_SIGNATURE, owner, KeyUsage.OPERATIONAL_SIGNING))
    keystore.add(keygen(DEFAULT_SIGNATURE, HOST_A, KeyUsage.CA_SIGNING))
    return keystore


def scenario_registry(mailboxes: pathlib.Path) -> ComponentRegistry:
    registry = ComponentRegistry()
    for name in (REGISTRATION, CERTIFICATION, DIRECTORY):
        registry.register_component(ComponentRegistryEntry(name=name, transport=TransportKind.FILE,
                                                           address=str(mailboxes / slug(name))))
    return registry


def run_multicert_scenario(workdir: pathlib.Path, intake: Intake = ALICE) -> ScenarioResult:
    """Runs the whole MultiCert pipeline in ``workdir``, which must not hold an earlier run."""
    workdir = pathlib.Path(workdir)
    state = workdir / "state"
    if state.exists():
        raise ConfigError(f"{workdir} already holds a scenario run")
    paths = {'keystore': workdir / "keys" / "trustcenter.keys",
             'mailboxes': workdir / "mailboxes",
             'replay_log': state / "replay.log",
             'audit': state / "audit",
             'certificates': state / "certificates",
             'publication': state / "publication",
             'outbox': state / "outbox.log"}

    keystore = scenario_keystore()
    keystore.save(paths['keystore'])
    trust = TrustStore.from_keystore(keystore)
    profiles = builtin_profiles()
    replay = ReplayStore(paths['replay_log'])
    ledger = StoreTable(connect(CERTIFICATE_DB, folder=paths['certificates']), 'issued_certificate')
    logs = {name: AuditLog(paths['audit'] / f"{slug(name)}.log") for name in (REGISTRATION, CERTIFICATION, DIRECTORY)}

    def context(name: str, **kwargs) -> ComponentContext:
        signing_key = keystore.find(name) if keystore.by_owner(name) else None
        return ComponentContext(name=name, signing_key=signing_key, trust=trust, profiles=profiles, replay=replay,
                                audit=logs[name], **kwargs)

    registration = context(REGISTRATION)
    certification = context(CERTIFICATION, virtual_cas=VirtualCAs.from_keystore(keystore, ledger))
    directory = context(DIRECTORY, publication=PublicationStore(paths['publication']),
                        outbox=Outbox(paths['outbox']))
    router = Router(scenario_registry(paths['mailboxes']))

    try:
        hop1 = registration_process(intake, registration, application_id=REQUEST_APPLICATION_ID,
                                    message_id=REQUEST_MESSAGE_ID)
        # the two operators co-sign the exported request before it is carried over
        for operator in OPERATORS[:2]:
            hop1 = operator_sign(hop1, keystore.find(operator), operator)
        router.send(hop1)
        registration.audit.append(REGISTRATION, EventKind.FORWARDED, message_id=hop1.id,
                                  application_id=REQUEST_APPLICATION_ID, actor_dns=OPERATORS[:2],
                                  detail=f"to {hop1.recipient}")

        summary = serve(certification, router, max_messages=1, idle_timeout=HOP_TIMEOUT, poll=0.1)
        if not summary.forwarded:
            raise TransportFailure(f"{CERTIFICATION} forwarded nothing")
        hop2 = summary.forwarded[0]

        inbound = router.receive(DIRECTORY, timeout=HOP_TIMEOUT)
        if inbound is None:
            raise TransportFailure(f"nothing arrived at {DIRECTORY}")
        publications = directory_process(inbound, directory)
    finally:
        router.close()

    reloaded = [AuditLog(log.path) for log in logs.values()]
    result = ScenarioResult(application_id=REQUEST_APPLICATION_ID, hop1=hop1, hop2=hop2,
                            hop1_bytes=serialize(hop1), hop2_bytes=serialize(hop2),
                            publications=publications, notifications=directory.outbox.records(),
                            trace=audit_trace(REQUEST_APPLICATION_ID, *reloaded),
                            chain_intact=all(log.verify() for log in reloaded),
                            issued=certification.virtual_cas.issued_count(REQUEST_APPLICATION_ID),
                            paths=paths)
    logger.info("MultiCert scenario for %s: %d certificates issued, chain %s", result.application_id, result.issued,
                "intact" if result.chain_intact else "broken")
    return result
