"""Tests of the Registration, Certification and Directory Services components"""
import base64
import dataclasses
import random

import pytest

from itp.components import (ALICE, HOST_A, CertificateBlob, EventKind, Intake, PublicationStore, VirtualCA,
                            certification_process, directory_process, get_handler, hash_revocation_password,
                            issue_certificate, registration_process, serve, verify_certificate)
from itp.errors import (AuthorizationDenied, CredentialRejected, InvalidModel, ReplayRejected, SignatureInvalid,
                        StageViolation, StorePersistenceFailure, UnknownComponent, UnknownVirtualCA, UsageViolation)
from itp.model import (ALL, build_message, clear_signatures, get_field, new_id, remove_field, replace_application,
                       set_field)
from itp.profiles import CERTIFICATE_FIELDS, CERTIFICATION, DIRECTORY, OPERATORS, REGISTRATION
from itp.routing import ComponentRegistry, ComponentRegistryEntry, Router
from itp.security import KeyUsage, TrustStore, sign, verify
from itp.store import StoreTable, connect
from tests.common import (REQUEST_APPLICATION_ID, REQUEST_FIELDS, REQUEST_MESSAGE_ID, component_contexts,
                          field_names_of, registered_alice, trustcenter_keystore)

ISSUED_FIELD_ORDER = ["clientName", "encCertificate", "signCertificate", "nonRepCertificate", "revocationPassword",
                    "email", "publiclyAvailable"]


@pytest.fixture(scope="module")
def keystore():
    return trustcenter_keystore()


@pytest.fixture()
def contexts(keystore, tmp_path):
    return component_contexts(keystore, tmp_path)


def kinds(ctx, identifier=REQUEST_APPLICATION_ID):
    return [event.kind for event in ctx.audit.trace(identifier)]


class TestRegistration:
    def test_request_fields(self, contexts):
        msg = registration_process(ALICE, contexts[REGISTRATION], application_id=REQUEST_APPLICATION_ID,
                                   message_id=REQUEST_MESSAGE_ID)
        assert (msg.id, msg.sender, msg.recipient) == (REQUEST_MESSAGE_ID, REGISTRATION, CERTIFICATION)
        app = msg.applications[0]
        assert tuple((f.name, f.value) for f in app.fields) == REQUEST_FIELDS
        assert [block.signer_dn for block in app.signatures] == [REGISTRATION]
        assert kinds(contexts[REGISTRATION]) == [EventKind.PROCESSED]

    def test_operators_co_sign(self, contexts, keystore):
        msg = registered_alice(contexts, keystore)
        assert [block.signer_dn for block in msg.applications[0].signatures] == [REGISTRATION] + list(OPERATORS[:2])
        assert verify(msg, TrustStore.from_keystore(keystore)).overall

    def test_fresh_ids(self, contexts):
        first = registration_process(ALICE, contexts[REGISTRATION])
        second = registration_process(ALICE, contexts[REGISTRATION])
        assert first.id != second.id
        assert first.applications[0].id != second.applications[0].id

    def test_credentials_rejected(self, contexts):
        with pytest.raises(CredentialRejected):
            registration_process(ALICE, contexts[REGISTRATION], credential_check=lambda intake: False)
        events = contexts[REGISTRATION].audit.events
        assert [event.kind for event in events] == [EventKind.REJECTED]

    def test_path_like_application_id(self, contexts):
        with pytest.raises(InvalidModel):
            registration_process(ALICE, contexts[REGISTRATION], application_id="../../escaped")
        assert contexts[REGISTRATION].audit.events == []

    def test_password_is_hashed(self):
        intake = Intake.from_password(ALICE.subject_dn, HOST_A, "secret", ALICE.email)
        assert intake.revocation_password_hash == hash_revocation_password("secret")
        assert len(intake.revocation_password_hash) == 64
        assert "secret" not in dict(intake.fields()).values()

    def test_not_publicly_available(self):
        intake = dataclasses.replace(ALICE, publicly_available=False)
        assert dict(intake.fields())['publiclyAvailable'] == "false"


class TestCertification:
    def test_output(self, contexts, keystore):
        out = certification_process(registered_alice(contexts, keystore), contexts[CERTIFICATION])
        assert (out.sender, out.recipient) == (CERTIFICATION, DIRECTORY)
        assert out.id != REQUEST_MESSAGE_ID
        app = out.applications[0]
        assert app.id == REQUEST_APPLICATION_ID
        assert field_names_of(out) == ISSUED_FIELD_ORDER
        assert [block.signer_dn for block in app.signatures] == [CERTIFICATION]
        assert verify(out, TrustStore.from_keystore(keystore)).overall

    def test_certificates(self, contexts, keystore):
        out = certification_process(registered_alice(contexts, keystore), contexts[CERTIFICATION])
        trust = TrustStore.from_keystore(keystore)
        usages = []
        for name in CERTIFICATE_FIELDS:
            blob = CertificateBlob.decode(get_field(out.applications[0], name))
            assert verify_certificate(blob, trust)
            assert blob.info.subject_dn == ALICE.subject_dn
            assert blob.info.issuer == HOST_A
            usages.append(blob.info.key_usage)
        assert usages == ["encryption", "signature", "non-repudiation"]

    def test_audit_trail(self, contexts, keystore):
        certification_process(registered_alice(contexts, keystore), contexts[CERTIFICATION])
        assert kinds(contexts[CERTIFICATION]) == [EventKind.VERIFIED, EventKind.AUTHORIZED, EventKind.PROCESSED,
                                                  EventKind.FORWARDED]
        authorized = [e for e in contexts[CERTIFICATION].audit.events if e.kind is EventKind.AUTHORIZED][0]
        assert authorized.actor_dns == tuple(sorted(OPERATORS[:2]))
        assert contexts[CERTIFICATION].audit.verify()

    def test_one_operator_is_not_enough(self, contexts, keystore):
        msg = registered_alice(contexts, keystore, operators=OPERATORS[:1])
        with pytest.raises(AuthorizationDenied):
            certification_process(msg, contexts[CERTIFICATION])
        assert kinds(contexts[CERTIFICATION])[-1] is EventKind.REJECTED
        assert contexts[CERTIFICATION].virtual_cas.issued_count(REQUEST_APPLICATION_ID) == 0

    def test_any_two_operators(self, contexts, keystore):
        msg = registered_alice(contexts, keystore, operators=OPERATORS[1:])
        assert certification_process(msg, contexts[CERTIFICATION]).recipient == DIRECTORY

    def test_duplicates_issue_once(self, contexts, keystore):
        msg = registered_alice(contexts, keystore)
        certification_process(msg, contexts[CERTIFICATION])
        for _ in range(99):
            with pytest.raises(ReplayRejected):
                certification_process(msg, contexts[CERTIFICATION])
        assert contexts[CERTIFICATION].virtual_cas.issued_count(REQUEST_APPLICATION_ID) == 3

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_mixed_duplicates_issue_once(self, contexts, keystore, seed):
        rng = random.Random(seed)
        msg = registered_alice(contexts, keystore)
        # same message again, or the same application under a fresh message id
        deliveries = [msg if rng.random() < 0.5 else dataclasses.replace(msg, id=new_id()) for _ in range(100)]
        successes = 0
        for delivery in deliveries:
            try:
                certification_process(delivery, contexts[CERTIFICATION])
                successes += 1
            except ReplayRejected:
                pass
        assert successes == 1
        assert contexts[CERTIFICATION].virtual_cas.issued_count(REQUEST_APPLICATION_ID) == 3
        rejected = [e for e in contexts[CERTIFICATION].audit.events if e.kind is EventKind.REJECTED]
        assert len(rejected) == 99

    def test_tampered_request(self, contexts, keystore):
        msg = registered_alice(contexts, keystore)
        app = set_field(msg.applications[0], "email", "mallory@example.org")
        with pytest.raises(SignatureInvalid):
            certification_process(replace_application(msg, app), contexts[CERTIFICATION])

    def test_missing_field(self, contexts, keystore):
        msg = registered_alice(contexts, keystore)
        app = remove_field(msg.applications[0], "email")
        with pytest.raises(StageViolation):
            certification_process(replace_application(msg, app), contexts[CERTIFICATION])

    def test_unknown_profile(self, contexts, keystore):
        msg = registration_process(ALICE, contexts[REGISTRATION])
        app = dataclasses.replace(clear_signatures(msg.applications[0]), profile_id="Revoke")
        app = sign(app, ALL, keystore.find(REGISTRATION), REGISTRATION)
        with pytest.raises(StageViolation):
            certification_process(replace_application(msg, app), contexts[CERTIFICATION])
        assert contexts[CERTIFICATION].audit.events[-1].kind is EventKind.REJECTED

    def test_unknown_virtual_ca(self, contexts, keystore):
        intake = dataclasses.replace(ALICE, client_name="Host B")
        msg = registration_process(intake, contexts[REGISTRATION])
        for operator in OPERATORS[:2]:
            msg = replace_application(msg, sign(msg.applications[0], ALL, keystore.find(operator), operator))
        with pytest.raises(UnknownVirtualCA):
            certification_process(msg, contexts[CERTIFICATION])


class TestVirtualCA:
    def test_serials_increase(self, keystore):
        ca = VirtualCA(HOST_A, keystore.find(HOST_A, KeyUsage.CA_SIGNING),
                       StoreTable(connect(), 'issued_certificate'))
        subject = keystore.find(REGISTRATION)
        first = issue_certificate(ALICE.subject_dn, "signature", ca, subject.public_key, subject.algorithm)
        second = issue_certificate(ALICE.subject_dn, "encryption", ca, subject.public_key, subject.algorithm)
        assert second.info.serial == first.info.serial + 1
        assert ca.issued_count() == 2

    def test_serials_survive_restart(self, keystore, tmp_path):
        key = keystore.find(HOST_A, KeyUsage.CA_SIGNING)
        subject = keystore.find(REGISTRATION)
        ca = VirtualCA(HOST_A, key, StoreTable(connect("sqlite://certificates.sqlite", folder=tmp_path),
                                               'issued_certificate'))
        issue_certificate(ALICE.subject_dn, "signature", ca, subject.public_key)
        restarted = VirtualCA(HOST_A, key, StoreTable(connect("sqlite://certificates.sqlite", folder=tmp_path),
                                                      'issued_certificate'))
        assert restarted.next_serial() == 2

    def test_tampered_certificate(self, keystore):
        trust = TrustStore.from_keystore(keystore)
        ca = VirtualCA(HOST_A, keystore.find(HOST_A, KeyUsage.CA_SIGNING),
                       StoreTable(connect(), 'issued_certificate'))
        blob = issue_certificate(ALICE.subject_dn, "signature", ca, keystore.find(REGISTRATION).public_key)
        assert verify_certificate(CertificateBlob.decode(blob.encode()), trust)
        info = base64.b64decode(blob.payload).replace(b"CN=Alice", b"CN=Mallory")
        forged = dataclasses.replace(blob, payload=base64.b64encode(info).decode("ascii"))
        assert not verify_certificate(forged, trust)

    def test_needs_ca_key(self, keystore):
        with pytest.raises(UsageViolation):
            VirtualCA(HOST_A, keystore.find(REGISTRATION), StoreTable(connect(), 'issued_certificate'))

    def test_unknown_usage(self, keystore):
        ca = VirtualCA(HOST_A, keystore.find(HOST_A, KeyUsage.CA_SIGNING),
                       StoreTable(connect(), 'issued_certificate'))
        with pytest.raises(UsageViolation):
            issue_certificate(ALICE.subject_dn, "code-signing", ca, "AAAA")


class TestDirectory:
    def certified(self, contexts, keystore, intake=ALICE, application_id=REQUEST_APPLICATION_ID):
        msg = registration_process(intake, contexts[REGISTRATION], application_id=application_id)
        for operator in OPERATORS[:2]:
            msg = replace_application(msg, sign(msg.applications[0], ALL, keystore.find(operator), operator))
        return certification_process(msg, contexts[CERTIFICATION])

    def test_publish_and_notify(self, contexts, keystore):
        records = directory_process(self.certified(contexts, keystore), contexts[DIRECTORY])
        assert len(records) == 1
        record = records[0]
        assert record.published
        assert len(record.certificates) == 3
        assert record.notification.email == ALICE.email
        assert record.notification.attachment_count == 3
        published = contexts[DIRECTORY].publication.published(REQUEST_APPLICATION_ID)
        assert sorted(published) == ["encryption", "non-repudiation", "signature"]
        assert [n.email for n in contexts[DIRECTORY].outbox.records()] == [ALICE.email]

    def test_not_publicly_available(self, contexts, keystore):
        intake = dataclasses.replace(ALICE, publicly_available=False)
        record = directory_process(self.certified(contexts, keystore, intake), contexts[DIRECTORY])[0]
        assert not record.published
        assert record.notification.attachment_count == 3
        assert contexts[DIRECTORY].publication.published(REQUEST_APPLICATION_ID) == {}

    def test_forged_certificate(self, contexts, keystore):
        out = self.certified(contexts, keystore)
        app = out.applications[0]
        enc = CertificateBlob.decode(get_field(app, "encCertificate"))
        other = CertificateBlob.decode(get_field(app, "signCertificate"))
        forged = dataclasses.replace(enc, issuer_signature=other.issuer_signature)
        app = sign(clear_signatures(set_field(app, "encCertificate", forged.encode())), ALL,
                   keystore.find(CERTIFICATION), CERTIFICATION)
        with pytest.raises(SignatureInvalid):
            directory_process(build_message(CERTIFICATION, DIRECTORY, [app]), contexts[DIRECTORY])
        assert contexts[DIRECTORY].outbox.records() == []

    def test_forged_second_application_publishes_nothing(self, contexts, keystore):
        first = self.certified(contexts, keystore).applications[0]
        second = self.certified(contexts, keystore, application_id="20040202164832aaaaaa").applications[0]
        enc = CertificateBlob.decode(get_field(second, "encCertificate"))
        other = CertificateBlob.decode(get_field(second, "signCertificate"))
        forged = dataclasses.replace(enc, issuer_signature=other.issuer_signature)
        second = sign(clear_signatures(set_field(second, "encCertificate", forged.encode())), ALL,
                      keystore.find(CERTIFICATION), CERTIFICATION)
        with pytest.raises(SignatureInvalid):
            directory_process(build_message(CERTIFICATION, DIRECTORY, [first, second]), contexts[DIRECTORY])
        assert contexts[DIRECTORY].publication.published(REQUEST_APPLICATION_ID) == {}
        assert contexts[DIRECTORY].outbox.records() == []

    def test_two_applications(self, contexts, keystore):
        first = self.certified(contexts, keystore).applications[0]
        second = self.certified(contexts, keystore, application_id="20040202164832aaaaaa").applications[0]
        records = directory_process(build_message(CERTIFICATION, DIRECTORY, [first, second]), contexts[DIRECTORY])
        assert [r.application_id for r in records] == [REQUEST_APPLICATION_ID, "20040202164832aaaaaa"]
        assert len(contexts[DIRECTORY].outbox.records()) == 2

    @pytest.mark.parametrize("application_id", ["../escaped", "..", "a/b"])
    def test_publication_stays_inside_store(self, tmp_path, application_id):
        store = PublicationStore(tmp_path / "store" / "publication")
        with pytest.raises(StorePersistenceFailure):
            store.publish(application_id, {"encryption": "AAAA"})
        assert list(tmp_path.rglob("*.cert")) == []

    def test_needs_certification_signature(self, contexts, keystore):
        app = clear_signatures(self.certified(contexts, keystore).applications[0])
        with pytest.raises(AuthorizationDenied):
            directory_process(build_message(CERTIFICATION, DIRECTORY, [app]), contexts[DIRECTORY])

    def test_request_cannot_skip_certification(self, contexts, keystore):
        msg = registered_alice(contexts, keystore)
        with pytest.raises(StageViolation):
            directory_process(dataclasses.replace(msg, recipient=DIRECTORY), contexts[DIRECTORY])


class TestServe:
    def router(self):
        registry = ComponentRegistry()
        for name in (CERTIFICATION, DIRECTORY):
            registry.register_component(ComponentRegistryEntry(name, "in-memory", name))
        return Router(registry)

    def test_pipeline(self, contexts, keystore):
        router = self.router()
        router.send(registered_alice(contexts, keystore))
        summary = serve(contexts[CERTIFICATION], router, max_messages=1, poll=0.01)
        assert (summary.processed, summary.rejected) == (1, 0)
        assert [r.recipient for r in summary.receipts] == [DIRECTORY]
        summary = serve(contexts[DIRECTORY], router, max_messages=1, poll=0.01)
        assert (summary.processed, summary.forwarded) == (1, [])
        assert len(contexts[DIRECTORY].outbox.records()) == 1

    def test_replay_is_skipped(self, contexts, keystore):
        router = self.router()
        msg = registered_alice(contexts, keystore)
        router.send(msg)
        router.send(msg)
        summary = serve(contexts[CERTIFICATION], router, max_messages=2, poll=0.01)
        assert (summary.processed, summary.rejected) == (1, 1)

    def test_idle_timeout(self, contexts):
        summary = serve(contexts[CERTIFICATION], self.router(), idle_timeout=0.05, poll=0.01)
        assert summary.handled == 0

    def test_no_handler_for_registration(self):
        with pytest.raises(UnknownComponent):
            get_handler(REGISTRATION)
