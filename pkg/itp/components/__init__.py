from .audit import GENESIS, AuditEvent, AuditLog, EventKind, audit_append, audit_trace, chain, load_logs
from .certificates import (FORMAT_ID, CertificateBlob, CertificateInfo, VirtualCA, VirtualCAs, issue_certificate,
                           verify_certificate)
from .publication import Notification, Outbox, PublicationRecord, PublicationStore
from .handlers import COMPONENT_HANDLERS, ComponentContext, component_handler, get_handler
from .registration import Intake, accept_all, hash_revocation_password, operator_sign, registration_process
from .certification import certification_process
from .directory import directory_process
from .runner import ServeSummary, serve
from .scenario import ALICE, HOST_A, ScenarioResult, run_multicert_scenario, scenario_keystore
