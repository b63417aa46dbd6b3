import pathlib
import random
import string
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

from itp.components import (ALICE, AuditLog, ComponentContext, Outbox, PublicationStore, VirtualCAs, operator_sign,
                            registration_process, scenario_keystore)
from itp.model import ALL, Application, Message, build_message, generate_id, new_application
from itp.profiles import CERTIFICATION, DIRECTORY, OPERATORS, REGISTRATION, builtin_profiles
from itp.routing import ReplayStore
from itp.security import Keystore, TrustStore, sign
from itp.store import StoreTable, connect

DATA = pathlib.Path(__file__).parent / "data"

REQUEST_MESSAGE_ID = "20040202164445"
ISSUED_MESSAGE_ID = "20040202170134"
REQUEST_APPLICATION_ID = "20040202164832"
REQUEST_FIELDS = (("clientName", "Host A"),
               ("subjectDN", "CN=Alice,OU=OrgUnitName,O=OrgName,C=DE"),
               ("revocationPassword", "7c4a8 ... 8941c"),
               ("email", "alice@orgunitname.orgname.de"),
               ("publiclyAvailable", "true"))

# values that need escaping or sit at the edges of what XML text can carry
AWKWARD_VALUES = ("", " ", "a < b", "x & y", "\"quoted\"", "it's", "tab\there", "line\nbreak", "Grüße", "日本語",
                  "]]>", "emoji \U0001F512")


def random_number(size=3, rng=random):
    return ''.join(rng.choice(string.digits) for count in range(size))


def random_name(size=5, chars=string.ascii_lowercase, rng=random):
    half_of = int(size / 2)
    first_part = ''.join(rng.choice(chars) for count in range(half_of))
    last_part = ''.join(rng.choice(chars) for count in range(half_of))
    first_name = first_part + rng.choice('aeiou') + last_part
    return first_name.capitalize()


def field_name_generator(rng=random) -> str:
    """Returns a valid element name such as 'Kabod7'."""
    return random_name(rng.choice((3, 5, 7)), rng=rng) + random_number(rng.choice((0, 1, 2)), rng=rng)


def field_value_generator(rng=random) -> str:
    if rng.random() < 0.2:
        return rng.choice(AWKWARD_VALUES)
    return " ".join(random_name(rng.choice((3, 5, 7)), rng=rng) for _ in range(rng.choice((1, 2, 3))))


def identifier_generator(rng=random) -> str:
    moment = datetime(2004, 2, 2, tzinfo=timezone.utc).replace(hour=rng.randrange(24), minute=rng.randrange(60))
    return generate_id(moment, rng.getrandbits(24).to_bytes(3, "big"))


def application_generator(rng=random, field_count: Optional[int] = None) -> Application:
    """Returns an unsigned application with distinct, randomly named fields."""
    count = field_count if field_count is not None else rng.choice((1, 2, 3, 5, 8))
    names = []
    while len(names) < count:
        name = field_name_generator(rng)
        if name not in names:
            names.append(name)
    return new_application(identifier_generator(rng), rng.choice(("MultiCert", "Revoke", random_name(6, rng=rng))),
                           [(name, field_value_generator(rng)) for name in names])


def message_generator(rng=random, app_count: Optional[int] = None) -> Message:
    count = app_count if app_count is not None else rng.choice((1, 1, 2, 3))
    apps = {}
    while len(apps) < count:
        app = application_generator(rng)
        apps[app.id] = app
    sender, recipient = rng.sample((REGISTRATION, CERTIFICATION, DIRECTORY, "Key Backup"), 2)
    return build_message(sender, recipient, list(apps.values()), identifier_generator(rng))


def request_application(fields=REQUEST_FIELDS) -> Application:
    return new_application(REQUEST_APPLICATION_ID, "MultiCert", fields)


def trustcenter_keystore() -> Keystore:
    """Registration, Certification, three operators and the Host A virtual CA."""
    return scenario_keystore()


def signed_request(keystore: Keystore, operators: Tuple[str, ...] = OPERATORS[:2],
                message_id: str = REQUEST_MESSAGE_ID, app: Optional[Application] = None) -> Message:
    """The Registration request of Alice signed by Registration and ``operators``."""
    app = sign(app or request_application(), ALL, keystore.find(REGISTRATION), REGISTRATION)
    msg = build_message(REGISTRATION, CERTIFICATION, [app], message_id)
    for operator in operators:
        msg = operator_sign(msg, keystore.find(operator), operator)
    return msg


def component_contexts(keystore: Keystore, folder: Optional[pathlib.Path] = None) -> Dict[str, ComponentContext]:
    """Contexts of the three MultiCert components sharing one in-memory replay store.

    With ``folder`` the audit logs, outbox and publication store are written there."""
    trust = TrustStore.from_keystore(keystore)
    profiles = builtin_profiles()
    replay = ReplayStore()
    ledger = StoreTable(connect(), 'issued_certificate')

    def audit(name):
        return AuditLog(folder / f"{name.lower().replace(' ', '-')}.log" if folder else None)

    return {
        REGISTRATION: ComponentContext(REGISTRATION, keystore.find(REGISTRATION), trust, profiles, replay,
                                       audit(REGISTRATION)),
        CERTIFICATION: ComponentContext(CERTIFICATION, keystore.find(CERTIFICATION), trust, profiles, replay,
                                        audit(CERTIFICATION), virtual_cas=VirtualCAs.from_keystore(keystore, ledger)),
        DIRECTORY: ComponentContext(DIRECTORY, None, trust, profiles, replay, audit(DIRECTORY),
                                    publication=PublicationStore(folder / "publication") if folder else None,
                                    outbox=Outbox(folder / "outbox.log" if folder else None)),
    }


def registered_alice(contexts: Dict[str, ComponentContext], keystore: Keystore,
                     operators: Tuple[str, ...] = OPERATORS[:2]) -> Message:
    msg = registration_process(ALICE, contexts[REGISTRATION], application_id=REQUEST_APPLICATION_ID,
                               message_id=REQUEST_MESSAGE_ID)
    for operator in operators:
        msg = operator_sign(msg, keystore.find(operator), operator)
    return msg


def flip_byte(data: bytes, index: int) -> bytes:
    changed = bytearray(data)
    changed[index] ^= 0x01
    return bytes(changed)


def field_names_of(msg: Message) -> List[str]:
    return [f.name for f in msg.applications[0].fields]
