"""The ``itp`` command.

Exit statuses: 0 success, 1 validation or verification failure, 2 usage or
configuration error, 3 I/O or transport failure. Machine-readable output goes
to stdout, diagnostics to stderr."""
import argparse
import json
import logging
import os
import pathlib
import sys
from typing import List, Optional

from itp.cli.config import CliConfig, load_config
from itp.codec import parse, pretty_print, serialize, validate
from itp.components import (AuditLog, ComponentContext, EventKind, Outbox, PublicationStore, VirtualCAs, audit_trace,
                            run_multicert_scenario, serve)
from itp.components.scenario import slug
from itp.errors import (ConfigError, DuplicateComponentName, InvalidDocument, ItpError, KeystoreError, ProfileError,
                        StorePersistenceFailure, TransportFailure, UnknownComponent, UnknownKey, UnsupportedAlgorithm)
from itp.model import ALL, Message, build_message, new_application, new_id, replace_application
from itp.profiles import builtin_profiles, load_profiles, next_hop
from itp.routing import ComponentRegistry, ReplayStore, Router, load_registry
from itp.routing.transports import default_transports
from itp.security import (DEFAULT_ENCRYPTION, DEFAULT_SIGNATURE, ENCRYPTION_SCHEMES, SIGNATURE_SCHEMES, Keystore,
                          KeyUsage, TrustStore, authorize, decrypt_field, encrypt_field, keygen, sign, sign_message,
                          verify)
from itp.store import StoreTable, connect

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_IO = 3

USAGE_ERRORS = (ConfigError, ProfileError, KeystoreError, UnknownKey, UnknownComponent, DuplicateComponentName,
                UnsupportedAlgorithm)
IO_ERRORS = (TransportFailure, StorePersistenceFailure, OSError)


class CliUsageError(ItpError):
    pass


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def _emit_document(data: bytes):
    sys.stdout.write(data.decode("utf-8"))
    if not data.endswith(b"\n"):
        sys.stdout.write("\n")


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return pathlib.Path(path).read_bytes()


def _read_message(path: str) -> Message:
    return parse(_read_bytes(path))


def _write_document(msg: Message, output: Optional[str], default: Optional[str] = None):
    """Writes to ``output``, else in place over ``default``, else to stdout."""
    data = serialize(msg)
    target = output or (default if default != "-" else None)
    if target is None or target == "-":
        _emit_document(data)
        return
    path = pathlib.Path(target)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    logger.info("wrote %s (%d bytes)", path, len(data))


def _keystore(args, config: CliConfig, missing_ok: bool = False) -> Keystore:
    path = getattr(args, 'keystore', None) or config.keystore
    if path is None:
        raise ConfigError("no keystore configured; pass --keystore or set keystore in itp.yaml")
    return Keystore.load(pathlib.Path(path), missing_ok=missing_ok)


def _trust(args, config: CliConfig) -> TrustStore:
    path = getattr(args, 'trust', None) or config.keystore
    if path is None:
        raise ConfigError("no trust store configured; pass --trust or set keystore in itp.yaml")
    return TrustStore.from_keystore(Keystore.load(pathlib.Path(path)))


def _profiles(config: CliConfig):
    return load_profiles(config.profiles) if config.profiles is not None else builtin_profiles()


def _registry(config: CliConfig) -> ComponentRegistry:
    return load_registry(config.registry) if config.registry is not None else ComponentRegistry()


def _audit_log(config: CliConfig, component: Optional[str] = None) -> Optional[AuditLog]:
    if config.audit_log is not None:
        return AuditLog(config.audit_log)
    if component is not None:
        return AuditLog(config.state_dir / "audit" / f"{slug(component)}.log")
    return None


def _selected(msg: Message, application_id: Optional[str]):
    apps = [app for app in msg.applications if application_id is None or app.id == application_id]
    if not apps:
        raise CliUsageError(f"message {msg.id} has no application {application_id}")
    return apps


# subcommands

def cmd_keygen(args, config: CliConfig) -> int:
    keystore = _keystore(args, config, missing_ok=True)
    algorithm = args.algorithm
    if algorithm is None:
        algorithm = DEFAULT_ENCRYPTION if args.usage == KeyUsage.ENCRYPTION.value else DEFAULT_SIGNATURE
    record = keystore.add(keygen(algorithm, args.owner, args.usage))
    keystore.save(pathlib.Path(args.keystore or config.keystore))
    if args.export_trust:
        path = pathlib.Path(args.export_trust)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(Keystore(r.public_only() for r in keystore).dumps(), encoding="utf-8")
    _emit({'key_id': record.key_id, 'algorithm': record.algorithm, 'usage': record.usage.value,
           'owner': record.owner_dn})
    return EXIT_OK


def read_field_file(path: pathlib.Path):
    """``name=value`` lines; blank lines and ``#`` comments are skipped."""
    fields = []
    for ix, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise CliUsageError(f"{path}:{ix + 1}: expected name=value")
        fields.append((name.strip(), value))
    return fields


def cmd_compose(args, config: CliConfig) -> int:
    profiles = _profiles(config)
    recipient = args.recipient or next_hop(profiles.lookup(args.profile), args.sender)
    if recipient is None:
        raise CliUsageError(f"{args.sender} is the last stage of {args.profile}; pass --recipient")
    app = new_application(args.application_id or new_id(), args.profile, read_field_file(pathlib.Path(args.fields)))
    msg = build_message(args.sender, recipient, [app], args.message_id)
    audit = _audit_log(config)
    if audit is not None:
        audit.append(args.sender, EventKind.PROCESSED, message_id=msg.id, application_id=app.id,
                     detail=f"composed for {recipient}")
    _write_document(msg, args.output)
    return EXIT_OK


def cmd_sign(args, config: CliConfig) -> int:
    keystore = _keystore(args, config)
    key = keystore.find(args.signer)
    msg = _read_message(args.file)
    if args.message:
        msg = sign_message(msg, key, args.signer)
    else:
        scope = ALL if not args.fields else [name.strip() for name in args.fields.split(",") if name.strip()]
        for app in _selected(msg, args.application):
            msg = replace_application(msg, sign(app, scope, key, args.signer))
    _write_document(msg, args.output, default=args.file)
    return EXIT_OK


def _authorizations(msg: Message, report, config: CliConfig) -> List[dict]:
    """The recipient stage's policy applied to every application. ``allowed`` is
    None when the recipient is not a stage of the application's profile."""
    profiles = _profiles(config)
    decisions = []
    for app in msg.applications:
        entry = {'application': app.id, 'stage': msg.recipient}
        try:
            policy = profiles.lookup(app.profile_id).policy(msg.recipient)
        except ProfileError as err:
            decisions.append(dict(entry, allowed=None, reason=str(err), operators=[]))
            continue
        decision = authorize(app, policy, report)
        decisions.append(dict(entry, allowed=decision.allowed, reason=decision.reason,
                              operators=list(decision.operators)))
    return decisions


def cmd_verify(args, config: CliConfig) -> int:
    msg = _read_message(args.file)
    report = verify(msg, _trust(args, config))
    decisions = _authorizations(msg, report, config)
    authorized = all(d['allowed'] is not False for d in decisions)
    _emit(dict(report.to_dict(), authorization=decisions, authorized=authorized))
    return EXIT_OK if report.overall and authorized else EXIT_INVALID


def cmd_encrypt_field(args, config: CliConfig) -> int:
    trust = _trust(args, config)
    recipients = [r for r in trust.by_owner(args.to) if r.usage is KeyUsage.ENCRYPTION]
    if not recipients:
        raise UnknownKey(f"no encryption key for {args.to!r}")
    msg = _read_message(args.file)
    for app in _selected(msg, args.application):
        msg = replace_application(msg, encrypt_field(app, args.field, recipients[0]))
    _write_document(msg, args.output, default=args.file)
    return EXIT_OK


def cmd_decrypt_field(args, config: CliConfig) -> int:
    key = _keystore(args, config).find(args.holder, KeyUsage.ENCRYPTION)
    msg = _read_message(args.file)
    for app in _selected(msg, args.application):
        msg = replace_application(msg, decrypt_field(app, args.field, key))
    _write_document(msg, args.output, default=args.file)
    return EXIT_OK


def cmd_send(args, config: CliConfig) -> int:
    msg = _read_message(args.file)
    router = Router(_registry(config), default_transports())
    try:
        receipt = router.send(msg)
    finally:
        router.close()
    audit = _audit_log(config)
    if audit is not None:
        for app in msg.applications:
            audit.append(msg.sender, EventKind.FORWARDED, message_id=msg.id, application_id=app.id,
                         actor_dns=sorted({block.signer_dn for block in app.signatures} - {msg.sender}),
                         detail=f"to {msg.recipient}")
    _emit({'message_id': receipt.message_id, 'recipient': receipt.recipient,
           'transport': receipt.transport.value, 'delivered_at': receipt.delivered_at.isoformat()})
    return EXIT_OK


def cmd_receive(args, config: CliConfig) -> int:
    router = Router(_registry(config), default_transports())
    try:
        msg = router.receive(args.component, timeout=args.timeout)
    finally:
        router.close()
    if msg is None:
        raise TransportFailure(f"nothing arrived for {args.component} within {args.timeout}s")
    _write_document(msg, args.output)
    return EXIT_OK


def cmd_inspect(args, config: CliConfig) -> int:
    _emit_document(pretty_print(_read_message(args.file)))
    return EXIT_OK


def cmd_validate(args, config: CliConfig) -> int:
    try:
        msg = _read_message(args.file)
    except InvalidDocument as err:
        violations = [str(v) for v in err.violations]
    else:
        violations = [str(v) for v in validate(msg)]
    _emit({'valid': not violations, 'violations': violations})
    return EXIT_OK if not violations else EXIT_INVALID


def cmd_trace(args, config: CliConfig) -> int:
    paths = args.audit or ([config.audit_log] if config.audit_log is not None else [])
    if not paths:
        paths = sorted((config.state_dir / "audit").glob("*.log"))
    if not paths:
        raise ConfigError("no audit log given; pass --audit")
    logs = [AuditLog(pathlib.Path(path)) for path in paths]
    _emit([event.to_dict() for event in audit_trace(args.identifier, *logs)])
    return EXIT_OK


def cmd_run_component(args, config: CliConfig) -> int:
    registry = _registry(config)
    entry = registry.resolve(args.name)
    keystore = _keystore(args, config)
    if entry.signing_key_id:
        signing_key = keystore.require(entry.signing_key_id)
    elif keystore.by_owner(args.name):
        signing_key = keystore.find(args.name)
    else:
        signing_key = None
    replay_log = config.replay_log or config.state_dir / f"replay-{slug(args.name)}.log"
    ledger = StoreTable(connect("sqlite://certificates.sqlite", folder=config.certificates), 'issued_certificate')
    ctx = ComponentContext(name=args.name, signing_key=signing_key, trust=TrustStore.from_keystore(keystore),
                           profiles=_profiles(config), replay=ReplayStore(replay_log),
                           audit=_audit_log(config, args.name),
                           virtual_cas=VirtualCAs.from_keystore(keystore, ledger),
                           publication=PublicationStore(config.publication), outbox=Outbox(config.outbox))
    router = Router(registry, default_transports())
    try:
        router.listen(args.name)
        summary = serve(ctx, router, max_messages=args.max_messages, idle_timeout=args.idle_timeout)
    except KeyboardInterrupt:
        logger.info("%s interrupted", args.name)
        return EXIT_OK
    finally:
        router.close()
    _emit({'component': args.name, 'processed': summary.processed, 'rejected': summary.rejected,
           'forwarded': [out.id for out in summary.forwarded]})
    return EXIT_OK if summary.rejected == 0 else EXIT_INVALID


def cmd_run_scenario(args, config: CliConfig) -> int:
    workdir = pathlib.Path(args.workdir) if args.workdir else config.state_dir / "scenario"
    result = run_multicert_scenario(workdir)
    _emit(result.to_dict())
    ok = result.chain_intact and result.issued == 3 and len(result.operators) >= 2
    return EXIT_OK if ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itp", description="Intra-trustcenter protocol tools")
    parser.add_argument('--config', help="configuration file (default: $ITP_CONFIG, then ./itp.yaml)")
    parser.add_argument('-v', '--verbose', action='count', default=0, help="more diagnostics on stderr")
    parser.add_argument('--replay-log', help="replay log of this process")
    parser.add_argument('--audit-log', help="audit log of this process")
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('keygen', help="generate a key pair into the keystore")
    p.add_argument('--owner', required=True, help="owner subject DN or component name")
    p.add_argument('--usage', required=True, choices=[usage.value for usage in KeyUsage])
    p.add_argument('--algorithm', help="default: ed25519, or x25519-aes256gcm for encryption keys",
                   choices=sorted(set(SIGNATURE_SCHEMES) | set(ENCRYPTION_SCHEMES)))
    p.add_argument('--keystore')
    p.add_argument('--export-trust', help="also write the public records to this trust store file")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser('compose', help="build a message from a name=value field file")
    p.add_argument('fields', help="field file")
    p.add_argument('--profile', required=True)
    p.add_argument('--sender', required=True)
    p.add_argument('--recipient', help="default: the profile's next stage after the sender")
    p.add_argument('--application-id')
    p.add_argument('--message-id')
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser('sign', help="add a signature to a message file")
    p.add_argument('file')
    p.add_argument('--as', dest='signer', required=True, help="signer subject DN")
    p.add_argument('--fields', help="comma separated field scope (default: the whole application)")
    p.add_argument('--message', action='store_true', help="sign the message instead of its applications")
    p.add_argument('--application', help="only this application id")
    p.add_argument('--keystore')
    p.add_argument('-o', '--output', help="default: rewrite the input file")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser('verify', help="verify every signature of a message file")
    p.add_argument('file')
    p.add_argument('--trust')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('encrypt-field', help="encrypt one field for a recipient")
    p.add_argument('file')
    p.add_argument('--field', required=True)
    p.add_argument('--to', required=True, help="recipient subject DN")
    p.add_argument('--trust')
    p.add_argument('--application')
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_encrypt_field)

    p = sub.add_parser('decrypt-field', help="decrypt one field with a private key")
    p.add_argument('file')
    p.add_argument('--field', required=True)
    p.add_argument('--as', dest='holder', required=True, help="key holder subject DN")
    p.add_argument('--keystore')
    p.add_argument('--application')
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_decrypt_field)

    p = sub.add_parser('send', help="deliver a message file to its recipient")
    p.add_argument('file')
    p.set_defaults(func=cmd_send)

    p = sub.add_parser('receive', help="take the next message of a component's inbox")
    p.add_argument('component')
    p.add_argument('--timeout', type=float, default=0.0)
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_receive)

    p = sub.add_parser('inspect', help="pretty-print a message")
    p.add_argument('file')
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser('validate', help="check a message against the ITP grammar")
    p.add_argument('file')
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('trace', help="audit events of a message or application id")
    p.add_argument('identifier')
    p.add_argument('--audit', action='append', help="audit log file; repeatable")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser('run-component', help="process a component's inbound messages")
    p.add_argument('name')
    p.add_argument('--keystore')
    p.add_argument('--max-messages', type=int)
    p.add_argument('--idle-timeout', type=float)
    p.set_defaults(func=cmd_run_component)

    p = sub.add_parser('run-scenario', help="run a built-in scenario end to end")
    p.add_argument('scenario', choices=['multicert'])
    p.add_argument('--workdir', help="default: <state_dir>/scenario")
    p.set_defaults(func=cmd_run_scenario)
    return parser


def _configure_logging(level: str, verbose: int):
    if verbose:
        level = "DEBUG"
    logging.basicConfig(level=getattr(logging, level, logging.INFO), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else EXIT_USAGE
    try:
        config = load_config(args.config).with_overrides(replay_log=args.replay_log, audit_log=args.audit_log)
        _configure_logging(config.log_level, args.verbose)
        return args.func(args, config)
    except IO_ERRORS as err:
        sys.stderr.write(f"itp: {err}\n")
        return EXIT_IO
    except (CliUsageError,) + USAGE_ERRORS as err:
        sys.stderr.write(f"itp: {err}\n")
        return EXIT_USAGE
    except ItpError as err:
        sys.stderr.write(f"itp: {type(err).__name__}: {err}\n")
        return EXIT_INVALID


def main() -> int:
    return run_cli(sys.argv[1:])
