"""Tests of the itp command line"""
import json

import pytest

from itp.cli import run_cli
from itp.cli.config import CONFIG_ENV, find_config, load_config, parse_config
from itp.errors import ConfigError
from itp.routing import TransportKind
from tests.common import DATA, REQUEST_APPLICATION_ID, REQUEST_FIELDS, REQUEST_MESSAGE_ID

REGISTRATION = "Registration"
OPERATOR1 = "CN=Operator1,OU=Trustcenter,O=OrgName,C=DE"
OPERATOR2 = "CN=Operator2,OU=Trustcenter,O=OrgName,C=DE"


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.delenv(CONFIG_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture()
def config(tmp_path):
    path = tmp_path / "itp.yaml"
    path.write_text("keystore: keys/trustcenter.keys\n"
                    "state_dir: state\n"
                    "log_level: WARNING\n", encoding="utf-8")
    return path


def itp(capsys, *argv):
    code = run_cli([str(arg) for arg in argv])
    out, err = capsys.readouterr()
    return code, out, err


def composed(capsys, config, tmp_path, *extra):
    fields = tmp_path / "alice.fields"
    fields.write_text("# Alice\n" + "".join(f"{name}={value}\n" for name, value in REQUEST_FIELDS), encoding="utf-8")
    target = tmp_path / "request.itp.xml"
    code, _, err = itp(capsys, "--config", config, *extra, "compose", fields, "--profile", "MultiCert",
                       "--sender", REGISTRATION, "--application-id", REQUEST_APPLICATION_ID,
                       "--message-id", REQUEST_MESSAGE_ID, "-o", target)
    assert code == 0, err
    return target


class TestConfig:
    def test_relative_paths(self, tmp_path):
        config = parse_config("keystore: keys/k.keys\ntransport: tcp\n", tmp_path)
        assert config.keystore == (tmp_path / "keys" / "k.keys").resolve()
        assert config.transport is TransportKind.TCP
        assert config.state_dir == (tmp_path / "state").resolve()
        assert config.outbox == config.state_dir / "outbox.log"
        assert config.registry is None

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config("keystroke: x\n", tmp_path)

    def test_bad_log_level(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config("log_level: LOUD\n", tmp_path)

    def test_lookup_order(self, tmp_path, config):
        other = tmp_path / "other.yaml"
        assert find_config(str(other), environ={CONFIG_ENV: str(config)}) == other
        assert find_config(None, environ={CONFIG_ENV: str(other)}) == other
        assert find_config(None, environ={}, cwd=tmp_path) == config
        assert find_config(None, environ={}, cwd=tmp_path / "nowhere") is None

    def test_defaults_without_file(self, tmp_path):
        config = load_config(None, environ={}, cwd=tmp_path)
        assert config.keystore is None
        assert config.state_dir == (tmp_path / "state").resolve()

    def test_overrides(self, tmp_path, config):
        loaded = load_config(str(config)).with_overrides(audit_log=tmp_path / "a.log", replay_log=None)
        assert loaded.audit_log == (tmp_path / "a.log").resolve()
        assert loaded.replay_log is None


class TestDocuments:
    def test_inspect(self, capsys):
        code, out, _ = itp(capsys, "inspect", DATA / "request.itp.xml")
        assert code == 0
        assert "<sender>Registration</sender>" in out
        assert out.count("\n") > 10

    def test_validate(self, capsys):
        code, out, _ = itp(capsys, "validate", DATA / "issued.itp.xml")
        assert code == 0
        assert json.loads(out) == {'valid': True, 'violations': []}

    def test_validate_invalid(self, capsys, tmp_path):
        broken = tmp_path / "broken.itp.xml"
        broken.write_bytes((DATA / "request.itp.xml").read_bytes().replace(b'version="1.0"', b'version="2.0"'))
        code, out, _ = itp(capsys, "validate", broken)
        assert code == 1
        assert json.loads(out)['valid'] is False

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = itp(capsys, "inspect", tmp_path / "none.itp.xml")
        assert code == 3
        assert err.startswith("itp:")

    def test_malformed(self, capsys, tmp_path):
        path = tmp_path / "bad.itp.xml"
        path.write_bytes(b"<message")
        code, _, _ = itp(capsys, "inspect", path)
        assert code == 1

    def test_bad_arguments(self, capsys):
        assert itp(capsys, "sign")[0] == 2
        assert itp(capsys, "frobnicate")[0] == 2
        assert itp(capsys)[0] == 2


class TestKeysAndSignatures:
    def test_keygen(self, capsys, config, tmp_path):
        code, out, _ = itp(capsys, "--config", config, "keygen", "--owner", REGISTRATION,
                           "--usage", "operational-signing", "--export-trust", tmp_path / "trust.keys")
        assert code == 0
        record = json.loads(out)
        assert (record['owner'], record['algorithm']) == (REGISTRATION, "ed25519")
        assert record['key_id'] in (tmp_path / "keys" / "trustcenter.keys").read_text(encoding="utf-8")
        trust_lines = (tmp_path / "trust.keys").read_text(encoding="utf-8").splitlines()
        assert trust_lines[-1].rstrip().endswith("|")

    def test_compose_sign_verify(self, capsys, config, tmp_path):
        for owner in (REGISTRATION, OPERATOR1, OPERATOR2):
            code, _, _ = itp(capsys, "--config", config, "keygen", "--owner", owner, "--usage", "operational-signing")
            assert code == 0
        target = composed(capsys, config, tmp_path)
        for signer in (REGISTRATION, OPERATOR1, OPERATOR2):
            assert itp(capsys, "--config", config, "sign", target, "--as", signer)[0] == 0
        code, out, _ = itp(capsys, "--config", config, "verify", target)
        assert code == 0
        report = json.loads(out)
        assert report['overall'] is True
        assert report['authorized'] is True
        assert [v['signer'] for v in report['verdicts']] == [REGISTRATION, OPERATOR1, OPERATOR2]
        [decision] = report['authorization']
        assert (decision['stage'], decision['allowed']) == ("Certification", True)
        assert decision['operators'] == [OPERATOR1, OPERATOR2]

        target.write_bytes(target.read_bytes().replace(b"alice@", b"mallory@"))
        code, out, _ = itp(capsys, "--config", config, "verify", target)
        assert code == 1
        assert json.loads(out)['overall'] is False

    def test_verify_below_operator_quorum(self, capsys, config, tmp_path):
        for owner in (REGISTRATION, OPERATOR1):
            itp(capsys, "--config", config, "keygen", "--owner", owner, "--usage", "operational-signing")
        target = composed(capsys, config, tmp_path)
        for signer in (REGISTRATION, OPERATOR1):
            assert itp(capsys, "--config", config, "sign", target, "--as", signer)[0] == 0
        code, out, _ = itp(capsys, "--config", config, "verify", target)
        assert code == 1
        report = json.loads(out)
        assert report['overall'] is True
        assert report['authorized'] is False
        [decision] = report['authorization']
        assert decision['allowed'] is False
        assert decision['reason'] == "operator quorum 1 < 2"

    def test_verify_outside_the_profile(self, capsys, config, tmp_path):
        itp(capsys, "--config", config, "keygen", "--owner", REGISTRATION, "--usage", "operational-signing")
        target = composed(capsys, config, tmp_path)
        target.write_bytes(target.read_bytes().replace(b"<recipient>Certification</recipient>",
                                                       b"<recipient>Key Backup</recipient>"))
        assert itp(capsys, "--config", config, "sign", target, "--as", REGISTRATION)[0] == 0
        code, out, _ = itp(capsys, "--config", config, "verify", target)
        assert code == 0
        [decision] = json.loads(out)['authorization']
        assert decision['allowed'] is None

    def test_compose_recipient_from_profile(self, capsys, config, tmp_path):
        target = composed(capsys, config, tmp_path)
        assert b"<recipient>Certification</recipient>" in target.read_bytes()

    def test_unknown_signer(self, capsys, config, tmp_path):
        target = composed(capsys, config, tmp_path)
        itp(capsys, "--config", config, "keygen", "--owner", REGISTRATION, "--usage", "operational-signing")
        assert itp(capsys, "--config", config, "sign", target, "--as", "CN=Nobody")[0] == 2

    def test_no_keystore(self, capsys, tmp_path):
        empty = tmp_path / "empty.yaml"
        empty.write_text("log_level: ERROR\n", encoding="utf-8")
        code, _, err = itp(capsys, "--config", empty, "sign", DATA / "request.itp.xml", "--as", REGISTRATION)
        assert code == 2
        assert "keystore" in err

    def test_encrypt_and_decrypt_field(self, capsys, config, tmp_path):
        itp(capsys, "--config", config, "keygen", "--owner", "Certification", "--usage", "encryption")
        target = composed(capsys, config, tmp_path)
        assert itp(capsys, "--config", config, "encrypt-field", target, "--field", "revocationPassword",
                   "--to", "Certification")[0] == 0
        assert b"8941c" not in target.read_bytes()
        assert itp(capsys, "--config", config, "decrypt-field", target, "--field", "revocationPassword",
                   "--as", "Certification")[0] == 0
        assert b"<revocationPassword>7c4a8 ... 8941c</revocationPassword>" in target.read_bytes()


class TestTrace:
    def test_compose_is_audited(self, capsys, config, tmp_path):
        log = tmp_path / "registration.log"
        composed(capsys, config, tmp_path, "--audit-log", log)
        code, out, _ = itp(capsys, "--config", config, "trace", REQUEST_APPLICATION_ID, "--audit", log)
        assert code == 0
        events = json.loads(out)
        assert [(e['component'], e['kind']) for e in events] == [(REGISTRATION, "processed")]

    def test_unknown_identifier(self, capsys, config, tmp_path):
        log = tmp_path / "registration.log"
        composed(capsys, config, tmp_path, "--audit-log", log)
        code, out, _ = itp(capsys, "--config", config, "trace", "20990101000000", "--audit", log)
        assert (code, json.loads(out)) == (0, [])

    def test_no_audit_logs(self, capsys, config):
        assert itp(capsys, "--config", config, "trace", REQUEST_APPLICATION_ID)[0] == 2
