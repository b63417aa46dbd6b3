"""Tests of profile specifications and their configuration document"""
import pathlib

import pytest

from itp.errors import DuplicateProfileId, InconsistentSpec, ProfileConfigError, StageNotFound, UnknownProfile
from itp.model import remove_field, set_field
from itp.profiles import (CERTIFICATE_FIELDS, CERTIFICATION, DIRECTORY, INTAKE_FIELDS, MULTICERT, REGISTRATION,
                          ProfileRegistry, ProfileSpec, StageSpec, builtin_profiles, check_spec, load_profiles,
                          multicert_spec, next_hop, parse_profiles, stage_inputs, validate_stage)
from tests.common import request_application

PROFILES = pathlib.Path(__file__).parent.parent / "profiles.xml"


class TestMultiCert:
    def test_order(self):
        spec = builtin_profiles().lookup(MULTICERT)
        assert spec.components == [REGISTRATION, CERTIFICATION, DIRECTORY]
        assert next_hop(spec, REGISTRATION) == CERTIFICATION
        assert next_hop(spec, CERTIFICATION) == DIRECTORY
        assert next_hop(spec, DIRECTORY) is None

    def test_stage_inputs(self):
        inputs = stage_inputs(multicert_spec())
        assert inputs[CERTIFICATION] == frozenset(INTAKE_FIELDS)
        assert inputs[DIRECTORY] == frozenset(INTAKE_FIELDS) - {"subjectDN"} | frozenset(CERTIFICATE_FIELDS)

    def test_configuration_document_matches_builtin(self):
        loaded = load_profiles(PROFILES)
        assert loaded.lookup(MULTICERT) == builtin_profiles().lookup(MULTICERT)

    def test_unknown_profile(self):
        with pytest.raises(UnknownProfile):
            builtin_profiles().lookup("Revoke")

    def test_unknown_stage(self):
        with pytest.raises(StageNotFound):
            multicert_spec().stage("Key Backup")

    def test_duplicate_profile(self):
        registry = builtin_profiles()
        with pytest.raises(DuplicateProfileId):
            registry.register_profile(multicert_spec())


class TestValidateStage:
    def test_request_enters_certification(self):
        assert validate_stage(request_application(), multicert_spec(), CERTIFICATION) == []

    def test_missing_field(self):
        app = remove_field(request_application(), "email")
        assert validate_stage(app, multicert_spec(), CERTIFICATION) == ["email missing"]

    def test_request_cannot_enter_directory(self):
        violations = validate_stage(request_application(), multicert_spec(), DIRECTORY)
        assert violations == [f"{name} missing" for name in sorted(CERTIFICATE_FIELDS)]

    def test_extra_fields_are_fine(self):
        app = set_field(request_application(), "comment", "urgent")
        assert validate_stage(app, multicert_spec(), CERTIFICATION) == []

    def test_wrong_profile(self):
        app = request_application()
        spec = ProfileSpec("Revoke", (StageSpec(CERTIFICATION),))
        assert validate_stage(app, spec, CERTIFICATION) == ["profile MultiCert is not Revoke"]


class TestCheckSpec:
    def test_consumes_unseen_field(self):
        spec = ProfileSpec("Revoke", (StageSpec(REGISTRATION, produced={"serial"}, next=CERTIFICATION),
                                      StageSpec(CERTIFICATION, required={"serial"}, consumed={"reason"})))
        with pytest.raises(InconsistentSpec):
            check_spec(spec)

    def test_requires_unproduced_field(self):
        spec = ProfileSpec("Revoke", (StageSpec(REGISTRATION, produced={"serial"}, next=CERTIFICATION),
                                      StageSpec(CERTIFICATION, required={"serial", "reason"})))
        with pytest.raises(InconsistentSpec):
            check_spec(spec)

    def test_requires_consumed_field(self):
        spec = ProfileSpec("Revoke", (
            StageSpec(REGISTRATION, produced={"serial"}, next=CERTIFICATION),
            StageSpec(CERTIFICATION, required={"serial"}, consumed={"serial"}, next=DIRECTORY),
            StageSpec(DIRECTORY, required={"serial"})))
        with pytest.raises(InconsistentSpec):
            check_spec(spec)

    def test_cycle(self):
        spec = ProfileSpec("Loop", (StageSpec(REGISTRATION, next=CERTIFICATION),
                                    StageSpec(CERTIFICATION, next=REGISTRATION)))
        with pytest.raises(InconsistentSpec):
            check_spec(spec)

    def test_unreachable_stage(self):
        spec = ProfileSpec("Orphan", (StageSpec(REGISTRATION), StageSpec(CERTIFICATION)))
        with pytest.raises(InconsistentSpec):
            check_spec(spec)

    def test_next_is_unknown(self):
        spec = ProfileSpec("Dangling", (StageSpec(REGISTRATION, next="Key Backup"),))
        with pytest.raises(InconsistentSpec):
            check_spec(spec)

    def test_no_stages(self):
        with pytest.raises(InconsistentSpec):
            check_spec(ProfileSpec("Empty", ()))

    def test_registering_checks(self):
        with pytest.raises(InconsistentSpec):
            ProfileRegistry().register_profile(ProfileSpec("Empty", ()))


class TestConfigurationDocument:
    def test_not_well_formed(self):
        with pytest.raises(ProfileConfigError):
            parse_profiles(b"<profiles><profileSpec id='x'>")

    def test_wrong_root(self):
        with pytest.raises(ProfileConfigError):
            parse_profiles(b"<profile/>")

    def test_unexpected_element(self):
        with pytest.raises(ProfileConfigError):
            parse_profiles(b"<profiles><profileSpec id='R'><stage component='Registration'><skip/></stage>"
                           b"</profileSpec></profiles>")

    def test_operator_count(self):
        with pytest.raises(ProfileConfigError):
            parse_profiles(b"<profiles><profileSpec id='R'><stage component='Registration'>"
                           b"<authorization operators='two'/></stage></profileSpec></profiles>")

    def test_unreachable_quorum(self):
        with pytest.raises(InconsistentSpec):
            parse_profiles(b"<profiles><profileSpec id='R'><stage component='Registration'>"
                           b"<authorization operators='1'/></stage></profileSpec></profiles>")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProfileConfigError):
            load_profiles(tmp_path / "profiles.xml")

    def test_single_stage_profile(self):
        registry = parse_profiles("<profiles><profileSpec id='Revoke'><stage component='Certification'>"
                                  "<requires>serial</requires></stage></profileSpec></profiles>")
        assert registry.lookup("Revoke").components == [CERTIFICATION]
