"""The MultiCert profile: Registration -> Certification -> Directory Services.

One request yields three certificates (encryption, signature, non-repudiation)
under the virtual CA named in ``clientName``."""
from itp.profiles.spec import ProfileRegistry, ProfileSpec, StageSpec
from itp.security import AuthorizationPolicy

MULTICERT = "MultiCert"

REGISTRATION = "Registration"
CERTIFICATION = "Certification"
DIRECTORY = "Directory Services"

OPERATORS = ("CN=Operator1,OU=Trustcenter,O=OrgName,C=DE",
             "CN=Operator2,OU=Trustcenter,O=OrgName,C=DE",
             "CN=Operator3,OU=Trustcenter,O=OrgName,C=DE")

INTAKE_FIELDS = ("clientName", "subjectDN", "revocationPassword", "email", "publiclyAvailable")
CERTIFICATE_FIELDS = ("encCertificate", "signCertificate", "nonRepCertificate")

#: certificate field -> key usage written into the certificate
CERTIFICATE_USAGES = {'encCertificate': "encryption",
                      'signCertificate': "signature",
                      'nonRepCertificate': "non-repudiation"}


def multicert_spec(operators=OPERATORS, operator_count: int = 2) -> ProfileSpec:
    return ProfileSpec(MULTICERT, (
        StageSpec(component=REGISTRATION, produced=frozenset(INTAKE_FIELDS), next=CERTIFICATION),
        StageSpec(component=CERTIFICATION,
                  required=frozenset(INTAKE_FIELDS),
                  consumed=frozenset({"subjectDN"}),
                  produced=frozenset(CERTIFICATE_FIELDS),
                  authorization=AuthorizationPolicy(MULTICERT, CERTIFICATION,
                                                    required_component_signers=(REGISTRATION,),
                                                    required_operator_count=operator_count,
                                                    eligible_operators=frozenset(operators)),
                  next=DIRECTORY),
        StageSpec(component=DIRECTORY,
                  required=frozenset(CERTIFICATE_FIELDS + ("email", "publiclyAvailable")),
                  authorization=AuthorizationPolicy(MULTICERT, DIRECTORY,
                                                    required_component_signers=(CERTIFICATION,))),
    ))


def builtin_profiles() -> ProfileRegistry:
    registry = ProfileRegistry()
    registry.register_profile(multicert_spec())
    return registry
