"""Reads the declarative profile configuration document.

::

    <profiles>
      <profileSpec id="MultiCert">
        <stage component="Certification" next="Directory Services">
          <requires>subjectDN</requires>
          <consumes>subjectDN</consumes>
          <produces>encCertificate</produces>
          <authorization operators="2">
            <componentSigner>Registration</componentSigner>
            <operator>CN=Operator1,OU=Trustcenter,O=OrgName,C=DE</operator>
          </authorization>
        </stage>
        ...
"""
import logging
import pathlib
from typing import Union

from lxml import etree

from itp.errors import ProfileConfigError
from itp.profiles.spec import ProfileRegistry, ProfileSpec, StageSpec
from itp.security import AuthorizationPolicy

logger = logging.getLogger(__name__)

FIELD_LISTS = {'requires': 'required', 'consumes': 'consumed', 'produces': 'produced'}


def _text(element) -> str:
    return (element.text or "").strip()


def _authorization(element, profile_id: str, component: str) -> AuthorizationPolicy:
    count = element.get("operators", "0")
    if not count.isdigit():
        raise ProfileConfigError(f"{profile_id}/{component}: operators={count!r} is not a count")
    signers, operators = [], []
    for child in element:
        if child.tag == "componentSigner":
            signers.append(_text(child))
        elif child.tag == "operator":
            operators.append(_text(child))
        elif isinstance(child.tag, str):
            raise ProfileConfigError(f"{profile_id}/{component}: unexpected <{child.tag}> in authorization")
    return AuthorizationPolicy(profile_id=profile_id, stage=component, required_component_signers=tuple(signers),
                               required_operator_count=int(count), eligible_operators=frozenset(operators))


def _stage(element, profile_id: str) -> StageSpec:
    component = element.get("component")
    if element.tag != "stage":
        raise ProfileConfigError(f"{profile_id}: unexpected <{element.tag}>, expected <stage>")
    if not component:
        raise ProfileConfigError(f"{profile_id}: stage without component")
    lists = {name: set() for name in FIELD_LISTS.values()}
    authorization = None
    for child in element:
        if not isinstance(child.tag, str):
            continue
        if child.tag in FIELD_LISTS:
            lists[FIELD_LISTS[child.tag]].add(_text(child))
        elif child.tag == "authorization":
            authorization = _authorization(child, profile_id, component)
        else:
            raise ProfileConfigError(f"{profile_id}/{component}: unexpected <{child.tag}>")
    return StageSpec(component=component, authorization=authorization, next=element.get("next") or None, **lists)


def parse_profiles(data: Union[bytes, str]) -> ProfileRegistry:
    if isinstance(data, str):
        data = data.encode("utf-8")
    parser = etree.XMLParser(resolve_entities=False, no_network=True, remove_comments=True)
    try:
        root = etree.fromstring(data, parser=parser)
    except etree.XMLSyntaxError as err:
        raise ProfileConfigError(f"profile configuration is not well-formed: {err}") from err
    if root.tag != "profiles":
        raise ProfileConfigError(f"profile configuration root is <{root.tag}>, not <profiles>")
    registry = ProfileRegistry()
    for element in root:
        if not isinstance(element.tag, str):
            continue
        if element.tag != "profileSpec" or not element.get("id"):
            raise ProfileConfigError(f"expected <profileSpec id=...>, found <{element.tag}>")
        profile_id = element.get("id")
        stages = [_stage(child, profile_id) for child in element if isinstance(child.tag, str)]
        registry.register_profile(ProfileSpec(profile_id, tuple(stages)))
    return registry


def load_profiles(path: pathlib.Path) -> ProfileRegistry:
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as err:
        raise ProfileConfigError(f"cannot read profile configuration {path}: {err}") from err
    registry = parse_profiles(data)
    logger.info("loaded %d profiles from %s", len(registry), path)
    return registry
