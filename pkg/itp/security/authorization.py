"""Dual/multi control: who has to have signed an application before a stage may act on it."""
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, Tuple

from itp.errors import InconsistentSpec
from itp.model import Application
from itp.security.signatures import VerificationReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AuthorizationPolicy:
    profile_id: str
    stage: str
    required_component_signers: Tuple[str, ...] = ()
    required_operator_count: int = 0
    eligible_operators: FrozenSet[str] = field(default=frozenset())

    def __post_init__(self):
        object.__setattr__(self, 'required_component_signers', tuple(self.required_component_signers))
        object.__setattr__(self, 'eligible_operators', frozenset(self.eligible_operators))
        if self.required_operator_count < 0:
            raise InconsistentSpec(f"{self.profile_id}/{self.stage}: negative operator count")
        if self.required_operator_count > len(self.eligible_operators):
            raise InconsistentSpec(f"{self.profile_id}/{self.stage}: {self.required_operator_count} operators "
                                   f"required but only {len(self.eligible_operators)} eligible")


@dataclass(frozen=True)
class AuthorizationDecision:
    allowed: bool
    reason: str = ""
    operators: Tuple[str, ...] = ()

    def __bool__(self):
        return self.allowed


def authorize(app: Application, policy: AuthorizationPolicy, report: VerificationReport) -> AuthorizationDecision:
    """Allows iff every required component signed and the operator quorum is met.

    Only valid application-level verdicts for ``app`` count; advisory-broken and
    message-level blocks carry no authority."""
    signers = report.valid_signers(app.id)
    operators = tuple(sorted(signers & policy.eligible_operators))
    for component in policy.required_component_signers:
        if component not in signers:
            decision = AuthorizationDecision(False, f"missing signature of component {component}", operators)
            break
    else:
        if len(operators) < policy.required_operator_count:
            decision = AuthorizationDecision(
                False, f"operator quorum {len(operators)} < {policy.required_operator_count}", operators)
        else:
            decision = AuthorizationDecision(True, "", operators)
    logger.debug("authorization of %s at %s: %s %s", app.id, policy.stage, decision.allowed, decision.reason)
    return decision
