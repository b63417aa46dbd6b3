"""Profile specifications: which components process an application of a given
profile, in which order, and what each stage needs, removes and adds."""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from itp.errors import DuplicateProfileId, InconsistentSpec, StageNotFound, UnknownProfile
from itp.model import Application, field_names, is_component_name, is_field_name
from itp.security import AuthorizationPolicy

logger = logging.getLogger(__name__)

#: ``next`` of the last stage
TERMINAL = None


@dataclass(frozen=True)
class StageSpec:
    component: str
    required: FrozenSet[str] = field(default=frozenset())
    consumed: FrozenSet[str] = field(default=frozenset())
    produced: FrozenSet[str] = field(default=frozenset())
    authorization: Optional[AuthorizationPolicy] = None
    next: Optional[str] = TERMINAL

    def __post_init__(self):
        for name in ('required', 'consumed', 'produced'):
            object.__setattr__(self, name, frozenset(getattr(self, name)))

    @property
    def terminal(self) -> bool:
        return self.next is TERMINAL


@dataclass(frozen=True)
class ProfileSpec:
    profile_id: str
    stages: Tuple[StageSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, 'stages', tuple(self.stages))

    def stage(self, component: str) -> StageSpec:
        for stage in self.stages:
            if stage.component == component:
                return stage
        raise StageNotFound(f"profile {self.profile_id} has no stage at {component}")

    @property
    def components(self) -> List[str]:
        return [stage.component for stage in self.stages]

    def policy(self, component: str) -> AuthorizationPolicy:
        stage = self.stage(component)
        if stage.authorization is not None:
            return stage.authorization
        return AuthorizationPolicy(self.profile_id, component)


def _walk(spec: ProfileSpec) -> List[StageSpec]:
    """Stages in next_hop order from the first stage."""
    by_name = {stage.component: stage for stage in spec.stages}
    order = []
    current: Optional[StageSpec] = spec.stages[0]
    while current is not None:
        if current in order:
            raise InconsistentSpec(f"{spec.profile_id}: stage {current.component} is visited twice")
        order.append(current)
        if current.terminal:
            break
        if current.next not in by_name:
            raise InconsistentSpec(f"{spec.profile_id}: {current.component} forwards to unknown stage {current.next}")
        current = by_name[current.next]
    if len(order) != len(spec.stages):
        unreachable = set(by_name) - {stage.component for stage in order}
        raise InconsistentSpec(f"{spec.profile_id}: stages {', '.join(sorted(unreachable))} are never reached")
    return order


def stage_inputs(spec: ProfileSpec) -> Dict[str, FrozenSet[str]]:
    """Field set each stage sees on input when every earlier stage did its job."""
    inputs: Dict[str, FrozenSet[str]] = OrderedDict()
    available: FrozenSet[str] = frozenset()
    for ix, stage in enumerate(_walk(spec)):
        if ix == 0:
            available = stage.required
        inputs[stage.component] = available
        available = (available - stage.consumed) | stage.produced
    return inputs


def check_spec(spec: ProfileSpec):
    if not spec.profile_id or any(c.isspace() for c in spec.profile_id):
        raise InconsistentSpec(f"{spec.profile_id!r} is not a profile id")
    if len(spec.stages) == 0:
        raise InconsistentSpec(f"{spec.profile_id}: a profile has at least one stage")
    names = spec.components
    if len(set(names)) != len(names):
        raise InconsistentSpec(f"{spec.profile_id}: a component appears in two stages")
    for stage in spec.stages:
        if not is_component_name(stage.component):
            raise InconsistentSpec(f"{spec.profile_id}: {stage.component!r} is not a component name")
        bad = [n for n in stage.required | stage.consumed | stage.produced if not is_field_name(n)]
        if bad:
            raise InconsistentSpec(f"{spec.profile_id}/{stage.component}: invalid field names {sorted(bad)}")
        policy = stage.authorization
        if policy is not None and (policy.profile_id != spec.profile_id or policy.stage != stage.component):
            raise InconsistentSpec(f"{spec.profile_id}/{stage.component}: authorization policy is for "
                                   f"{policy.profile_id}/{policy.stage}")
    inputs = stage_inputs(spec)
    produced_before: FrozenSet[str] = frozenset()
    for ix, stage in enumerate(_walk(spec)):
        if not stage.consumed <= stage.required | produced_before:
            extra = sorted(stage.consumed - stage.required - produced_before)
            raise InconsistentSpec(f"{spec.profile_id}/{stage.component}: consumes {extra} it neither requires "
                                   f"nor sees produced")
        if ix > 0 and not stage.required <= inputs[stage.component]:
            missing = sorted(stage.required - inputs[stage.component])
            raise InconsistentSpec(f"{spec.profile_id}/{stage.component}: requires {missing} no earlier stage "
                                   f"provides")
        produced_before |= stage.produced


class ProfileRegistry:
    """Profile specs by id; filled at startup, read-only afterwards."""

    def __init__(self):
        self._specs: Dict[str, ProfileSpec] = OrderedDict()

    def register_profile(self, spec: ProfileSpec):
        if spec.profile_id in self._specs:
            raise DuplicateProfileId(f"profile {spec.profile_id} is already registered")
        check_spec(spec)
        self._specs[spec.profile_id] = spec
        logger.debug("registered profile %s: %s", spec.profile_id, " -> ".join(spec.components))

    def lookup(self, profile_id: str) -> ProfileSpec:
        try:
            return self._specs[profile_id]
        except KeyError:
            raise UnknownProfile(f"no profile {profile_id!r}") from None

    def __contains__(self, profile_id: str) -> bool:
        return profile_id in self._specs

    def __iter__(self) -> Iterator[ProfileSpec]:
        return iter(self._specs.values())

    def __len__(self):
        return len(self._specs)


def validate_stage(app: Application, spec: ProfileSpec, component: str) -> List[str]:
    """Violations for ``app`` entering ``component``; empty when it may proceed."""
    stage = spec.stage(component)
    violations = []
    if app.profile_id != spec.profile_id:
        violations.append(f"profile {app.profile_id} is not {spec.profile_id}")
    present = set(field_names(app))
    for name in sorted(stage.required):
        if name not in present:
            violations.append(f"{name} missing")
    return violations


def next_hop(spec: ProfileSpec, component: str) -> Optional[str]:
    return spec.stage(component).next
