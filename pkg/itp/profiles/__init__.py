from .spec import (TERMINAL, ProfileRegistry, ProfileSpec, StageSpec, check_spec, next_hop, stage_inputs,
                   validate_stage)
from .loader import load_profiles, parse_profiles
from .builtin import (CERTIFICATE_FIELDS, CERTIFICATE_USAGES, CERTIFICATION, DIRECTORY, INTAKE_FIELDS, MULTICERT,
                      OPERATORS, REGISTRATION, builtin_profiles, multicert_spec)
