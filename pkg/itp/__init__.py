"""ITP: signed, routed messages between the components of a trustcenter."""
from .model import VERSION
