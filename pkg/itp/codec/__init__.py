from .validation import SchemaViolation, is_base64, validate
from .serializer import (DS_NS, XENC_NS, canonical_signed_info, canonicalize_scope, format_timestamp, parse_timestamp,
                         pretty_print, serialize)
from .parser import parse
