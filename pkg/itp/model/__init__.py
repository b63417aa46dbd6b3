from .elements import *
from .ids import IdGenerator, generate_id, new_id, utcnow
