from .dal import MEMORY_URI, connect, define_tables
from .tables import StoreTable
