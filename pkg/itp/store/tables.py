from typing import Optional

import pydal.helpers.classes
import pydal.objects
from pydal import DAL


class StoreTable:
    """Saving rows and getting rows to/from one table of an ITP store"""

    def __init__(self, db: DAL, table_name: str):
        if table_name not in db.tables:
            raise AttributeError(f"Table {table_name} not in database.")
        self.db = db
        self.table_name: str = table_name

    @property
    def table(self) -> pydal.objects.Table:
        return self.db[self.table_name]

    def add_row(self, **kwargs) -> pydal.helpers.classes.Reference:
        try:
            reference = self.table.insert(**kwargs)
        except TypeError:
            msg = f"\n{self.table_name}:\n fields:\n {kwargs}"
            raise TypeError(msg)
        self.db.commit()
        return reference

    def _query(self, **kwargs):
        query = self.table['id'] != None  # noqa: E711 pydal builds "IS NOT NULL"
        for key, val in kwargs.items():
            query &= (self.table[key] == val)
        return query

    def get(self, **kwargs) -> Optional[pydal.objects.Row]:
        return self.table(**kwargs)

    def count(self, **kwargs) -> int:
        return self.db(self._query(**kwargs)).count()

    def maximum(self, column: str, **kwargs):
        top = self.table[column].max()
        return self.db(self._query(**kwargs)).select(top).first()[top]
