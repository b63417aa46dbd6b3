"""pydal connection and table definitions for the state components keep in a database.

Replay decisions are indexed in ``seen_message``/``seen_application`` (rebuilt
from the append-only replay log at startup); issued certificates live in
``issued_certificate`` so serial numbers survive restarts."""
import logging
import pathlib
import uuid
from typing import Optional

from pydal import DAL, Field

logger = logging.getLogger(__name__)

MEMORY_URI = 'sqlite:memory'


def define_tables(db: DAL) -> DAL:
    # in following definitions, all rows are append-only; nothing is ever updated.
    if 'seen_message' not in db.tables:
        db.define_table('seen_message'
                        , Field('message_id', type='string', notnull=True)
                        , Field('component', type='string', notnull=True)
                        , Field('first_seen', type='datetime', default=None)
                        )
    if 'seen_application' not in db.tables:
        db.define_table('seen_application'
                        , Field('application_id', type='string', notnull=True)
                        , Field('component', type='string', notnull=True)
                        , Field('first_seen', type='datetime', default=None)
                        )
    if 'issued_certificate' not in db.tables:
        db.define_table('issued_certificate'
                        , Field('ca_name', type='string', notnull=True)
                        , Field('serial', type='integer', notnull=True)
                        , Field('subject_dn', type='string', default=None)
                        , Field('usage', type='string', default=None)
                        , Field('application_id', type='string', default=None)
                        , Field('blob', type='text', default=None)
                        , Field('issued_at', type='datetime', default=None)
                        )
    return db


def connect(uri: str = MEMORY_URI, folder: Optional[pathlib.Path] = None) -> DAL:
    """Opens ``uri`` with all ITP tables defined. Every call gets its own connection."""
    kwargs = {'db_uid': uuid.uuid4().hex}
    if folder is not None:
        folder = pathlib.Path(folder)
        folder.mkdir(parents=True, exist_ok=True)
        kwargs['folder'] = str(folder)
    db = DAL(uri, **kwargs)
    logger.debug("connected to %s", uri)
    return define_tables(db)
