"""Open SQLite databases from raw recovered bytes.

Forensic input is a byte string, not a live database file: the main file
is read as extracted, with no WAL/journal sidecars. Bytes are staged to a
private temp file and opened read-only and immutable, so a scan can never
mutate evidence or look for sidecar files that were not extracted.
"""

from __future__ import annotations

import contextlib
import os
import sqlite3
import tempfile

from .errors import MissingTableError, NotSqliteError

SQLITE_MAGIC = b"SQLite format 3\x00"


def is_sqlite(data: bytes) -> bool:
    """True iff the bytes start with the 16-byte SQLite-3 header magic."""
    return data[:16] == SQLITE_MAGIC


@contextlib.contextmanager
def connect_bytes(data: bytes):
    """Context manager yielding a read-only connection over database bytes.

    Raises NotSqliteError when the header magic is absent, which for a
    recovered medical-app database usually signals encryption.
    """
    if not is_sqlite(data):
        raise NotSqliteError("missing SQLite-3 header magic (database may be encrypted)")
    fd, path = tempfile.mkstemp(suffix=".db", prefix="phiscan-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        conn = sqlite3.connect(f"file:{path}?mode=ro&immutable=1", uri=True)
        try:
            yield conn
        finally:
            conn.close()
    finally:
        os.unlink(path)


def select_rows(conn: sqlite3.Connection, table: str, columns: list[str],
                order_by: str = "rowid") -> list[tuple]:
    """SELECT the named columns (rowid prepended) or raise MissingTableError."""
    sql = f'SELECT rowid, {", ".join(columns)} FROM "{table}" ORDER BY {order_by}'
    try:
        return list(conn.execute(sql))
    except sqlite3.OperationalError as exc:
        raise MissingTableError(f"{table}: {exc}") from exc


def list_tables(conn: sqlite3.Connection) -> list[str]:
    rows = conn.execute(
        "SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name"
    )
    return [r[0] for r in rows]
