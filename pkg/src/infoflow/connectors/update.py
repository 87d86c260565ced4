"""Write-back path for tabular-file and relational resources.

Batches are all-or-nothing: if any update row matches zero source rows the
whole batch is rejected and the source is left byte-identical. Tabular writes
go through a temp file followed by an atomic rename.
"""

from __future__ import annotations

import csv
import os
import sqlite3
import tempfile
from pathlib import Path

from infoflow.connectors import relational
from infoflow.connectors.rules import UpdateRow
from infoflow.connectors.tabular import read_csv_rows
from infoflow.errors import NoSuchKey, SchemaMismatch, UpdateUnsupported
from infoflow.model.definitions import ResourceDescriptor, UpdateSpec
from infoflow.model.values import encode_value


def _check_columns(spec: UpdateSpec, rows: list[UpdateRow]) -> None:
    for row in rows:
        for col in row.key_values:
            if col not in spec.key_columns:
                raise ValueError(f"column {col!r} is not an update key column")
        for col in row.new_values:
            if col not in spec.writable_columns:
                raise ValueError(f"column {col!r} is not writable")
        if not row.key_values or not row.new_values:
            raise ValueError("update rows need at least one key and one new value")


def apply_update(res: ResourceDescriptor, spec: UpdateSpec, rows: list[UpdateRow]) -> int:
    """Apply a batch of keyed overwrites; returns the number of rows changed."""
    if not res.writable:
        raise UpdateUnsupported(f"resource {res.id} is not writable")
    if res.kind == "http-xml":
        raise UpdateUnsupported(f"resource {res.id} is http-xml; updates are not supported")
    _check_columns(spec, rows)
    if res.kind == "tabular-file":
        return _apply_tabular(res, rows)
    return _apply_relational(res, rows)


def _apply_tabular(res: ResourceDescriptor, rows: list[UpdateRow]) -> int:
    header, data = read_csv_rows(res.location, res.id)
    positions = {name: i for i, name in enumerate(header)}
    applied = 0
    for update in rows:
        for col in list(update.key_values) + list(update.new_values):
            if col not in positions:
                raise SchemaMismatch(f"resource {res.id}: column {col!r} absent from header")
        matches = [
            row
            for row in data
            if all(row[positions[col]] == encode_value(v) for col, v in update.key_values.items())
        ]
        if not matches:
            raise NoSuchKey(f"resource {res.id}: no row matches keys {update.key_values}")
        for row in matches:
            for col, v in update.new_values.items():
                row[positions[col]] = encode_value(v)
        applied += len(matches)

    path = Path(res.location)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return applied


def _apply_relational(res: ResourceDescriptor, rows: list[UpdateRow]) -> int:
    _, table = relational.split_location(res.location)
    if table is None:
        raise UpdateUnsupported(
            f"resource {res.id}: relational updates need a '#table' fragment in the location"
        )
    conn = relational.connect(res.location, res.id, readonly=False)
    try:
        applied = 0
        with conn:
            for update in rows:
                set_cols = sorted(update.new_values)
                key_cols = sorted(update.key_values)
                sql = (
                    f'UPDATE "{table}" SET '
                    + ", ".join(f'"{c}" = :set_{c}' for c in set_cols)
                    + " WHERE "
                    + " AND ".join(f'"{c}" = :key_{c}' for c in key_cols)
                )
                bound = {f"set_{c}": relational.to_sql_param(update.new_values[c]) for c in set_cols}
                bound |= {f"key_{c}": relational.to_sql_param(update.key_values[c]) for c in key_cols}
                cursor = conn.execute(sql, bound)
                if cursor.rowcount == 0:
                    raise NoSuchKey(f"resource {res.id}: no row matches keys {update.key_values}")
                applied += cursor.rowcount
        return applied
    except sqlite3.Error as exc:
        raise SchemaMismatch(f"resource {res.id}: update failed: {exc}") from exc
    finally:
        conn.close()
