"""SQLite-backed relational connector.

Query templates use named :param placeholders bound through the driver, never
spliced into the SQL text, so parameter values cannot alter the query shape.
A resource location may carry a `#table` fragment naming the table used by
the update path (e.g. `store.db#customers`).
"""

from __future__ import annotations

import re
import sqlite3
from decimal import Decimal

from infoflow.connectors.rules import RelationalRule
from infoflow.errors import MissingParam, SchemaMismatch, SourceUnavailable
from infoflow.model.definitions import ResourceDescriptor
from infoflow.model.values import NULL, Table, Value, decode_value, encode_value

_PLACEHOLDER_RE = re.compile(r":([A-Za-z_][A-Za-z0-9_]*)")


def split_location(location: str) -> tuple[str, str | None]:
    """Database path and optional `#table` fragment."""
    if "#" in location:
        path, table = location.split("#", 1)
        return path, table or None
    return location, None


def connect(location: str, resource_id: str | None = None, readonly: bool = True) -> sqlite3.Connection:
    path, _ = split_location(location)
    mode = "ro" if readonly else "rw"
    try:
        return sqlite3.connect(f"file:{path}?mode={mode}", uri=True)
    except sqlite3.OperationalError as exc:
        raise SourceUnavailable(f"cannot open database {path}: {exc}", resource_id=resource_id) from exc


def to_sql_param(v: Value):
    if v.tag == "text":
        return v.payload
    if v.tag == "number":
        d: Decimal = v.payload
        return int(d) if d == d.to_integral_value() else float(d)
    if v.tag == "boolean":
        return 1 if v.payload else 0
    if v.tag == "timestamp":
        return encode_value(v)
    return None


def _from_sql(col_type: str, raw) -> Value:
    if raw is None:
        return NULL
    if col_type == "text":
        return Value.text(str(raw))
    if col_type == "number":
        return Value.number(str(raw))
    if col_type == "boolean":
        return Value.boolean(bool(raw))
    return decode_value("timestamp", str(raw))


def fetch_relational(res: ResourceDescriptor, rule: RelationalRule, params: dict[str, Value]) -> Table:
    if res.kind != "relational":
        raise ValueError(f"resource {res.id} is not relational")
    placeholders = set(_PLACEHOLDER_RE.findall(rule.template))
    for name in sorted(placeholders):
        if name not in params:
            raise MissingParam(name)
    bound = {name: to_sql_param(params[name]) for name in placeholders}
    conn = connect(res.location, res.id)
    try:
        try:
            cursor = conn.execute(rule.template, bound)
            fetched = cursor.fetchall()
        except sqlite3.Error as exc:
            raise SourceUnavailable(f"query failed against {res.id}: {exc}", resource_id=res.id) from exc
        result_columns = [d[0] for d in cursor.description or []]
        expected = [c.name for c in rule.columns]
        if result_columns != expected:
            raise SchemaMismatch(
                f"resource {res.id}: query returned columns {result_columns}, expected {expected}"
            )
        rows = tuple(
            tuple(_from_sql(col.type, raw) for col, raw in zip(rule.columns, row)) for row in fetched
        )
        return Table(columns=rule.columns, rows=rows)
    finally:
        conn.close()
