"""CSV-backed tabular-file connector.

Dialect: comma separator, double-quote quoting, first row is a header,
UTF-8. An empty field decodes to null; nulls are written back as empty
fields.
"""

from __future__ import annotations

import csv
from pathlib import Path

from infoflow.connectors.rules import TabularRule
from infoflow.errors import MissingParam, SchemaMismatch, SourceUnavailable
from infoflow.model.definitions import ResourceDescriptor
from infoflow.model.values import NULL, Table, Value, decode_value, encode_value


def read_csv_rows(path: str | Path, resource_id: str | None = None) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SourceUnavailable(f"empty CSV file: {path}", resource_id=resource_id)
            return header, [row for row in reader]
    except OSError as exc:
        raise SourceUnavailable(f"cannot read {path}: {exc}", resource_id=resource_id) from exc


def decode_cell(col_type: str, text: str) -> Value:
    if text == "":
        return NULL
    return decode_value(col_type, text)


def fetch_tabular(res: ResourceDescriptor, rule: TabularRule, params: dict[str, Value]) -> Table:
    if res.kind != "tabular-file":
        raise ValueError(f"resource {res.id} is not tabular-file")
    header, raw_rows = read_csv_rows(res.location, res.id)
    positions = {name: i for i, name in enumerate(header)}
    for col in rule.projection:
        if col.name not in positions:
            raise SchemaMismatch(f"resource {res.id}: column {col.name!r} absent from header")
    filters: list[tuple[int, str]] = []
    for column, param in rule.filter:
        if column not in positions:
            raise SchemaMismatch(f"resource {res.id}: filter column {column!r} absent from header")
        if param not in params:
            raise MissingParam(param)
        filters.append((positions[column], encode_value(params[param])))
    rows = []
    for raw in raw_rows:
        if len(raw) != len(header):
            raise SchemaMismatch(f"resource {res.id}: row width {len(raw)} != header width {len(header)}")
        if all(raw[idx] == wanted for idx, wanted in filters):
            rows.append(tuple(decode_cell(col.type, raw[positions[col.name]]) for col in rule.projection))
    return Table(columns=rule.projection, rows=tuple(rows))
