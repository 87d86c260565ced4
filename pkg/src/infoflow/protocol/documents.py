"""Wire documents for the non-invoke endpoints: directory listings, service
schemas, update batches, audit records, reload summaries, and plain errors.
Same canonical-form rules as the request/response codec.
"""

from __future__ import annotations

from dataclasses import dataclass

from infoflow.connectors.rules import UpdateRow
from infoflow.errors import DecodeError
from infoflow.model.definitions import KeyParam, ServiceDefinition
from infoflow.model.values import NULL, COLUMN_TYPES, Column, Value, decode_value, encode_value
from infoflow.protocol import xmlio
from infoflow.protocol.xmlio import El


def _bool(raw: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise DecodeError(f"boolean attribute must be 'true' or 'false', got {raw!r}")


def _key_el(key: KeyParam) -> El:
    return (
        El("key")
        .attr("name", key.name)
        .attr("type", key.type)
        .attr("required", "true" if key.required else "false")
    )


def _decode_key(el) -> KeyParam:
    xmlio.expect_tag(el, "key")
    attrs = xmlio.take_attrs(el, ("name", "type", "required"))
    return KeyParam(attrs["name"], attrs["type"], _bool(attrs["required"]))


# --- directory -------------------------------------------------------------


@dataclass(frozen=True)
class DirectoryEntry:
    name: str
    version: int
    description: str
    key_params: tuple[KeyParam, ...]


def encode_directory(entries: list[DirectoryEntry]) -> bytes:
    root = El("directory")
    for entry in entries:
        svc = (
            El("service")
            .attr("name", entry.name)
            .attr("version", str(entry.version))
            .attr("description", entry.description)
        )
        for key in entry.key_params:
            svc.child(_key_el(key))
        root.child(svc)
    return xmlio.render_bytes(root)


def decode_directory(data: bytes) -> list[DirectoryEntry]:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "directory")
    out = []
    for svc in root:
        xmlio.expect_tag(svc, "service")
        attrs = xmlio.take_attrs(svc, ("name", "version", "description"))
        keys = tuple(_decode_key(k) for k in svc)
        out.append(
            DirectoryEntry(
                name=attrs["name"],
                version=xmlio.int_attr(svc, "version", attrs["version"]),
                description=attrs["description"],
                key_params=keys,
            )
        )
    return out


# --- schema ----------------------------------------------------------------


@dataclass(frozen=True)
class UpdateInfo:
    key_columns: tuple[tuple[str, str | None], ...]  # (column, bound param or None)
    writable_columns: tuple[str, ...]


@dataclass(frozen=True)
class SchemaDoc:
    service: str
    version: int
    refresh_seconds: int
    updatable: bool
    key_params: tuple[KeyParam, ...]
    columns: tuple[Column, ...]
    update: UpdateInfo | None = None


def schema_of(definition: ServiceDefinition) -> SchemaDoc:
    element_types = definition.element_types()
    columns = tuple(Column(c.name, element_types[c.name]) for c in definition.presentation)
    update = None
    if definition.update_spec is not None:
        anchor_binding = {}
        for m in definition.mappings:
            if m.resource_id == definition.update_spec.target_resource:
                anchor_binding = {column: param for param, column in m.key_binding}
                break
        update = UpdateInfo(
            key_columns=tuple(
                (col, anchor_binding.get(col)) for col in definition.update_spec.key_columns
            ),
            writable_columns=definition.update_spec.writable_columns,
        )
    return SchemaDoc(
        service=definition.name,
        version=definition.version,
        refresh_seconds=definition.refresh_seconds,
        updatable=definition.update_spec is not None,
        key_params=definition.key_params,
        columns=columns,
        update=update,
    )


def encode_schema(doc: SchemaDoc) -> bytes:
    root = (
        El("schema")
        .attr("service", doc.service)
        .attr("version", str(doc.version))
        .attr("refresh-seconds", str(doc.refresh_seconds))
        .attr("updatable", "true" if doc.updatable else "false")
    )
    for key in doc.key_params:
        root.child(_key_el(key))
    for col in doc.columns:
        root.child(El("column").attr("name", col.name).attr("type", col.type))
    if doc.update is not None:
        upd = El("update")
        for column, param in doc.update.key_columns:
            key_el = El("key").attr("column", column)
            if param is not None:
                key_el.attr("param", param)
            upd.child(key_el)
        for column in doc.update.writable_columns:
            upd.child(El("writable").attr("column", column))
        root.child(upd)
    return xmlio.render_bytes(root)


def decode_schema(data: bytes) -> SchemaDoc:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "schema")
    attrs = xmlio.take_attrs(root, ("service", "version", "refresh-seconds", "updatable"))
    keys, columns, update = [], [], None
    for child in root:
        if child.tag == "key":
            keys.append(_decode_key(child))
        elif child.tag == "column":
            cattrs = xmlio.take_attrs(child, ("name", "type"))
            if cattrs["type"] not in COLUMN_TYPES:
                raise DecodeError(f"illegal column type: {cattrs['type']!r}")
            columns.append(Column(cattrs["name"], cattrs["type"]))
        elif child.tag == "update":
            key_columns, writable = [], []
            for uc in child:
                if uc.tag == "key":
                    uattrs = xmlio.take_attrs(uc, ("column",), ("param",))
                    key_columns.append((uattrs["column"], uattrs.get("param")))
                elif uc.tag == "writable":
                    writable.append(xmlio.take_attrs(uc, ("column",))["column"])
                else:
                    raise DecodeError(f"unknown element <{uc.tag}> inside <update>")
            update = UpdateInfo(key_columns=tuple(key_columns), writable_columns=tuple(writable))
        else:
            raise DecodeError(f"unknown element <{child.tag}> inside <schema>")
    return SchemaDoc(
        service=attrs["service"],
        version=xmlio.int_attr(root, "version", attrs["version"]),
        refresh_seconds=xmlio.int_attr(root, "refresh-seconds", attrs["refresh-seconds"]),
        updatable=_bool(attrs["updatable"]),
        key_params=tuple(keys),
        columns=tuple(columns),
        update=update,
    )


# --- update batches ----------------------------------------------------------


def _cell_el(tag: str, column: str, value: Value) -> El:
    el = El(tag).attr("column", column).attr("type", value.tag if not value.is_null else "text")
    if value.is_null:
        el.attr("null", "true")
    else:
        el.text = encode_value(value)
    return el


def _decode_cell(el) -> tuple[str, Value]:
    attrs = xmlio.take_attrs(el, ("column", "type"), ("null",))
    if attrs.get("null") == "true":
        return attrs["column"], NULL
    return attrs["column"], decode_value(attrs["type"], xmlio.text_of(el))


def encode_update_request(service: str, rows: list[UpdateRow]) -> bytes:
    root = El("update-request").attr("service", service)
    for row in rows:
        row_el = El("row")
        for column, value in row.key_values.items():
            row_el.child(_cell_el("key", column, value))
        for column, value in row.new_values.items():
            row_el.child(_cell_el("set", column, value))
        root.child(row_el)
    return xmlio.render_bytes(root)


def decode_update_request(data: bytes) -> tuple[str, list[UpdateRow]]:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "update-request")
    service = xmlio.take_attrs(root, ("service",))["service"]
    rows = []
    for row_el in root:
        xmlio.expect_tag(row_el, "row")
        keys: dict[str, Value] = {}
        sets: dict[str, Value] = {}
        for cell in row_el:
            if cell.tag == "key":
                column, value = _decode_cell(cell)
                keys[column] = value
            elif cell.tag == "set":
                column, value = _decode_cell(cell)
                sets[column] = value
            else:
                raise DecodeError(f"unknown element <{cell.tag}> inside <row>")
        try:
            rows.append(UpdateRow(key_values=keys, new_values=sets))
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
    return service, rows


def encode_update_response(applied: int) -> bytes:
    return xmlio.render_bytes(El("update-response").attr("applied", str(applied)))


def decode_update_response(data: bytes) -> int:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "update-response")
    attrs = xmlio.take_attrs(root, ("applied",))
    return xmlio.int_attr(root, "applied", attrs["applied"])


# --- audit, reload, plain errors --------------------------------------------


@dataclass(frozen=True)
class AuditRecordDoc:
    sequence: int
    timestamp: str  # canonical timestamp text
    user: str
    action: str
    outcome: str
    service: str | None = None
    params: tuple[tuple[str, str], ...] = ()


def audit_record_el(record: AuditRecordDoc) -> El:
    el = (
        El("record")
        .attr("sequence", str(record.sequence))
        .attr("timestamp", record.timestamp)
        .attr("user", record.user)
        .attr("action", record.action)
        .attr("outcome", record.outcome)
    )
    if record.service is not None:
        el.attr("service", record.service)
    for name, text in record.params:
        el.child(El("param", text=text).attr("name", name))
    return el


def decode_audit_record(el) -> AuditRecordDoc:
    xmlio.expect_tag(el, "record")
    attrs = xmlio.take_attrs(el, ("sequence", "timestamp", "user", "action", "outcome"), ("service",))
    params = []
    for p in el:
        xmlio.expect_tag(p, "param")
        pattrs = xmlio.take_attrs(p, ("name",))
        params.append((pattrs["name"], xmlio.text_of(p)))
    return AuditRecordDoc(
        sequence=xmlio.int_attr(el, "sequence", attrs["sequence"]),
        timestamp=attrs["timestamp"],
        user=attrs["user"],
        action=attrs["action"],
        outcome=attrs["outcome"],
        service=attrs.get("service"),
        params=tuple(params),
    )


def encode_audit(records: list[AuditRecordDoc]) -> bytes:
    root = El("audit")
    for record in records:
        root.child(audit_record_el(record))
    return xmlio.render_bytes(root)


def decode_audit(data: bytes) -> list[AuditRecordDoc]:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "audit")
    return [decode_audit_record(el) for el in root]


def encode_reload_response(services: int, resources: int) -> bytes:
    return xmlio.render_bytes(
        El("reload-response").attr("services", str(services)).attr("resources", str(resources))
    )


def encode_error(code: str, message: str) -> bytes:
    return xmlio.render_bytes(El("error", text=message).attr("code", code))


def decode_error(data: bytes) -> tuple[str, str]:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "error")
    code = xmlio.take_attrs(root, ("code",))["code"]
    return code, xmlio.text_of(root)
