"""XML request/response envelope between clients and the delivery server.

Canonical form: attribute order as emitted here, no insignificant whitespace,
UTF-8, null cells as `<cell null="true"/>`. decode(encode(x)) is structural
identity; encode(decode(doc)) is byte identity for canonical documents.
"""

from __future__ import annotations

from dataclasses import dataclass

from infoflow.errors import DecodeError
from infoflow.model.values import NULL, Column, Table, decode_value, encode_value
from infoflow.protocol import xmlio
from infoflow.protocol.xmlio import El

PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class ServiceRequest:
    service: str
    version: int = PROTOCOL_VERSION
    params: tuple[tuple[str, str], ...] = ()  # (name, canonical text), order preserved


@dataclass(frozen=True)
class ResponseMeta:
    refresh_seconds: int
    update_service: str | None = None
    format_hints: tuple[tuple[str, str], ...] = ()  # (column, hint)


@dataclass(frozen=True)
class ServiceResponse:
    status: str  # "ok" | "error"
    meta: ResponseMeta | None = None
    table: Table | None = None
    error_code: str | None = None
    error_message: str | None = None

    def __post_init__(self):
        if self.status == "ok":
            if self.meta is None or self.table is None or self.error_code is not None:
                raise ValueError("ok responses carry meta and table, never an error code")
        elif self.status == "error":
            if self.error_code is None or self.table is not None or self.meta is not None:
                raise ValueError("error responses carry a code, never rows or meta")
        else:
            raise ValueError(f"unknown status: {self.status!r}")

    @staticmethod
    def ok(meta: ResponseMeta, table: Table) -> "ServiceResponse":
        return ServiceResponse(status="ok", meta=meta, table=table)

    @staticmethod
    def error(code: str, message: str) -> "ServiceResponse":
        return ServiceResponse(status="error", error_code=code, error_message=message)


def encode_request(r: ServiceRequest) -> bytes:
    root = El("service-request").attr("service", r.service).attr("version", str(r.version))
    for name, text in r.params:
        root.child(El("param", text=text).attr("name", name))
    return xmlio.render_bytes(root)


def decode_request(data: bytes) -> ServiceRequest:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "service-request")
    attrs = xmlio.take_attrs(root, ("service", "version"))
    version = xmlio.int_attr(root, "version", attrs["version"])
    params = []
    for child in root:
        xmlio.expect_tag(child, "param")
        cattrs = xmlio.take_attrs(child, ("name",))
        params.append((cattrs["name"], xmlio.text_of(child)))
    return ServiceRequest(service=attrs["service"], version=version, params=tuple(params))


def encode_response(r: ServiceResponse) -> bytes:
    root = El("service-response").attr("status", r.status)
    if r.status == "error":
        root.child(El("error", text=r.error_message or "").attr("code", r.error_code))
        return xmlio.render_bytes(root)
    meta = El("meta").attr("refresh-seconds", str(r.meta.refresh_seconds))
    if r.meta.update_service is not None:
        meta.attr("update-service", r.meta.update_service)
    for column, hint in r.meta.format_hints:
        meta.child(El("format").attr("column", column).attr("hint", hint))
    root.child(meta)
    columns = El("columns")
    for col in r.table.columns:
        columns.child(El("column").attr("name", col.name).attr("type", col.type))
    root.child(columns)
    rows = El("rows")
    for row in r.table.rows:
        row_el = El("row")
        for cell in row:
            if cell.is_null:
                row_el.child(El("cell").attr("null", "true"))
            else:
                row_el.child(El("cell", text=encode_value(cell)))
        rows.child(row_el)
    root.child(rows)
    return xmlio.render_bytes(root)


def decode_response(data: bytes) -> ServiceResponse:
    root = xmlio.parse(data)
    xmlio.expect_tag(root, "service-response")
    status = xmlio.take_attrs(root, ("status",))["status"]
    children = list(root)
    if status == "error":
        if len(children) != 1:
            raise DecodeError("error responses carry exactly one <error> element")
        err = children[0]
        xmlio.expect_tag(err, "error")
        code = xmlio.take_attrs(err, ("code",))["code"]
        return ServiceResponse.error(code, xmlio.text_of(err))
    if status != "ok":
        raise DecodeError(f"unknown response status: {status!r}")
    if len(children) != 3:
        raise DecodeError("ok responses carry <meta>, <columns>, <rows>")
    meta_el, columns_el, rows_el = children
    xmlio.expect_tag(meta_el, "meta")
    mattrs = xmlio.take_attrs(meta_el, ("refresh-seconds",), ("update-service",))
    hints = []
    for h in meta_el:
        xmlio.expect_tag(h, "format")
        hattrs = xmlio.take_attrs(h, ("column", "hint"))
        hints.append((hattrs["column"], hattrs["hint"]))
    meta = ResponseMeta(
        refresh_seconds=xmlio.int_attr(meta_el, "refresh-seconds", mattrs["refresh-seconds"]),
        update_service=mattrs.get("update-service"),
        format_hints=tuple(hints),
    )
    xmlio.expect_tag(columns_el, "columns")
    columns = []
    for c in columns_el:
        xmlio.expect_tag(c, "column")
        cattrs = xmlio.take_attrs(c, ("name", "type"))
        try:
            columns.append(Column(cattrs["name"], cattrs["type"]))
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
    xmlio.expect_tag(rows_el, "rows")
    rows = []
    for row_el in rows_el:
        xmlio.expect_tag(row_el, "row")
        cells = list(row_el)
        if len(cells) != len(columns):
            raise DecodeError(f"row has {len(cells)} cells for {len(columns)} columns")
        row = []
        for cell_el, col in zip(cells, columns):
            xmlio.expect_tag(cell_el, "cell")
            cattrs = xmlio.take_attrs(cell_el, (), ("null",))
            if cattrs.get("null") == "true":
                if xmlio.text_of(cell_el):
                    raise DecodeError("null cell carries text")
                row.append(NULL)
            elif "null" in cattrs:
                raise DecodeError(f"bad null attribute value: {cattrs['null']!r}")
            else:
                row.append(decode_value(col.type, xmlio.text_of(cell_el)))
        rows.append(tuple(row))
    try:
        table = Table(columns=tuple(columns), rows=tuple(rows))
    except ValueError as exc:
        raise DecodeError(str(exc)) from exc
    return ServiceResponse.ok(meta, table)
