"""Workbook persistence: one versioned XML document holding the grid,
bindings, per-cell audit rings, dirty flags, and checkpoints.

Serialization is deterministic (cells sorted by address, attributes in fixed
order), so saving an unchanged workbook reproduces identical bytes.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path

from infoflow.client import ServerClient
from infoflow.errors import DecodeError, ParseError
from infoflow.model.values import NULL, Column, Value, decode_value, encode_value
from infoflow.protocol import xmlio
from infoflow.protocol.xmlio import El
from infoflow.workbook.address import CellAddress
from infoflow.workbook.engine import (
    CellAuditRecord,
    CellBinding,
    Checkpoint,
    ParamSource,
    Workbook,
)

FORMAT_VERSION = 1


def _value_attrs(el: El, value: Value, type_attr: str = "type") -> El:
    if value.is_null:
        el.attr(type_attr, "text").attr("null", "true")
    else:
        el.attr(type_attr, value.tag)
        el.text = encode_value(value)
    return el


def _timestamp(dt) -> str:
    return encode_value(Value.timestamp(dt))


def _grid_el(grid: dict[CellAddress, Value]) -> El:
    el = El("grid")
    for address in sorted(grid, key=CellAddress.sort_key):
        el.child(_value_attrs(El("cell").attr("at", str(address)), grid[address]))
    return el


def _binding_el(binding: CellBinding) -> El:
    el = (
        El("binding")
        .attr("id", str(binding.binding_id))
        .attr("origin", str(binding.origin))
        .attr("service", binding.service)
        .attr("mode", binding.mode)
        .attr("updatable", "true" if binding.updatable else "false")
        .attr("state", binding.state)
        .attr("rows", str(binding.data_rows))
    )
    if binding.last_refresh is not None:
        el.attr("last-refresh", _timestamp(binding.last_refresh))
    if binding.refresh_seconds is not None:
        el.attr("refresh-seconds", str(binding.refresh_seconds))
    if binding.update_service is not None:
        el.attr("update-service", binding.update_service)
    if binding.error_message is not None:
        el.attr("error", binding.error_message)
    for name, source in binding.params:
        p = El("param").attr("name", name).attr("kind", source.kind)
        if source.kind == "literal":
            _value_attrs(p, source.literal)
        else:
            p.attr("ref", str(source.ref))
        el.child(p)
    for name, ptype in binding.param_types:
        el.child(El("param-type").attr("name", name).attr("type", ptype))
    for col in binding.columns:
        el.child(El("column").attr("name", col.name).attr("type", col.type))
    for column, hint in binding.format_hints:
        el.child(El("format").attr("column", column).attr("hint", hint))
    for column in binding.writable_columns:
        el.child(El("writable").attr("column", column))
    for column, param in binding.update_key_columns:
        key_el = El("update-key").attr("column", column)
        if param is not None:
            key_el.attr("param", param)
        el.child(key_el)
    return el


def _bindings_el(bindings: dict[int, CellBinding]) -> El:
    el = El("bindings")
    for binding_id in sorted(bindings):
        el.child(_binding_el(bindings[binding_id]))
    return el


def save(workbook: Workbook, path: str | Path) -> bytes:
    root = (
        El("workbook")
        .attr("version", str(FORMAT_VERSION))
        .attr("audit-depth", str(workbook.audit_depth))
        .attr("next-binding-id", str(workbook.next_binding_id))
        .attr("next-checkpoint-id", str(workbook.next_checkpoint_id))
    )
    root.child(_grid_el(workbook.grid))
    root.child(_bindings_el(workbook.bindings))
    dirty = El("dirty")
    for address in sorted(workbook.dirty, key=CellAddress.sort_key):
        dirty.child(El("cell").attr("at", str(address)).attr("binding", str(workbook.dirty[address])))
    root.child(dirty)
    audit = El("audit")
    for address in sorted(workbook.audit, key=CellAddress.sort_key):
        ring = workbook.audit[address]
        if not ring:
            continue
        ring_el = El("ring").attr("at", str(address))
        for record in ring:  # newest first
            record_el = (
                El("record")
                .attr("timestamp", _timestamp(record.timestamp))
                .attr("user", record.user)
                .attr("origin", record.origin)
            )
            record_el.child(_value_attrs(El("previous"), record.previous))
            record_el.child(_value_attrs(El("new"), record.new))
            ring_el.child(record_el)
        audit.child(ring_el)
    root.child(audit)
    checkpoints = El("checkpoints")
    for snap in workbook.checkpoints:
        snap_el = (
            El("checkpoint")
            .attr("id", str(snap.checkpoint_id))
            .attr("label", snap.label)
            .attr("timestamp", _timestamp(snap.timestamp))
            .attr("next-binding-id", str(snap.next_binding_id))
        )
        snap_el.child(_grid_el(snap.grid))
        snap_el.child(_bindings_el(snap.bindings))
        checkpoints.child(snap_el)
    root.child(checkpoints)
    data = xmlio.render_bytes(root) + b"\n"
    Path(path).write_bytes(data)
    return data


def _read_value(el, type_attr: str = "type") -> Value:
    attrs = dict(el.attrib)
    if attrs.get("null") == "true":
        return NULL
    return decode_value(attrs[type_attr], el.text or "")


def _read_binding(el) -> CellBinding:
    attrs = dict(el.attrib)
    params, param_types, columns, hints, writable, update_keys = [], [], [], [], [], []
    for child in el:
        if child.tag == "param":
            if child.attrib["kind"] == "literal":
                source = ParamSource.of_literal(_read_value(child))
            else:
                source = ParamSource.of_ref(CellAddress.parse(child.attrib["ref"]))
            params.append((child.attrib["name"], source))
        elif child.tag == "param-type":
            param_types.append((child.attrib["name"], child.attrib["type"]))
        elif child.tag == "column":
            columns.append(Column(child.attrib["name"], child.attrib["type"]))
        elif child.tag == "format":
            hints.append((child.attrib["column"], child.attrib["hint"]))
        elif child.tag == "writable":
            writable.append(child.attrib["column"])
        elif child.tag == "update-key":
            update_keys.append((child.attrib["column"], child.attrib.get("param")))
        else:
            raise DecodeError(f"unknown element <{child.tag}> inside <binding>")
    last_refresh = None
    if "last-refresh" in attrs:
        last_refresh = decode_value("timestamp", attrs["last-refresh"]).payload
    return CellBinding(
        binding_id=int(attrs["id"]),
        origin=CellAddress.parse(attrs["origin"]),
        service=attrs["service"],
        params=tuple(params),
        mode=attrs["mode"],
        param_types=tuple(param_types),
        updatable=attrs["updatable"] == "true",
        writable_columns=tuple(writable),
        update_key_columns=tuple(update_keys),
        last_refresh=last_refresh,
        refresh_seconds=int(attrs["refresh-seconds"]) if "refresh-seconds" in attrs else None,
        update_service=attrs.get("update-service"),
        format_hints=tuple(hints),
        columns=tuple(columns),
        data_rows=int(attrs["rows"]),
        state=attrs["state"],
        error_message=attrs.get("error"),
    )


def _read_grid(el) -> dict[CellAddress, Value]:
    grid = {}
    for cell in el:
        grid[CellAddress.parse(cell.attrib["at"])] = _read_value(cell)
    return grid


def load(path: str | Path, client: ServerClient | None = None, clock=None) -> Workbook:
    path = Path(path)
    try:
        root = xmlio.parse(path.read_bytes())
    except (OSError, DecodeError) as exc:
        raise ParseError(f"cannot load workbook: {exc}", source=str(path)) from exc
    xmlio.expect_tag(root, "workbook")
    attrs = dict(root.attrib)
    if attrs.get("version") != str(FORMAT_VERSION):
        raise ParseError(f"unsupported workbook format version {attrs.get('version')}", source=str(path))
    workbook = Workbook(client=client, audit_depth=int(attrs["audit-depth"]), clock=clock)
    workbook.next_binding_id = int(attrs["next-binding-id"])
    workbook.next_checkpoint_id = int(attrs["next-checkpoint-id"])
    for section in root:
        if section.tag == "grid":
            workbook.grid = _read_grid(section)
        elif section.tag == "bindings":
            for b in section:
                binding = _read_binding(b)
                workbook.bindings[binding.binding_id] = binding
        elif section.tag == "dirty":
            for cell in section:
                workbook.dirty[CellAddress.parse(cell.attrib["at"])] = int(cell.attrib["binding"])
        elif section.tag == "audit":
            for ring_el in section:
                address = CellAddress.parse(ring_el.attrib["at"])
                ring = deque(maxlen=workbook.audit_depth)
                for record_el in ring_el:  # stored newest first
                    children = {c.tag: c for c in record_el}
                    ring.append(
                        CellAuditRecord(
                            address=address,
                            previous=_read_value(children["previous"]),
                            new=_read_value(children["new"]),
                            timestamp=decode_value("timestamp", record_el.attrib["timestamp"]).payload,
                            user=record_el.attrib["user"],
                            origin=record_el.attrib["origin"],
                        )
                    )
                workbook.audit[address] = ring
        elif section.tag == "checkpoints":
            for snap_el in section:
                grid, bindings = {}, {}
                for part in snap_el:
                    if part.tag == "grid":
                        grid = _read_grid(part)
                    elif part.tag == "bindings":
                        for b in part:
                            binding = _read_binding(b)
                            bindings[binding.binding_id] = binding
                workbook.checkpoints.append(
                    Checkpoint(
                        checkpoint_id=int(snap_el.attrib["id"]),
                        label=snap_el.attrib["label"],
                        timestamp=decode_value("timestamp", snap_el.attrib["timestamp"]).payload,
                        grid=grid,
                        bindings=bindings,
                        next_binding_id=int(snap_el.attrib["next-binding-id"]),
                    )
                )
        else:
            raise DecodeError(f"unknown element <{section.tag}> inside <workbook>")
    return workbook
