"""JSON facade over one workbook, for the browser grid.

All mutations are serialized through a single lock (the workbook is a
single-writer state machine) and persisted to the workbook file after each
successful command. Values cross this boundary as canonical text plus a tag.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from infoflow.client import ServerError
from infoflow.errors import DecodeError
from infoflow.model.values import NULL, Value, decode_value, encode_value
from infoflow.workbook import store
from infoflow.workbook.address import CellAddress
from infoflow.workbook.engine import (
    BadParamRef,
    ColumnNotWritable,
    ModeError,
    NothingToPush,
    OverlapError,
    ParamSource,
    ProtectedCell,
    UnknownBinding,
    UnknownCheckpoint,
    UnknownService,
    Workbook,
    WorkbookError,
)


class BindParam(BaseModel):
    name: str
    literal: str | None = None
    literal_type: str = "text"
    ref: str | None = None


class BindRequest(BaseModel):
    origin: str
    service: str
    mode: str = "read-only"
    params: list[BindParam] = []


class EditRequest(BaseModel):
    address: str
    value: str | None = None  # None clears the cell
    value_type: str | None = None  # defaults to the bound column type, else text


class CheckpointRequest(BaseModel):
    label: str


def _value_json(value: Value) -> dict:
    return {"value": None if value.is_null else encode_value(value), "type": value.tag}


_STATUS = {
    ProtectedCell: (409, "protected-cell"),
    ColumnNotWritable: (409, "column-not-writable"),
    OverlapError: (409, "overlap"),
    UnknownService: (404, "unknown-service"),
    UnknownBinding: (404, "unknown-binding"),
    UnknownCheckpoint: (404, "unknown-checkpoint"),
    BadParamRef: (400, "bad-param-ref"),
    NothingToPush: (400, "nothing-to-push"),
    ModeError: (400, "mode-error"),
}


def create_session_app(workbook: Workbook, path: str | Path | None = None, user: str = "local") -> FastAPI:
    app = FastAPI(title="infoflow workbook session", openapi_url=None, docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.workbook = workbook
    lock = threading.Lock()

    def persist() -> None:
        if path is not None:
            store.save(workbook, path)

    @app.exception_handler(WorkbookError)
    def workbook_error(_request, exc: WorkbookError):
        status, code = 400, "workbook-error"
        for cls, (s, c) in _STATUS.items():
            if isinstance(exc, cls):
                status, code = s, c
                break
        return JSONResponse(status_code=status, content={"error": code, "message": str(exc)})

    @app.exception_handler(ServerError)
    def server_error(_request, exc: ServerError):
        return JSONResponse(
            status_code=502,
            content={"error": exc.code or "server-error", "message": str(exc), "serverStatus": exc.status},
        )

    @app.exception_handler(DecodeError)
    @app.exception_handler(ValueError)
    def bad_value(_request, exc: Exception):
        return JSONResponse(status_code=400, content={"error": "bad-request", "message": str(exc)})

    def binding_json(binding) -> dict:
        return {
            "id": binding.binding_id,
            "origin": str(binding.origin),
            "service": binding.service,
            "mode": binding.mode,
            "state": workbook.staleness(binding.binding_id),
            "error": binding.error_message,
            "lastRefresh": None
            if binding.last_refresh is None
            else encode_value(Value.timestamp(binding.last_refresh)),
            "refreshSeconds": binding.refresh_seconds,
            "updateService": binding.update_service,
            "columns": [{"name": c.name, "type": c.type} for c in binding.columns],
            "formatHints": {column: hint for column, hint in binding.format_hints},
            "writableColumns": list(binding.writable_columns),
            "rows": binding.data_rows,
            "params": [
                {
                    "name": name,
                    "kind": source.kind,
                    **(
                        _value_json(source.literal)
                        if source.kind == "literal"
                        else {"ref": str(source.ref)}
                    ),
                }
                for name, source in binding.params
            ],
        }

    @app.get("/wb/grid")
    def grid():
        cells = []
        blocks = {b.binding_id: b.block() for b in workbook.bindings.values()}
        addresses = set(workbook.grid)
        for block in blocks.values():
            addresses |= block
        for address in sorted(addresses, key=CellAddress.sort_key):
            value = workbook.grid.get(address, NULL)
            binding = next(
                (workbook.bindings[bid] for bid, block in blocks.items() if address in block), None
            )
            column = binding.column_name_at(address) if binding else None
            cells.append(
                {
                    "address": str(address),
                    **_value_json(value),
                    "binding": binding.binding_id if binding else None,
                    "header": bool(binding and address.row == binding.origin.row),
                    "readOnly": bool(binding and binding.mode == "read-only"),
                    "writable": bool(
                        binding
                        and binding.mode == "writable"
                        and address.row > binding.origin.row
                        and column in binding.writable_columns
                    ),
                    "dirty": address in workbook.dirty,
                }
            )
        return {"cells": cells}

    @app.get("/wb/bindings")
    def bindings():
        return {"bindings": [binding_json(b) for _, b in sorted(workbook.bindings.items())]}

    @app.post("/wb/bind")
    def bind(request: BindRequest):
        params = []
        for p in request.params:
            if p.ref is not None:
                params.append((p.name, ParamSource.of_ref(CellAddress.parse(p.ref))))
            elif p.literal is not None:
                params.append((p.name, ParamSource.of_literal(decode_value(p.literal_type, p.literal))))
            else:
                raise ValueError(f"param {p.name}: provide literal or ref")
        with lock:
            binding_id = workbook.bind(
                CellAddress.parse(request.origin), request.service, params, request.mode
            )
            persist()
        return {"bindingId": binding_id}

    @app.post("/wb/refresh/{binding_id}")
    def refresh(binding_id: int):
        with lock:
            outcome = workbook.refresh(binding_id, user=user)
            persist()
        return {
            "state": outcome.state,
            "changedCells": outcome.changed_cells,
            "message": outcome.message,
            "binding": binding_json(workbook.bindings[binding_id]),
        }

    @app.post("/wb/cell")
    def edit(request: EditRequest):
        address = CellAddress.parse(request.address)
        value_type = request.value_type
        if value_type is None:
            binding = workbook.binding_at(address)
            column_index = address.column - binding.origin.column if binding else -1
            if binding and binding.columns and 0 <= column_index < len(binding.columns):
                value_type = binding.columns[column_index].type
            else:
                value_type = "text"
        value = NULL if request.value is None else decode_value(value_type, request.value)
        with lock:
            workbook.edit_cell(address, value, user=user)
            persist()
        return {"address": str(address), **_value_json(value), "dirty": address in workbook.dirty}

    @app.post("/wb/push/{binding_id}")
    def push(binding_id: int):
        with lock:
            applied = workbook.push_updates(binding_id, user=user)
            persist()
        return {"pushed": applied}

    @app.get("/wb/audit/{address}")
    def audit(address: str):
        records = workbook.audit_of(CellAddress.parse(address))
        return {
            "address": address,
            "records": [
                {
                    "previous": _value_json(r.previous),
                    "new": _value_json(r.new),
                    "timestamp": encode_value(Value.timestamp(r.timestamp)),
                    "user": r.user,
                    "origin": r.origin,
                }
                for r in records
            ],
        }

    @app.post("/wb/checkpoint")
    def checkpoint(request: CheckpointRequest):
        with lock:
            checkpoint_id = workbook.checkpoint(request.label)
            persist()
        return {"checkpointId": checkpoint_id}

    @app.post("/wb/restore/{checkpoint_id}")
    def restore(checkpoint_id: int):
        with lock:
            workbook.restore(checkpoint_id, user=user)
            persist()
        return {"restored": checkpoint_id}

    @app.get("/wb/checkpoints")
    def checkpoints():
        return {
            "checkpoints": [
                {
                    "id": c.checkpoint_id,
                    "label": c.label,
                    "timestamp": encode_value(Value.timestamp(c.timestamp)),
                }
                for c in workbook.checkpoints
            ]
        }

    return app
