"""Workbook engine: a cell grid with service bindings.

Replaces copy-paste data flow: blocks of cells are bound to a service
invocation and refreshed from the server, read-only blocks are protected
against manual edits, every value change lands in a bounded per-cell audit
ring, checkpoints snapshot grid+bindings for later restore, and dirty
writable cells can be pushed back to the owning source.

A workbook is a single-writer state machine; the session facade serializes
mutations. All time comes from an injected clock.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone

from infoflow.client import ServerClient, ServerError
from infoflow.connectors.rules import UpdateRow
from infoflow.errors import InfoflowError
from infoflow.model.values import NULL, Column, Value, decode_value, encode_value
from infoflow.workbook.address import CellAddress

DEFAULT_AUDIT_DEPTH = 10


class WorkbookError(InfoflowError):
    pass


class OverlapError(WorkbookError):
    pass


class UnknownService(WorkbookError):
    pass


class UnknownBinding(WorkbookError):
    pass


class ModeError(WorkbookError):
    pass


class ProtectedCell(WorkbookError):
    pass


class ColumnNotWritable(WorkbookError):
    pass


class BadParamRef(WorkbookError):
    pass


class NothingToPush(WorkbookError):
    pass


class UnknownCheckpoint(WorkbookError):
    pass


@dataclass(frozen=True)
class ParamSource:
    kind: str  # "literal" | "ref"
    literal: Value | None = None
    ref: CellAddress | None = None

    @staticmethod
    def of_literal(value: Value) -> "ParamSource":
        return ParamSource("literal", literal=value)

    @staticmethod
    def of_ref(address: CellAddress) -> "ParamSource":
        return ParamSource("ref", ref=address)


@dataclass
class CellBinding:
    binding_id: int
    origin: CellAddress
    service: str
    params: tuple[tuple[str, ParamSource], ...]
    mode: str  # "read-only" | "writable"
    # from the service schema at bind time
    param_types: tuple[tuple[str, str], ...] = ()
    updatable: bool = False
    writable_columns: tuple[str, ...] = ()
    update_key_columns: tuple[tuple[str, str | None], ...] = ()  # (column, bound param)
    # refresh state
    last_refresh: datetime | None = None
    refresh_seconds: int | None = None
    update_service: str | None = None
    format_hints: tuple[tuple[str, str], ...] = ()
    columns: tuple[Column, ...] = ()
    data_rows: int = 0
    state: str = "never-refreshed"  # never-refreshed | fresh | error
    error_message: str | None = None

    def block(self) -> set[CellAddress]:
        """Addresses currently occupied: header + data, 1x1 before any refresh."""
        width = max(len(self.columns), 1)
        height = 1 + self.data_rows if self.columns else 1
        return {
            self.origin.offset(r, c)
            for r in range(height)
            for c in range(width)
        }

    def column_name_at(self, address: CellAddress) -> str | None:
        if not self.columns:
            return None
        idx = address.column - self.origin.column
        if 0 <= idx < len(self.columns):
            return self.columns[idx].name
        return None


@dataclass(frozen=True)
class CellAuditRecord:
    address: CellAddress
    previous: Value
    new: Value
    timestamp: datetime
    user: str
    origin: str  # refresh | manual-edit | restore | push-confirm


@dataclass(frozen=True)
class Checkpoint:
    checkpoint_id: int
    label: str
    timestamp: datetime
    grid: dict[CellAddress, Value]
    bindings: dict[int, CellBinding]
    next_binding_id: int


@dataclass(frozen=True)
class RefreshOutcome:
    state: str
    changed_cells: int
    message: str | None = None


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class Workbook:
    def __init__(
        self,
        client: ServerClient | None = None,
        audit_depth: int = DEFAULT_AUDIT_DEPTH,
        clock=None,
    ):
        self.client = client
        self.audit_depth = audit_depth
        self.clock = clock or _utcnow
        self.grid: dict[CellAddress, Value] = {}
        self.bindings: dict[int, CellBinding] = {}
        self.audit: dict[CellAddress, deque[CellAuditRecord]] = {}
        self.checkpoints: list[Checkpoint] = []
        self.dirty: dict[CellAddress, int] = {}
        self.next_binding_id = 1
        self.next_checkpoint_id = 1

    # --- internals -----------------------------------------------------------

    def _record(self, address: CellAddress, previous: Value, new: Value, user: str, origin: str):
        ring = self.audit.setdefault(address, deque(maxlen=self.audit_depth))
        ring.appendleft(
            CellAuditRecord(
                address=address,
                previous=previous,
                new=new,
                timestamp=self.clock(),
                user=user,
                origin=origin,
            )
        )

    def _set_cell(self, address: CellAddress, value: Value, user: str, origin: str) -> bool:
        previous = self.grid.get(address, NULL)
        if previous == value:
            return False
        if value.is_null:
            self.grid.pop(address, None)
        else:
            self.grid[address] = value
        self._record(address, previous, value, user, origin)
        return True

    def binding_at(self, address: CellAddress) -> CellBinding | None:
        for binding in self.bindings.values():
            if address in binding.block():
                return binding
        return None

    def _require_binding(self, binding_id: int) -> CellBinding:
        binding = self.bindings.get(binding_id)
        if binding is None:
            raise UnknownBinding(f"no binding {binding_id}")
        return binding

    def _require_client(self) -> ServerClient:
        if self.client is None:
            raise WorkbookError("workbook has no server client")
        return self.client

    # --- operations ----------------------------------------------------------

    def bind(
        self,
        origin: CellAddress,
        service: str,
        params: list[tuple[str, ParamSource]],
        mode: str = "read-only",
    ) -> int:
        if mode not in ("read-only", "writable"):
            raise ModeError(f"unknown binding mode: {mode!r}")
        client = self._require_client()
        visible = {entry.name for entry in client.directory()}
        if service not in visible:
            raise UnknownService(f"service {service!r} is not in your directory")
        schema = client.schema(service)
        if mode == "writable" and not schema.updatable:
            raise ModeError(f"service {service!r} does not support updates")
        occupied = set().union(*(b.block() for b in self.bindings.values())) if self.bindings else set()
        if origin in occupied:
            raise OverlapError(f"cell {origin} is already inside a bound block")
        binding = CellBinding(
            binding_id=self.next_binding_id,
            origin=origin,
            service=service,
            params=tuple(params),
            mode=mode,
            param_types=tuple((k.name, k.type) for k in schema.key_params),
            updatable=schema.updatable,
            writable_columns=schema.update.writable_columns if schema.update else (),
            update_key_columns=schema.update.key_columns if schema.update else (),
        )
        self.bindings[binding.binding_id] = binding
        self.next_binding_id += 1
        return binding.binding_id

    def _resolve_params(self, binding: CellBinding) -> list[tuple[str, str]]:
        out = []
        for name, source in binding.params:
            if source.kind == "literal":
                out.append((name, encode_value(source.literal)))
            else:
                value = self.grid.get(source.ref, NULL)
                if value.is_null:
                    raise BadParamRef(f"param {name}: referenced cell {source.ref} is empty")
                out.append((name, encode_value(value)))
        return out

    def refresh(self, binding_id: int, user: str = "local") -> RefreshOutcome:
        binding = self._require_binding(binding_id)
        client = self._require_client()
        params = self._resolve_params(binding)
        try:
            response = client.invoke(binding.service, params)
        except ServerError as exc:
            binding.state = "error"
            binding.error_message = str(exc)
            return RefreshOutcome(state="error", changed_cells=0, message=str(exc))
        table = response.table
        new_block: dict[CellAddress, Value] = {}
        for c, col in enumerate(table.columns):
            new_block[binding.origin.offset(0, c)] = Value.text(col.name)
        for r, row in enumerate(table.rows):
            for c, cell in enumerate(row):
                new_block[binding.origin.offset(1 + r, c)] = cell
        others = set().union(
            *(b.block() for b in self.bindings.values() if b.binding_id != binding_id)
        ) if len(self.bindings) > 1 else set()
        if set(new_block) & others:
            raise OverlapError(
                f"refresh of binding {binding_id} would overlap another bound block"
            )
        old_block = binding.block() if binding.columns else set()
        changed = 0
        for address, value in new_block.items():
            if self._set_cell(address, value, user, "refresh"):
                changed += 1
        for address in sorted(old_block - set(new_block), key=CellAddress.sort_key):
            if self._set_cell(address, NULL, user, "refresh"):
                changed += 1
        binding.columns = table.columns
        binding.data_rows = len(table.rows)
        binding.last_refresh = self.clock()
        binding.refresh_seconds = response.meta.refresh_seconds
        binding.update_service = response.meta.update_service
        binding.format_hints = response.meta.format_hints
        binding.state = "fresh"
        binding.error_message = None
        return RefreshOutcome(state="fresh", changed_cells=changed)

    def edit_cell(self, address: CellAddress, value: Value, user: str = "local") -> None:
        binding = self.binding_at(address)
        if binding is None:
            self._set_cell(address, value, user, "manual-edit")
            return
        if binding.mode == "read-only":
            raise ProtectedCell(f"{address} is inside read-only binding {binding.binding_id}")
        if address.row == binding.origin.row:
            raise ProtectedCell(f"{address} is a header cell of binding {binding.binding_id}")
        column = binding.column_name_at(address)
        if column is None or column not in binding.writable_columns:
            raise ColumnNotWritable(f"column {column!r} of binding {binding.binding_id} is not writable")
        col_index = address.column - binding.origin.column
        declared = binding.columns[col_index].type
        if value.tag not in (declared, "null"):
            raise ColumnNotWritable(f"column {column!r} holds {declared} values, got {value.tag}")
        self._set_cell(address, value, user, "manual-edit")
        self.dirty[address] = binding.binding_id

    def push_updates(self, binding_id: int, user: str = "local") -> int:
        binding = self._require_binding(binding_id)
        if binding.mode != "writable":
            raise ModeError(f"binding {binding_id} is not writable")
        client = self._require_client()
        dirty_cells = sorted(
            (a for a, b in self.dirty.items() if b == binding_id), key=CellAddress.sort_key
        )
        if not dirty_cells:
            raise NothingToPush(f"binding {binding_id} has no dirty cells")
        presentation = [c.name for c in binding.columns]
        params = dict(self._resolve_params(binding))
        by_row: dict[int, dict[str, Value]] = {}
        for address in dirty_cells:
            row_index = address.row - binding.origin.row - 1
            column = binding.column_name_at(address)
            by_row.setdefault(row_index, {})[column] = self.grid.get(address, NULL)
        rows = []
        for row_index in sorted(by_row):
            keys: dict[str, Value] = {}
            for column, param in binding.update_key_columns:
                if column in presentation:
                    key_addr = binding.origin.offset(1 + row_index, presentation.index(column))
                    keys[column] = self.grid.get(key_addr, NULL)
                elif param is not None and param in params:
                    param_type = dict(binding.param_types).get(param, "text")
                    keys[column] = decode_value(param_type, params[param])
                else:
                    raise WorkbookError(
                        f"cannot derive key column {column!r}: not in the block and not bound to a param"
                    )
            rows.append(UpdateRow(key_values=keys, new_values=by_row[row_index]))
        service = binding.update_service or binding.service
        applied = client.update(service, rows)
        for address in dirty_cells:
            current = self.grid.get(address, NULL)
            self._record(address, current, current, user, "push-confirm")
            self.dirty.pop(address, None)
        return applied

    def audit_of(self, address: CellAddress) -> list[CellAuditRecord]:
        return list(self.audit.get(address, ()))

    def checkpoint(self, label: str) -> int:
        snap = Checkpoint(
            checkpoint_id=self.next_checkpoint_id,
            label=label,
            timestamp=self.clock(),
            grid=dict(self.grid),
            bindings=copy.deepcopy(self.bindings),
            next_binding_id=self.next_binding_id,
        )
        self.checkpoints.append(snap)
        self.next_checkpoint_id += 1
        return snap.checkpoint_id

    def list_checkpoints(self) -> list[Checkpoint]:
        return list(self.checkpoints)

    def restore(self, checkpoint_id: int, user: str = "local") -> None:
        snap = next((c for c in self.checkpoints if c.checkpoint_id == checkpoint_id), None)
        if snap is None:
            raise UnknownCheckpoint(f"no checkpoint {checkpoint_id}")
        touched = set(self.grid) | set(snap.grid)
        for address in sorted(touched, key=CellAddress.sort_key):
            self._set_cell(address, snap.grid.get(address, NULL), user, "restore")
        self.bindings = copy.deepcopy(snap.bindings)
        self.next_binding_id = max(self.next_binding_id, snap.next_binding_id)
        self.dirty.clear()

    def staleness(self, binding_id: int) -> str:
        binding = self._require_binding(binding_id)
        if binding.state in ("never-refreshed", "error"):
            return binding.state
        age = (self.clock() - binding.last_refresh).total_seconds()
        return "stale" if age > (binding.refresh_seconds or 0) else "fresh"
