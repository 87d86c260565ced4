// Payload shapes for the workbook session facade (JSON) and the delivery
// server's directory document. Field names mirror the wire format exactly;
// the UI renders these verbatim and computes nothing from them.

export type ValueType = "text" | "number" | "boolean" | "timestamp" | "null";

export interface CellPayload {
  address: string;
  value: string | null;
  type: ValueType;
  binding: number | null;
  header: boolean;
  readOnly: boolean;
  writable: boolean;
  dirty: boolean;
}

export interface GridPayload {
  cells: CellPayload[];
}

export interface ColumnInfo {
  name: string;
  type: string;
}

export interface ParamInfo {
  name: string;
  kind: "literal" | "ref";
  value?: string;
  type?: string;
  ref?: string;
}

export type BindingState = "never-refreshed" | "fresh" | "stale" | "error";

export interface BindingPayload {
  id: number;
  origin: string;
  service: string;
  mode: "read-only" | "writable";
  state: BindingState;
  error: string | null;
  lastRefresh: string | null;
  refreshSeconds: number | null;
  updateService: string | null;
  columns: ColumnInfo[];
  formatHints: Record<string, string>;
  writableColumns: string[];
  rows: number;
  params: ParamInfo[];
}

export interface BindingsPayload {
  bindings: BindingPayload[];
}

export interface AuditValue {
  value: string | null;
  type: ValueType;
}

export interface AuditRecord {
  previous: AuditValue;
  new: AuditValue;
  timestamp: string;
  user: string;
  origin: "refresh" | "manual-edit" | "restore" | "push-confirm";
}

export interface AuditPayload {
  address: string;
  records: AuditRecord[];
}

export interface CheckpointInfo {
  id: number;
  label: string;
  timestamp: string;
}

export interface CheckpointsPayload {
  checkpoints: CheckpointInfo[];
}

export interface DirectoryKey {
  name: string;
  type: string;
  required: boolean;
}

export interface DirectoryService {
  name: string;
  version: number;
  description: string;
  keys: DirectoryKey[];
}

export interface BindParam {
  name: string;
  literal?: string;
  literal_type?: string;
  ref?: string;
}

export interface BindRequest {
  origin: string;
  service: string;
  mode: "read-only" | "writable";
  params: BindParam[];
}

export interface RefreshResult {
  state: BindingState;
  changedCells: number;
  message: string | null;
  binding: number;
}
