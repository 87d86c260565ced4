// Thin fetch wrappers for the two backends the grid talks to: the workbook
// session facade (JSON) and the delivery server's directory endpoint (XML,
// bearer token). Every method maps one endpoint; no response is reshaped.

import type {
  AuditPayload,
  BindingsPayload,
  BindRequest,
  CheckpointsPayload,
  DirectoryService,
  GridPayload,
  RefreshResult,
} from "./types.js";
import { parseDirectory } from "./directory.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let code = `http-${res.status}`;
  let message = res.statusText || code;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") code = body.error;
    if (body && typeof body.message === "string") message = body.message;
  } catch {
    // non-JSON error body, keep the status text
  }
  throw new ApiError(res.status, code, message);
}

export class SessionApi {
  private readonly base: string;

  constructor(base = "") {
    this.base = base.replace(/\/$/, "");
  }

  private get<T>(path: string): Promise<T> {
    return fetch(this.base + path).then((res) => asJson<T>(res));
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method: "POST" };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    return fetch(this.base + path, init).then((res) => asJson<T>(res));
  }

  grid(): Promise<GridPayload> {
    return this.get("/wb/grid");
  }

  bindings(): Promise<BindingsPayload> {
    return this.get("/wb/bindings");
  }

  checkpoints(): Promise<CheckpointsPayload> {
    return this.get("/wb/checkpoints");
  }

  audit(address: string): Promise<AuditPayload> {
    return this.get(`/wb/audit/${encodeURIComponent(address)}`);
  }

  bind(request: BindRequest): Promise<{ bindingId: number }> {
    return this.post("/wb/bind", request);
  }

  refresh(bindingId: number): Promise<RefreshResult> {
    return this.post(`/wb/refresh/${bindingId}`);
  }

  setCell(address: string, value: string | null, valueType?: string): Promise<unknown> {
    const body: Record<string, unknown> = { address, value };
    if (valueType !== undefined) body.value_type = valueType;
    return this.post("/wb/cell", body);
  }

  push(bindingId: number): Promise<{ pushed: number }> {
    return this.post(`/wb/push/${bindingId}`);
  }

  checkpoint(label: string): Promise<{ checkpointId: number }> {
    return this.post("/wb/checkpoint", { label });
  }

  restore(checkpointId: number): Promise<{ restored: number }> {
    return this.post(`/wb/restore/${checkpointId}`);
  }
}

export class ServerApi {
  private readonly base: string;
  private readonly token: string;

  constructor(base: string, token: string) {
    this.base = base.replace(/\/$/, "");
    this.token = token;
  }

  async directory(): Promise<DirectoryService[]> {
    const res = await fetch(this.base + "/directory", {
      headers: { Authorization: `Bearer ${this.token}` },
    });
    if (!res.ok) {
      throw new ApiError(res.status, `http-${res.status}`, await res.text());
    }
    return parseDirectory(await res.text());
  }
}
