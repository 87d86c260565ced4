// In-memory stand-in for the delivery server and the session facade, built
// on payloads captured from the real backends over the shipped fixtures.
// Tests install its fetch() and drive the UI against it.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8")) as T;
}

export const DIRECTORY_XML = readFileSync(join(FIXTURES, "directory.xml"), "utf-8").trim();

function response(status: number, body: unknown, contentType = "application/json") {
  const text = contentType === "application/json" ? JSON.stringify(body) : String(body);
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => JSON.parse(text),
    text: async () => text,
  } as Response;
}

interface GridCell {
  address: string;
  value: string | null;
  type: string;
  binding: number | null;
  header: boolean;
  readOnly: boolean;
  writable: boolean;
  dirty: boolean;
}

export class FakeBackend {
  grid: { cells: GridCell[] };
  readonly restoredGrid: { cells: GridCell[] };
  bindings = fixture<{ bindings: unknown[] }>("bindings.json");
  checkpoints = fixture<{ checkpoints: unknown[] }>("checkpoints.json");
  audit = fixture<{ address: string; records: unknown[] }>("audit.json");
  directoryXml = DIRECTORY_XML;
  validToken = "alice-token";
  requests: string[] = [];

  // when set, the next matching request resolves only on demand
  deferred: { match: string; resolve: () => void } | null = null;

  constructor() {
    this.grid = fixture("grid.json");
    this.restoredGrid = fixture("grid-restored.json");
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    this.requests.push(`${method} ${path}`);

    if (this.deferred && path.startsWith(this.deferred.match)) {
      const gate = this.deferred;
      this.deferred = null;
      await new Promise<void>((resolve) => {
        gate.resolve = resolve;
      });
    }

    if (path === "/directory") {
      const auth = (init?.headers as Record<string, string> | undefined)?.["Authorization"];
      if (auth !== `Bearer ${this.validToken}`) {
        return response(401, "unauthorized", "text/plain");
      }
      return response(200, this.directoryXml, "application/xml");
    }
    if (path === "/wb/grid") return response(200, this.grid);
    if (path === "/wb/bindings") return response(200, this.bindings);
    if (path === "/wb/checkpoints") return response(200, this.checkpoints);
    if (path.startsWith("/wb/audit/")) {
      const address = decodeURIComponent(path.slice("/wb/audit/".length));
      if (address === this.audit.address) return response(200, this.audit);
      return response(200, { address, records: [] });
    }
    if (path === "/wb/cell" && method === "POST") {
      const body = JSON.parse(String(init?.body));
      const cell = this.grid.cells.find((c) => c.address === body.address);
      if (cell && (cell.header || cell.readOnly)) {
        return response(409, {
          error: "protected-cell",
          message: `cell ${body.address} is protected`,
        });
      }
      if (cell && cell.binding !== null && !cell.writable) {
        return response(409, {
          error: "column-not-writable",
          message: `column of ${body.address} is not writable`,
        });
      }
      if (cell) {
        cell.value = body.value;
        cell.dirty = cell.binding !== null;
      }
      return response(200, cell ?? { address: body.address, value: body.value });
    }
    if (path.startsWith("/wb/refresh/") && method === "POST") {
      return response(200, { state: "fresh", changedCells: 0, message: null, binding: 1 });
    }
    if (path.startsWith("/wb/push/") && method === "POST") {
      return response(200, { pushed: 1 });
    }
    if (path === "/wb/checkpoint" && method === "POST") {
      return response(200, { checkpointId: 2 });
    }
    if (path.startsWith("/wb/restore/") && method === "POST") {
      this.grid = this.restoredGrid;
      return response(200, { restored: this.grid.cells.length });
    }
    if (path === "/wb/bind" && method === "POST") {
      const body = JSON.parse(String(init?.body));
      if (body.origin === "Sheet1!B2") {
        return response(409, { error: "overlap", message: "binding overlaps binding 1" });
      }
      return response(200, { bindingId: 2 });
    }
    return response(404, { error: "not-found", message: path });
  };
}
