// End-to-end UI behavior against a fake backend replaying payloads captured
// from the real server and facade over the shipped fixtures.

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { App } from "../src/app";
import { SessionApi } from "../src/api";
import type { AuditPayload, GridPayload } from "../src/types";
import { FakeBackend, fixture } from "./fake-backend";

const REFRESHED_AT = Date.parse("2026-01-01T12:00:00Z");

function makeStorage(initial: Record<string, string> = {}): Storage {
  const data = new Map(Object.entries(initial));
  return {
    get length() {
      return data.size;
    },
    clear: () => data.clear(),
    getItem: (k: string) => data.get(k) ?? null,
    key: (i: number) => Array.from(data.keys())[i] ?? null,
    removeItem: (k: string) => void data.delete(k),
    setItem: (k: string, v: string) => void data.set(k, v),
  };
}

async function flush(): Promise<void> {
  for (let i = 0; i < 6; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function td(root: HTMLElement, address: string): HTMLTableCellElement {
  return root.querySelector(`td[data-address="${address}"]`) as HTMLTableCellElement;
}

function typeInto(cell: HTMLTableCellElement, text: string): void {
  cell.dispatchEvent(new MouseEvent("dblclick", { bubbles: true }));
  const input = cell.querySelector("input") as HTMLInputElement;
  input.value = text;
  input.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter" }));
}

describe("grid app", () => {
  let backend: FakeBackend;
  let root: HTMLElement;
  let app: App;
  let confirmAnswer: boolean;

  function makeApp(storage: Storage, nowMs = REFRESHED_AT + 1000): App {
    return new App(root, {
      session: new SessionApi(""),
      serverBase: "http://server",
      now: () => nowMs,
      confirmFn: () => confirmAnswer,
      storage,
    });
  }

  beforeEach(() => {
    backend = new FakeBackend();
    vi.stubGlobal("fetch", backend.fetch);
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
    confirmAnswer = true;
    app = makeApp(makeStorage({ "infoflow-token": "alice-token" }));
  });

  afterEach(() => {
    app.stop();
    vi.unstubAllGlobals();
  });

  it("renders the bound block exactly as the facade grid payload", async () => {
    await app.start();
    await flush();
    const payload = fixture<GridPayload>("grid.json");
    for (const cell of payload.cells) {
      expect(td(root, cell.address).textContent).toBe(cell.value ?? "");
    }
  });

  it("lists exactly the directory services", async () => {
    await app.start();
    await flush();
    const names = Array.from(root.querySelectorAll("#directory-panel li")).map(
      (li) => (li as HTMLElement).dataset.service,
    );
    expect(names).toEqual(["customer-contact", "customer-info"]);
  });

  it("rejects typing into a protected cell with a visible tooltip", async () => {
    await app.start();
    await flush();
    const header = td(root, "Sheet1!B2");
    typeInto(header, "tampered");
    await flush();
    const tip = header.querySelector(".protection-tooltip")!;
    expect(tip.textContent).toContain("protected");
    expect(header.childNodes[0].textContent).toBe("name");
    expect(backend.grid.cells.find((c) => c.address === "Sheet1!B2")!.value).toBe("name");
  });

  it("writes through writable cells and re-renders from the facade", async () => {
    await app.start();
    await flush();
    typeInto(td(root, "Sheet1!D3"), "555-0123");
    await flush();
    expect(backend.requests).toContain("POST /wb/cell");
    expect(td(root, "Sheet1!D3").textContent).toBe("555-0123");
    expect(td(root, "Sheet1!D3").classList.contains("dirty")).toBe(true);
  });

  it("shows per-cell history equal to the audit endpoint payload", async () => {
    await app.start();
    await flush();
    td(root, "Sheet1!D3").dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await flush();
    const payload = fixture<AuditPayload>("audit.json");
    const rows = Array.from(root.querySelectorAll("#audit-panel .audit-record"));
    expect(rows.length).toBe(payload.records.length);
    rows.forEach((row, i) => {
      const cells = Array.from(row.querySelectorAll("td")).map((c) => c.textContent);
      const record = payload.records[i] as Record<string, any>;
      expect(cells).toEqual([
        record.timestamp,
        record.user,
        record.origin,
        record.previous.value ?? "(null)",
        record.new.value ?? "(null)",
      ]);
    });
  });

  it("says 'no history' for an untouched cell", async () => {
    await app.start();
    await flush();
    td(root, "Sheet1!B3").dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await flush();
    expect(root.querySelector("#audit-panel .no-history")!.textContent).toBe("no history");
  });

  it("restores a checkpoint after confirmation and re-renders the snapshot", async () => {
    await app.start();
    await flush();
    expect(td(root, "Sheet1!D3").textContent).toBe("555-0777");
    (root.querySelector(".restore-checkpoint") as HTMLButtonElement).click();
    await flush();
    expect(backend.requests).toContain("POST /wb/restore/1");
    expect(td(root, "Sheet1!D3").textContent).toBe("555-0100");
    expect(td(root, "Sheet1!D3").classList.contains("dirty")).toBe(false);
  });

  it("does not restore when the confirmation is declined", async () => {
    confirmAnswer = false;
    await app.start();
    await flush();
    (root.querySelector(".restore-checkpoint") as HTMLButtonElement).click();
    await flush();
    expect(backend.requests).not.toContain("POST /wb/restore/1");
    expect(td(root, "Sheet1!D3").textContent).toBe("555-0777");
  });

  it("prompts for sign-in when the token is rejected", async () => {
    const storage = makeStorage({ "infoflow-token": "stale-token" });
    app = makeApp(storage);
    await app.start();
    await flush();
    expect(root.querySelector(".signin-prompt")!.textContent).toContain("Token rejected");
    expect(storage.getItem("infoflow-token")).toBeNull();
    expect(root.querySelectorAll("#grid-panel td").length).toBe(0);

    (root.querySelector("#token-input") as HTMLInputElement).value = "alice-token";
    (root.querySelector("#signin-button") as HTMLButtonElement).click();
    await flush();
    expect(storage.getItem("infoflow-token")).toBe("alice-token");
    expect(td(root, "Sheet1!B2").textContent).toBe("name");
  });

  it("explains an empty service directory", async () => {
    backend.directoryXml = "<directory/>";
    await app.start();
    await flush();
    expect(root.querySelector(".empty-directory")!.textContent).toContain(
      "No services are authorized",
    );
  });

  it("shows a stale badge once refresh-seconds have elapsed", async () => {
    app = makeApp(makeStorage({ "infoflow-token": "alice-token" }), REFRESHED_AT + 301_000);
    await app.start();
    await flush();
    expect(root.querySelector("#bindings-panel .badge")!.textContent).toBe("stale");
  });

  it("renders an overlap rejection inline at the bind form", async () => {
    await app.start();
    await flush();
    (root.querySelector('li[data-service="customer-info"] .pick-service') as HTMLButtonElement).click();
    (root.querySelector("#bind-origin") as HTMLInputElement).value = "Sheet1!B2";
    (root.querySelector('input[data-param="customerID"]') as HTMLInputElement).value = "C001";
    (root.querySelector("#bind-submit") as HTMLButtonElement).click();
    await flush();
    expect(root.querySelector(".bind-error")!.textContent).toContain("overlap");
  });

  it("disables controls while a mutation is in flight", async () => {
    await app.start();
    await flush();
    const gate = { match: "/wb/refresh/", resolve: () => {} };
    backend.deferred = gate;
    (root.querySelector(".refresh-binding") as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    const push = root.querySelector(".push-binding") as HTMLButtonElement;
    expect(push.disabled).toBe(true);
    gate.resolve();
    await flush();
    expect((root.querySelector(".push-binding") as HTMLButtonElement).disabled).toBe(false);
  });
});
