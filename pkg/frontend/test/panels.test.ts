import { describe, expect, it } from "vitest";
import { bindingBadge, renderAudit, renderBindings, renderCheckpoints } from "../src/panels";
import type { AuditPayload, BindingPayload, BindingsPayload } from "../src/types";
import { fixture } from "./fake-backend";

const binding = fixture<BindingsPayload>("bindings.json").bindings[0];
const refreshedAt = Date.parse(binding.lastRefresh!);

describe("staleness badge", () => {
  it("stays fresh inside the refresh window", () => {
    expect(bindingBadge(binding, refreshedAt + 299_000)).toBe("fresh");
  });

  it("flips to stale once refresh-seconds elapse", () => {
    expect(bindingBadge(binding, refreshedAt + 301_000)).toBe("stale");
  });

  it("reports errors and unrefreshed bindings as such", () => {
    expect(bindingBadge({ ...binding, state: "error" }, refreshedAt)).toBe("error");
    expect(
      bindingBadge({ ...binding, state: "never-refreshed", lastRefresh: null }, refreshedAt),
    ).toBe("never-refreshed");
  });
});

describe("bindings panel", () => {
  function render(b: BindingPayload, nowMs: number): HTMLElement {
    const container = document.createElement("div");
    renderBindings(container, [b], nowMs, { onRefresh() {}, onPush() {} });
    return container;
  }

  it("shows the badge and a push button for writable bindings", () => {
    const container = render(binding, refreshedAt);
    expect(container.querySelector(".badge")!.textContent).toBe("fresh");
    expect(container.querySelector(".push-binding")).not.toBeNull();
  });

  it("renders the server error message inline", () => {
    const container = render({ ...binding, state: "error", error: "service unreachable" }, refreshedAt);
    expect(container.querySelector(".binding-error")!.textContent).toBe("service unreachable");
  });
});

describe("audit panel", () => {
  it("lists records newest-first exactly as delivered", () => {
    const payload = fixture<AuditPayload>("audit.json");
    const container = document.createElement("div");
    renderAudit(container, payload);
    const rows = Array.from(container.querySelectorAll(".audit-record"));
    expect(rows.length).toBe(payload.records.length);
    rows.forEach((row, i) => {
      const record = payload.records[i];
      const cells = Array.from(row.querySelectorAll("td")).map((td) => td.textContent);
      expect(cells).toEqual([
        record.timestamp,
        record.user,
        record.origin,
        record.previous.value ?? "(null)",
        record.new.value ?? "(null)",
      ]);
    });
  });

  it("says 'no history' for an untouched cell", () => {
    const container = document.createElement("div");
    renderAudit(container, { address: "Sheet1!Z9", records: [] });
    expect(container.querySelector(".no-history")!.textContent).toBe("no history");
  });
});

describe("checkpoints panel", () => {
  it("offers a restore button per checkpoint", () => {
    const container = document.createElement("div");
    const restored: number[] = [];
    renderCheckpoints(
      container,
      [{ id: 1, label: "before edits", timestamp: "2026-01-01T12:00:00Z" }],
      (id) => restored.push(id),
    );
    (container.querySelector(".restore-checkpoint") as HTMLButtonElement).click();
    expect(restored).toEqual([1]);
  });
});
