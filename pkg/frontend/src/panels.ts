// Side panels: bindings with staleness badges, per-cell audit history,
// checkpoints, and the authorized service directory.

import type {
  AuditPayload,
  AuditValue,
  BindingPayload,
  CheckpointInfo,
  DirectoryService,
} from "./types.js";

// The badge flips to stale once refresh-seconds have elapsed since the last
// refresh. The threshold comes from the service metadata untouched; the
// client clock only supplies "now".
export function bindingBadge(binding: BindingPayload, nowMs: number): string {
  if (binding.state === "error") return "error";
  if (binding.state === "never-refreshed" || binding.lastRefresh === null) {
    return "never-refreshed";
  }
  if (
    binding.refreshSeconds !== null &&
    nowMs - Date.parse(binding.lastRefresh) > binding.refreshSeconds * 1000
  ) {
    return "stale";
  }
  return binding.state;
}

export interface BindingHandlers {
  onRefresh(id: number): void;
  onPush(id: number): void;
}

export function renderBindings(
  container: HTMLElement,
  bindings: BindingPayload[],
  nowMs: number,
  handlers: BindingHandlers,
): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  if (bindings.length === 0) {
    const note = doc.createElement("p");
    note.textContent = "No bindings yet.";
    container.appendChild(note);
    return;
  }
  const list = doc.createElement("ul");
  list.className = "bindings";
  for (const binding of bindings) {
    const item = doc.createElement("li");
    item.dataset.binding = String(binding.id);

    const label = doc.createElement("span");
    label.className = "binding-label";
    label.textContent = `#${binding.id} ${binding.service} @ ${binding.origin} (${binding.mode}, ${binding.rows} rows)`;
    item.appendChild(label);

    const badge = doc.createElement("span");
    const state = bindingBadge(binding, nowMs);
    badge.className = `badge badge-${state}`;
    badge.textContent = state;
    item.appendChild(badge);

    const refresh = doc.createElement("button");
    refresh.textContent = "Refresh";
    refresh.className = "refresh-binding";
    refresh.addEventListener("click", () => handlers.onRefresh(binding.id));
    item.appendChild(refresh);

    if (binding.mode === "writable" && binding.updateService !== null) {
      const push = doc.createElement("button");
      push.textContent = "Push";
      push.className = "push-binding";
      push.addEventListener("click", () => handlers.onPush(binding.id));
      item.appendChild(push);
    }

    if (binding.state === "error" && binding.error !== null) {
      const err = doc.createElement("span");
      err.className = "binding-error";
      err.textContent = binding.error;
      item.appendChild(err);
    }
    list.appendChild(item);
  }
  container.appendChild(list);
}

function describeValue(value: AuditValue): string {
  return value.value === null ? "(null)" : value.value;
}

export function renderAudit(container: HTMLElement, payload: AuditPayload | null): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  if (payload === null) {
    const note = doc.createElement("p");
    note.textContent = "Select a cell to see its history.";
    container.appendChild(note);
    return;
  }
  const title = doc.createElement("h4");
  title.textContent = `History of ${payload.address}`;
  container.appendChild(title);
  if (payload.records.length === 0) {
    const note = doc.createElement("p");
    note.className = "no-history";
    note.textContent = "no history";
    container.appendChild(note);
    return;
  }
  const table = doc.createElement("table");
  table.className = "audit";
  const head = doc.createElement("tr");
  for (const column of ["time", "user", "origin", "previous", "new"]) {
    const th = doc.createElement("th");
    th.textContent = column;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const record of payload.records) {
    const tr = doc.createElement("tr");
    tr.className = "audit-record";
    for (const text of [
      record.timestamp,
      record.user,
      record.origin,
      describeValue(record.previous),
      describeValue(record.new),
    ]) {
      const td = doc.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  container.appendChild(table);
}

export function renderCheckpoints(
  container: HTMLElement,
  checkpoints: CheckpointInfo[],
  onRestore: (id: number) => void,
): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  if (checkpoints.length === 0) {
    const note = doc.createElement("p");
    note.textContent = "No checkpoints.";
    container.appendChild(note);
    return;
  }
  const list = doc.createElement("ul");
  list.className = "checkpoints";
  for (const checkpoint of checkpoints) {
    const item = doc.createElement("li");
    item.dataset.checkpoint = String(checkpoint.id);
    const label = doc.createElement("span");
    label.textContent = `#${checkpoint.id} ${checkpoint.label} (${checkpoint.timestamp})`;
    item.appendChild(label);
    const restore = doc.createElement("button");
    restore.textContent = "Restore";
    restore.className = "restore-checkpoint";
    restore.addEventListener("click", () => onRestore(checkpoint.id));
    item.appendChild(restore);
    list.appendChild(item);
  }
  container.appendChild(list);
}

export function renderDirectory(
  container: HTMLElement,
  services: DirectoryService[],
  onPick: (service: DirectoryService) => void,
): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  if (services.length === 0) {
    const note = doc.createElement("p");
    note.className = "empty-directory";
    note.textContent = "No services are authorized for this token.";
    container.appendChild(note);
    return;
  }
  const list = doc.createElement("ul");
  list.className = "directory";
  for (const service of services) {
    const item = doc.createElement("li");
    item.dataset.service = service.name;
    const pick = doc.createElement("button");
    pick.className = "pick-service";
    pick.textContent = `${service.name} v${service.version}`;
    pick.addEventListener("click", () => onPick(service));
    item.appendChild(pick);
    const desc = doc.createElement("span");
    desc.className = "service-description";
    desc.textContent = service.description;
    item.appendChild(desc);
    const keys = doc.createElement("span");
    keys.className = "service-keys";
    keys.textContent = service.keys.map((k) => `${k.name}:${k.type}`).join(", ");
    item.appendChild(keys);
    list.appendChild(item);
  }
  container.appendChild(list);
}
