// Page controller. Holds the token, the latest facade payloads, and one
// in-flight-mutation lock; everything on screen is re-rendered from those
// payloads after each round trip.

import { ApiError, ServerApi, SessionApi } from "./api.js";
import { renderGrid, showProtectionNotice } from "./grid.js";
import {
  renderAudit,
  renderBindings,
  renderCheckpoints,
  renderDirectory,
} from "./panels.js";
import type {
  AuditPayload,
  BindParam,
  BindingsPayload,
  CheckpointsPayload,
  DirectoryService,
  GridPayload,
} from "./types.js";

const TOKEN_KEY = "infoflow-token";

export interface AppOptions {
  session: SessionApi;
  serverBase: string;
  now?: () => number;
  confirmFn?: (message: string) => boolean;
  storage?: Storage;
}

export class App {
  private readonly root: HTMLElement;
  private readonly session: SessionApi;
  private readonly serverBase: string;
  private readonly now: () => number;
  private readonly confirmFn: (message: string) => boolean;
  private readonly storage: Storage;

  private directory: DirectoryService[] = [];
  private grid: GridPayload = { cells: [] };
  private bindings: BindingsPayload = { bindings: [] };
  private checkpoints: CheckpointsPayload = { checkpoints: [] };
  private audit: AuditPayload | null = null;
  private selected: string | null = null;
  private pickedService: DirectoryService | null = null;
  private bindError: string | null = null;
  private pending = false;
  private badgeTimer: ReturnType<typeof setInterval> | null = null;

  constructor(root: HTMLElement, options: AppOptions) {
    this.root = root;
    this.session = options.session;
    this.serverBase = options.serverBase;
    this.now = options.now ?? (() => Date.now());
    this.confirmFn = options.confirmFn ?? ((message) => window.confirm(message));
    this.storage = options.storage ?? window.localStorage;
  }

  async start(): Promise<void> {
    this.buildSkeleton();
    const token = this.storage.getItem(TOKEN_KEY);
    if (token === null) {
      this.showSignIn("Enter your access token.");
      return;
    }
    await this.loadAll(token);
  }

  stop(): void {
    if (this.badgeTimer !== null) {
      clearInterval(this.badgeTimer);
      this.badgeTimer = null;
    }
  }

  private buildSkeleton(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    for (const id of [
      "status",
      "signin",
      "directory-panel",
      "bind-form",
      "grid-panel",
      "bindings-panel",
      "audit-panel",
      "checkpoints-panel",
    ]) {
      const div = doc.createElement("div");
      div.id = id;
      this.root.appendChild(div);
    }
  }

  private panel(id: string): HTMLElement {
    return this.root.querySelector(`#${id}`) as HTMLElement;
  }

  private showSignIn(message: string): void {
    const doc = this.root.ownerDocument;
    const panel = this.panel("signin");
    panel.textContent = "";
    const prompt = doc.createElement("p");
    prompt.className = "signin-prompt";
    prompt.textContent = message;
    panel.appendChild(prompt);
    const input = doc.createElement("input");
    input.id = "token-input";
    input.type = "password";
    panel.appendChild(input);
    const button = doc.createElement("button");
    button.id = "signin-button";
    button.textContent = "Sign in";
    button.addEventListener("click", () => {
      const token = input.value.trim();
      if (token === "") return;
      this.storage.setItem(TOKEN_KEY, token);
      void this.loadAll(token);
    });
    panel.appendChild(button);
  }

  private async loadAll(token: string): Promise<void> {
    try {
      this.directory = await new ServerApi(this.serverBase, token).directory();
    } catch (error) {
      if (error instanceof ApiError && error.status === 401) {
        this.storage.removeItem(TOKEN_KEY);
        this.showSignIn("Token rejected. Sign in again.");
        return;
      }
      this.showStatus(describeError(error));
      return;
    }
    this.panel("signin").textContent = "";
    await this.reloadWorkbook();
    this.render();
    if (this.badgeTimer === null) {
      this.badgeTimer = setInterval(() => this.renderBindingsPanel(), 1000);
    }
  }

  private async reloadWorkbook(): Promise<void> {
    [this.grid, this.bindings, this.checkpoints] = await Promise.all([
      this.session.grid(),
      this.session.bindings(),
      this.session.checkpoints(),
    ]);
    if (this.selected !== null) {
      this.audit = await this.session.audit(this.selected);
    }
  }

  private render(): void {
    renderDirectory(this.panel("directory-panel"), this.directory, (service) => {
      this.pickedService = service;
      this.renderBindForm();
    });
    this.renderBindForm();
    renderGrid(
      this.panel("grid-panel"),
      this.grid,
      {
        onSelect: (address) => void this.select(address),
        onEditCommit: (address, text, td) => void this.commitEdit(address, text, td),
      },
      this.selected,
    );
    this.renderBindingsPanel();
    renderAudit(this.panel("audit-panel"), this.audit);
    this.renderCheckpointsPanel();
  }

  private renderBindingsPanel(): void {
    // never rebuild controls while a mutation is on the wire; the rebuilt
    // buttons would come back enabled
    if (this.pending) return;
    renderBindings(this.panel("bindings-panel"), this.bindings.bindings, this.now(), {
      onRefresh: (id) => void this.mutate(() => this.session.refresh(id)),
      onPush: (id) => void this.mutate(() => this.session.push(id)),
    });
  }

  private renderCheckpointsPanel(): void {
    const panel = this.panel("checkpoints-panel");
    renderCheckpoints(panel, this.checkpoints.checkpoints, (id) => {
      if (!this.confirmFn(`Restore checkpoint ${id}? Unsaved edits will be lost.`)) return;
      void this.mutate(() => this.session.restore(id));
    });
    const doc = this.root.ownerDocument;
    const label = doc.createElement("input");
    label.id = "checkpoint-label";
    label.placeholder = "checkpoint label";
    panel.appendChild(label);
    const create = doc.createElement("button");
    create.id = "create-checkpoint";
    create.textContent = "Checkpoint";
    create.addEventListener("click", () => {
      void this.mutate(() => this.session.checkpoint(label.value));
    });
    panel.appendChild(create);
  }

  private renderBindForm(): void {
    const doc = this.root.ownerDocument;
    const form = this.panel("bind-form");
    form.textContent = "";
    if (this.pickedService === null) return;
    const service = this.pickedService;

    const title = doc.createElement("h4");
    title.textContent = `Bind ${service.name}`;
    form.appendChild(title);

    const origin = doc.createElement("input");
    origin.id = "bind-origin";
    origin.placeholder = "Sheet1!B2";
    form.appendChild(origin);

    const mode = doc.createElement("select");
    mode.id = "bind-mode";
    for (const value of ["read-only", "writable"]) {
      const option = doc.createElement("option");
      option.value = value;
      option.textContent = value;
      mode.appendChild(option);
    }
    form.appendChild(mode);

    const paramInputs = new Map<string, HTMLInputElement>();
    for (const key of service.keys) {
      const input = doc.createElement("input");
      input.className = "bind-param";
      input.dataset.param = key.name;
      input.placeholder = `${key.name} (${key.type}${key.required ? "" : ", optional"})`;
      paramInputs.set(key.name, input);
      form.appendChild(input);
    }

    const submit = doc.createElement("button");
    submit.id = "bind-submit";
    submit.textContent = "Bind + refresh";
    submit.addEventListener("click", () => {
      const params: BindParam[] = [];
      for (const [name, input] of paramInputs) {
        const raw = input.value.trim();
        if (raw === "") continue;
        // "@Sheet1!A1" takes the parameter from a cell, like the CLI
        if (raw.startsWith("@")) {
          params.push({ name, ref: raw.slice(1) });
        } else {
          params.push({ name, literal: raw });
        }
      }
      void this.mutate(async () => {
        try {
          const bound = await this.session.bind({
            origin: origin.value.trim(),
            service: service.name,
            mode: mode.value as "read-only" | "writable",
            params,
          });
          await this.session.refresh(bound.bindingId);
        } catch (error) {
          this.bindError = describeError(error);
          return;
        }
        this.bindError = null;
        this.pickedService = null;
      });
    });
    form.appendChild(submit);

    if (this.bindError !== null) {
      const note = doc.createElement("p");
      note.className = "bind-error";
      note.setAttribute("role", "alert");
      note.textContent = this.bindError;
      form.appendChild(note);
    }
  }

  private showStatus(message: string): void {
    this.panel("status").textContent = message;
  }

  private async select(address: string): Promise<void> {
    this.selected = address;
    try {
      this.audit = await this.session.audit(address);
    } catch (error) {
      this.audit = { address, records: [] };
      this.showStatus(describeError(error));
    }
    this.render();
  }

  private async commitEdit(
    address: string,
    text: string,
    td: HTMLTableCellElement,
  ): Promise<void> {
    if (this.pending) return;
    this.pending = true;
    this.setControlsDisabled(true);
    try {
      await this.session.setCell(address, text === "" ? null : text);
      await this.reloadWorkbook();
      this.render();
    } catch (error) {
      // protection and typing rejections surface right at the cell
      showProtectionNotice(td, describeError(error));
      await this.reloadWorkbook();
      this.renderBindingsPanel();
      const current = this.grid.cells.find((c) => c.address === address);
      const tip = td.querySelector(".protection-tooltip");
      td.textContent = current ? (current.value ?? "") : "";
      if (tip) td.appendChild(tip);
    } finally {
      this.pending = false;
      this.setControlsDisabled(false);
    }
  }

  // Serializes mutations: while one is on the wire every control is disabled,
  // so at most one request that changes state is in flight at a time.
  private async mutate(action: () => Promise<unknown>): Promise<void> {
    if (this.pending) return;
    this.pending = true;
    this.setControlsDisabled(true);
    try {
      await action();
      this.showStatus("");
    } catch (error) {
      this.showStatus(describeError(error));
    } finally {
      try {
        await this.reloadWorkbook();
      } catch {
        // keep the last good payloads on a transient facade error
      }
      this.pending = false;
      this.setControlsDisabled(false);
      this.render();
    }
  }

  private setControlsDisabled(disabled: boolean): void {
    for (const el of Array.from(this.root.querySelectorAll("button, input, select"))) {
      (el as HTMLButtonElement).disabled = disabled;
    }
  }
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return error instanceof Error ? error.message : String(error);
}
