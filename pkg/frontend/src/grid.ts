// Grid rendering. The table is rebuilt from the facade payload on every
// change: cell text, flags and markers all come straight off the wire. The
// only local work is laying addresses out on a row/column lattice.

import type { CellPayload, GridPayload } from "./types.js";

export interface Address {
  sheet: string;
  col: number;
  row: number;
}

const ADDRESS = /^([A-Za-z0-9_]+)!([A-Z]{1,2})([1-9][0-9]*)$/;

export function parseAddress(text: string): Address {
  const m = ADDRESS.exec(text);
  if (!m) throw new Error(`bad cell address: ${text}`);
  let col = 0;
  for (const ch of m[2]) col = col * 26 + (ch.charCodeAt(0) - 64);
  return { sheet: m[1], col, row: Number(m[3]) };
}

export function columnName(col: number): string {
  let name = "";
  while (col > 0) {
    name = String.fromCharCode(65 + ((col - 1) % 26)) + name;
    col = Math.floor((col - 1) / 26);
  }
  return name;
}

export interface GridHandlers {
  onSelect(address: string): void;
  onEditCommit(address: string, text: string, td: HTMLTableCellElement): void;
}

interface Bounds {
  minCol: number;
  maxCol: number;
  minRow: number;
  maxRow: number;
}

function cellClass(cell: CellPayload): string {
  const classes = ["cell"];
  if (cell.binding !== null) classes.push("bound");
  if (cell.header) classes.push("header");
  if (cell.readOnly) classes.push("read-only");
  if (cell.writable) classes.push("writable");
  if (cell.dirty) classes.push("dirty");
  if (cell.binding !== null && cell.value === null) classes.push("null-value");
  return classes.join(" ");
}

function beginEdit(td: HTMLTableCellElement, address: string, handlers: GridHandlers): void {
  if (td.querySelector("input")) return;
  const original = td.textContent ?? "";
  td.textContent = "";
  const input = td.ownerDocument.createElement("input");
  input.value = original;
  input.className = "cell-editor";
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      handlers.onEditCommit(address, input.value, td);
    } else if (event.key === "Escape") {
      td.textContent = original;
    }
  });
  td.appendChild(input);
  input.focus();
}

function renderSheet(
  doc: Document,
  sheet: string,
  cells: Map<string, CellPayload>,
  bounds: Bounds,
  handlers: GridHandlers,
  selected: string | null,
): HTMLElement {
  const section = doc.createElement("section");
  section.className = "sheet";
  const title = doc.createElement("h3");
  title.textContent = sheet;
  section.appendChild(title);

  const table = doc.createElement("table");
  table.className = "grid";
  const head = doc.createElement("tr");
  head.appendChild(doc.createElement("th"));
  for (let c = bounds.minCol; c <= bounds.maxCol; c++) {
    const th = doc.createElement("th");
    th.textContent = columnName(c);
    head.appendChild(th);
  }
  table.appendChild(head);

  for (let r = bounds.minRow; r <= bounds.maxRow; r++) {
    const tr = doc.createElement("tr");
    const rowLabel = doc.createElement("th");
    rowLabel.textContent = String(r);
    tr.appendChild(rowLabel);
    for (let c = bounds.minCol; c <= bounds.maxCol; c++) {
      const address = `${sheet}!${columnName(c)}${r}`;
      const cell = cells.get(address);
      const td = doc.createElement("td");
      td.dataset.address = address;
      td.className = cell ? cellClass(cell) : "cell empty";
      td.textContent = cell ? (cell.value ?? "") : "";
      if (address === selected) td.classList.add("selected");
      if (cell && cell.binding !== null) td.title = `binding ${cell.binding}`;
      td.addEventListener("click", () => handlers.onSelect(address));
      td.addEventListener("dblclick", () => beginEdit(td, address, handlers));
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  section.appendChild(table);
  return section;
}

export function renderGrid(
  container: HTMLElement,
  payload: GridPayload,
  handlers: GridHandlers,
  selected: string | null = null,
): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  const bySheet = new Map<string, Map<string, CellPayload>>();
  const bounds = new Map<string, Bounds>();
  for (const cell of payload.cells) {
    const addr = parseAddress(cell.address);
    let sheetCells = bySheet.get(addr.sheet);
    if (!sheetCells) {
      sheetCells = new Map();
      bySheet.set(addr.sheet, sheetCells);
      bounds.set(addr.sheet, { minCol: addr.col, maxCol: addr.col, minRow: addr.row, maxRow: addr.row });
    }
    sheetCells.set(cell.address, cell);
    const b = bounds.get(addr.sheet)!;
    b.minCol = Math.min(b.minCol, addr.col);
    b.maxCol = Math.max(b.maxCol, addr.col);
    b.minRow = Math.min(b.minRow, addr.row);
    b.maxRow = Math.max(b.maxRow, addr.row);
  }
  if (bySheet.size === 0) {
    const note = doc.createElement("p");
    note.className = "empty-grid";
    note.textContent = "Empty workbook. Bind a service to get started.";
    container.appendChild(note);
    return;
  }
  for (const [sheet, cells] of Array.from(bySheet.entries()).sort()) {
    container.appendChild(renderSheet(doc, sheet, cells, bounds.get(sheet)!, handlers, selected));
  }
}

export function showProtectionNotice(td: HTMLElement, message: string): void {
  const existing = td.querySelector(".protection-tooltip");
  if (existing) existing.remove();
  const tip = td.ownerDocument.createElement("span");
  tip.className = "protection-tooltip";
  tip.setAttribute("role", "alert");
  tip.textContent = message;
  td.appendChild(tip);
  setTimeout(() => tip.remove(), 4000);
}
