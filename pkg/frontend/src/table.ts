// Annotation table at the top of the page; identifier rows are bold.

import type { TableRowView } from "./types";

export function renderTable(
  host: HTMLElement,
  rows: TableRowView[],
  onUndo: (targetKey: string) => void,
): void {
  host.textContent = "";
  if (rows.length === 0) {
    return;
  }
  const table = document.createElement("table");
  table.className = "annotation-table";
  const head = table.createTHead().insertRow();
  for (const title of ["Target", "Name", "QID", "Mode", "Provenance", ""]) {
    const cell = document.createElement("th");
    cell.textContent = title;
    head.appendChild(cell);
  }
  const body = table.createTBody();
  for (const row of rows) {
    const tr = body.insertRow();
    tr.dataset.target = row.target_key;
    const target = tr.insertCell();
    if (row.is_identifier) {
      const bold = document.createElement("strong");
      bold.textContent = row.target_text;
      target.appendChild(bold);
    } else {
      target.textContent = row.target_text;
    }
    tr.insertCell().textContent = row.name;
    tr.insertCell().textContent = row.qid ?? "";
    tr.insertCell().textContent = row.mode;
    tr.insertCell().textContent = row.provenance;
    const undo = document.createElement("button");
    undo.className = "undo";
    undo.textContent = "undo";
    undo.addEventListener("click", () => onUndo(row.target_key));
    tr.insertCell().appendChild(undo);
  }
  host.appendChild(table);
}
