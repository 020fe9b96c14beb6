// Recommendation popup: per-source columns (anonymous labels in
// evaluation mode), a manual input, a reject button, and timing
// capture.  The column -> source mapping lives only in closure state;
// in evaluation mode no real source name is ever written into the DOM.

import type { CandidateView, ColumnView, RecommendationView } from "./types";

export const INITIAL_ROWS = 5; // visible rows per source before "show more"
export const MAX_ROWS = 10;

export type PopupResult =
  | {
      kind: "selection";
      name: string;
      qid: string | null;
      source: string;
      position: number;
      elapsedMs: number;
    }
  | { kind: "manual"; name: string; elapsedMs: number }
  | { kind: "reject" };

export interface PopupOptions {
  targetLabel: string;
  targetKind: "identifier" | "formula";
  evalMode: boolean;
  now(): number;
  allowModeChoice?: boolean;
}

export interface PopupController {
  element: HTMLElement;
  close(): void;
  readonly mode: "global" | "local";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function candidateRow(
  candidate: CandidateView,
  column: ColumnView,
  submit: (result: PopupResult) => void,
  elapsed: () => number,
): HTMLElement {
  const row = el("button", "candidate", candidate.name);
  if (candidate.qid) {
    row.appendChild(el("span", "qid-badge", candidate.qid));
  }
  row.addEventListener("click", () => {
    submit({
      kind: "selection",
      name: candidate.name,
      qid: candidate.qid,
      source: column.source, // closure only; never a DOM attribute
      position: candidate.rank,
      elapsedMs: elapsed(),
    });
  });
  return row;
}

export function openPopup(
  layer: HTMLElement,
  recommendations: RecommendationView,
  options: PopupOptions,
  onSubmit: (result: PopupResult) => void,
): PopupController {
  const openedAt = options.now();
  let typingStartedAt: number | null = null;
  let mode: "global" | "local" = "global";

  const popup = el("div", "popup");
  popup.appendChild(el("h2", "popup-title", `Annotate ${options.targetLabel}`));

  const close = () => {
    popup.remove();
  };
  const submitAndClose = (result: PopupResult) => {
    close(); // a selection is final: the popup closes on submit
    onSubmit(result);
  };

  const columns = el("div", "popup-columns");
  const nonEmpty = recommendations.columns.filter((column) => column.candidates.length > 0);
  for (const column of nonEmpty) {
    const columnEl = el("div", "popup-column");
    columnEl.appendChild(el("h3", "source-label", column.label));
    const list = el("div", "candidate-list");
    const visible = column.candidates.slice(0, INITIAL_ROWS);
    const hidden = column.candidates.slice(INITIAL_ROWS, MAX_ROWS);
    for (const candidate of visible) {
      list.appendChild(
        candidateRow(candidate, column, submitAndClose, () => options.now() - openedAt),
      );
    }
    if (hidden.length > 0) {
      const more = el("button", "show-more", `show ${hidden.length} more`);
      more.addEventListener("click", () => {
        more.remove();
        for (const candidate of hidden) {
          list.appendChild(
            candidateRow(candidate, column, submitAndClose, () => options.now() - openedAt),
          );
        }
      });
      list.appendChild(more);
    }
    columnEl.appendChild(list);
    columns.appendChild(columnEl);
  }
  if (nonEmpty.length === 0) {
    columns.appendChild(
      el("p", "no-candidates", "No recommendations available — type a name below."),
    );
  }
  popup.appendChild(columns);

  // manual entry
  const manual = el("form", "manual-entry");
  const input = el("input", "manual-input") as HTMLInputElement;
  input.type = "text";
  input.placeholder = "type a name…";
  input.addEventListener("input", () => {
    if (typingStartedAt === null) typingStartedAt = options.now();
  });
  const error = el("span", "manual-error");
  const submit = el("button", "manual-submit", "submit");
  submit.type = "submit";
  manual.append(input, submit, error);
  manual.addEventListener("submit", (event) => {
    event.preventDefault();
    const name = input.value.trim();
    if (!name) {
      error.textContent = "name must not be empty";
      input.classList.add("invalid");
      return; // client-side validation: no request leaves the page
    }
    submitAndClose({
      kind: "manual",
      name,
      elapsedMs: options.now() - (typingStartedAt ?? openedAt),
    });
  });
  popup.appendChild(manual);

  if (options.allowModeChoice) {
    const toggle = el("label", "mode-toggle");
    const checkbox = el("input") as HTMLInputElement;
    checkbox.type = "checkbox";
    checkbox.addEventListener("change", () => {
      mode = checkbox.checked ? "local" : "global";
    });
    toggle.append(checkbox, document.createTextNode(" local (this occurrence only)"));
    popup.appendChild(toggle);
  }

  const reject = el(
    "button",
    "reject-target",
    options.targetKind === "identifier" ? "Not an identifier" : "Not a formula",
  );
  reject.addEventListener("click", () => submitAndClose({ kind: "reject" }));
  popup.appendChild(reject);

  const dismiss = el("button", "popup-close", "close");
  dismiss.addEventListener("click", close);
  popup.appendChild(dismiss);

  layer.textContent = "";
  layer.appendChild(popup);
  return {
    element: popup,
    close,
    get mode() {
      return mode;
    },
  };
}
