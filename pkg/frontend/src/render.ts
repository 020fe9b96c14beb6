// Document rendering: every identifier token and every formula segment
// becomes its own click target.  The server's token spans are
// authoritative; formulas are shown as their token stream with the
// segment handle acting as the whole-formula hotspot.

import type { SegmentView, SessionView, TokenView } from "./types";

export interface DocumentHandlers {
  onIdentifierClick(token: TokenView, segment: SegmentView): void;
  onFormulaClick(segment: SegmentView): void;
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

function renderToken(
  token: TokenView,
  segment: SegmentView,
  handlers: DocumentHandlers,
): HTMLElement {
  if (token.kind === "identifier" && token.target_key) {
    const status = token.status ?? "unannotated";
    const button = el("button", `token identifier click-target ${status}`, token.text);
    button.dataset.target = token.target_key;
    button.title = `identifier ${token.symbol ?? token.text}`;
    button.addEventListener("click", (event) => {
      event.stopPropagation();
      handlers.onIdentifierClick(token, segment);
    });
    return button;
  }
  return el("span", `token ${token.kind}`, token.text);
}

function renderSegment(segment: SegmentView, handlers: DocumentHandlers): HTMLElement {
  const wrapper = el("div", `segment ${segment.display} ${segment.status}`);
  wrapper.dataset.target = segment.target_key;

  const handle = el("button", `formula-handle click-target ${segment.status}`, "⟨math⟩");
  handle.dataset.target = segment.target_key;
  handle.title = segment.is_equation ? "equation" : "expression";
  handle.addEventListener("click", (event) => {
    event.stopPropagation();
    handlers.onFormulaClick(segment);
  });
  wrapper.appendChild(handle);

  const body = el("span", "formula-body");
  for (const token of segment.tokens) {
    body.appendChild(renderToken(token, segment, handlers));
  }
  wrapper.appendChild(body);

  if (segment.existing_qid) {
    wrapper.appendChild(el("span", "existing-qid", segment.existing_qid));
  }
  return wrapper;
}

export function renderDocument(
  host: HTMLElement,
  view: SessionView,
  handlers: DocumentHandlers,
): void {
  host.textContent = "";
  if (view.segments.length === 0) {
    host.appendChild(
      el("div", "empty-state", "No math segments found — load an article to begin annotating."),
    );
    return;
  }
  for (const segment of view.segments) {
    host.appendChild(renderSegment(segment, handlers));
  }
}

export function renderProgress(host: HTMLElement, view: SessionView): void {
  host.textContent = "";
  const percent = Math.round(view.progress * 100);
  const bar = el("div", "progress-bar");
  const fill = el("div", "progress-fill");
  fill.style.width = `${percent}%`;
  bar.appendChild(fill);
  host.appendChild(bar);
  host.appendChild(el("span", "progress-label", `${percent}% annotated`));
}
