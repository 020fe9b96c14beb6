// Application controller.  The browser holds no authoritative state:
// after every mutation the session view is re-fetched and re-rendered,
// so a page reload reconstructs exactly what the server knows.

import { ApiClient, ApiError } from "./api";
import { openPopup, PopupResult } from "./popup";
import { renderDocument, renderProgress } from "./render";
import { renderTable } from "./table";
import type {
  AnnotatePayload,
  SegmentView,
  SessionView,
  TokenView,
} from "./types";

export interface AppOptions {
  evalMode?: boolean;
  now?: () => number;
}

export class AnnotationApp {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  private readonly evalMode: boolean;
  private readonly now: () => number;
  private sessionId: string | null = null;

  private readonly titleEl: HTMLElement;
  private readonly progressEl: HTMLElement;
  private readonly statusEl: HTMLElement;
  private readonly tableEl: HTMLElement;
  private readonly documentEl: HTMLElement;
  private readonly popupLayer: HTMLElement;

  constructor(root: HTMLElement, api: ApiClient, options: AppOptions = {}) {
    this.root = root;
    this.api = api;
    this.evalMode = options.evalMode ?? false;
    this.now = options.now ?? (() => Date.now());

    root.textContent = "";
    root.className = "annotation-app";
    const header = document.createElement("header");
    this.titleEl = document.createElement("h1");
    this.progressEl = document.createElement("div");
    this.progressEl.className = "progress";
    this.statusEl = document.createElement("div");
    this.statusEl.className = "status-line";
    header.append(this.titleEl, this.progressEl, this.statusEl);

    this.tableEl = document.createElement("section");
    this.tableEl.className = "table-host";
    this.documentEl = document.createElement("main");
    this.documentEl.className = "document";
    this.popupLayer = document.createElement("div");
    this.popupLayer.className = "popup-layer";

    root.append(header, this.tableEl, this.documentEl, this.popupLayer);
  }

  async openSession(sessionId: string): Promise<SessionView> {
    this.sessionId = sessionId;
    return this.reload();
  }

  async createSession(payload: { title?: string; body?: string }): Promise<SessionView> {
    const view = await this.api.createSession(payload);
    this.sessionId = view.session_id;
    this.render(view);
    return view;
  }

  /** Re-fetch the authoritative view and re-render everything. */
  async reload(): Promise<SessionView> {
    if (!this.sessionId) throw new Error("no session open");
    const view = await this.api.getSession(this.sessionId);
    this.render(view);
    return view;
  }

  private render(view: SessionView): void {
    this.titleEl.textContent = view.title;
    renderProgress(this.progressEl, view);
    renderTable(this.tableEl, view.annotations, (targetKey) => {
      void this.undo(targetKey);
    });
    renderDocument(this.documentEl, view, {
      onIdentifierClick: (token, segment) => {
        void this.openIdentifierPopup(token, segment);
      },
      onFormulaClick: (segment) => {
        void this.openFormulaPopup(segment);
      },
    });
  }

  private async openIdentifierPopup(token: TokenView, segment: SegmentView): Promise<void> {
    if (!this.sessionId || !token.symbol) return;
    const globalKey = `id:${token.symbol}`;
    const recommendations = await this.api.getRecommendations(this.sessionId, globalKey, {
      evalMode: this.evalMode,
      segmentId: segment.segment_id,
    });
    const controller = openPopup(
      this.popupLayer,
      recommendations,
      {
        targetLabel: token.symbol,
        targetKind: "identifier",
        evalMode: this.evalMode,
        now: this.now,
        allowModeChoice: true,
      },
      (result) => {
        const key = controller.mode === "local" && token.target_key ? token.target_key : globalKey;
        void this.submit(key, controller.mode, result);
      },
    );
  }

  private async openFormulaPopup(segment: SegmentView): Promise<void> {
    if (!this.sessionId) return;
    const recommendations = await this.api.getRecommendations(
      this.sessionId,
      segment.target_key,
      { evalMode: this.evalMode },
    );
    openPopup(
      this.popupLayer,
      recommendations,
      {
        targetLabel: segment.raw_latex,
        targetKind: "formula",
        evalMode: this.evalMode,
        now: this.now,
      },
      (result) => {
        void this.submit(segment.target_key, "global", result);
      },
    );
  }

  private async submit(
    targetKey: string,
    mode: "global" | "local",
    result: PopupResult,
  ): Promise<void> {
    if (!this.sessionId) return;
    try {
      if (result.kind === "reject") {
        await this.api.reject(this.sessionId, targetKey);
      } else {
        const payload: AnnotatePayload =
          result.kind === "selection"
            ? {
                target: targetKey,
                name: result.name,
                qid: result.qid,
                mode,
                provenance: {
                  type: "recommended",
                  source: result.source,
                  position: result.position,
                },
                elapsed_ms: Math.max(0, Math.round(result.elapsedMs)),
              }
            : {
                target: targetKey,
                name: result.name,
                mode,
                provenance: { type: "manual" },
                elapsed_ms: Math.max(0, Math.round(result.elapsedMs)),
              };
        await this.api.annotate(this.sessionId, payload);
      }
      this.statusEl.textContent = "";
    } catch (error) {
      // optimistic UI is rolled back by re-rendering the server state
      this.statusEl.textContent =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    }
    await this.reload();
  }

  private async undo(targetKey: string): Promise<void> {
    if (!this.sessionId) return;
    try {
      await this.api.unannotate(this.sessionId, targetKey);
      this.statusEl.textContent = "";
    } catch (error) {
      this.statusEl.textContent =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    }
    await this.reload();
  }
}
