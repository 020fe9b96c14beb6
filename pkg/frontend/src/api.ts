// Thin typed client for the /v1 API.  The UI never talks to a wiki
// directly and never caches authoritative state: every mutation is
// followed by a fresh GET of the session view.

import type {
  AnnotatePayload,
  ApiErrorBody,
  RecommendationView,
  SessionView,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message || `HTTP ${status}`);
    this.code = body.code || "bad_request";
    this.status = status;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchFn(`${this.base}/v1${path}`, init);
    if (!response.ok) {
      let parsed: ApiErrorBody = { code: "bad_request", message: response.statusText };
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  createSession(payload: { title?: string; body?: string; format?: string }): Promise<SessionView> {
    return this.request("POST", "/sessions", payload);
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  getRecommendations(
    sessionId: string,
    targetKey: string,
    options: { evalMode?: boolean; segmentId?: number; seed?: number } = {},
  ): Promise<RecommendationView> {
    const params = new URLSearchParams({ target: targetKey });
    if (options.evalMode) params.set("eval", "true");
    if (options.segmentId !== undefined) params.set("segment_id", String(options.segmentId));
    if (options.seed !== undefined) params.set("seed", String(options.seed));
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/recommendations?${params.toString()}`,
    );
  }

  annotate(sessionId: string, payload: AnnotatePayload): Promise<unknown> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/annotations`, payload);
  }

  unannotate(sessionId: string, targetKey: string): Promise<unknown> {
    return this.request(
      "DELETE",
      `/sessions/${encodeURIComponent(sessionId)}/annotations/${targetKey}`,
    );
  }

  reject(sessionId: string, targetKey: string): Promise<unknown> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/rejections`, {
      target: targetKey,
    });
  }

  exportWikitext(sessionId: string): Promise<{ wikitext: string; stats: object }> {
    return this.request("POST", "/export/wikitext", { session_id: sessionId });
  }
}
