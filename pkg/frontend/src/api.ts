import type {
  CreateSessionRequest, EventsPage, GfcPreview, Metrics, Outcome,
  PromptResponse, RecordValues, SessionSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`service error ${status}: ${JSON.stringify(detail)}`);
  }
}

/** Thin typed client over the session endpoints; one base URL setting. */
export class ApiClient {
  constructor(public baseUrl: string,
              private fetchImpl: typeof fetch = fetch) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, payload);
    }
    return payload as T;
  }

  createSession(request: CreateSessionRequest): Promise<SessionSummary> {
    return this.call("POST", "/sessions", request);
  }

  getState(id: string): Promise<SessionSummary> {
    return this.call("GET", `/sessions/${id}`);
  }

  postLabel(id: string, body: {
    label: string;
    record?: RecordValues;
    stream_index?: number;
    idempotency_key?: string;
  }): Promise<Outcome> {
    return this.call("POST", `/sessions/${id}/labels`, body);
  }

  postResponse(id: string, response: PromptResponse): Promise<Outcome> {
    return this.call("POST", `/sessions/${id}/responses`, { response });
  }

  getEvents(id: string, since = 0): Promise<EventsPage> {
    return this.call("GET", `/sessions/${id}/events?since=${since}`);
  }

  getMetrics(id: string): Promise<Metrics> {
    return this.call("GET", `/sessions/${id}/metrics`);
  }

  gfcPreview(id: string, selection: { accept_dn: number[]; accept_pp: number[] }):
      Promise<GfcPreview> {
    return this.call("POST", `/sessions/${id}/gfc-preview`, selection);
  }
}
