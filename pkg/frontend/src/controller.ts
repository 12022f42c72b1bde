import { ApiClient } from "./api.js";
import type {
  Metrics, NextRecord, Outcome, Prompt, PromptResponse, RecordValues,
  SessionEvent, SessionStatus, SessionSummary,
} from "./types.js";

export interface HistoryRow {
  index: number;
  label: string;
  provenance: string;
  userLabel: string;
  relabeled: boolean;
}

export interface MetricPoint {
  labeled: number;
  disc: number | null;
  unfairCouples: number;
}

export interface ControllerState {
  status: SessionStatus;
  pending: Prompt | null;
  next: NextRecord | null;
  labels: [string, string];
  labeled: number;
  target: number;
  history: HistoryRow[];
  metricsTrail: MetricPoint[];
  notices: string[];
  busy: boolean;
}

/** Session flow state machine: everything it knows came from the server.
 *  The DOM layer and the headless driver both operate through this class. */
export class SessionController {
  state: ControllerState;
  private eventCursor = 0;
  private listeners: (() => void)[] = [];

  constructor(private api: ApiClient, public sessionId: string,
              summary: SessionSummary) {
    this.state = {
      status: summary.status,
      pending: summary.pending,
      next: summary.next,
      labels: summary.labels,
      labeled: summary.labeled,
      target: summary.target,
      history: [],
      metricsTrail: [],
      notices: [],
      busy: false,
    };
  }

  static async create(api: ApiClient, request: Parameters<ApiClient["createSession"]>[0]):
      Promise<SessionController> {
    const summary = await api.createSession(request);
    return new SessionController(api, summary.id, summary);
  }

  static async attach(api: ApiClient, sessionId: string): Promise<SessionController> {
    const summary = await api.getState(sessionId);
    const controller = new SessionController(api, sessionId, summary);
    await controller.pollEvents();
    return controller;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get canLabel(): boolean {
    return this.state.status === "awaiting_label" && !this.state.busy;
  }

  /** Label the server-fed current record (streaming mode). */
  async submitLabel(label: string): Promise<Outcome> {
    if (!this.state.next) throw new Error("no record to label");
    return this.submit({ label, stream_index: this.state.next.stream_index });
  }

  /** Label a caller-supplied record (client-feed mode). */
  async submitRecord(record: RecordValues, label: string): Promise<Outcome> {
    return this.submit({ label, record });
  }

  private async submit(body: { label: string; record?: RecordValues; stream_index?: number }):
      Promise<Outcome> {
    this.state.busy = true;
    this.emit();
    try {
      const outcome = await this.api.postLabel(this.sessionId, body);
      this.absorb(outcome);
      return outcome;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  async respond(response: PromptResponse): Promise<Outcome> {
    this.state.busy = true;
    this.emit();
    try {
      const outcome = await this.api.postResponse(this.sessionId, response);
      this.absorb(outcome);
      return outcome;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  private absorb(outcome: Outcome): void {
    this.state.status = outcome.status;
    this.state.pending = outcome.prompt;
    this.state.next = outcome.next;
    if (outcome.notices.length) {
      this.state.notices = [...this.state.notices, ...outcome.notices].slice(-5);
    }
    if (outcome.finalized) {
      this.state.labeled = outcome.finalized.index + 1;
    }
  }

  /** Fold new server events into the history view. */
  async pollEvents(): Promise<SessionEvent[]> {
    const page = await this.api.getEvents(this.sessionId, this.eventCursor);
    this.eventCursor = page.next;
    for (const event of page.events) {
      this.applyEvent(event);
    }
    if (page.events.length) this.emit();
    return page.events;
  }

  private submittedLabels: Record<number, string> = {};

  private applyEvent(event: SessionEvent): void {
    if (event.type === "label_submitted") {
      // arrives before the finalized event; remembered for the history row
      this.submittedLabels[event.index as number] = event.user_label as string;
    } else if (event.type === "finalized") {
      const index = event.index as number;
      if (!this.state.history.some(r => r.index === index)) {
        this.state.history.push({
          index,
          label: event.final_label as string,
          provenance: event.provenance as string,
          userLabel: this.submittedLabels[index] ?? "",
          relabeled: false,
        });
      }
    } else if (event.type === "relabeled") {
      for (const [index, , newLabel] of event.changes as [number, string, string][]) {
        const row = this.state.history.find(r => r.index === index);
        if (row) {
          row.label = newLabel;
          row.relabeled = true;
        }
      }
    }
  }

  async pollMetrics(): Promise<Metrics> {
    const metrics = await this.api.getMetrics(this.sessionId);
    this.state.metricsTrail.push({
      labeled: metrics.labeled,
      disc: metrics.disc,
      unfairCouples: metrics.unfair_couples,
    });
    if (this.state.metricsTrail.length > 200) {
      this.state.metricsTrail.shift();
    }
    this.emit();
    return metrics;
  }

  previewGfc(selection: { accept_dn: number[]; accept_pp: number[] }) {
    return this.api.gfcPreview(this.sessionId, selection);
  }
}
