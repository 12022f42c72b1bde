import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { SessionController } from "../src/controller.js";

function fakeService() {
  // minimal scripted server: one streaming record, one conflict, events
  const events = [
    { seq: 0, ts: 0, type: "session_started" },
  ];
  let labeled = 0;
  const summary = () => ({
    id: "s1", status: labeled ? "awaiting_response" : "awaiting_label",
    labeled, target: 2, provenance_counts: {}, disc: null, unfair_couples: 0,
    stats: {}, pending: null,
    next: { stream_index: labeled, record: { age: 30 } },
    feed: "dataset", labels: ["-", "+"], positive_label: "+",
    sensitive_attribute: "sex",
  });

  const fetchImpl = (async (url: string, init?: RequestInit) => {
    const path = url.replace("http://test", "");
    const respond = (status: number, body: unknown) => ({
      ok: status < 400, status, json: async () => body,
    });
    if (path === "/sessions" && init?.method === "POST") {
      return respond(200, summary());
    }
    if (path === "/sessions/s1" && (!init || init.method === "GET")) {
      return respond(200, summary());
    }
    if (path === "/sessions/s1/labels") {
      const body = JSON.parse(String(init?.body));
      if (body.label === "reject-me") {
        return respond(409, { error: "protocol" });
      }
      events.push(
        { seq: events.length, ts: 0, type: "label_submitted",
          index: labeled, user_label: body.label } as never,
        { seq: events.length + 1, ts: 0, type: "finalized",
          index: labeled, final_label: body.label, provenance: "USER",
          notices: [] } as never,
      );
      labeled += 1;
      return respond(200, {
        finalized: { index: labeled - 1, final_label: body.label,
                     provenance: "USER", user_label: body.label,
                     model_label: "-" },
        prompt: null, relabels: [], retrained: false, notices: ["noted"],
        complete: labeled >= 2,
        status: labeled >= 2 ? "complete" : "awaiting_label",
        next: labeled >= 2 ? null : { stream_index: labeled, record: { age: 31 } },
      });
    }
    if (path.startsWith("/sessions/s1/events")) {
      const since = Number(new URL(url).searchParams.get("since") ?? 0);
      return respond(200, { events: events.filter(e => e.seq >= since),
                            next: events.length });
    }
    if (path === "/sessions/s1/metrics") {
      return respond(200, { labeled, disc: 0.25, unfair_couples: 1,
                            stats: {}, provenance_counts: {} });
    }
    return respond(404, { detail: "nope" });
  }) as unknown as typeof fetch;

  return new ApiClient("http://test", fetchImpl);
}

describe("session controller", () => {
  it("creates a session and labels the streamed record", async () => {
    const api = fakeService();
    const controller = await SessionController.create(api, {
      dataset: { generator: "adult-like" },
    });
    expect(controller.state.status).toBe("awaiting_label");
    expect(controller.canLabel).toBe(true);

    const outcome = await controller.submitLabel("+");
    expect(outcome.finalized?.final_label).toBe("+");
    expect(controller.state.labeled).toBe(1);
    expect(controller.state.next?.stream_index).toBe(1);
    expect(controller.state.notices).toContain("noted");

    await controller.submitLabel("-");
    expect(controller.state.status).toBe("complete");
    expect(controller.canLabel).toBe(false);
  });

  it("folds events into history rows with the user's own label", async () => {
    const api = fakeService();
    const controller = await SessionController.create(api, {
      dataset: { generator: "adult-like" },
    });
    await controller.submitLabel("+");
    await controller.pollEvents();
    expect(controller.state.history).toHaveLength(1);
    expect(controller.state.history[0]).toMatchObject({
      index: 0, label: "+", provenance: "USER", userLabel: "+",
    });
    // polling again must not duplicate rows
    await controller.pollEvents();
    expect(controller.state.history).toHaveLength(1);
  });

  it("tracks the metrics trail", async () => {
    const api = fakeService();
    const controller = await SessionController.create(api, {
      dataset: { generator: "adult-like" },
    });
    await controller.pollMetrics();
    await controller.pollMetrics();
    expect(controller.state.metricsTrail).toHaveLength(2);
    expect(controller.state.metricsTrail[0].disc).toBe(0.25);
  });

  it("propagates protocol errors as ApiError and clears the busy flag", async () => {
    const api = fakeService();
    const controller = await SessionController.create(api, {
      dataset: { generator: "adult-like" },
    });
    await expect(controller.submitLabel("reject-me")).rejects.toBeInstanceOf(ApiError);
    expect(controller.state.busy).toBe(false);
  });

  it("notifies listeners on state changes", async () => {
    const api = fakeService();
    const controller = await SessionController.create(api, {
      dataset: { generator: "adult-like" },
    });
    let calls = 0;
    controller.onChange(() => { calls += 1; });
    await controller.submitLabel("+");
    expect(calls).toBeGreaterThan(0);
  });
});
