import { describe, expect, it } from "vitest";

import {
  alignmentMirrorsSuspended,
  applyEvent,
  applyEvents,
  drainQueue,
  initialState,
  setConnected,
  statusChip,
  userSent,
} from "../src/state.js";
import type { GatewayEvent } from "../src/types.js";

let seq = 0;
function ev(kind: string, payload: Record<string, unknown>): GatewayEvent {
  return { seq: ++seq, kind, payload };
}

describe("chat streaming render", () => {
  it("appends assistant turns and concatenates deltas of the same task", () => {
    let state = userSent(setConnected(initialState(), true), "hi there");
    state = applyEvent(
      state,
      ev("chat_delta", { task_id: "t1", channel: "chat", text: "Hel" }),
    );
    state = applyEvent(
      state,
      ev("chat_delta", { task_id: "t1", channel: "chat", text: "lo." }),
    );
    expect(state.transcript).toEqual([
      { role: "user", text: "hi there" },
      { role: "assistant", text: "Hello.", taskId: "t1" },
    ]);
  });

  it("starts a new bubble for a different task", () => {
    let state = initialState();
    state = applyEvent(
      state,
      ev("chat_delta", { task_id: "t1", channel: "chat", text: "one" }),
    );
    state = applyEvent(
      state,
      ev("chat_delta", { task_id: "t2", channel: "chat", text: "two" }),
    );
    expect(state.transcript).toHaveLength(2);
  });

  it("shows task status chips from task_status events", () => {
    let state = initialState();
    state = applyEvent(state, ev("task_status", { task_id: "t1", status: "active" }));
    expect(statusChip(state, "t1")).toBe("active");
    state = applyEvent(
      state,
      ev("task_status", { task_id: "t1", status: "completed" }),
    );
    expect(statusChip(state, "t1")).toBe("completed");
    expect(statusChip(state, "t9")).toBe("unknown");
  });
});

describe("alignment queue reconciliation", () => {
  it("mirrors server-side suspended tasks exactly", () => {
    let state = initialState();
    state = applyEvents(state, [
      ev("task_status", { task_id: "t1", status: "suspended" }),
      ev("alignment_request", {
        task_id: "t1",
        missing: ["address"],
        prompt: "Need address",
      }),
    ]);
    expect(state.pendingAlignment).toHaveLength(1);
    expect(alignmentMirrorsSuspended(state)).toBe(true);

    // resume: the item must leave the queue when the task leaves "suspended"
    state = applyEvent(
      state,
      ev("task_status", { task_id: "t1", status: "completed" }),
    );
    expect(state.pendingAlignment).toHaveLength(0);
    expect(alignmentMirrorsSuspended(state)).toBe(true);
  });

  it("renders two pending items as an ordered queue", () => {
    let state = initialState();
    state = applyEvents(state, [
      ev("task_status", { task_id: "t1", status: "suspended" }),
      ev("alignment_request", { task_id: "t1", missing: ["a"], prompt: "p1" }),
      ev("task_status", { task_id: "t2", status: "suspended" }),
      ev("alignment_request", { task_id: "t2", missing: ["b"], prompt: "p2" }),
    ]);
    expect(state.pendingAlignment.map((i) => i.taskId)).toEqual(["t1", "t2"]);
    expect(alignmentMirrorsSuspended(state)).toBe(true);
  });

  it("dismissal is not modeled: the item stays until the server says so", () => {
    let state = initialState();
    state = applyEvents(state, [
      ev("task_status", { task_id: "t1", status: "suspended" }),
      ev("alignment_request", { task_id: "t1", missing: ["a"], prompt: "p" }),
    ]);
    // no local mutation exists that removes a pending item
    expect(state.pendingAlignment).toHaveLength(1);
  });
});

describe("plan and catalog events", () => {
  it("plan_proposed replaces the current plan", () => {
    let state = initialState();
    state = applyEvent(
      state,
      ev("plan_proposed", {
        date: "2026-08-21",
        status: "proposed",
        confirmed_at: null,
        slots: [],
      }),
    );
    expect(state.plan?.date).toBe("2026-08-21");
    expect(state.plan?.status).toBe("proposed");
  });

  it("space_registered updates the catalog and notifies", () => {
    let state = initialState();
    state = applyEvent(
      state,
      ev("space_registered", {
        action: "registered",
        name: "translator",
        catalog: [
          { name: "memo", description: "", nodes: ["write_text"] },
          { name: "translator", description: "", nodes: ["translate"] },
        ],
      }),
    );
    expect(state.catalog.map((c) => c.name)).toContain("translator");
    expect(state.notifications.at(-1)?.text).toContain("translator");
  });
});

describe("reconnection and resync", () => {
  it("drops already-seen events replayed after a reconnect", () => {
    let state = initialState();
    const delta = ev("chat_delta", { task_id: "t1", channel: "chat", text: "x" });
    state = applyEvent(state, delta);
    state = applyEvent(state, delta); // replayed with the same seq
    expect(state.transcript).toHaveLength(1);
    expect(state.lastSeq).toBe(delta.seq);
  });

  it("queues sends while disconnected and drains them on reconnect", () => {
    let state = initialState(); // starts disconnected
    state = userSent(state, "offline message");
    expect(state.queuedSends).toEqual(["offline message"]);
    state = setConnected(state, true);
    const [queued, drained] = drainQueue(state);
    expect(queued).toEqual(["offline message"]);
    expect(drained.queuedSends).toEqual([]);
  });

  it("never fabricates completion: user send adds no status", () => {
    const state = userSent(setConnected(initialState(), true), "do a thing");
    expect(Object.keys(state.taskStatus)).toHaveLength(0);
    expect(state.transcript).toEqual([{ role: "user", text: "do a thing" }]);
  });
});
