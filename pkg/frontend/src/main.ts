// Application entry: wires the api client, the event stream, and the reducer
// to the DOM. The stream is the single source of truth for task and plan
// state; reconnects resume from the last seen seq.

import { ApiClient } from "./api.js";
import type { Handlers } from "./render.js";
import { render } from "./render.js";
import { openEventStream } from "./sse.js";
import {
  applyEvent,
  drainQueue,
  initialState,
  setConnected,
  type ViewState,
} from "./state.js";
import type { SpaceSchema } from "./types.js";

const api = new ApiClient(window.location.origin);
const root = document.getElementById("app") as HTMLElement;
const schemas: Record<string, SpaceSchema> = {};
let state: ViewState = initialState();

function update(next: ViewState): void {
  state = next;
  render(root, state, schemas, handlers);
}

const handlers: Handlers = {
  onSend(text) {
    let next = { ...state };
    next.transcript = [...next.transcript, { role: "user", text }];
    if (!state.connected) {
      next.queuedSends = [...next.queuedSends, text];
      update(next);
      return;
    }
    update(next);
    void api.chat(text).catch(console.error);
  },
  onAlign(taskId, answers) {
    void api.align(taskId, answers).catch(console.error);
  },
  onPlanDecision(day, decision) {
    void api
      .decidePlan(day, decision)
      .then(({ plan }) => update({ ...state, plan }))
      .catch(console.error);
  },
  onInvoke(space, node, args) {
    void api.invoke(space, node, args).catch(console.error);
  },
  onLoadSchema(space) {
    void api
      .getSpaceSchema(space)
      .then((schema) => {
        schemas[space] = schema;
        update(state);
      })
      .catch(console.error);
  },
};

async function flushQueue(): Promise<void> {
  const [queued, next] = drainQueue(state);
  update(next);
  for (const text of queued) {
    await api.chat(text).catch(console.error);
  }
}

function connect(): void {
  const handle = openEventStream(
    api.eventsUrl(state.lastSeq),
    (event) => update(applyEvent(state, event)),
    (connected) => {
      update(setConnected(state, connected));
      if (connected) void flushQueue();
    },
  );
  handle.done.catch(console.error).finally(() => {
    // resync from server truth after a dropped stream
    setTimeout(connect, 1000);
  });
}

async function boot(): Promise<void> {
  const { catalog } = await api.getCatalog();
  update({ ...state, catalog });
  const today = new Date().toISOString().slice(0, 10);
  await api
    .getReport(today)
    .then((report) => update({ ...state, report }))
    .catch(() => undefined);
  await api
    .getDiagnostics()
    .then((diagnostics) => update({ ...state, diagnostics }))
    .catch(() => undefined);
  connect();
}

void boot();
