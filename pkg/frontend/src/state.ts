// ViewState reducer. All rendered state is derived from server events and
// fetch results; user actions only enqueue requests, they never mark tasks
// done locally. Events are applied in seq order and duplicates (replays from
// a reconnect) are dropped, so reconnection converges to server truth.

import type {
  AlignmentRequest,
  CatalogEntry,
  ChatDelta,
  DiagnosticsDoc,
  GatewayEvent,
  PlanDoc,
  ReportDoc,
  TaskStatus,
} from "./types.js";

export interface ChatTurn {
  role: "user" | "assistant";
  text: string;
  taskId?: string;
}

export interface AlignmentItem {
  taskId: string;
  missing: string[];
  prompt: string;
}

export interface Notification {
  kind: string;
  text: string;
}

export interface ViewState {
  transcript: ChatTurn[];
  taskStatus: Record<string, string>;
  pendingAlignment: AlignmentItem[];
  plan: PlanDoc | null;
  catalog: CatalogEntry[];
  report: ReportDoc | null;
  diagnostics: DiagnosticsDoc | null;
  notifications: Notification[];
  connected: boolean;
  lastSeq: number;
  queuedSends: string[];
}

export function initialState(): ViewState {
  return {
    transcript: [],
    taskStatus: {},
    pendingAlignment: [],
    plan: null,
    catalog: [],
    report: null,
    diagnostics: null,
    notifications: [],
    connected: false,
    lastSeq: 0,
    queuedSends: [],
  };
}

const TERMINAL = new Set(["completed", "failed"]);

export function applyEvent(state: ViewState, event: GatewayEvent): ViewState {
  if (event.seq <= state.lastSeq) return state; // duplicate from a resync
  const next: ViewState = { ...state, lastSeq: event.seq };
  switch (event.kind) {
    case "chat_delta": {
      const delta = event.payload as unknown as ChatDelta;
      const transcript = [...next.transcript];
      const last = transcript[transcript.length - 1];
      if (last && last.role === "assistant" && last.taskId === delta.task_id) {
        transcript[transcript.length - 1] = {
          ...last,
          text: last.text + delta.text,
        };
      } else {
        transcript.push({
          role: "assistant",
          text: delta.text,
          taskId: delta.task_id,
        });
      }
      next.transcript = transcript;
      break;
    }
    case "task_status": {
      const status = event.payload as unknown as TaskStatus;
      next.taskStatus = { ...next.taskStatus, [status.task_id]: status.status };
      if (status.status !== "suspended") {
        // reconcile: an item only stays pending while its task is suspended
        next.pendingAlignment = next.pendingAlignment.filter(
          (item) => item.taskId !== status.task_id,
        );
      }
      break;
    }
    case "alignment_request": {
      const req = event.payload as unknown as AlignmentRequest;
      if (req.task_id === undefined) {
        // kernel-side questions (space proposals) surface as notifications
        next.notifications = [
          ...next.notifications,
          { kind: "alignment", text: JSON.stringify(event.payload) },
        ];
        break;
      }
      const rest = next.pendingAlignment.filter(
        (item) => item.taskId !== req.task_id,
      );
      next.pendingAlignment = [
        ...rest,
        { taskId: req.task_id, missing: req.missing, prompt: req.prompt },
      ];
      break;
    }
    case "plan_proposed": {
      next.plan = event.payload as unknown as PlanDoc;
      break;
    }
    case "space_registered": {
      const payload = event.payload as {
        action?: string;
        name?: string;
        catalog?: CatalogEntry[];
      };
      if (payload.catalog) next.catalog = payload.catalog;
      next.notifications = [
        ...next.notifications,
        {
          kind: "space",
          text: `space ${payload.name ?? "?"} ${payload.action ?? "changed"}`,
        },
      ];
      break;
    }
    case "diagnostic": {
      next.notifications = [
        ...next.notifications,
        { kind: "diagnostic", text: JSON.stringify(event.payload) },
      ];
      break;
    }
    default:
      break;
  }
  return next;
}

export function applyEvents(
  state: ViewState,
  events: GatewayEvent[],
): ViewState {
  return events.reduce(applyEvent, state);
}

// -- local (non-event) transitions ----------------------------------------

export function userSent(state: ViewState, text: string): ViewState {
  const next = {
    ...state,
    transcript: [...state.transcript, { role: "user" as const, text }],
  };
  if (!state.connected) {
    next.queuedSends = [...state.queuedSends, text];
  }
  return next;
}

export function drainQueue(state: ViewState): [string[], ViewState] {
  return [state.queuedSends, { ...state, queuedSends: [] }];
}

export function setConnected(state: ViewState, connected: boolean): ViewState {
  return { ...state, connected };
}

export function planFetched(state: ViewState, plan: PlanDoc): ViewState {
  return { ...state, plan };
}

export function catalogFetched(
  state: ViewState,
  catalog: CatalogEntry[],
): ViewState {
  return { ...state, catalog };
}

export function reportFetched(state: ViewState, report: ReportDoc): ViewState {
  return { ...state, report };
}

export function diagnosticsFetched(
  state: ViewState,
  diagnostics: DiagnosticsDoc,
): ViewState {
  return { ...state, diagnostics };
}

// -- selectors --------------------------------------------------------------

export function statusChip(state: ViewState, taskId: string): string {
  return state.taskStatus[taskId] ?? "unknown";
}

export function suspendedTaskIds(state: ViewState): string[] {
  return Object.entries(state.taskStatus)
    .filter(([, status]) => status === "suspended")
    .map(([taskId]) => taskId)
    .sort();
}

/** Invariant check: pending alignment items exactly mirror suspended tasks. */
export function alignmentMirrorsSuspended(state: ViewState): boolean {
  const pending = state.pendingAlignment.map((item) => item.taskId).sort();
  const suspended = suspendedTaskIds(state).filter(
    (id) => !id.startsWith("trig-"),
  );
  return (
    pending.length === suspended.length &&
    pending.every((id, i) => id === suspended[i])
  );
}

const isTerminal = (status: string): boolean => TERMINAL.has(status);
export { isTerminal };
