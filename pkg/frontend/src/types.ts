// Wire types for the gateway. Kept in sync with the HTTP endpoints and the
// server-sent event payloads; the reducer and api client both import these.

export type EventKind =
  | "chat_delta"
  | "task_status"
  | "alignment_request"
  | "plan_proposed"
  | "space_registered"
  | "diagnostic";

export interface GatewayEvent {
  seq: number;
  kind: EventKind | string;
  payload: Record<string, unknown>;
}

export interface ChatDelta {
  task_id: string;
  channel: string;
  text: string;
}

export interface TaskStatus {
  task_id: string;
  status: string; // active | suspended | completed | failed
}

export interface AlignmentRequest {
  task_id: string;
  missing: string[];
  prompt: string;
}

export interface CatalogEntry {
  name: string;
  description: string;
  nodes: string[];
}

export interface ParamSpec {
  name: string;
  type: string;
  required: boolean;
}

export interface NodeSchema {
  name: string;
  semantic: string;
  function_binding: string;
  perception: boolean;
  params: ParamSpec[];
}

export interface SpaceSchema {
  name: string;
  description: string;
  perception_note: string;
  nodes: NodeSchema[];
}

export interface PlanSlot {
  start: string;
  end: string;
  action: Record<string, unknown> & { type?: string; intent?: string };
}

export interface PlanDoc {
  date: string;
  status: string; // proposed | amended | confirmed
  confirmed_at: string | null;
  slots: PlanSlot[];
}

export interface ChatResult {
  task_id?: string;
  result: string;
  status?: string;
}

export interface ReportDoc {
  date: string;
  roast: string;
  plan: PlanDoc | null;
  patterns: Record<string, unknown>[];
}

export interface DiagnosticsDoc {
  degraded_mode: boolean;
  escalations: Record<string, unknown>[];
  advisories: Record<string, unknown>[];
  proposals: Record<string, string>;
}
