// DOM rendering. Pure-ish: render(state, handlers) rebuilds the dynamic
// regions from the ViewState; no state lives in the DOM beyond input values.

import { alignmentFields, formFields, missingFields } from "./forms.js";
import type { ViewState } from "./state.js";
import { statusChip } from "./state.js";
import type { SpaceSchema } from "./types.js";

export interface Handlers {
  onSend: (text: string) => void;
  onAlign: (taskId: string, answers: Record<string, string>) => void;
  onPlanDecision: (day: string, decision: Record<string, unknown>) => void;
  onInvoke: (space: string, node: string, args: Record<string, string>) => void;
  onLoadSchema: (space: string) => void;
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export function render(
  root: HTMLElement,
  state: ViewState,
  schemas: Record<string, SpaceSchema>,
  handlers: Handlers,
): void {
  renderBanner(root, state);
  renderChat(root, state, handlers);
  renderAlignment(root, state, handlers);
  renderPlan(root, state, handlers);
  renderSpaces(root, state, schemas, handlers);
  renderReport(root, state);
  renderDiagnostics(root, state);
}

function region(root: HTMLElement, id: string): HTMLElement {
  const node = root.querySelector(`#${id}`);
  if (!node) throw new Error(`missing region #${id}`);
  return node as HTMLElement;
}

function renderBanner(root: HTMLElement, state: ViewState): void {
  const banner = region(root, "banner");
  banner.textContent = state.connected
    ? "connected"
    : `disconnected${state.queuedSends.length ? `, ${state.queuedSends.length} queued` : ""}`;
  banner.className = state.connected ? "banner ok" : "banner warn";
}

function renderChat(
  root: HTMLElement,
  state: ViewState,
  handlers: Handlers,
): void {
  const list = region(root, "transcript");
  list.replaceChildren(
    ...state.transcript.map((turn) => {
      const chip = turn.taskId
        ? el("span", { class: "chip" }, statusChip(state, turn.taskId))
        : "";
      return el("li", { class: turn.role }, turn.text, chip);
    }),
  );
  const form = region(root, "chat-form") as HTMLFormElement;
  const input = form.querySelector("input") as HTMLInputElement;
  const button = form.querySelector("button") as HTMLButtonElement;
  button.disabled = input.value.trim() === "";
  input.oninput = () => {
    button.disabled = input.value.trim() === "";
  };
  form.onsubmit = (ev) => {
    ev.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    input.value = "";
    button.disabled = true;
    handlers.onSend(text);
  };
}

function renderAlignment(
  root: HTMLElement,
  state: ViewState,
  handlers: Handlers,
): void {
  const list = region(root, "alignment");
  list.replaceChildren(
    ...state.pendingAlignment.map((item) => {
      const form = el("form", { class: "align-form" }) as HTMLFormElement;
      form.append(el("p", {}, item.prompt));
      const fields = alignmentFields(item.missing);
      for (const field of fields) {
        form.append(
          el("label", {}, field.label),
          el("input", { name: field.name, type: "text" }),
        );
      }
      const submit = el("button", { type: "submit" }, "answer");
      form.append(submit);
      form.onsubmit = (ev) => {
        ev.preventDefault();
        const values: Record<string, string> = {};
        for (const field of fields) {
          const input = form.querySelector(
            `input[name="${field.name}"]`,
          ) as HTMLInputElement;
          values[field.name] = input.value;
        }
        if (missingFields(fields, values).length > 0) return; // block partial
        handlers.onAlign(item.taskId, values);
      };
      return el("li", {}, form);
    }),
  );
}

function renderPlan(
  root: HTMLElement,
  state: ViewState,
  handlers: Handlers,
): void {
  const box = region(root, "plan");
  if (!state.plan) {
    box.replaceChildren(el("p", {}, "no plan proposed"));
    return;
  }
  const plan = state.plan;
  const badge = el("span", { class: `badge ${plan.status}` }, plan.status);
  const slots = el(
    "ul",
    {},
    ...plan.slots.map((slot) => {
      const item = el(
        "li",
        {},
        `${slot.start} - ${String(slot.action.intent ?? slot.action.type)}`,
      );
      if (plan.status !== "confirmed") {
        const strike = el("button", { type: "button" }, "remove");
        strike.onclick = () =>
          handlers.onPlanDecision(plan.date, {
            action: "amend",
            remove: [slotKey(slot)],
          });
        item.append(strike);
      }
      return item;
    }),
  );
  const confirm = el("button", { type: "button" }, "confirm plan");
  (confirm as HTMLButtonElement).disabled = plan.status === "confirmed";
  confirm.onclick = () =>
    handlers.onPlanDecision(plan.date, { action: "confirm" });
  box.replaceChildren(el("h3", {}, `plan ${plan.date} `, badge), slots, confirm);
}

function slotKey(slot: {
  start: string;
  action: Record<string, unknown>;
}): string {
  const kind = String(slot.action.type ?? "");
  const ident = String(slot.action.event_id ?? slot.action.pattern_id ?? "");
  return `${kind}:${ident}:${slot.start}`;
}

function renderSpaces(
  root: HTMLElement,
  state: ViewState,
  schemas: Record<string, SpaceSchema>,
  handlers: Handlers,
): void {
  const box = region(root, "spaces");
  box.replaceChildren(
    ...state.catalog.map((entry) => {
      const section = el("section", { class: "space" });
      section.append(el("h4", {}, entry.name), el("p", {}, entry.description));
      const schema = schemas[entry.name];
      if (!schema) {
        const load = el("button", { type: "button" }, "open");
        load.onclick = () => handlers.onLoadSchema(entry.name);
        section.append(load);
        return section;
      }
      for (const node of schema.nodes) {
        const fields = formFields(node);
        const form = el("form", {}) as HTMLFormElement;
        form.append(el("h5", {}, node.name));
        if (fields.length === 0 && !node.function_binding) {
          form.append(el("p", { class: "muted" }, node.semantic)); // read-only
          section.append(form);
          continue;
        }
        for (const field of fields) {
          form.append(
            el("label", {}, field.label),
            el("input", { name: field.name, type: field.inputType }),
          );
        }
        form.append(el("button", { type: "submit" }, "invoke"));
        form.onsubmit = (ev) => {
          ev.preventDefault();
          const values: Record<string, string> = {};
          for (const field of fields) {
            const input = form.querySelector(
              `input[name="${field.name}"]`,
            ) as HTMLInputElement;
            values[field.name] = input.value;
          }
          if (missingFields(fields, values).length > 0) return;
          handlers.onInvoke(entry.name, node.name, values);
        };
        section.append(form);
      }
      return section;
    }),
  );
}

function renderReport(root: HTMLElement, state: ViewState): void {
  const box = region(root, "report");
  if (!state.report) {
    box.replaceChildren(el("p", {}, "no report loaded"));
    return;
  }
  box.replaceChildren(
    el("h3", {}, `report ${state.report.date}`),
    el("p", { class: "roast" }, state.report.roast),
  );
}

function renderDiagnostics(root: HTMLElement, state: ViewState): void {
  const box = region(root, "diagnostics");
  const rows: HTMLElement[] = [];
  if (state.diagnostics) {
    rows.push(
      el(
        "p",
        {},
        `degraded: ${state.diagnostics.degraded_mode ? "yes" : "no"}, ` +
          `escalations: ${state.diagnostics.escalations.length}`,
      ),
    );
  }
  rows.push(
    ...state.notifications
      .slice(-5)
      .map((n) => el("p", { class: "muted" }, `[${n.kind}] ${n.text}`)),
  );
  box.replaceChildren(...rows);
}
