/** Start/pause/resume/reset controls, progress bar, and completion estimate. */

import { clear, el, fmtEta } from "./dom.js";
import type { Phase } from "./types.js";

export type ControlAction = "start" | "pause" | "resume" | "reset";

const ENABLED: Record<Phase, ControlAction[]> = {
  idle: ["start"],
  running: ["pause"],
  paused: ["resume", "reset"],
  completed: ["reset"],
};

export interface ControlPanelData {
  phase: Phase;
  completed: number;
  total: number;
  etaSeconds: number | null;
  notice: string | null;
}

export function renderControlPanel(
  container: HTMLElement,
  data: ControlPanelData,
  onAction: (action: ControlAction) => void,
): void {
  clear(container);
  const buttons = el("div", { class: "control-buttons" });
  for (const action of ["start", "pause", "resume", "reset"] as ControlAction[]) {
    const button = el("button", {
      class: "control",
      "data-action": action,
      disabled: !ENABLED[data.phase].includes(action),
    }, action);
    button.addEventListener("click", () => onAction(action));
    buttons.append(button);
  }

  const fraction = data.total > 0 ? data.completed / data.total : 0;
  const bar = el("div", { class: "progress-track", role: "progressbar" },
    el("div", {
      class: "progress-fill",
      style: `width:${(fraction * 100).toFixed(1)}%`,
    }),
  );
  const label = el("span", { class: "progress-label" },
    `${data.completed}/${data.total} universes`);
  const eta = el("span", { class: "eta", "data-eta": data.etaSeconds ?? "" },
    data.phase === "completed" ? "done" : `ETA ${fmtEta(data.etaSeconds)}`);
  const phase = el("span", { class: `phase phase-${data.phase}` }, data.phase);

  container.append(
    el("div", { class: "control-row" }, buttons, phase),
    el("div", { class: "control-row" }, bar, label, eta),
  );
  if (data.notice) {
    container.append(el("div", { class: "notice", role: "status" }, data.notice));
  }
}
