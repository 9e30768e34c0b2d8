/** Dot plot of per-universe outcomes (x = outcome, y = stacked count) with a
 * special bin at the left end for universes without an outcome. Dot color
 * encodes diagnostics (error red / warning yellow / clean blue) or a
 * sequential quality scale where lighter means poorer fit. Dragging across
 * the plot brushes universes; selecting a decision splits the plot into one
 * panel per option.
 */

import { clear, el, svg } from "./dom.js";
import { blueRamp, extent, linearScale, stackDots, ticks } from "./scales.js";
import type { UniverseDoc } from "./types.js";
import type { ColorMode } from "./state.js";

const WIDTH = 560;
const PLOT_HEIGHT = 130;
const MARGIN = { left: 70, right: 12, bottom: 20 };
const BIN_X0 = 8;
const BIN_WIDTH = 48;
const DOT_R = 4;

export const STATUS_COLORS: Record<string, string> = {
  error: "#d62728",
  timeout: "#d62728",
  invalid_output: "#d62728",
  warning: "#e3b52c",
  ok: "#1f77b4",
};

function dotColor(record: UniverseDoc, mode: ColorMode): string {
  if (mode === "diagnostics") return STATUS_COLORS[record.status] ?? "#999";
  if (record.quality === null) return "hsl(210, 8%, 78%)";
  return blueRamp(record.quality);
}

export interface MainEffectsCallbacks {
  onBrush: (ids: Set<number>) => void;
}

interface PlacedDot {
  record: UniverseDoc;
  px: number;
  py: number;
}

function renderPanel(
  records: UniverseDoc[],
  domain: [number, number],
  mode: ColorMode,
  highlighted: Set<number>,
  brushed: Set<number>,
  callbacks: MainEffectsCallbacks,
  label?: string,
): HTMLElement {
  const height = PLOT_HEIGHT + (label ? 14 : 0);
  const x = linearScale(domain, [MARGIN.left, WIDTH - MARGIN.right]);
  const baseline = height - MARGIN.bottom;
  const root = svg("svg", {
    viewBox: `0 0 ${WIDTH} ${height}`,
    width: WIDTH,
    height,
    class: "main-effects-plot",
    "data-option": label ?? "",
  });

  if (label) {
    root.append(svg("text", { x: MARGIN.left, y: 12, class: "subplot-label" }, label));
  }

  // special bin for universes without an outcome
  root.append(
    svg("rect", {
      x: BIN_X0, y: 8, width: BIN_WIDTH, height: baseline - 8,
      class: "no-outcome-bin",
    }),
    svg("text", { x: BIN_X0 + BIN_WIDTH / 2, y: baseline + 14, class: "bin-label" },
      "no outcome"),
  );

  for (const tick of ticks(domain[0], domain[1], 5)) {
    root.append(svg("text", { x: x(tick), y: baseline + 14, class: "tick-label tick-x" },
      tick.toFixed(1)));
  }
  root.append(svg("line", {
    x1: BIN_X0, x2: WIDTH - MARGIN.right, y1: baseline, y2: baseline, class: "axis",
  }));

  const placed: PlacedDot[] = [];
  const withOutcome = records.filter((r) => r.outcome !== null);
  for (const dot of stackDots(withOutcome, (r) => r.outcome!, domain)) {
    placed.push({ record: dot.item, px: x(dot.x), py: baseline - 6 - (dot.level - 1) * (DOT_R * 2 + 1) });
  }
  records
    .filter((r) => r.outcome === null)
    .forEach((record, i) => {
      const perColumn = Math.max(1, Math.floor((baseline - 18) / (DOT_R * 2 + 1)));
      const column = Math.floor(i / perColumn);
      placed.push({
        record,
        px: BIN_X0 + 10 + column * (DOT_R * 2 + 2),
        py: baseline - 6 - (i % perColumn) * (DOT_R * 2 + 1),
      });
    });

  for (const { record, px, py } of placed) {
    const isHighlighted = highlighted.has(record.universe_id);
    const isBrushed = brushed.has(record.universe_id);
    const dot = svg("circle", {
      cx: px.toFixed(1), cy: py.toFixed(1), r: DOT_R,
      fill: dotColor(record, mode),
      class: "universe-dot"
        + (isHighlighted ? " highlighted" : "")
        + (isBrushed ? " brushed" : ""),
      "data-universe-id": record.universe_id,
      "data-status": record.status,
    });
    dot.append(svg("title", {},
      `#${record.universe_id} ${record.status}`
      + (record.outcome !== null ? ` outcome=${record.outcome.toFixed(3)}` : "")));
    root.append(dot);
  }

  attachBrush(root, height, placed, callbacks);
  return el("div", { class: "main-effects-panel" }, root);
}

/** Drag horizontally to select all dots whose x falls inside the range. */
function attachBrush(
  root: SVGSVGElement,
  height: number,
  placed: PlacedDot[],
  callbacks: MainEffectsCallbacks,
): void {
  let startX: number | null = null;
  let rect: SVGRectElement | null = null;

  const localX = (event: MouseEvent): number =>
    event.clientX - root.getBoundingClientRect().left;

  root.addEventListener("mousedown", (event) => {
    startX = localX(event);
    rect = svg("rect", {
      x: startX, y: 0, width: 0, height,
      class: "brush-rect",
    });
    root.append(rect);
  });
  root.addEventListener("mousemove", (event) => {
    if (startX === null || !rect) return;
    const current = localX(event);
    rect.setAttribute("x", String(Math.min(startX, current)));
    rect.setAttribute("width", String(Math.abs(current - startX)));
  });
  root.addEventListener("mouseup", (event) => {
    if (startX === null) return;
    const endX = localX(event);
    const [lo, hi] = [Math.min(startX, endX), Math.max(startX, endX)];
    rect?.remove();
    rect = null;
    startX = null;
    if (hi - lo < 3) {
      callbacks.onBrush(new Set());
      return;
    }
    const ids = placed
      .filter((p) => p.px >= lo && p.px <= hi)
      .map((p) => p.record.universe_id);
    callbacks.onBrush(new Set(ids));
  });
}

export function renderMainEffects(
  container: HTMLElement,
  records: UniverseDoc[],
  optionByUniverse: Map<number, string>,
  options: string[] | null,
  mode: ColorMode,
  highlighted: Set<number>,
  brushed: Set<number>,
  callbacks: MainEffectsCallbacks,
): void {
  clear(container);
  const outcomes = records.filter((r) => r.outcome !== null).map((r) => r.outcome!);
  const domain = extent(outcomes);
  if (options && options.length) {
    for (const option of options) {
      const subset = records.filter((r) => optionByUniverse.get(r.universe_id) === option);
      container.append(
        renderPanel(subset, domain, mode, highlighted, brushed, callbacks, option),
      );
    }
  } else {
    container.append(renderPanel(records, domain, mode, highlighted, brushed, callbacks));
  }
}
