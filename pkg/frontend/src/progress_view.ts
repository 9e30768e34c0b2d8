/** Two line charts over completed-count: mean outcome and per-decision
 * sensitivity, each line wrapped in a 95% CI band. Undefined values render
 * as breaks in the line, not zeros. Hovering a sensitivity line reveals its
 * decision name.
 */

import { clear, el, fmtNumber, svg } from "./dom.js";
import { extent, linearScale, ticks } from "./scales.js";
import type { SnapshotDoc } from "./types.js";

const WIDTH = 460;
const HEIGHT = 170;
const MARGIN = { top: 10, right: 12, bottom: 22, left: 44 };

interface SeriesPoint {
  t: number;
  value: number;
  ci: [number, number] | null;
}

/** Split into contiguous segments; null values break the line. */
function segments(points: (SeriesPoint | null)[]): SeriesPoint[][] {
  const out: SeriesPoint[][] = [];
  let current: SeriesPoint[] = [];
  for (const p of points) {
    if (p === null) {
      if (current.length) out.push(current);
      current = [];
    } else {
      current.push(p);
    }
  }
  if (current.length) out.push(current);
  return out;
}

function pathFrom(points: SeriesPoint[], x: (v: number) => number, y: (v: number) => number): string {
  return points
    .map((p, i) => `${i === 0 ? "M" : "L"}${x(p.t).toFixed(1)},${y(p.value).toFixed(1)}`)
    .join("");
}

function bandFrom(points: SeriesPoint[], x: (v: number) => number, y: (v: number) => number): string {
  const withCi = points.filter((p) => p.ci !== null);
  if (withCi.length < 2) return "";
  const upper = withCi.map((p, i) => `${i === 0 ? "M" : "L"}${x(p.t).toFixed(1)},${y(p.ci![1]).toFixed(1)}`);
  const lower = [...withCi].reverse().map((p) => `L${x(p.t).toFixed(1)},${y(p.ci![0]).toFixed(1)}`);
  return upper.join("") + lower.join("") + "Z";
}

const LINE_COLORS = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

function chart(
  title: string,
  series: { name: string; color: string; points: (SeriesPoint | null)[]; finalValue: number | null }[],
  maxT: number,
  hoverNames = false,
): HTMLElement {
  const hoverLabel = el("span", { class: "hover-label" });
  const values: number[] = [];
  for (const s of series) {
    for (const p of s.points) {
      if (p) {
        values.push(p.value);
        if (p.ci) values.push(p.ci[0], p.ci[1]);
      }
    }
  }
  const x = linearScale([0, Math.max(maxT, 1)], [MARGIN.left, WIDTH - MARGIN.right]);
  const y = linearScale(extent(values), [HEIGHT - MARGIN.bottom, MARGIN.top]);

  const root = svg("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: WIDTH,
    height: HEIGHT,
    class: "chart",
  });
  for (const tick of ticks(y.domain[0], y.domain[1], 4)) {
    root.append(
      svg("line", {
        x1: MARGIN.left, x2: WIDTH - MARGIN.right,
        y1: y(tick), y2: y(tick), class: "gridline",
      }),
      svg("text", { x: MARGIN.left - 4, y: y(tick) + 3, class: "tick-label" },
        fmtNumber(tick, 2)),
    );
  }
  for (const tick of ticks(0, maxT, 5)) {
    root.append(
      svg("text", {
        x: x(tick), y: HEIGHT - 6, class: "tick-label tick-x",
      }, String(Math.round(tick))),
    );
  }

  for (const s of series) {
    const segs = segments(s.points);
    for (const seg of segs) {
      const band = bandFrom(seg, x, y);
      if (band) {
        root.append(svg("path", { d: band, fill: s.color, opacity: 0.15, class: "ci-band" }));
      }
    }
    for (const seg of segs) {
      const path = svg("path", {
        d: pathFrom(seg, x, y),
        stroke: s.color,
        fill: "none",
        "stroke-width": 1.6,
        class: "series-line",
        "data-series": s.name,
        "data-final-value": s.finalValue ?? "",
      });
      path.append(svg("title", {}, s.name));
      if (hoverNames) {
        path.addEventListener("mouseenter", () => {
          hoverLabel.textContent = ` — ${s.name}`;
        });
        path.addEventListener("mouseleave", () => {
          hoverLabel.textContent = "";
        });
      }
      root.append(path);
    }
  }

  return el("div", { class: "chart-panel" }, el("h3", {}, title, hoverLabel), root);
}

export function renderProgress(container: HTMLElement, snapshots: SnapshotDoc[]): void {
  clear(container);
  if (!snapshots.length) {
    container.append(
      chart("mean outcome", [], 1),
      chart("decision sensitivity", [], 1),
    );
    return;
  }
  const maxT = snapshots[snapshots.length - 1]!.completed;

  const meanPoints: (SeriesPoint | null)[] = snapshots.map((s) =>
    s.mean === null ? null : { t: s.completed, value: s.mean, ci: s.mean_ci },
  );
  const lastMean = snapshots[snapshots.length - 1]!.mean;
  const meanChart = chart(
    "mean outcome",
    [{ name: "mean", color: LINE_COLORS[0]!, points: meanPoints, finalValue: lastMean }],
    maxT,
  );
  meanChart.setAttribute("data-final-mean", lastMean === null ? "" : String(lastMean));

  const decisions: string[] = [];
  for (const snapshot of snapshots) {
    for (const s of snapshot.sensitivity) {
      if (!decisions.includes(s.decision)) decisions.push(s.decision);
    }
  }
  const sensitivitySeries = decisions.map((name, i) => {
    const points: (SeriesPoint | null)[] = snapshots.map((snapshot) => {
      const doc = snapshot.sensitivity.find((s) => s.decision === name);
      return doc && doc.defined && doc.score !== null
        ? { t: snapshot.completed, value: doc.score, ci: doc.ci }
        : null;
    });
    const lastDefined = [...points].reverse().find((p) => p !== null) ?? null;
    return {
      name,
      color: LINE_COLORS[i % LINE_COLORS.length]!,
      points,
      finalValue: lastDefined?.value ?? null,
    };
  });
  container.append(
    meanChart,
    chart("decision sensitivity", sensitivitySeries, maxT, true),
  );
}
