/** Visual predictive check for one universe: observed and predicted
 * distributions side-by-side as violins, overlaid with a centered quantile
 * dot plot (one representative point per percentile, from the API).
 */

import { clear, el, svg } from "./dom.js";
import { density, extent, linearScale } from "./scales.js";
import type { QualityDoc } from "./types.js";

const WIDTH = 320;
const HEIGHT = 200;
const MARGIN = { top: 14, bottom: 24 };
const HALF_WIDTH = 52;
const DOT_R = 2.2;

function violin(
  values: number[],
  dots: number[],
  cx: number,
  y: (v: number) => number,
  label: string,
): SVGGElement {
  const group = svg("g", { class: "violin", "data-side": label });
  const kde = density(values);
  const maxWeight = Math.max(...kde.map((p) => p.weight), 1e-12);
  const right = kde.map((p, i) =>
    `${i === 0 ? "M" : "L"}${(cx + (p.weight / maxWeight) * HALF_WIDTH).toFixed(1)},${y(p.value).toFixed(1)}`);
  const left = [...kde].reverse().map((p) =>
    `L${(cx - (p.weight / maxWeight) * HALF_WIDTH).toFixed(1)},${y(p.value).toFixed(1)}`);
  group.append(svg("path", {
    d: right.join("") + left.join("") + "Z",
    class: "violin-shape",
  }));

  // centered quantile dots: stack each value bin symmetrically on the axis
  const binned = new Map<number, number[]>();
  const [lo, hi] = extent(values);
  const binHeight = (hi - lo) / 28 || 1;
  for (const value of [...dots].sort((a, b) => a - b)) {
    const bin = Math.floor((value - lo) / binHeight);
    const list = binned.get(bin) ?? [];
    list.push(value);
    binned.set(bin, list);
  }
  for (const [bin, members] of binned) {
    const rowY = y(lo + (bin + 0.5) * binHeight);
    members.forEach((_, i) => {
      const offset = (i - (members.length - 1) / 2) * (DOT_R * 2 + 0.6);
      group.append(svg("circle", {
        cx: (cx + offset).toFixed(1), cy: rowY.toFixed(1), r: DOT_R,
        class: "quantile-dot",
      }));
    });
  }
  group.append(svg("text", { x: cx, y: HEIGHT - 6, class: "violin-label" }, label));
  return group;
}

export function renderQuality(
  container: HTMLElement,
  universeId: number | null,
  doc: QualityDoc | null,
): void {
  clear(container);
  if (universeId === null) {
    container.append(el("p", { class: "empty" }, "brush a single universe to inspect its fit"));
    return;
  }
  if (doc === null) {
    container.append(el("p", { class: "empty" }, `universe #${universeId}: no quality data`));
    return;
  }
  const all = [...doc.observed, ...doc.predicted];
  const y = linearScale(extent(all), [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const root = svg("svg", {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`, width: WIDTH, height: HEIGHT,
    class: "quality-plot",
  });
  root.append(
    violin(doc.observed, doc.quantile_dots.observed, WIDTH * 0.28, y, "observed"),
    violin(doc.predicted, doc.quantile_dots.predicted, WIDTH * 0.72, y, "predicted"),
  );
  container.append(
    el("h3", {}, `predictive check — universe #${universeId}`),
    root,
  );
}
