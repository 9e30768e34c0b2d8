import { beforeEach, describe, expect, it } from "vitest";

import { renderControlPanel } from "../src/control_panel.js";
import { renderDecisionGraph } from "../src/decision_graph.js";
import { renderMainEffects } from "../src/main_effects.js";
import { renderMessages } from "../src/messages_view.js";
import { renderProgress } from "../src/progress_view.js";
import { renderQuality } from "../src/quality_view.js";
import type { Phase, SensitivityDoc, SnapshotDoc, SpaceDoc, UniverseDoc } from "../src/types.js";

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='c'></div>";
  container = document.getElementById("c")!;
});

function enabledActions(): (string | undefined)[] {
  return [...container.querySelectorAll<HTMLButtonElement>("button.control")]
    .filter((b) => !b.disabled)
    .map((b) => b.dataset["action"]);
}

describe("control panel", () => {
  const base = { completed: 2, total: 6, etaSeconds: 12, notice: null };

  it.each([
    ["idle", ["start"]],
    ["running", ["pause"]],
    ["paused", ["resume", "reset"]],
    ["completed", ["reset"]],
  ] as [Phase, string[]][])("phase %s enables %j", (phase, expected) => {
    renderControlPanel(container, { ...base, phase }, () => undefined);
    expect(enabledActions()).toEqual(expected);
  });

  it("shows progress fraction and notice", () => {
    renderControlPanel(container, { ...base, phase: "running", notice: "pause: rejected (409)" }, () => undefined);
    const fill = container.querySelector<HTMLElement>(".progress-fill")!;
    expect(fill.style.width).toBe("33.3%");
    expect(container.querySelector(".notice")!.textContent).toContain("409");
  });
});

describe("progress view", () => {
  function snapshot(completed: number, score: number | null): SnapshotDoc {
    return {
      seq: completed, phase: "running", completed, failed: 0, total: 10,
      eta_seconds: null, elapsed_seconds: completed, mean: 1.0, mean_ci: [0.5, 1.5],
      sensitivity: [{
        decision: "d", score, ci: score === null ? null : [score - 1, score + 1],
        defined: score !== null,
      }],
    };
  }

  it("renders empty axes with no data", () => {
    renderProgress(container, []);
    expect(container.querySelectorAll(".chart-panel").length).toBe(2);
    expect(container.querySelectorAll(".series-line").length).toBe(0);
  });

  it("breaks lines at undefined sensitivity instead of plotting zeros", () => {
    const snapshots = [snapshot(1, null), snapshot(2, 3), snapshot(3, 4),
                       snapshot(4, null), snapshot(5, 6), snapshot(6, 7)];
    renderProgress(container, snapshots);
    const segments = container.querySelectorAll('.series-line[data-series="d"]');
    expect(segments.length).toBe(2); // the null at t=4 splits the series
    for (const segment of segments) {
      expect(segment.getAttribute("d")).not.toContain("NaN");
    }
  });

  it("draws a CI band around the mean line", () => {
    renderProgress(container, [snapshot(1, 2), snapshot(2, 2.5), snapshot(3, 3)]);
    expect(container.querySelectorAll(".ci-band").length).toBeGreaterThan(0);
  });
});

const SPACE: SpaceDoc = {
  name: "t",
  decisions: [
    { name: "a", options: ["x", "y"], cardinality: 2, sensitivity: { score: null, ci: null, defined: false } },
    { name: "b", options: ["p", "q", "r"], cardinality: 3, sensitivity: { score: null, ci: null, defined: false } },
    { name: "c", options: ["u", "v"], cardinality: 2, sensitivity: { score: null, ci: null, defined: false } },
  ],
  rules: [{ exclude: { a: "x", c: "v" } }],
  total_universes: 10,
};

describe("decision graph", () => {
  it("is neutral before any scores and sizes nodes by cardinality", () => {
    renderDecisionGraph(container, SPACE, new Map(), null, () => undefined);
    const nodes = [...container.querySelectorAll<SVGCircleElement>(".graph-node")];
    expect(nodes.length).toBe(3);
    const fills = new Set(nodes.map((n) => n.getAttribute("fill")));
    expect(fills.size).toBe(1); // all neutral
    const radius = (name: string) =>
      Number(container.querySelector(`[data-decision="${name}"]`)!.getAttribute("r"));
    expect(radius("b")).toBeGreaterThan(radius("a"));
  });

  it("darkens higher-sensitivity nodes", () => {
    const scores = new Map<string, SensitivityDoc>([
      ["a", { decision: "a", score: 10, ci: null, defined: true }],
      ["b", { decision: "b", score: 1, ci: null, defined: true }],
    ]);
    renderDecisionGraph(container, SPACE, scores, null, () => undefined);
    const fillOf = (name: string) =>
      container.querySelector(`[data-decision="${name}"]`)!.getAttribute("fill")!;
    const lightness = (hsl: string) => Number(/(\d+(?:\.\d+)?)%\)$/.exec(hsl)![1]);
    expect(lightness(fillOf("a"))).toBeLessThan(lightness(fillOf("b")));
  });

  it("draws a dependency arrow for rule-linked decisions and order edges", () => {
    renderDecisionGraph(container, SPACE, new Map(), null, () => undefined);
    const arrow = container.querySelector(".dependency-edge")!;
    expect(arrow.getAttribute("data-from")).toBe("a");
    expect(arrow.getAttribute("data-to")).toBe("c");
    expect(container.querySelectorAll(".order-edge").length).toBe(2);
  });

  it("click reports the decision", () => {
    let clicked: string | null = null;
    renderDecisionGraph(container, SPACE, new Map(), null, (name) => (clicked = name));
    container.querySelector<SVGCircleElement>('[data-decision="b"]')!
      .dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(clicked).toBe("b");
  });
});

function universe(id: number, status: UniverseDoc["status"], outcome: number | null, quality: number | null = null): UniverseDoc {
  return { universe_id: id, status, outcome, quality, duration: 0.1 };
}

describe("main effects", () => {
  const records = [
    universe(0, "ok", 1.0, 0.9),
    universe(1, "warning", 2.0, 0.5),
    universe(2, "error", null),
    universe(3, "ok", 3.0, 0.1),
  ];

  it("places failed universes only in the special bin", () => {
    renderMainEffects(container, records, new Map(), null, "diagnostics",
      new Set(), new Set(), { onBrush: () => undefined });
    const failed = container.querySelector('[data-universe-id="2"]')!;
    expect(Number(failed.getAttribute("cx"))).toBeLessThan(60);
    const ok = container.querySelector('[data-universe-id="0"]')!;
    expect(Number(ok.getAttribute("cx"))).toBeGreaterThan(60);
  });

  it("diagnostics mode colors by status, quality mode by value", () => {
    renderMainEffects(container, records, new Map(), null, "diagnostics",
      new Set(), new Set(), { onBrush: () => undefined });
    const colorOf = (id: number) =>
      container.querySelector(`[data-universe-id="${id}"]`)!.getAttribute("fill")!;
    expect(colorOf(2)).toBe("#d62728");
    expect(colorOf(1)).toBe("#e3b52c");
    expect(colorOf(0)).toBe("#1f77b4");

    renderMainEffects(container, records, new Map(), null, "quality",
      new Set(), new Set(), { onBrush: () => undefined });
    const lightness = (hsl: string) => Number(/(\d+(?:\.\d+)?)%\)$/.exec(hsl)![1]);
    // poorer quality renders lighter
    expect(lightness(colorOf(3))).toBeGreaterThan(lightness(colorOf(0)));
  });

  it("splits into one subplot per option", () => {
    const optionBy = new Map([[0, "x"], [1, "x"], [2, "y"], [3, "y"]]);
    renderMainEffects(container, records, optionBy, ["x", "y"], "diagnostics",
      new Set(), new Set(), { onBrush: () => undefined });
    const plots = [...container.querySelectorAll(".main-effects-plot")];
    expect(plots.map((p) => p.getAttribute("data-option"))).toEqual(["x", "y"]);
    expect(plots[0]!.querySelectorAll(".universe-dot").length).toBe(2);
    expect(plots[1]!.querySelectorAll(".universe-dot").length).toBe(2);
  });
});

describe("messages view", () => {
  it("expands truncated messages on show more", () => {
    const long = "W".repeat(200);
    renderMessages(container, [
      { text: long, severity: "warning", count: 1, universe_ids: [5] },
    ], null, () => undefined);
    const body = container.querySelector(".message-text")!;
    expect(body.textContent!.length).toBeLessThan(100);
    container.querySelector<HTMLButtonElement>(".show-more")!.click();
    expect(body.textContent).toBe(long);
    expect(container.querySelector(".show-more")).toBeNull();
  });

  it("empty list renders a placeholder", () => {
    renderMessages(container, [], null, () => undefined);
    expect(container.querySelector(".empty")).not.toBeNull();
  });
});

describe("quality view", () => {
  it("identical observed and predicted arrays render mirrored violins", () => {
    const values = Array.from({ length: 60 }, (_, i) => Math.sin(i) * 2);
    renderQuality(container, 7, {
      observed: values,
      predicted: [...values],
      quantile_dots: { observed: values.slice(0, 20), predicted: values.slice(0, 20) },
    });
    const shapes = [...container.querySelectorAll(".violin-shape")];
    expect(shapes.length).toBe(2);
    const normalize = (d: string, dx: number) =>
      d.replace(/[-\d.]+,/g, (m) => (Number(m.slice(0, -1)) - dx).toFixed(1) + ",");
    // identical distributions: the two violin paths differ only by x offset
    expect(normalize(shapes[0]!.getAttribute("d")!, 320 * 0.28))
      .toBe(normalize(shapes[1]!.getAttribute("d")!, 320 * 0.72));
  });

  it("missing quality data renders a placeholder", () => {
    renderQuality(container, 3, null);
    expect(container.textContent).toContain("no quality data");
    renderQuality(container, null, null);
    expect(container.querySelector(".empty")).not.toBeNull();
  });
});
