/** Node-link view of the decision space, layered left-to-right in manifest
 * order. Node size tracks cardinality, darkness tracks current sensitivity;
 * gray edges connect successive decisions (analysis order) and black arrows
 * mark exclusion-rule dependencies. Clicking a node selects the decision and
 * splits the main-effect view by its options.
 */

import { clear, el, svg } from "./dom.js";
import { sensitivityShade } from "./scales.js";
import type { SensitivityDoc, SpaceDoc } from "./types.js";

const NODE_GAP = 108;
const BASE_Y = 64;

export function renderDecisionGraph(
  container: HTMLElement,
  space: SpaceDoc,
  sensitivity: Map<string, SensitivityDoc>,
  selected: string | null,
  onSelect: (decision: string) => void,
): void {
  clear(container);
  const width = Math.max(space.decisions.length * NODE_GAP + 40, 320);
  const root = svg("svg", {
    viewBox: `0 0 ${width} 150`,
    width,
    height: 150,
    class: "decision-graph",
  });
  root.append(
    svg("defs", {},
      svg("marker", {
        id: "dep-arrow", viewBox: "0 0 8 8", refX: 7, refY: 4,
        markerWidth: 7, markerHeight: 7, orient: "auto",
      }, svg("path", { d: "M0,0L8,4L0,8Z", fill: "#222" })),
    ),
  );

  const xOf = new Map(space.decisions.map((d, i) => [d.name, 36 + i * NODE_GAP]));
  const order = space.decisions.map((d) => d.name);

  // light gray order edges between successive decisions
  for (let i = 0; i + 1 < space.decisions.length; i++) {
    root.append(svg("line", {
      x1: xOf.get(order[i]!)!, y1: BASE_Y,
      x2: xOf.get(order[i + 1]!)!, y2: BASE_Y,
      class: "order-edge",
    }));
  }

  // black dependency arrows: within each rule, earlier decision -> later ones
  const seen = new Set<string>();
  for (const rule of space.rules) {
    const members = order.filter((name) => name in rule.exclude);
    for (let i = 0; i + 1 < members.length; i++) {
      for (let j = i + 1; j < members.length; j++) {
        const key = `${members[i]}->${members[j]}`;
        if (seen.has(key)) continue;
        seen.add(key);
        const x1 = xOf.get(members[i]!)!;
        const x2 = xOf.get(members[j]!)!;
        const mid = (x1 + x2) / 2;
        root.append(svg("path", {
          d: `M${x1},${BASE_Y - 10} Q${mid},${BASE_Y - 46} ${x2 - 8},${BASE_Y - 12}`,
          class: "dependency-edge",
          fill: "none",
          "marker-end": "url(#dep-arrow)",
          "data-from": members[i],
          "data-to": members[j],
        }));
      }
    }
  }

  const maxScore = Math.max(
    0,
    ...[...sensitivity.values()].map((s) => (s.defined && s.score !== null ? s.score : 0)),
  );
  const maxCardinality = Math.max(...space.decisions.map((d) => d.cardinality));
  for (const decision of space.decisions) {
    const x = xOf.get(decision.name)!;
    const doc = sensitivity.get(decision.name);
    const score = doc && doc.defined ? doc.score : null;
    const radius = 10 + 14 * Math.sqrt(decision.cardinality / maxCardinality);
    const node = svg("circle", {
      cx: x, cy: BASE_Y, r: radius,
      fill: sensitivityShade(score, maxScore),
      class: `graph-node${selected === decision.name ? " selected" : ""}`,
      "data-decision": decision.name,
      "data-score": score ?? "",
    });
    node.append(svg("title", {},
      `${decision.name}: ${score === null ? "no score yet" : score.toFixed(2)}`));
    node.addEventListener("click", () => onSelect(decision.name));
    root.append(node);
    root.append(svg("text", { x, y: BASE_Y + radius + 14, class: "node-label" },
      decision.name));
    const shown = decision.options.slice(0, 4);
    const optionText = shown.join(", ") + (decision.options.length > 4 ? ", …" : "");
    root.append(svg("text", {
      x, y: BASE_Y + radius + 27, class: "option-label",
    }, optionText));
  }
  container.append(el("div", { class: "graph-scroll" }, root));
}
