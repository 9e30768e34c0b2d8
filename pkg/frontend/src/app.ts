/** Wires the panels to the store and the service API.
 *
 * All mutation of analysis state goes through POST /api/control; everything
 * else renders from the store, which is fed either by the live event stream
 * or by replaying a recorded event log.
 */

import { EventFeed, type EventSourceLike } from "./api.js";
import { renderControlPanel, type ControlAction } from "./control_panel.js";
import { renderDecisionGraph } from "./decision_graph.js";
import { el } from "./dom.js";
import { renderMainEffects } from "./main_effects.js";
import { renderMessages } from "./messages_view.js";
import { renderProgress } from "./progress_view.js";
import { renderQuality } from "./quality_view.js";
import { Store } from "./state.js";
import type { ApiLike, QualityDoc, RecordedEvent } from "./types.js";

export class Dashboard {
  readonly store: Store;
  private readonly sections: Record<string, HTMLElement>;
  private feed: EventFeed | null = null;
  private qualityCache: { id: number; doc: QualityDoc | null } | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiLike,
    store?: Store,
  ) {
    this.store = store ?? new Store();
    this.sections = {
      control: el("section", { id: "control-panel" }),
      progress: el("section", { id: "progress-view" }),
      graph: el("section", { id: "decision-graph" }),
      effects: el("section", { id: "main-effects" }),
      sidePanel: el("section", { id: "side-panel" }),
    };
    const toggle = el("div", { id: "mode-toggle" });
    root.append(
      this.sections.control!,
      this.sections.progress!,
      this.sections.graph!,
      el("div", { id: "bottom-row" },
        el("div", {}, toggle, this.sections.effects!),
        this.sections.sidePanel!,
      ),
    );
    this.sections.toggle = toggle;
    this.store.subscribe(() => this.render());
  }

  async init(): Promise<void> {
    this.store.space = await this.api.space();
    this.store.runState = await this.api.state();
    this.store.snapshots = await this.api.progress();
    this.store.universes = await this.api.universes();
    this.store.messages = await this.api.messages();
    this.render();
  }

  /** Live mode: follow the event stream; a seq gap forces a full refetch. */
  connect(makeSource: (url: string) => EventSourceLike): void {
    this.feed = new EventFeed(
      makeSource,
      (event) => this.applyEvent(event),
      () => void this.init(),
    );
    this.feed.connect();
  }

  /** Replay a recorded event log (same frames the live stream carries). */
  async replay(events: RecordedEvent[]): Promise<void> {
    for (const event of events) {
      this.applyEvent(event);
    }
    await this.refreshDerived();
  }

  applyEvent(event: RecordedEvent): void {
    this.store.applyEvent(event);
  }

  /** Data the event stream does not carry: message aggregation and, when a
   * decision is selected, the per-option assignment of each universe. */
  async refreshDerived(): Promise<void> {
    this.store.messages = await this.api.messages();
    await this.refreshOptions();
    this.store.emit();
  }

  private async refreshOptions(): Promise<void> {
    const decision = this.store.view.selectedDecision;
    if (!decision) {
      this.store.optionByUniverse = new Map();
      return;
    }
    const records = await this.api.universes(decision);
    this.store.optionByUniverse = new Map(
      records.map((r) => [r.universe_id, r.option ?? ""]),
    );
  }

  async handleControl(action: ControlAction): Promise<void> {
    const result = await this.api.control(action);
    if (!result.ok) {
      this.store.setNotice(`${action}: ${result.detail ?? "rejected"} (${result.status})`);
      return;
    }
    this.store.notice = null;
    if (result.state) {
      this.store.runState = result.state;
      if (action === "reset") {
        this.store.snapshots = [];
        this.store.universes = [];
        this.store.messages = [];
        this.store.setBrush([]);
        return;
      }
    }
    this.store.emit();
  }

  async selectDecision(name: string): Promise<void> {
    this.store.view.selectedDecision =
      this.store.view.selectedDecision === name ? null : name;
    await this.refreshOptions();
    this.store.emit();
  }

  private brushedQualityTarget(): number | null {
    const ids = [...this.store.view.brushedUniverseIds];
    return ids.length === 1 ? ids[0]! : null;
  }

  render(): void {
    const store = this.store;
    const state = store.runState;
    renderControlPanel(
      this.sections.control!,
      {
        phase: store.phase,
        completed: state?.completed ?? 0,
        total: state?.total ?? store.space?.total_universes ?? 0,
        etaSeconds: state?.eta_seconds ?? null,
        notice: store.notice,
      },
      (action) => void this.handleControl(action),
    );
    renderProgress(this.sections.progress!, store.snapshots);
    if (store.space) {
      renderDecisionGraph(
        this.sections.graph!,
        store.space,
        store.latestSensitivity(),
        store.view.selectedDecision,
        (name) => void this.selectDecision(name),
      );
    }
    this.renderModeToggle();
    const selected = store.view.selectedDecision;
    const options = selected && store.space
      ? store.space.decisions.find((d) => d.name === selected)?.options ?? null
      : null;
    renderMainEffects(
      this.sections.effects!,
      store.universes,
      store.optionByUniverse,
      options,
      store.view.colorMode,
      store.highlightedUniverseIds(),
      store.view.brushedUniverseIds,
      { onBrush: (ids) => store.setBrush(ids) },
    );
    if (store.view.colorMode === "quality") {
      void this.renderQualityPanel();
    } else {
      renderMessages(
        this.sections.sidePanel!,
        store.visibleMessages(),
        store.view.selectedMessage,
        (text) => store.toggleMessage(text),
      );
    }
  }

  private renderModeToggle(): void {
    const container = this.sections.toggle!;
    container.textContent = "";
    const select = el("select", { id: "color-mode" });
    for (const mode of ["diagnostics", "quality"] as const) {
      const option = el("option", { value: mode }, mode);
      if (this.store.view.colorMode === mode) option.setAttribute("selected", "");
      select.append(option);
    }
    select.addEventListener("change", () => {
      this.store.setColorMode(select.value as "diagnostics" | "quality");
    });
    container.append(el("label", {}, "color by "), select);
  }

  private async renderQualityPanel(): Promise<void> {
    const target = this.brushedQualityTarget();
    if (target === null) {
      renderQuality(this.sections.sidePanel!, null, null);
      return;
    }
    if (!this.qualityCache || this.qualityCache.id !== target) {
      this.qualityCache = { id: target, doc: await this.api.quality(target) };
    }
    renderQuality(this.sections.sidePanel!, target, this.qualityCache.doc);
  }
}
