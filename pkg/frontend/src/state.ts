/** Client-side store: API data plus interactive view state.
 *
 * Rendering is a pure function of this store, so replaying a recorded event
 * log reproduces the exact same UI.
 */

import type {
  MessageDoc,
  Phase,
  RecordedEvent,
  RunStateDoc,
  SensitivityDoc,
  SnapshotDoc,
  SpaceDoc,
  UniverseDoc,
} from "./types.js";

export type ColorMode = "diagnostics" | "quality";

export interface ViewState {
  selectedDecision: string | null;
  brushedUniverseIds: Set<number>;
  selectedMessage: string | null;
  colorMode: ColorMode;
}

export class Store {
  space: SpaceDoc | null = null;
  runState: RunStateDoc | null = null;
  snapshots: SnapshotDoc[] = [];
  universes: UniverseDoc[] = [];
  /** option per universe id for the selected decision (from ?decision=) */
  optionByUniverse: Map<number, string> = new Map();
  messages: MessageDoc[] = [];
  view: ViewState = {
    selectedDecision: null,
    brushedUniverseIds: new Set(),
    selectedMessage: null,
    colorMode: "diagnostics",
  };
  notice: string | null = null;

  private listeners: (() => void)[] = [];

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  emit(): void {
    for (const listener of this.listeners) listener();
  }

  get phase(): Phase {
    return this.runState?.phase ?? "idle";
  }

  applyEvent(event: RecordedEvent): void {
    const { type, payload } = event;
    if (type === "state_changed") {
      this.runState = payload as unknown as RunStateDoc;
    } else if (type === "snapshot") {
      this.snapshots.push(payload as unknown as SnapshotDoc);
    } else if (type === "universe_completed") {
      const doc = payload as unknown as UniverseDoc;
      const existing = this.universes.findIndex((u) => u.universe_id === doc.universe_id);
      if (existing >= 0) this.universes[existing] = doc;
      else this.universes.push(doc);
      if (this.runState) {
        this.runState = { ...this.runState, completed: this.universes.length };
      }
    }
    this.emit();
  }

  /** Latest per-decision sensitivity, preferring the newest snapshot. */
  latestSensitivity(): Map<string, SensitivityDoc> {
    const out = new Map<string, SensitivityDoc>();
    for (let i = this.snapshots.length - 1; i >= 0; i--) {
      const snapshot = this.snapshots[i]!;
      if (snapshot.sensitivity.length) {
        for (const s of snapshot.sensitivity) out.set(s.decision, s);
        return out;
      }
    }
    if (this.space) {
      for (const d of this.space.decisions) {
        out.set(d.name, { decision: d.name, ...d.sensitivity });
      }
    }
    return out;
  }

  /** Messages restricted to the brushed selection (all when nothing brushed). */
  visibleMessages(): MessageDoc[] {
    const brushed = this.view.brushedUniverseIds;
    if (brushed.size === 0) return this.messages;
    const filtered: MessageDoc[] = [];
    for (const message of this.messages) {
      const ids = message.universe_ids.filter((id) => brushed.has(id));
      if (ids.length) {
        filtered.push({ ...message, universe_ids: ids, count: ids.length });
      }
    }
    return filtered;
  }

  /** Universe ids carrying the selected message, for dot highlighting. */
  highlightedUniverseIds(): Set<number> {
    if (this.view.selectedMessage === null) return new Set();
    const message = this.messages.find((m) => m.text === this.view.selectedMessage);
    return new Set(message?.universe_ids ?? []);
  }

  setBrush(ids: Iterable<number>): void {
    this.view.brushedUniverseIds = new Set(ids);
    this.emit();
  }

  toggleDecision(name: string): void {
    this.view.selectedDecision = this.view.selectedDecision === name ? null : name;
    this.emit();
  }

  toggleMessage(text: string): void {
    this.view.selectedMessage = this.view.selectedMessage === text ? null : text;
    this.emit();
  }

  setColorMode(mode: ColorMode): void {
    this.view.colorMode = mode;
    this.emit();
  }

  setNotice(text: string | null): void {
    this.notice = text;
    this.emit();
  }
}
