/** Fixture loading plus a fake API that honors the service's contracts. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type {
  ApiLike,
  ControlResult,
  MessageDoc,
  Phase,
  QualityDoc,
  RecordedEvent,
  RunStateDoc,
  SnapshotDoc,
  SpaceDoc,
  UniverseDoc,
} from "../src/types.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function load<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf8")) as T;
}

export interface Fixtures {
  spaceInitial: SpaceDoc;
  spaceFinal: SpaceDoc;
  universes: UniverseDoc[];
  universesBy: Record<string, UniverseDoc[]>;
  messages: MessageDoc[];
  quality: { universe_id: number; doc: QualityDoc };
  events: RecordedEvent[];
  sensitivityCsv: Map<string, { score: number | null; defined: boolean }>;
}

export function loadFixtures(): Fixtures {
  const spaceInitial = load<SpaceDoc>("space_initial.json");
  const events = readFileSync(join(FIXTURES, "events.jsonl"), "utf8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line) as RecordedEvent);
  const sensitivityCsv = new Map<string, { score: number | null; defined: boolean }>();
  const csvLines = readFileSync(join(FIXTURES, "sensitivity.csv"), "utf8")
    .trim()
    .split(/\r?\n/);
  for (const line of csvLines.slice(1)) {
    const [decision, , score, , , defined] = line.trim().split(",");
    sensitivityCsv.set(decision!, {
      score: score ? Number(score) : null,
      defined: defined === "true",
    });
  }
  return {
    spaceInitial,
    spaceFinal: load<SpaceDoc>("space_final.json"),
    universes: load<UniverseDoc[]>("universes.json"),
    universesBy: Object.fromEntries(
      spaceInitial.decisions.map((d) => [
        d.name,
        load<UniverseDoc[]>(`universes_${d.name}.json`),
      ]),
    ),
    messages: load<MessageDoc[]>("messages.json"),
    quality: load<{ universe_id: number; doc: QualityDoc }>("quality.json"),
    events,
    sensitivityCsv,
  };
}

const TRANSITIONS: Record<string, { from: Phase[]; to: Phase }> = {
  start: { from: ["idle"], to: "running" },
  pause: { from: ["running"], to: "paused" },
  resume: { from: ["paused"], to: "running" },
  reset: { from: ["paused", "completed"], to: "idle" },
};

export class FakeApi implements ApiLike {
  phase: Phase = "idle";
  /** flip once the replayed run is over so listings serve final documents */
  completedView = false;
  controlLog: string[] = [];

  constructor(private readonly fx: Fixtures) {}

  async space(): Promise<SpaceDoc> {
    return this.completedView ? this.fx.spaceFinal : this.fx.spaceInitial;
  }

  async state(): Promise<RunStateDoc> {
    return {
      phase: this.phase,
      completed: this.completedView ? this.fx.universes.length : 0,
      total: this.fx.spaceInitial.total_universes,
      cursor: 0,
      eta_seconds: null,
    };
  }

  async progress(): Promise<SnapshotDoc[]> {
    return [];
  }

  async universes(decision?: string): Promise<UniverseDoc[]> {
    if (!this.completedView) return [];
    if (decision) return this.fx.universesBy[decision] ?? [];
    return this.fx.universes;
  }

  async messages(): Promise<MessageDoc[]> {
    return this.completedView ? this.fx.messages : [];
  }

  async quality(universeId: number): Promise<QualityDoc | null> {
    return universeId === this.fx.quality.universe_id ? this.fx.quality.doc : null;
  }

  async control(action: "start" | "pause" | "resume" | "reset"): Promise<ControlResult> {
    this.controlLog.push(action);
    const rule = TRANSITIONS[action]!;
    if (!rule.from.includes(this.phase)) {
      return { ok: false, status: 409, detail: `cannot ${action} from ${this.phase}` };
    }
    this.phase = rule.to;
    return { ok: true, status: 200, state: await this.state() };
  }
}

export function flushPromises(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
