/** HTTP client for the monitoring service plus the event-stream feed. */

import type {
  ApiLike,
  ControlResult,
  MessageDoc,
  QualityDoc,
  RecordedEvent,
  RunStateDoc,
  SnapshotDoc,
  SpaceDoc,
  UniverseDoc,
} from "./types.js";

export class ApiClient implements ApiLike {
  constructor(private readonly base: string = "") {}

  private async json<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) throw new Error(`${path}: HTTP ${response.status}`);
    return (await response.json()) as T;
  }

  space(): Promise<SpaceDoc> {
    return this.json("/api/space");
  }

  state(): Promise<RunStateDoc> {
    return this.json("/api/state");
  }

  progress(): Promise<SnapshotDoc[]> {
    return this.json("/api/progress");
  }

  universes(decision?: string): Promise<UniverseDoc[]> {
    const query = decision ? `?decision=${encodeURIComponent(decision)}` : "";
    return this.json(`/api/universes${query}`);
  }

  messages(): Promise<MessageDoc[]> {
    return this.json("/api/messages");
  }

  async quality(universeId: number): Promise<QualityDoc | null> {
    const response = await fetch(`${this.base}/api/quality/${universeId}`);
    if (response.status === 404) return null;
    if (!response.ok) throw new Error(`quality: HTTP ${response.status}`);
    return (await response.json()) as QualityDoc;
  }

  async control(action: "start" | "pause" | "resume" | "reset"): Promise<ControlResult> {
    const response = await fetch(`${this.base}/api/control`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action }),
    });
    const body = (await response.json().catch(() => ({}))) as Record<string, unknown>;
    if (!response.ok) {
      return { ok: false, status: response.status, detail: String(body["detail"] ?? "rejected") };
    }
    return { ok: true, status: response.status, state: body as unknown as RunStateDoc };
  }
}

/** Subset of the browser EventSource interface the feed relies on. */
export interface EventSourceLike {
  addEventListener(type: string, listener: (event: { data: string }) => void): void;
  close(): void;
}

const EVENT_TYPES = ["state_changed", "universe_completed", "snapshot"] as const;

/**
 * Applies stream events in seq order. A gap in seq (dropped frame,
 * reconnect) triggers onGap so the owner can refetch everything.
 */
export class EventFeed {
  private source: EventSourceLike | null = null;
  private lastSeq = 0;

  constructor(
    private readonly makeSource: (url: string) => EventSourceLike,
    private readonly onEvent: (event: RecordedEvent) => void,
    private readonly onGap: () => void,
  ) {}

  connect(url = "/api/events"): void {
    this.close();
    this.lastSeq = 0;
    this.source = this.makeSource(url);
    for (const type of EVENT_TYPES) {
      this.source.addEventListener(type, (event) => {
        const payload = JSON.parse(event.data) as RecordedEvent["payload"];
        this.deliver({ type, payload });
      });
    }
  }

  deliver(event: RecordedEvent): void {
    const seq = event.payload.seq;
    if (this.lastSeq > 0 && seq !== this.lastSeq + 1) {
      this.lastSeq = seq;
      this.onGap();
      return;
    }
    this.lastSeq = seq;
    this.onEvent(event);
  }

  close(): void {
    this.source?.close();
    this.source = null;
  }
}
