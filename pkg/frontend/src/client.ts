/** Session API calls and the streaming event reader.
 *
 * The store applies events strictly in seq order: duplicates are dropped
 * and out-of-order deliveries are buffered until the gap closes, so
 * consumers always observe a gap-free, ordered sequence. */

import type { ConnectionState, SessionEvent, SessionMode } from "./types.js";

export class EventStore {
  private applied: SessionEvent[] = [];
  private pending = new Map<number, SessionEvent>();
  private listeners: Array<(event: SessionEvent) => void> = [];

  get events(): readonly SessionEvent[] {
    return this.applied;
  }

  get lastSeq(): number {
    return this.applied.length ? this.applied[this.applied.length - 1].seq : 0;
  }

  onEvent(listener: (event: SessionEvent) => void): void {
    this.listeners.push(listener);
  }

  /** Offer one delivery; returns the number of events newly applied. */
  offer(event: SessionEvent): number {
    if (event.seq <= this.lastSeq || this.pending.has(event.seq)) {
      return 0; // duplicate
    }
    this.pending.set(event.seq, event);
    let appliedCount = 0;
    for (;;) {
      const next = this.pending.get(this.lastSeq + 1);
      if (!next) break;
      this.pending.delete(next.seq);
      this.applied.push(next);
      appliedCount += 1;
      for (const listener of this.listeners) listener(next);
    }
    return appliedCount;
  }
}

export interface CreateSessionOptions {
  mode?: SessionMode;
  seed?: number;
  timeoutMs?: number;
  targetDurationMs?: number;
  virtualClock?: boolean;
}

export class ConflictError extends Error {}
export class GoneError extends Error {}

async function checkedJson(response: Response): Promise<unknown> {
  if (response.status === 409) throw new ConflictError(await response.text());
  if (response.status === 410) throw new GoneError(await response.text());
  if (!response.ok) {
    throw new Error(`${response.status}: ${await response.text()}`);
  }
  return response.json();
}

export class SessionClient {
  connectionState: ConnectionState = "connecting";
  readonly store = new EventStore();
  private stopped = false;
  private stateListeners: Array<(state: ConnectionState) => void> = [];

  constructor(
    readonly baseUrl: string,
    readonly sessionId: string,
  ) {}

  onConnectionState(listener: (state: ConnectionState) => void): void {
    this.stateListeners.push(listener);
  }

  private setState(state: ConnectionState): void {
    this.connectionState = state;
    for (const listener of this.stateListeners) listener(state);
  }

  static async create(
    baseUrl: string,
    options: CreateSessionOptions = {},
  ): Promise<SessionClient> {
    const response = await fetch(`${baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(options),
    });
    const body = (await checkedJson(response)) as { id: string };
    return new SessionClient(baseUrl, body.id);
  }

  async postUtterance(text: string, atMs?: number): Promise<void> {
    await checkedJson(
      await fetch(`${this.baseUrl}/sessions/${this.sessionId}/utterance`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text, atMs }),
      }),
    );
  }

  async selectCandidate(responseId: string, atMs?: number): Promise<void> {
    await checkedJson(
      await fetch(`${this.baseUrl}/sessions/${this.sessionId}/select`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ responseId, atMs }),
      }),
    );
  }

  async close(): Promise<void> {
    await checkedJson(
      await fetch(`${this.baseUrl}/sessions/${this.sessionId}/close`, {
        method: "POST",
      }),
    );
  }

  stop(): void {
    this.stopped = true;
  }

  /** Consume the event stream until session-end, reconnecting from the
   * last applied seq whenever the connection drops. */
  async run(): Promise<void> {
    let first = true;
    while (!this.stopped) {
      this.setState(first ? "connecting" : "reconnecting");
      first = false;
      try {
        const response = await fetch(
          `${this.baseUrl}/sessions/${this.sessionId}/events?from=${this.store.lastSeq}`,
        );
        if (!response.ok || !response.body) {
          throw new Error(`stream failed: ${response.status}`);
        }
        this.setState("live");
        await this.consume(response.body);
        if (this.ended()) return;
      } catch {
        if (this.stopped) return;
      }
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }

  private ended(): boolean {
    const events = this.store.events;
    return events.length > 0 && events[events.length - 1].kind === "session-end";
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline;
      while ((newline = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        if (line) this.store.offer(JSON.parse(line) as SessionEvent);
      }
      if (this.stopped) {
        await reader.cancel();
        return;
      }
    }
  }
}
