import type { Clock, EventKind, WireEvent } from './types.js';

export const HEARTBEAT_PERIOD_MS = 10_000;
export const MAX_BATCH = 20;
export const MAX_BATCH_DELAY_MS = 5_000;

export type SendBatch = (events: WireEvent[]) => Promise<void>;

/**
 * Ordered outgoing event queue.
 *
 * Flushes when 20 events are pending or the oldest pending event is 5
 * seconds old, whichever comes first. A failed send puts the batch back at
 * the front untouched; event_ids never change across retries, the server
 * deduplicates. `flushAll` is for page-hide, where losing queued events
 * would lose segments.
 */
export class TelemetryQueue {
  private pending: WireEvent[] = [];
  private oldestQueuedAt: number | null = null;
  private sending = false;

  constructor(
    private readonly send: SendBatch,
    private readonly clock: Clock,
    private readonly onError: (err: unknown) => void = () => undefined,
  ) {}

  get pendingCount(): number {
    return this.pending.length;
  }

  enqueue(event: WireEvent): void {
    this.pending.push(event);
    if (this.oldestQueuedAt === null) {
      this.oldestQueuedAt = this.clock.nowMs();
    }
    if (this.pending.length >= MAX_BATCH) {
      void this.flush();
    }
  }

  /** Called periodically; flushes once the age limit is reached. */
  tick(): void {
    if (
      this.oldestQueuedAt !== null &&
      this.clock.nowMs() - this.oldestQueuedAt >= MAX_BATCH_DELAY_MS
    ) {
      void this.flush();
    }
  }

  async flush(): Promise<boolean> {
    if (this.sending || this.pending.length === 0) {
      return true;
    }
    this.sending = true;
    const batch = this.pending.slice(0, MAX_BATCH);
    try {
      await this.send(batch);
      this.pending = this.pending.slice(batch.length);
      this.oldestQueuedAt = this.pending.length > 0 ? this.clock.nowMs() : null;
      return true;
    } catch (err) {
      this.onError(err); // batch stays queued with the same event ids
      return false;
    } finally {
      this.sending = false;
    }
  }

  async flushAll(): Promise<void> {
    while (this.pending.length > 0) {
      if (!(await this.flush())) {
        return;
      }
    }
  }
}

/**
 * Turns player actions into the wire event stream.
 *
 * Direct actions (play, pause, seek, rate change, focus, blur, ended) are
 * emitted immediately; a heartbeat carries the current position every 10
 * seconds of playback. Seeks always carry the position they left.
 */
export class PlayerTelemetry {
  private counter = 0;
  private playing = false;
  private rate = 1.0;
  private nextBeatAt: number | null = null;

  constructor(
    private readonly queue: TelemetryQueue,
    private readonly clock: Clock,
    private readonly videoId: string,
    private readonly getPosition: () => number,
    private readonly idPrefix: string,
  ) {}

  loaded(position = 0): void {
    this.playing = false;
    this.nextBeatAt = null;
    this.emit('load', position);
  }

  play(position: number): void {
    if (this.playing) {
      return;
    }
    this.playing = true;
    this.nextBeatAt = this.clock.nowMs() + HEARTBEAT_PERIOD_MS;
    this.emit('play', position);
  }

  pause(position: number): void {
    if (!this.playing) {
      return;
    }
    this.playing = false;
    this.nextBeatAt = null;
    this.emit('pause', position);
  }

  seek(fromPosition: number, toPosition: number): void {
    if (fromPosition === toPosition) {
      return;
    }
    this.emit('seek', toPosition, fromPosition);
  }

  rateChange(position: number, rate: number): void {
    if (rate === this.rate) {
      return;
    }
    this.rate = rate;
    this.emit('rate_change', position);
  }

  focusChange(focused: boolean, position: number): void {
    this.emit(focused ? 'focus' : 'blur', position);
  }

  ended(position: number): void {
    this.playing = false;
    this.nextBeatAt = null;
    this.emit('ended', position);
  }

  /**
   * Heartbeat pump; call at least once a second while the player is open.
   * Emits every heartbeat that has come due, keeping a fixed cadence even
   * if ticks arrive late.
   */
  tick(): void {
    if (!this.playing || this.nextBeatAt === null) {
      return;
    }
    while (this.clock.nowMs() >= this.nextBeatAt) {
      this.emit('heartbeat', this.getPosition());
      this.nextBeatAt += HEARTBEAT_PERIOD_MS;
    }
  }

  private emit(kind: EventKind, position: number, seekFrom: number | null = null): void {
    this.counter += 1;
    this.queue.enqueue({
      event_id: `${this.idPrefix}-${this.counter}`,
      video_id: this.videoId,
      wall_time: new Date(this.clock.nowMs()).toISOString(),
      kind,
      position_s: round3(position),
      rate: this.rate,
      seek_from_s: seekFrom === null ? null : round3(seekFrom),
    });
  }
}

function round3(value: number): number {
  return Math.round(value * 1000) / 1000;
}
