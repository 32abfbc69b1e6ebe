import { PlayerTelemetry, TelemetryQueue } from '../src/telemetry.js';
import type { Clock, WireEvent } from '../src/types.js';

export class ManualClock implements Clock {
  constructor(private t: number) {}

  nowMs(): number {
    return this.t;
  }

  advanceMs(ms: number): void {
    this.t += ms;
  }
}

export const T0_ISO = '2021-01-18T09:00:00.000Z';
export const T0_MS = Date.parse(T0_ISO);

/**
 * Drives PlayerTelemetry the way a real player session would: wall time
 * moves in one-second steps, position advances with the playback rate, and
 * the heartbeat pump ticks after every step.
 */
export class ScriptedPlayer {
  readonly sent: WireEvent[] = [];
  readonly clock: ManualClock;
  readonly queue: TelemetryQueue;
  readonly telemetry: PlayerTelemetry;
  private pos = 0;
  private rate = 1;
  private playing = false;

  constructor(videoId: string, private readonly durationS: number, idPrefix: string) {
    this.clock = new ManualClock(T0_MS);
    this.queue = new TelemetryQueue(async (events) => {
      this.sent.push(...events);
    }, this.clock);
    this.telemetry = new PlayerTelemetry(
      this.queue,
      this.clock,
      videoId,
      () => this.pos,
      idPrefix,
    );
  }

  load(): void {
    this.telemetry.loaded(0);
  }

  play(): void {
    this.telemetry.play(this.pos);
    this.playing = true;
  }

  pause(): void {
    this.telemetry.pause(this.pos);
    this.playing = false;
  }

  seekTo(position: number): void {
    this.telemetry.seek(this.pos, position);
    this.pos = position;
  }

  setRate(rate: number): void {
    this.telemetry.rateChange(this.pos, rate);
    this.rate = rate;
  }

  blur(): void {
    this.telemetry.focusChange(false, this.pos);
  }

  focus(): void {
    this.telemetry.focusChange(true, this.pos);
  }

  ended(): void {
    this.pos = this.durationS;
    this.telemetry.ended(this.pos);
    this.playing = false;
  }

  advance(seconds: number): void {
    for (let i = 0; i < seconds; i++) {
      this.clock.advanceMs(1000);
      if (this.playing) {
        this.pos = Math.min(this.pos + this.rate, this.durationS);
      }
      this.telemetry.tick();
    }
  }

  async stream(): Promise<WireEvent[]> {
    await this.queue.flushAll();
    return this.sent;
  }
}
