import { ApiClient } from './api.js';
import { drawContour, positionForPixel, timelineUsable } from './contour.js';
import { PlayerTelemetry, TelemetryQueue } from './telemetry.js';
import { SPEED_CHOICES, type Clock, type VideoInfo } from './types.js';

const systemClock: Clock = { nowMs: () => Date.now() };

/**
 * Playback panel: video element, speed buttons, and the usage contour
 * aligned with the scrubber. Wires native media/visibility events into the
 * telemetry stream; the contour is fetched once per video open.
 */
export class PlayerPanel {
  private telemetry: PlayerTelemetry | null = null;
  private queue: TelemetryQueue;
  private video: HTMLVideoElement;
  private contourCanvas: HTMLCanvasElement;
  private pumpHandle: number | null = null;
  private seekFrom = 0;
  private durationS = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly clock: Clock = systemClock,
  ) {
    this.queue = new TelemetryQueue(
      (events) => this.api.postEvents(events).then(() => undefined),
      this.clock,
      (err) => console.warn('telemetry send failed, will retry', err),
    );
    this.root.innerHTML = `
      <div class="contour-wrap"><canvas class="contour" height="64"></canvas></div>
      <video controls preload="metadata"></video>
      <div class="controls">
        <span class="speed-label">speed</span>
        <span class="speeds"></span>
      </div>
      <p class="player-note"></p>
    `;
    this.video = this.root.querySelector('video') as HTMLVideoElement;
    this.contourCanvas = this.root.querySelector('canvas.contour') as HTMLCanvasElement;
    const speeds = this.root.querySelector('.speeds') as HTMLElement;
    for (const speed of SPEED_CHOICES) {
      const button = document.createElement('button');
      button.textContent = `${speed}x`;
      button.addEventListener('click', () => {
        this.video.playbackRate = speed;
      });
      speeds.appendChild(button);
    }
    this.bindMediaEvents();
    this.bindFocusEvents();
    this.contourCanvas.addEventListener('click', (event) => {
      const rect = this.contourCanvas.getBoundingClientRect();
      const x = ((event.clientX - rect.left) / rect.width) * this.contourCanvas.width;
      this.video.currentTime = positionForPixel(x, this.contourCanvas.width, this.durationS);
    });
  }

  async open(video: VideoInfo): Promise<void> {
    await this.queue.flushAll();
    this.durationS = video.duration_s;
    this.video.src = video.media_url ?? '';
    this.note(video.media_url ? '' : 'no media reference for this video');
    const prefix = `${video.video_id}-${this.clock.nowMs().toString(36)}-${Math.random()
      .toString(36)
      .slice(2, 8)}`;
    this.telemetry = new PlayerTelemetry(
      this.queue,
      this.clock,
      video.video_id,
      () => this.video.currentTime,
      prefix,
    );
    this.telemetry.loaded(0);
    this.seekFrom = 0;
    await this.refreshContour(video);
    if (this.pumpHandle === null) {
      this.pumpHandle = window.setInterval(() => {
        this.telemetry?.tick();
        this.queue.tick();
      }, 1000);
    }
  }

  private async refreshContour(video: VideoInfo): Promise<void> {
    try {
      const timeline = await this.api.fetchTimeline(video.video_id);
      if (!timelineUsable(timeline, video.duration_s)) {
        console.warn('timeline length mismatch; hiding contour');
        this.contourCanvas.style.visibility = 'hidden';
        return;
      }
      this.contourCanvas.style.visibility = 'visible';
      this.contourCanvas.width = this.contourCanvas.clientWidth || 880;
      drawContour(this.contourCanvas, timeline.normalized);
    } catch (err) {
      console.warn('could not fetch timeline', err);
      this.contourCanvas.style.visibility = 'hidden';
    }
  }

  private bindMediaEvents(): void {
    this.video.addEventListener('play', () => {
      this.telemetry?.play(this.video.currentTime);
    });
    this.video.addEventListener('pause', () => {
      if (!this.video.ended) {
        this.telemetry?.pause(this.video.currentTime);
      }
    });
    this.video.addEventListener('ended', () => {
      this.telemetry?.ended(this.video.currentTime);
    });
    this.video.addEventListener('ratechange', () => {
      this.telemetry?.rateChange(this.video.currentTime, this.video.playbackRate);
    });
    // The media "seeking" event fires after currentTime already moved, so
    // track the origin from the last timeupdate instead.
    this.video.addEventListener('timeupdate', () => {
      if (!this.video.seeking) {
        this.seekFrom = this.video.currentTime;
      }
    });
    this.video.addEventListener('seeked', () => {
      this.telemetry?.seek(this.seekFrom, this.video.currentTime);
      this.seekFrom = this.video.currentTime;
    });
  }

  private bindFocusEvents(): void {
    // Focus means: page visible AND window focused; losing either blurs.
    let focused = true;
    const update = () => {
      const nowFocused = document.visibilityState === 'visible' && document.hasFocus();
      if (nowFocused !== focused) {
        focused = nowFocused;
        this.telemetry?.focusChange(focused, this.video.currentTime);
      }
    };
    window.addEventListener('focus', update);
    window.addEventListener('blur', update);
    document.addEventListener('visibilitychange', update);
    // Never lose queued events on navigation.
    window.addEventListener('pagehide', () => {
      void this.queue.flushAll();
    });
  }

  private note(text: string): void {
    (this.root.querySelector('.player-note') as HTMLElement).textContent = text;
  }
}
