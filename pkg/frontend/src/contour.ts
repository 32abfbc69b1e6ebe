import type { TimelineData } from './types.js';

/**
 * Pixel heights for the usage contour: the height at pixel x is
 * proportional to the normalized score of the bin that x maps onto
 * (bin = floor(x / width * duration)).
 */
export function computeHeights(
  normalized: number[],
  widthPx: number,
  maxHeightPx: number,
): number[] {
  const duration = normalized.length;
  const heights = new Array<number>(widthPx);
  for (let x = 0; x < widthPx; x++) {
    let bin = Math.floor((x / widthPx) * duration);
    if (bin >= duration) {
      bin = duration - 1;
    }
    heights[x] = normalized[bin] * maxHeightPx;
  }
  return heights;
}

/** Video position a click at pixel x should seek to. */
export function positionForPixel(x: number, widthPx: number, durationS: number): number {
  const clamped = Math.min(Math.max(x, 0), widthPx - 1);
  return Math.floor((clamped / widthPx) * durationS);
}

/** True when the array can be trusted against the video's duration. */
export function timelineUsable(timeline: TimelineData, durationS: number): boolean {
  return (
    timeline.normalized.length === durationS &&
    timeline.bin_width_s === 1 &&
    timeline.normalized.every((v) => v >= 0 && v <= 1)
  );
}

const FILL = 'rgba(245, 197, 24, 0.85)';
const LINE = '#b8860b';

/** Paint the filled contour onto a canvas (expects CSS-sized backing). */
export function drawContour(canvas: HTMLCanvasElement, normalized: number[]): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const heights = computeHeights(normalized, width, height - 2);
  ctx.beginPath();
  ctx.moveTo(0, height);
  for (let x = 0; x < width; x++) {
    ctx.lineTo(x, height - heights[x]);
  }
  ctx.lineTo(width, height);
  ctx.closePath();
  ctx.fillStyle = FILL;
  ctx.fill();
  ctx.strokeStyle = LINE;
  ctx.lineWidth = 1;
  ctx.stroke();
}
