"""Playback weighting: per-second bin increments, recency multiplier,
timeline accumulation, and display normalization.

How a bin earns score:

* Playing a second earns the base increment for the (speed band, focus)
  context: 1x focused +1.0, unfocused +0.25; 1.5x +1.5 / +0.5;
  2x +0.6 / +0.2. 1.25x counts as 1x by default.
* Seeking backward (a replay, always within one session) adds +2.0 to every
  bin between the landing point and the point left.
* Seeking forward (a skip) penalizes the three minutes after the origin:
  -0.3 for the first, -0.2 for the second, -0.1 for the third.
* Every amount is multiplied by the recency multiplier of the day it
  happened (1 + 0.1/day by default), so recent activity dominates once the
  timeline is normalized for display.

Increments are applied per video-second covered, not per wall-clock second:
a 2x segment spanning 10 video seconds touches 10 bins. An edge bin counts
only when the segment overlaps it by at least MIN_BIN_OVERLAP_S, which
keeps single-frame scrubs from registering.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum

from .model import (
    BinScoreTimeline,
    CourseCalendar,
    InteractionEvent,
    PlaybackSegment,
    SeekAction,
    SeekDirection,
    VideoMeta,
    WeightConfig,
    day_multiplier,
    isoformat_ms,
    parse_wall_time,
)
from .ingest import SESSION_GAP_S, derive_all

MIN_BIN_OVERLAP_S = 0.5
_OVERLAP_EPS = 1e-9

SKIP_ZONE_S = 60


class RateBand(str, Enum):
    NORMAL = "normal"
    FAST15 = "fast15"
    FAST2X = "fast2x"


class DeltaSource(str, Enum):
    PLAY = "play"
    REPLAY = "replay"
    SKIP_PENALTY = "skip_penalty"


@dataclass(frozen=True)
class BinDelta:
    """One already-day-multiplied score contribution to a single bin."""

    video_id: str
    bin_index: int
    amount: float
    source: DeltaSource


def rate_band(rate: float, config: WeightConfig) -> RateBand:
    """Classify a playback rate into the three weighted speed bands."""
    if rate <= 1.25:
        if rate < 1.25 or config.rate125_equals_1x:
            return RateBand.NORMAL
        return RateBand.FAST15
    if rate <= 1.75:
        return RateBand.FAST15
    return RateBand.FAST2X


def base_increment(band: RateBand, in_focus: bool, config: WeightConfig) -> float:
    if band == RateBand.NORMAL:
        return config.play_focused if in_focus else config.play_unfocused
    if band == RateBand.FAST15:
        return config.fast15_focused if in_focus else config.fast15_unfocused
    return config.fast2x_focused if in_focus else config.fast2x_unfocused


def covered_bins(start_pos_s: float, end_pos_s: float) -> range:
    """Integer bins that [start, end) overlaps by at least the minimum.

    Interior bins always qualify; the fractional edge bins qualify only
    when their covered fraction reaches MIN_BIN_OVERLAP_S.
    """
    if end_pos_s <= start_pos_s:
        return range(0)
    first = math.floor(start_pos_s)
    last = math.ceil(end_pos_s) - 1
    if first == last:
        # Sub-second stretch inside one bin.
        if end_pos_s - start_pos_s >= MIN_BIN_OVERLAP_S - _OVERLAP_EPS:
            return range(first, first + 1)
        return range(0)
    if (first + 1) - start_pos_s < MIN_BIN_OVERLAP_S - _OVERLAP_EPS:
        first += 1
    if end_pos_s - last < MIN_BIN_OVERLAP_S - _OVERLAP_EPS:
        last -= 1
    if last < first:
        return range(0)
    return range(first, last + 1)


def segment_increments(segment: PlaybackSegment, config: WeightConfig) -> list[BinDelta]:
    """Per-bin increments earned by one playback segment."""
    band = rate_band(segment.rate, config)
    amount = base_increment(band, segment.in_focus, config) * day_multiplier(
        segment.day_index, config
    )
    return [
        BinDelta(segment.video_id, b, amount, DeltaSource.PLAY)
        for b in covered_bins(segment.start_pos_s, segment.end_pos_s)
    ]


def replay_increments(seek: SeekAction, config: WeightConfig) -> list[BinDelta]:
    """Replay bonus for every bin between the landing point and the point
    the student jumped back from."""
    if seek.direction != SeekDirection.BACKWARD:
        raise ValueError("replay_increments expects a backward seek")
    amount = config.replay_bonus * day_multiplier(seek.day_index, config)
    return [
        BinDelta(seek.video_id, b, amount, DeltaSource.REPLAY)
        for b in range(math.floor(seek.to_pos_s), math.floor(seek.from_pos_s))
    ]


def skip_penalties(
    seek: SeekAction, config: WeightConfig, duration_s: int
) -> list[BinDelta]:
    """Penalties on the three minutes following a forward seek's origin.

    The zones attach to the origin even when the landing point falls inside
    them; later playback there simply adds its increments on top.
    """
    if seek.direction != SeekDirection.FORWARD:
        raise ValueError("skip_penalties expects a forward seek")
    mult = day_multiplier(seek.day_index, config)
    origin = math.floor(seek.from_pos_s)
    zones = (
        config.skip_penalty_min1,
        config.skip_penalty_min2,
        config.skip_penalty_min3,
    )
    deltas = []
    for i, penalty in enumerate(zones):
        lo = min(origin + i * SKIP_ZONE_S, duration_s)
        hi = min(origin + (i + 1) * SKIP_ZONE_S, duration_s)
        deltas.extend(
            BinDelta(seek.video_id, b, penalty * mult, DeltaSource.SKIP_PENALTY)
            for b in range(lo, hi)
        )
    return deltas


def normalize_timeline(raw: list[float]) -> list[float]:
    """Clamp negatives to zero, then scale so the peak is exactly 1.0."""
    if len(raw) < 1:
        raise ValueError("raw must contain at least one bin")
    clamped = [v if v > 0.0 else 0.0 for v in raw]
    peak = max(clamped)
    if peak == 0.0:
        return clamped
    return [v / peak for v in clamped]


def recompute_timeline(
    video: VideoMeta,
    events: list[InteractionEvent],
    config: WeightConfig,
    calendar: CourseCalendar,
    horizon: datetime,
    computed_at: date | None = None,
    gap_s: int = SESSION_GAP_S,
) -> BinScoreTimeline:
    """Full-log replay of one video's timeline up to the horizon instant.

    Pure and deterministic: sessions are reconstructed from scratch from
    every event at or before ``horizon`` (any student, any video, since
    sessions can span videos), and the video's bins accumulate every
    resulting increment. Incremental updates would be an optimization only;
    scores are additive over disjoint parts of the log.
    """
    included = [e for e in events if e.wall_time <= horizon]
    segments, seeks, _ = derive_all(included, calendar, gap_s=gap_s)

    raw = [0.0] * video.duration_s
    for segment in segments:
        if segment.video_id != video.video_id:
            continue
        for delta in segment_increments(segment, config):
            if 0 <= delta.bin_index < video.duration_s:
                raw[delta.bin_index] += delta.amount
    for seek in seeks:
        if seek.video_id != video.video_id:
            continue
        if seek.direction == SeekDirection.BACKWARD:
            deltas = replay_increments(seek, config)
        else:
            deltas = skip_penalties(seek, config, video.duration_s)
        for delta in deltas:
            if 0 <= delta.bin_index < video.duration_s:
                raw[delta.bin_index] += delta.amount

    video_events = [e for e in included if e.video_id == video.video_id]
    event_horizon = max((e.wall_time for e in video_events), default=None)
    return BinScoreTimeline(
        video_id=video.video_id,
        raw=tuple(raw),
        normalized=tuple(normalize_timeline(raw)),
        computed_at=computed_at or calendar.local_date(horizon),
        event_horizon=event_horizon,
    )


def zero_timeline(video: VideoMeta, computed_at: date) -> BinScoreTimeline:
    """Cold-start timeline for a freshly registered video."""
    zeros = (0.0,) * video.duration_s
    return BinScoreTimeline(
        video_id=video.video_id, raw=zeros, normalized=zeros, computed_at=computed_at
    )


def timeline_to_csv(timeline: BinScoreTimeline) -> str:
    """CSV export: one row per bin with raw and normalized scores."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_index", "raw", "normalized"])
    for i, (r, n) in enumerate(zip(timeline.raw, timeline.normalized)):
        writer.writerow([i, repr(r), repr(n)])
    return buf.getvalue()


# Binary snapshot layout (all little-endian), used for the service cache:
#   magic      4 bytes  b"HLT1"
#   duration   uint32   number of 1-second bins
#   3 length-prefixed UTF-8 strings (uint16 length each):
#     video_id, computed_at (ISO date), event_horizon (ISO ms or "")
#   raw        duration * float64
#   normalized duration * float64
_MAGIC = b"HLT1"


def _pack_str(value: str) -> bytes:
    data = value.encode("utf-8")
    return struct.pack("<H", len(data)) + data


def timeline_to_bytes(timeline: BinScoreTimeline) -> bytes:
    horizon = isoformat_ms(timeline.event_horizon) if timeline.event_horizon else ""
    parts = [
        _MAGIC,
        struct.pack("<I", timeline.duration_s),
        _pack_str(timeline.video_id),
        _pack_str(timeline.computed_at.isoformat()),
        _pack_str(horizon),
        struct.pack(f"<{timeline.duration_s}d", *timeline.raw),
        struct.pack(f"<{timeline.duration_s}d", *timeline.normalized),
    ]
    return b"".join(parts)


def timeline_from_bytes(data: bytes) -> BinScoreTimeline:
    if data[:4] != _MAGIC:
        raise ValueError("not a timeline snapshot")
    offset = 4
    (duration,) = struct.unpack_from("<I", data, offset)
    offset += 4

    def unpack_str() -> str:
        nonlocal offset
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        value = data[offset : offset + length].decode("utf-8")
        offset += length
        return value

    video_id = unpack_str()
    computed_at = date.fromisoformat(unpack_str())
    horizon_str = unpack_str()
    raw = struct.unpack_from(f"<{duration}d", data, offset)
    offset += duration * 8
    normalized = struct.unpack_from(f"<{duration}d", data, offset)
    return BinScoreTimeline(
        video_id=video_id,
        raw=raw,
        normalized=normalized,
        computed_at=computed_at,
        event_horizon=parse_wall_time(horizon_str) if horizon_str else None,
    )
