"""Domain types and calendar arithmetic shared by every part of the engine.

All types here are immutable values (frozen dataclasses) and safe to share
across threads. Fractional video positions stay real-valued; rounding into
1-second bins happens only in the scoring layer.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from datetime import date, datetime, timezone
from enum import Enum
from zoneinfo import ZoneInfo

from .errors import BeforeCourseStartError


class EventKind(str, Enum):
    LOAD = "load"
    PLAY = "play"
    PAUSE = "pause"
    SEEK = "seek"
    RATE_CHANGE = "rate_change"
    FOCUS = "focus"
    BLUR = "blur"
    HEARTBEAT = "heartbeat"
    ENDED = "ended"


class SeekDirection(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


def _require_utc(name: str, value: datetime) -> datetime:
    if value.tzinfo is None:
        raise ValueError(f"{name} must be timezone-aware")
    return value.astimezone(timezone.utc)


@dataclass(frozen=True)
class VideoMeta:
    """Catalog entry for one video; its duration bounds all positions."""

    video_id: str
    title: str
    duration_s: int
    published_at: date
    course_id: str
    media_url: str | None = None

    def __post_init__(self):
        if self.duration_s < 1:
            raise ValueError("duration_s must be >= 1")


@dataclass(frozen=True)
class InteractionEvent:
    """One raw player action with wall time and video position.

    ``seek_from_s`` is present only for kind=seek; ``position_s`` is then the
    landing position.
    """

    event_id: str
    student_id: str
    video_id: str
    wall_time: datetime
    kind: EventKind
    position_s: float
    rate: float = 1.0
    seek_from_s: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "wall_time", _require_utc("wall_time", self.wall_time))
        if self.position_s < 0:
            raise ValueError("position_s must be >= 0")
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.kind == EventKind.SEEK:
            if self.seek_from_s is None:
                raise ValueError("seek event requires seek_from_s")
            if self.seek_from_s < 0:
                raise ValueError("seek_from_s must be >= 0")
            if self.seek_from_s == self.position_s:
                raise ValueError("seek must change position")

    def to_wire(self) -> dict:
        """Serialize for the newline-delimited JSON event log."""
        return {
            "event_id": self.event_id,
            "student_id": self.student_id,
            "video_id": self.video_id,
            "wall_time": isoformat_ms(self.wall_time),
            "kind": self.kind.value,
            "position_s": self.position_s,
            "rate": self.rate,
            "seek_from_s": self.seek_from_s,
        }

    @classmethod
    def from_wire(cls, record: dict) -> "InteractionEvent":
        return cls(
            event_id=str(record["event_id"]),
            student_id=str(record["student_id"]),
            video_id=str(record["video_id"]),
            wall_time=parse_wall_time(record["wall_time"]),
            kind=EventKind(record["kind"]),
            position_s=float(record["position_s"]),
            rate=float(record.get("rate", 1.0)),
            seek_from_s=(None if record.get("seek_from_s") is None
                         else float(record["seek_from_s"])),
        )


@dataclass(frozen=True)
class PlaybackSegment:
    """A contiguous stretch of actual playback at constant rate and focus."""

    student_id: str
    video_id: str
    start_pos_s: float
    end_pos_s: float
    rate: float
    in_focus: bool
    wall_start: datetime
    day_index: int
    session_id: str

    def __post_init__(self):
        object.__setattr__(self, "wall_start", _require_utc("wall_start", self.wall_start))
        if self.end_pos_s <= self.start_pos_s:
            raise ValueError("segment must have positive duration")
        if self.rate <= 0:
            raise ValueError("rate must be > 0")
        if self.day_index < 0:
            raise ValueError("day_index must be >= 0")

    @property
    def video_seconds(self) -> float:
        return self.end_pos_s - self.start_pos_s

    @property
    def listening_seconds(self) -> float:
        """Wall-clock seconds spent playing this stretch."""
        return self.video_seconds / self.rate


@dataclass(frozen=True)
class SeekAction:
    """A jump within a video: forward = skip, backward = replay.

    derive_segments only ever emits seeks observed inside a single session,
    so backward actions are same-session replays by construction.
    """

    student_id: str
    video_id: str
    wall_time: datetime
    from_pos_s: float
    to_pos_s: float
    direction: SeekDirection
    day_index: int
    session_id: str

    def __post_init__(self):
        object.__setattr__(self, "wall_time", _require_utc("wall_time", self.wall_time))
        forward = self.to_pos_s > self.from_pos_s
        if forward != (self.direction == SeekDirection.FORWARD):
            raise ValueError("direction inconsistent with positions")
        if self.day_index < 0:
            raise ValueError("day_index must be >= 0")


@dataclass(frozen=True)
class WeightConfig:
    """Per-interaction score increments and the recency slope.

    The ten increment defaults form the engine's base weighting tuple; see
    ``base_increments``. ``rate125_equals_1x`` makes 1.25x playback earn the
    same as 1x.
    """

    play_focused: float = 1.0
    play_unfocused: float = 0.25
    replay_bonus: float = 2.0
    fast2x_focused: float = 0.6
    fast2x_unfocused: float = 0.2
    fast15_focused: float = 1.5
    fast15_unfocused: float = 0.5
    skip_penalty_min1: float = -0.3
    skip_penalty_min2: float = -0.2
    skip_penalty_min3: float = -0.1
    decay_slope_per_day: float = 0.1
    rate125_equals_1x: bool = True

    def __post_init__(self):
        if self.decay_slope_per_day < 0:
            raise ValueError("decay_slope_per_day must be >= 0")

    def base_increments(self) -> tuple[float, ...]:
        """The ten base increments, in their canonical order."""
        return (
            self.play_focused,
            self.play_unfocused,
            self.replay_bonus,
            self.fast2x_focused,
            self.fast2x_unfocused,
            self.fast15_focused,
            self.fast15_unfocused,
            self.skip_penalty_min1,
            self.skip_penalty_min2,
            self.skip_penalty_min3,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown weight keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class BinScoreTimeline:
    """Per-video array of 1-second bins holding raw and normalized scores."""

    video_id: str
    raw: tuple[float, ...]
    normalized: tuple[float, ...]
    computed_at: date
    event_horizon: datetime | None = None
    bin_width_s: int = 1

    def __post_init__(self):
        object.__setattr__(self, "raw", tuple(self.raw))
        object.__setattr__(self, "normalized", tuple(self.normalized))
        if self.event_horizon is not None:
            object.__setattr__(
                self, "event_horizon", _require_utc("event_horizon", self.event_horizon)
            )
        if self.bin_width_s != 1:
            raise ValueError("bin_width_s is fixed at 1")
        if len(self.raw) != len(self.normalized):
            raise ValueError("raw and normalized must have identical length")
        if len(self.raw) < 1:
            raise ValueError("timeline must cover at least one second")
        if any(n < 0.0 or n > 1.0 for n in self.normalized):
            raise ValueError("normalized values must lie in [0, 1]")

    @property
    def duration_s(self) -> int:
        return len(self.raw)


@dataclass(frozen=True)
class ImportantPartAnnotation:
    """Instructor-marked single contiguous interval, used for evaluation."""

    video_id: str
    start_s: int
    end_s: int

    def __post_init__(self):
        if not (0 <= self.start_s < self.end_s):
            raise ValueError("annotation requires 0 <= start_s < end_s")


@dataclass(frozen=True)
class Session:
    """One student's contiguous activity; gaps within never exceed the
    inactivity threshold used to build it."""

    session_id: str
    student_id: str
    events: tuple[InteractionEvent, ...]
    wall_start: datetime
    wall_end: datetime

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise ValueError("session must contain at least one event")


@dataclass(frozen=True)
class CourseCalendar:
    """Anchors day arithmetic: day 0 is the course start date, and days roll
    over at midnight in the course timezone."""

    course_start: date
    timezone: str = "UTC"

    def zone(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    def local_date(self, wall_time: datetime) -> date:
        return wall_time.astimezone(self.zone()).date()

    def day_index(self, wall_time: datetime) -> int:
        return day_index_of(wall_time, self.course_start, self.timezone)

    def midnight(self, day: date) -> datetime:
        """The instant the given local calendar date begins."""
        return datetime(day.year, day.month, day.day, tzinfo=self.zone()).astimezone(
            timezone.utc
        )


def day_index_of(wall_time: datetime, course_start: date, tz: str = "UTC") -> int:
    """Whole days elapsed between the course start and the local calendar
    date of ``wall_time``.

    Raises BeforeCourseStartError for events before the course start day.
    """
    if wall_time.tzinfo is None:
        raise ValueError("wall_time must be timezone-aware")
    local = wall_time.astimezone(ZoneInfo(tz)).date()
    days = (local - course_start).days
    if days < 0:
        raise BeforeCourseStartError(
            f"event at {wall_time.isoformat()} precedes course start {course_start}"
        )
    return days


def day_multiplier(day_index: int, config: WeightConfig) -> float:
    """Recency multiplier applied to increments earned on the given day."""
    if day_index < 0:
        raise ValueError("day_index must be >= 0")
    return 1.0 + config.decay_slope_per_day * day_index


def isoformat_ms(value: datetime) -> str:
    """ISO 8601 with millisecond precision and a Z suffix."""
    return value.astimezone(timezone.utc).isoformat(timespec="milliseconds").replace(
        "+00:00", "Z"
    )


def parse_wall_time(value: str) -> datetime:
    parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if parsed.tzinfo is None:
        raise ValueError(f"timestamp {value!r} lacks a timezone")
    return parsed.astimezone(timezone.utc)
