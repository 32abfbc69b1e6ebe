"""Synthetic cohort generator and robustness experiments.

Behavior profiles are mechanical generators of legal player-event streams:
every emitted event respects player-state rules (no pause without play,
positions inside the video) and heartbeats arrive at the same 10-second
cadence real clients use, so simulated data exercises exactly the ingest
paths production data does. Generation is single-threaded per seed and
fully deterministic.

The contour_follower style closes the usage->visualization->usage loop in
simulation: each simulated midnight the published timelines are recomputed
and followers preferentially play the currently highest-scored region.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from pathlib import Path

from .analytics import highest_plateau
from .model import (
    BinScoreTimeline,
    CourseCalendar,
    EventKind,
    InteractionEvent,
    VideoMeta,
    WeightConfig,
)
from .scoring import recompute_timeline

HEARTBEAT_PERIOD_S = 10.0


class WatchStyle(str, Enum):
    LINEAR = "linear"
    SKIPPER = "skipper"
    REPLAYER = "replayer"
    CONTOUR_FOLLOWER = "contour_follower"
    DISTRACTED = "distracted"


@dataclass(frozen=True)
class BehaviorProfile:
    """One simulated watching habit.

    ``sessions_per_week`` is the mean of a per-day draw (whole sessions plus
    a Bernoulli remainder), ``speed_preference`` maps playback rates to
    relative weights, and ``focus_loss_prob`` is the chance per played
    minute of the player window losing focus for a while.
    """

    name: str
    watch_style: WatchStyle
    sessions_per_week: float = 3.0
    speed_preference: dict = field(default_factory=lambda: {1.0: 1.0})
    focus_loss_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.focus_loss_prob <= 1.0:
            raise ValueError("focus_loss_prob must be in [0, 1]")
        if self.sessions_per_week < 0:
            raise ValueError("sessions_per_week must be >= 0")
        if not self.speed_preference:
            raise ValueError("speed_preference must not be empty")
        total = sum(self.speed_preference.values())
        if total <= 0:
            raise ValueError("speed_preference weights must sum to > 0")
        object.__setattr__(
            self,
            "speed_preference",
            {float(k): v / total for k, v in self.speed_preference.items()},
        )


@dataclass(frozen=True)
class SimulationPlan:
    cohort: tuple[tuple[BehaviorProfile, int], ...]
    days: int
    seed: int


def load_simulation_plan(path: Path) -> SimulationPlan:
    """Read a profile config file.

    Format (JSON): {"seed": 42, "days": 14, "cohort": [{"count": 10,
    "name": "steady", "watch_style": "linear", "sessions_per_week": 7,
    "speed_preference": {"1.0": 0.8, "1.5": 0.2}, "focus_loss_prob": 0.05}]}
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    cohort = []
    for entry in data["cohort"]:
        profile = BehaviorProfile(
            name=entry["name"],
            watch_style=WatchStyle(entry["watch_style"]),
            sessions_per_week=float(entry.get("sessions_per_week", 3.0)),
            speed_preference={
                float(k): float(v)
                for k, v in entry.get("speed_preference", {"1.0": 1.0}).items()
            },
            focus_loss_prob=float(entry.get("focus_loss_prob", 0.0)),
        )
        cohort.append((profile, int(entry["count"])))
    return SimulationPlan(
        cohort=tuple(cohort), days=int(data.get("days", 7)), seed=int(data.get("seed", 0))
    )


class _EventWriter:
    """Emits a legal event stream for one student while tracking player
    state (position, rate, focus, heartbeat cadence)."""

    def __init__(self, rng: random.Random, student_id: str, emit):
        self.rng = rng
        self.student_id = student_id
        self._emit = emit
        self.video: VideoMeta | None = None
        self.wall: datetime | None = None
        self.pos = 0.0
        self.rate = 1.0
        self.focused = True
        self.playing = False

    def begin_session(self, video: VideoMeta, wall: datetime):
        self.video = video
        self.wall = wall
        self.pos = 0.0
        self.rate = 1.0
        self.focused = True
        self.playing = False
        self._put(EventKind.LOAD, 0.0)

    def _put(self, kind: EventKind, pos: float, seek_from: float | None = None):
        self._emit(
            student_id=self.student_id,
            video_id=self.video.video_id,
            wall_time=self.wall,
            kind=kind,
            position_s=round(pos, 3),
            rate=self.rate,
            seek_from_s=None if seek_from is None else round(seek_from, 3),
        )

    def set_rate(self, rate: float):
        if rate != self.rate:
            self.rate = rate
            self._put(EventKind.RATE_CHANGE, self.pos)
            self.wall += timedelta(seconds=1)

    def seek(self, to_pos: float):
        to_pos = min(max(to_pos, 0.0), float(self.video.duration_s))
        if round(to_pos, 3) == round(self.pos, 3):
            return
        self._put(EventKind.SEEK, to_pos, seek_from=self.pos)
        self.pos = to_pos
        self.wall += timedelta(seconds=1)

    def play_span(self, video_seconds: float, focus_loss_prob: float = 0.0):
        """Play forward by up to ``video_seconds``, heartbeating every 10s
        of wall time and occasionally losing window focus."""
        target = min(self.pos + video_seconds, float(self.video.duration_s))
        if target <= self.pos:
            return
        if not self.playing:
            self._put(EventKind.PLAY, self.pos)
            self.playing = True
        while self.pos < target:
            chunk_wall = min(60.0, (target - self.pos) / self.rate)
            beats = int(chunk_wall // HEARTBEAT_PERIOD_S)
            for _ in range(beats):
                self.wall += timedelta(seconds=HEARTBEAT_PERIOD_S)
                self.pos = min(self.pos + HEARTBEAT_PERIOD_S * self.rate, target)
                self._put(EventKind.HEARTBEAT, self.pos)
            leftover = chunk_wall - beats * HEARTBEAT_PERIOD_S
            if leftover > 0:
                self.wall += timedelta(seconds=leftover)
                self.pos = min(self.pos + leftover * self.rate, target)
            if self.pos < target and focus_loss_prob > 0 and self.rng.random() < focus_loss_prob:
                self._flip_focus(False)
                away = self.rng.uniform(20.0, 90.0)
                resume = min(self.pos + away * self.rate, target)
                self._drift_to(resume)
                self._flip_focus(True)

    def _drift_to(self, target: float):
        while self.pos < target:
            self.wall += timedelta(seconds=HEARTBEAT_PERIOD_S)
            self.pos = min(self.pos + HEARTBEAT_PERIOD_S * self.rate, target)
            self._put(EventKind.HEARTBEAT, self.pos)

    def _flip_focus(self, focused: bool):
        self.focused = focused
        self._put(EventKind.FOCUS if focused else EventKind.BLUR, self.pos)
        self.wall += timedelta(seconds=1)

    def pause(self):
        if self.playing:
            self._put(EventKind.PAUSE, self.pos)
            self.playing = False
            self.wall += timedelta(seconds=1)

    def ended(self):
        if self.playing:
            self.pos = float(self.video.duration_s)
            self._put(EventKind.ENDED, self.pos)
            self.playing = False
            self.wall += timedelta(seconds=1)


def _pick_rate(rng: random.Random, profile: BehaviorProfile) -> float:
    rates = sorted(profile.speed_preference)
    weights = [profile.speed_preference[r] for r in rates]
    return rng.choices(rates, weights=weights)[0]


def _run_journey(
    writer: _EventWriter,
    rng: random.Random,
    profile: BehaviorProfile,
    video: VideoMeta,
    wall: datetime,
    published_normalized: tuple[float, ...] | None,
):
    writer.begin_session(video, wall)
    writer.wall += timedelta(seconds=1)
    writer.set_rate(_pick_rate(rng, profile))
    style = profile.watch_style
    duration = float(video.duration_s)

    if style == WatchStyle.LINEAR:
        writer.play_span(duration, profile.focus_loss_prob)
        writer.ended()
    elif style == WatchStyle.SKIPPER:
        while writer.pos < duration - 10:
            writer.play_span(rng.uniform(15.0, 45.0), profile.focus_loss_prob)
            if writer.pos >= duration - 10:
                break
            writer.seek(writer.pos + rng.uniform(30.0, 120.0))
    elif style == WatchStyle.REPLAYER:
        writer.play_span(rng.uniform(40.0, 90.0), profile.focus_loss_prob)
        for _ in range(rng.randint(1, 3)):
            back = rng.uniform(15.0, min(45.0, writer.pos))
            if back < 1.0:
                break
            writer.seek(writer.pos - back)
            writer.play_span(back, profile.focus_loss_prob)
    elif style == WatchStyle.DISTRACTED:
        loss = max(profile.focus_loss_prob, 0.5)
        writer.play_span(duration * rng.uniform(0.5, 1.0), loss)
    elif style == WatchStyle.CONTOUR_FOLLOWER:
        region = _hot_region(published_normalized, video.duration_s)
        if region is None:
            # Cold start: nothing to follow yet, sample a short stretch.
            writer.seek(rng.uniform(0.0, max(duration - 60.0, 0.0)))
            writer.play_span(rng.uniform(30.0, 60.0), profile.focus_loss_prob)
        else:
            start, end = region
            writer.seek(float(start))
            writer.play_span(float(end - start), profile.focus_loss_prob)
            if rng.random() < 0.5:
                writer.seek(float(start))
                writer.play_span(float(end - start), profile.focus_loss_prob)
    writer.pause()


def _hot_region(
    normalized: tuple[float, ...] | None, duration_s: int
) -> tuple[int, int] | None:
    """The currently highest-scored stretch of the published timeline."""
    if normalized is None or max(normalized, default=0.0) <= 0.0:
        return None
    timeline = BinScoreTimeline(
        video_id="probe",
        raw=tuple(normalized),
        normalized=tuple(normalized),
        computed_at=date(2000, 1, 1),
    )
    plateaus = highest_plateau(timeline)
    if not plateaus:
        return None
    top = max(plateaus, key=lambda p: (p.level, -(p.start_s)))
    return (top.start_s, min(top.end_s, top.start_s + 120))  # at most two minutes


def simulate_cohort(
    plan: SimulationPlan,
    catalog: dict[str, VideoMeta],
    calendar: CourseCalendar,
    config: WeightConfig | None = None,
) -> list[InteractionEvent]:
    """Generate a deterministic cohort event log over ``plan.days`` days.

    Published timelines are recomputed at each simulated midnight when the
    cohort contains contour followers, so the feedback loop is live.
    """
    if not catalog:
        raise ValueError("catalog must not be empty")
    config = config or WeightConfig()
    rng = random.Random(plan.seed)
    videos = [catalog[k] for k in sorted(catalog)]
    events: list[InteractionEvent] = []
    counter = 0

    def emit(**kwargs):
        nonlocal counter
        counter += 1
        events.append(InteractionEvent(event_id=f"sim{plan.seed}-{counter:07d}", **kwargs))

    students: list[tuple[BehaviorProfile, _EventWriter]] = []
    for profile, count in plan.cohort:
        for i in range(count):
            students.append(
                (profile, _EventWriter(rng, f"{profile.name}-{i + 1:03d}", emit))
            )

    has_followers = any(
        p.watch_style == WatchStyle.CONTOUR_FOLLOWER for p, _ in plan.cohort
    )
    published: dict[str, tuple[float, ...]] = {v.video_id: None for v in videos}

    for day in range(plan.days):
        day_start = calendar.midnight(calendar.course_start + timedelta(days=day))
        for profile, writer in students:
            whole = int(profile.sessions_per_week // 7)
            extra = 1 if rng.random() < (profile.sessions_per_week % 7) / 7.0 else 0
            for s in range(whole + extra):
                offset = timedelta(hours=8, seconds=rng.randint(0, 6 * 3600) + s * 7200)
                video = rng.choice(videos)
                _run_journey(
                    writer, rng, profile, video, day_start + offset,
                    published[video.video_id],
                )
        if has_followers:
            horizon = calendar.midnight(calendar.course_start + timedelta(days=day + 1))
            for video in videos:
                timeline = recompute_timeline(
                    video, events, config, calendar, horizon
                )
                published[video.video_id] = timeline.normalized

    events.sort(key=lambda e: e.wall_time)
    return events


# ---------------------------------------------------------------------------
# Bandwagon resistance experiment


@dataclass(frozen=True)
class BandwagonReport:
    """Outcome of one attack strength plus the located breaking point.

    ``plateau_moved`` is true when the attacked bin ends up inside any
    highlighted plateau, i.e. the moment the attack corrupts the guidance.
    ``critical_k`` is the smallest replay count that moves it (None if not
    reached within the search cap).
    """

    honest_n: int
    k: int
    plateau_moved: bool
    bins_affected: int
    critical_k: int | None
    honest_region: tuple[int, int]
    attack_bin: int


def _honest_events(
    honest_n: int,
    video: VideoMeta,
    calendar: CourseCalendar,
    region: tuple[int, int],
    honest_day_span: int,
    rng: random.Random,
) -> list[InteractionEvent]:
    events = []
    counter = 0

    def emit(**kwargs):
        nonlocal counter
        counter += 1
        events.append(InteractionEvent(event_id=f"hon-{counter:06d}", **kwargs))

    for i in range(honest_n):
        day = i % max(honest_day_span, 1)
        wall = calendar.midnight(calendar.course_start + timedelta(days=day)) + timedelta(
            hours=9, seconds=i * 120 + rng.randint(0, 60)
        )
        writer = _EventWriter(rng, f"honest-{i + 1:03d}", emit)
        writer.begin_session(video, wall)
        writer.wall += timedelta(seconds=1)
        writer.seek(float(region[0]))
        writer.play_span(float(region[1] - region[0]))
        writer.pause()
    return events


def _attack_events(
    k: int,
    video: VideoMeta,
    calendar: CourseCalendar,
    attack_bin: int,
    attack_day: int,
) -> list[InteractionEvent]:
    """k cycles of play-the-bin then seek back over it: +1 play and +2
    replay per cycle on the single attacked bin."""
    events = []
    counter = 0
    wall = calendar.midnight(
        calendar.course_start + timedelta(days=attack_day)
    ) + timedelta(hours=12)

    def emit(kind, pos, seek_from=None):
        nonlocal counter, wall
        counter += 1
        events.append(
            InteractionEvent(
                event_id=f"atk-{counter:06d}",
                student_id="attacker-001",
                video_id=video.video_id,
                wall_time=wall,
                kind=kind,
                position_s=pos,
                rate=1.0,
                seek_from_s=seek_from,
            )
        )
        wall += timedelta(seconds=1)

    if k <= 0:
        return events
    emit(EventKind.LOAD, 0.0)
    emit(EventKind.SEEK, float(attack_bin), seek_from=0.0)
    for _ in range(k):
        emit(EventKind.PLAY, float(attack_bin))
        emit(EventKind.PAUSE, float(attack_bin + 1))
        emit(EventKind.SEEK, float(attack_bin), seek_from=float(attack_bin + 1))
    return events


def bandwagon_experiment(
    honest_n: int,
    attacker_replays_k: int,
    video: VideoMeta,
    config: WeightConfig,
    seed: int,
    calendar: CourseCalendar | None = None,
    honest_region: tuple[int, int] = (300, 360),
    attack_bin: int = 450,
    honest_day_span: int = 1,
    attack_day: int = 0,
    find_critical: bool = True,
    max_k: int = 2000,
) -> BandwagonReport:
    """Can one student drag the highlighted plateau onto an obscure bin?

    An honest cohort watches a designated region; the attacker replays a
    single disjoint bin k times. Reports whether the plateau reached the
    attacked bin at strength k, how many bins the attack touched at all,
    and the smallest k that first moves the plateau (searched by doubling
    plus bisection; the predicate is monotone in k because the attack only
    lowers every honest bin's normalized score).
    """
    if calendar is None:
        calendar = CourseCalendar(course_start=video.published_at)
    if not (0 <= attack_bin < video.duration_s):
        raise ValueError("attack_bin outside video")
    if interval_contains(honest_region, attack_bin):
        raise ValueError("attack_bin must be disjoint from the honest region")

    rng = random.Random(seed)
    honest = _honest_events(honest_n, video, calendar, honest_region, honest_day_span, rng)
    horizon = calendar.midnight(
        calendar.course_start + timedelta(days=max(honest_day_span, attack_day) + 2)
    )

    def outcome(k: int) -> tuple[bool, tuple[float, ...]]:
        log = honest + _attack_events(k, video, calendar, attack_bin, attack_day)
        timeline = recompute_timeline(video, log, config, calendar, horizon)
        plateaus = highest_plateau(timeline)
        moved = any(p.start_s <= attack_bin < p.end_s for p in plateaus)
        return moved, timeline.raw

    baseline_raw = outcome(0)[1]
    moved_at_k, raw_at_k = outcome(attacker_replays_k)
    bins_affected = sum(
        1 for a, b in zip(baseline_raw, raw_at_k) if abs(a - b) > 1e-12
    )

    critical = None
    if find_critical:
        if moved_at_k:
            lo, hi = 0, attacker_replays_k
        else:
            lo, hi = attacker_replays_k, None
            probe = max(attacker_replays_k * 2, 8)
            while probe <= max_k:
                if outcome(probe)[0]:
                    hi = probe
                    break
                lo = probe
                probe *= 2
        if hi is not None:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if outcome(mid)[0]:
                    hi = mid
                else:
                    lo = mid
            critical = hi

    return BandwagonReport(
        honest_n=honest_n,
        k=attacker_replays_k,
        plateau_moved=moved_at_k,
        bins_affected=bins_affected,
        critical_k=critical,
        honest_region=honest_region,
        attack_bin=attack_bin,
    )


def interval_contains(interval: tuple[int, int], point: int) -> bool:
    return interval[0] <= point < interval[1]
