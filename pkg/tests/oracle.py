"""Independent brute-force reference for timeline scores.

This deliberately re-derives everything from raw events in one flat pass,
without touching the production session/segment machinery: player state is
a plain dict, bins are credited by scanning every bin of the video and
intersecting intervals, and day arithmetic is done inline. Slow and dumb on
purpose; the production path must match it bin for bin.

Also hosts the random legal-event-log generator used by the equivalence
suite. Generated positions stay on a 0.25s grid so edge-overlap comparisons
against the 0.5s minimum are exact in binary floating point.
"""

from __future__ import annotations

import math
import random
from datetime import date, datetime, timedelta, timezone
from zoneinfo import ZoneInfo

from heatline.model import EventKind, InteractionEvent, VideoMeta, WeightConfig

GAP_S = 600
STALE_S = 30.0


def _day_mult(wall: datetime, course_start: date, tz: str, slope: float) -> float:
    local_day = wall.astimezone(ZoneInfo(tz)).date()
    return 1.0 + slope * (local_day - course_start).days


def _play_weight(rate: float, focused: bool, cfg: WeightConfig) -> float:
    if rate <= 1.25 and (rate < 1.25 or cfg.rate125_equals_1x):
        return cfg.play_focused if focused else cfg.play_unfocused
    if rate <= 1.75:
        return cfg.fast15_focused if focused else cfg.fast15_unfocused
    return cfg.fast2x_focused if focused else cfg.fast2x_unfocused


def oracle_timeline(
    video: VideoMeta,
    events: list[InteractionEvent],
    cfg: WeightConfig,
    course_start: date,
    tz: str,
    horizon: datetime,
    gap_s: int = GAP_S,
) -> list[float]:
    """Raw per-bin scores for one video, replayed event by event."""
    duration = video.duration_s
    raw = [0.0] * duration

    def credit_play(a: float, b: float, rate: float, focused: bool, opened: datetime):
        if b <= a:
            return
        amount = _play_weight(rate, focused, cfg) * _day_mult(
            opened, course_start, tz, cfg.decay_slope_per_day
        )
        for i in range(duration):
            covered = min(b, i + 1.0) - max(a, float(i))
            if covered >= 0.5:
                raw[i] += amount

    def credit_replay(frm: float, to: float, wall: datetime):
        amount = cfg.replay_bonus * _day_mult(wall, course_start, tz, cfg.decay_slope_per_day)
        for i in range(duration):
            if math.floor(to) <= i < math.floor(frm):
                raw[i] += amount

    def credit_skip(frm: float, wall: datetime):
        mult = _day_mult(wall, course_start, tz, cfg.decay_slope_per_day)
        s0 = math.floor(frm)
        for i in range(duration):
            if s0 <= i < s0 + 60:
                raw[i] += cfg.skip_penalty_min1 * mult
            elif s0 + 60 <= i < s0 + 120:
                raw[i] += cfg.skip_penalty_min2 * mult
            elif s0 + 120 <= i < s0 + 180:
                raw[i] += cfg.skip_penalty_min3 * mult

    by_student: dict[str, list[InteractionEvent]] = {}
    for ev in sorted(
        (e for e in events if e.wall_time <= horizon), key=lambda e: e.wall_time
    ):
        by_student.setdefault(ev.student_id, []).append(ev)

    for student_events in by_student.values():
        st = None  # created lazily at each session start
        prev_wall = None

        def fresh_state():
            return {
                "video": None,
                "playing": False,
                "rate": 1.0,
                "focused": True,
                "open_pos": 0.0,
                "open_wall": None,
                "open_rate": 1.0,
                "open_focus": True,
                "conf_pos": 0.0,
                "conf_wall": None,
            }

        def flush(end_pos):
            # Credit the open stretch if it is for our video.
            if st["playing"] and st["video"] == video.video_id:
                credit_play(
                    st["open_pos"], end_pos, st["open_rate"], st["open_focus"], st["open_wall"]
                )

        def end_for(ev, claimed):
            late = (ev.wall_time - st["conf_wall"]).total_seconds() > STALE_S
            return st["conf_pos"] if late else claimed

        for ev in student_events:
            if (
                prev_wall is not None
                and (ev.wall_time - prev_wall).total_seconds() > gap_s
            ):
                if st is not None and st["playing"]:
                    flush(st["conf_pos"])
                st = None
            prev_wall = ev.wall_time
            if st is None:
                st = fresh_state()

            if st["video"] is not None and ev.video_id != st["video"] and ev.kind != EventKind.LOAD:
                if st["playing"]:
                    flush(st["conf_pos"])
                    st["playing"] = False
                st["video"] = ev.video_id

            k = ev.kind
            if k == EventKind.LOAD:
                if st["playing"]:
                    flush(st["conf_pos"])
                    st["playing"] = False
                st["video"] = ev.video_id
                st["rate"] = ev.rate
            elif k == EventKind.PLAY:
                if st["video"] is None:
                    st["video"] = ev.video_id
                if not st["playing"]:
                    st["playing"] = True
                    st["rate"] = ev.rate
                    st["open_pos"] = ev.position_s
                    st["open_wall"] = ev.wall_time
                    st["open_rate"] = ev.rate
                    st["open_focus"] = st["focused"]
                    st["conf_pos"] = ev.position_s
                    st["conf_wall"] = ev.wall_time
                else:
                    st["conf_pos"] = ev.position_s
                    st["conf_wall"] = ev.wall_time
            elif k == EventKind.PAUSE:
                if st["playing"]:
                    flush(end_for(ev, ev.position_s))
                    st["playing"] = False
                st["conf_pos"] = ev.position_s
                st["conf_wall"] = ev.wall_time
            elif k == EventKind.SEEK:
                if ev.video_id == video.video_id:
                    if ev.position_s < ev.seek_from_s:
                        credit_replay(ev.seek_from_s, ev.position_s, ev.wall_time)
                    else:
                        credit_skip(ev.seek_from_s, ev.wall_time)
                if st["playing"]:
                    flush(end_for(ev, ev.seek_from_s))
                    st["open_pos"] = ev.position_s
                    st["open_wall"] = ev.wall_time
                    st["open_rate"] = st["rate"]
                    st["open_focus"] = st["focused"]
                st["conf_pos"] = ev.position_s
                st["conf_wall"] = ev.wall_time
            elif k == EventKind.RATE_CHANGE:
                if st["playing"]:
                    flush(end_for(ev, ev.position_s))
                    st["rate"] = ev.rate
                    st["open_pos"] = ev.position_s
                    st["open_wall"] = ev.wall_time
                    st["open_rate"] = ev.rate
                    st["open_focus"] = st["focused"]
                else:
                    st["rate"] = ev.rate
                st["conf_pos"] = ev.position_s
                st["conf_wall"] = ev.wall_time
            elif k in (EventKind.FOCUS, EventKind.BLUR):
                want = k == EventKind.FOCUS
                if st["playing"] and want != st["focused"]:
                    flush(end_for(ev, ev.position_s))
                    st["focused"] = want
                    st["open_pos"] = ev.position_s
                    st["open_wall"] = ev.wall_time
                    st["open_rate"] = st["rate"]
                    st["open_focus"] = want
                else:
                    st["focused"] = want
                st["conf_pos"] = ev.position_s
                st["conf_wall"] = ev.wall_time
            elif k == EventKind.HEARTBEAT:
                if st["playing"]:
                    st["conf_pos"] = ev.position_s
                    st["conf_wall"] = ev.wall_time
            elif k == EventKind.ENDED:
                if st["playing"]:
                    flush(end_for(ev, ev.position_s))
                    st["playing"] = False
                st["conf_pos"] = ev.position_s
                st["conf_wall"] = ev.wall_time

        if st is not None and st["playing"]:
            flush(st["conf_pos"])

    return raw


def oracle_normalize(raw: list[float]) -> list[float]:
    clamped = [max(v, 0.0) for v in raw]
    top = max(clamped)
    return clamped if top == 0.0 else [v / top for v in clamped]


# ---------------------------------------------------------------------------
# Random legal-log generator


def quarter(rng: random.Random, lo: float, hi: float) -> float:
    """Random multiple of 0.25 in [lo, hi]."""
    steps = int((hi - lo) * 4)
    return lo + rng.randint(0, max(steps, 0)) * 0.25


def make_catalog(rng: random.Random, course_id: str = "c1") -> dict[str, VideoMeta]:
    n = rng.randint(1, 2)
    catalog = {}
    for i in range(n):
        vid = f"v{i + 1}"
        catalog[vid] = VideoMeta(
            video_id=vid,
            title=f"Clip {i + 1}",
            duration_s=rng.randint(30, 120),
            published_at=date(2021, 1, 18),
            course_id=course_id,
        )
    return catalog


def random_log(
    rng: random.Random,
    catalog: dict[str, VideoMeta],
    max_events: int = 200,
    start: datetime | None = None,
) -> list[InteractionEvent]:
    """A random but legal event log for 1-4 students.

    Exercises every event kind, focus loss, rate changes, missing
    heartbeats (stale truncation), session gaps, and multi-video sessions.
    """
    if start is None:
        start = datetime(2021, 1, 18, 9, 0, tzinfo=timezone.utc)
    videos = list(catalog.values())
    students = [f"s{i + 1}" for i in range(rng.randint(1, 4))]
    events: list[InteractionEvent] = []
    counter = 0

    def emit(student, wall, kind, video, pos, rate=1.0, seek_from=None):
        nonlocal counter
        counter += 1
        events.append(
            InteractionEvent(
                event_id=f"e{counter:05d}",
                student_id=student,
                video_id=video.video_id,
                wall_time=wall,
                kind=kind,
                position_s=pos,
                rate=rate,
                seek_from_s=seek_from,
            )
        )

    budget = rng.randint(20, max_events)
    per_student = max(4, budget // len(students))
    for student in students:
        wall = start + timedelta(seconds=rng.randint(0, 3600))
        video = rng.choice(videos)
        pos = 0.0
        rate = 1.0
        playing = False
        emit(student, wall, EventKind.LOAD, video, 0.0, rate)
        remaining = per_student - 1
        while remaining > 0:
            # Mostly short spacing with heartbeats, sometimes long gaps.
            roll = rng.random()
            if roll < 0.70:
                step = rng.randint(1, 12)
            elif roll < 0.90:
                step = rng.randint(13, 120)  # heartbeat starvation range
            else:
                step = rng.randint(400, 900)  # may split the session
            wall = wall + timedelta(seconds=step)
            if playing:
                pos = min(video.duration_s, pos + step * rate)

            choice = rng.random()
            if playing and choice < 0.35:
                emit(student, wall, EventKind.HEARTBEAT, video, pos, rate)
            elif not playing and choice < 0.40:
                playing = True
                emit(student, wall, EventKind.PLAY, video, pos, rate)
            elif playing and choice < 0.55:
                playing = False
                emit(student, wall, EventKind.PAUSE, video, pos, rate)
            elif choice < 0.68:
                target = quarter(rng, 0.0, float(video.duration_s))
                if target != pos:
                    emit(student, wall, EventKind.SEEK, video, target, rate, seek_from=pos)
                    pos = target
            elif choice < 0.78:
                rate = rng.choice([1.0, 1.25, 1.5, 2.0])
                emit(student, wall, EventKind.RATE_CHANGE, video, pos, rate)
            elif choice < 0.86:
                kind = rng.choice([EventKind.FOCUS, EventKind.BLUR])
                emit(student, wall, kind, video, pos, rate)
            elif choice < 0.93 and len(videos) > 1:
                video = rng.choice([v for v in videos if v is not video])
                pos = 0.0
                playing = False
                emit(student, wall, EventKind.LOAD, video, 0.0, rate)
            else:
                if pos >= video.duration_s - 1 and playing:
                    emit(student, wall, EventKind.ENDED, video, float(video.duration_s), rate)
                    playing = False
                    pos = float(video.duration_s)
                else:
                    emit(student, wall, EventKind.HEARTBEAT, video, pos, rate)
            remaining -= 1

    events.sort(key=lambda e: e.wall_time)
    return events
