"""Event persistence and reconstruction of sessions, segments, and seeks.

The append-only log is the single source of truth: every timeline can be
rebuilt from it deterministically. Records are newline-delimited JSON, one
event per line (field names as in ``InteractionEvent.to_wire``).

Reconstruction rules:

* A session breaks wherever the gap between consecutive events exceeds
  ``SESSION_GAP_S`` (inactivity of more than 10 minutes).
* Within a session a simulated player starts paused, focused, rate 1.0,
  position 0. A segment opens on play and closes on the first of pause,
  seek, rate_change, focus, blur, ended, video switch, or session end.
  State-changing closes reopen at the same position with the new state.
* Clients heartbeat every ~10 s of active playback. If a segment is closed
  by an event arriving more than ``HEARTBEAT_STALE_S`` after the last
  position confirmation, the reported end position is distrusted and the
  segment is truncated at the last confirmed position (guards against
  closed laptops and dropped clients). Dangling segments at session end
  close at the last confirmed position.
* Zero or negative length segments are discarded.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping

from .errors import OrderingError
from .model import (
    CourseCalendar,
    EventKind,
    InteractionEvent,
    PlaybackSegment,
    SeekAction,
    SeekDirection,
    Session,
    VideoMeta,
)

SESSION_GAP_S = 600
HEARTBEAT_STALE_S = 30.0

REASON_UNKNOWN_VIDEO = "unknown_video"
REASON_POSITION_OUT_OF_RANGE = "position_out_of_range"
REASON_NON_POSITIVE_RATE = "non_positive_rate"
REASON_INVALID_SEEK = "invalid_seek"
REASON_BEFORE_COURSE_START = "before_course_start"
REASON_MALFORMED = "malformed"


@dataclass(frozen=True)
class RejectedEvent:
    event_id: str | None
    reason: str
    detail: str = ""


@dataclass(frozen=True)
class AppendResult:
    accepted: int
    duplicates: int
    rejected: tuple[RejectedEvent, ...]


def validate_event(
    event: InteractionEvent,
    catalog: Mapping[str, VideoMeta],
    min_wall_time: datetime | None = None,
) -> str | None:
    """Return a rejection reason, or None if the event is acceptable.

    ``min_wall_time`` (the course-start midnight) keeps day arithmetic
    total downstream: with the log append-only, a single pre-course event
    would otherwise break every future recompute.
    """
    video = catalog.get(event.video_id)
    if video is None:
        return REASON_UNKNOWN_VIDEO
    if event.position_s > video.duration_s:
        return REASON_POSITION_OUT_OF_RANGE
    if event.seek_from_s is not None and event.seek_from_s > video.duration_s:
        return REASON_INVALID_SEEK
    if min_wall_time is not None and event.wall_time < min_wall_time:
        return REASON_BEFORE_COURSE_START
    return None


class EventLog:
    """Append-only, per-course event log backed by an NDJSON file.

    Appends are serialized by an internal lock (single writer); reads take a
    point-in-time snapshot. Duplicate event_ids are ignored so client
    retries stay idempotent.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen_ids: set[str] | None = None

    def _load_seen_ids(self) -> set[str]:
        if self._seen_ids is None:
            self._seen_ids = {e.event_id for e in self.read_all()}
        return self._seen_ids

    def append_events(
        self,
        batch: Iterable[InteractionEvent],
        catalog: Mapping[str, VideoMeta],
        min_wall_time: datetime | None = None,
    ) -> AppendResult:
        """Validate and durably append a batch, in arrival order.

        Invalid events are rejected individually; the rest are still
        accepted. Returns counts plus per-event rejection reasons.
        """
        accepted: list[InteractionEvent] = []
        rejected: list[RejectedEvent] = []
        duplicates = 0
        with self._lock:
            seen = self._load_seen_ids()
            for event in batch:
                reason = validate_event(event, catalog, min_wall_time)
                if reason is not None:
                    rejected.append(RejectedEvent(event.event_id, reason))
                    continue
                if event.event_id in seen:
                    duplicates += 1
                    continue
                seen.add(event.event_id)
                accepted.append(event)
            if accepted:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    for event in accepted:
                        fh.write(json.dumps(event.to_wire()) + "\n")
                    fh.flush()
        return AppendResult(
            accepted=len(accepted), duplicates=duplicates, rejected=tuple(rejected)
        )

    def read_all(self) -> list[InteractionEvent]:
        if not self.path.exists():
            return []
        events = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(InteractionEvent.from_wire(json.loads(line)))
        return events


def reconstruct_sessions(
    events: list[InteractionEvent], gap_s: int = SESSION_GAP_S
) -> list[Session]:
    """Split one student's time-ordered events into sessions.

    A new session starts wherever the gap between consecutive events is
    strictly greater than ``gap_s``.
    """
    if not events:
        return []
    student = events[0].student_id
    for prev, cur in zip(events, events[1:]):
        if cur.wall_time < prev.wall_time:
            raise OrderingError("events must be sorted by wall_time")
        if cur.student_id != student:
            raise ValueError("reconstruct_sessions expects a single student's events")

    sessions: list[Session] = []
    bucket: list[InteractionEvent] = [events[0]]
    for prev, cur in zip(events, events[1:]):
        if (cur.wall_time - prev.wall_time).total_seconds() > gap_s:
            sessions.append(_make_session(student, len(sessions), bucket))
            bucket = []
        bucket.append(cur)
    sessions.append(_make_session(student, len(sessions), bucket))
    return sessions


def _make_session(student: str, index: int, events: list[InteractionEvent]) -> Session:
    return Session(
        session_id=f"{student}:{index:04d}",
        student_id=student,
        events=tuple(events),
        wall_start=events[0].wall_time,
        wall_end=events[-1].wall_time,
    )


@dataclass
class _PlayerState:
    """Mutable state of the simulated player while replaying one session."""

    video_id: str | None = None
    playing: bool = False
    rate: float = 1.0
    focused: bool = True
    position: float = 0.0
    seg_start_pos: float = 0.0
    seg_wall_start: datetime | None = None
    confirmed_pos: float = 0.0
    confirmed_wall: datetime | None = None


def derive_segments(
    session: Session, calendar: CourseCalendar
) -> tuple[list[PlaybackSegment], list[SeekAction]]:
    """Replay one session's events into playback segments and seek actions.

    Deterministic: the same event list always yields identical output.
    Every seek event yields exactly one SeekAction.
    """
    segments: list[PlaybackSegment] = []
    seeks: list[SeekAction] = []
    st = _PlayerState()

    def trusted_close_pos(event: InteractionEvent, claimed: float) -> float:
        stale = (
            st.confirmed_wall is not None
            and (event.wall_time - st.confirmed_wall).total_seconds() > HEARTBEAT_STALE_S
        )
        return st.confirmed_pos if stale else claimed

    def close_segment(end_pos: float) -> None:
        if st.seg_wall_start is None:
            return
        if end_pos > st.seg_start_pos:
            segments.append(
                PlaybackSegment(
                    student_id=session.student_id,
                    video_id=st.video_id,
                    start_pos_s=st.seg_start_pos,
                    end_pos_s=end_pos,
                    rate=st.rate,
                    in_focus=st.focused,
                    wall_start=st.seg_wall_start,
                    day_index=calendar.day_index(st.seg_wall_start),
                    session_id=session.session_id,
                )
            )
        st.seg_wall_start = None

    def open_segment(event: InteractionEvent, position: float) -> None:
        st.seg_start_pos = position
        st.seg_wall_start = event.wall_time
        st.confirmed_pos = position
        st.confirmed_wall = event.wall_time

    prev_wall = None
    for event in session.events:
        if prev_wall is not None and event.wall_time < prev_wall:
            raise OrderingError("session events must be ordered by wall_time")
        prev_wall = event.wall_time

        # A different video without an explicit load is an implicit switch.
        if (
            st.video_id is not None
            and event.video_id != st.video_id
            and event.kind != EventKind.LOAD
        ):
            if st.playing:
                close_segment(st.confirmed_pos)
                st.playing = False
            st.video_id = event.video_id
            st.position = event.position_s

        kind = event.kind
        if kind == EventKind.LOAD:
            if st.playing:
                close_segment(st.confirmed_pos)
                st.playing = False
            st.video_id = event.video_id
            st.position = event.position_s
            st.rate = event.rate
        elif kind == EventKind.PLAY:
            st.video_id = st.video_id or event.video_id
            if not st.playing:
                st.playing = True
                st.rate = event.rate
                open_segment(event, event.position_s)
            else:
                st.confirmed_pos = event.position_s
                st.confirmed_wall = event.wall_time
            st.position = event.position_s
        elif kind == EventKind.PAUSE:
            if st.playing:
                close_segment(trusted_close_pos(event, event.position_s))
                st.playing = False
            st.position = event.position_s
            st.confirmed_pos = event.position_s
            st.confirmed_wall = event.wall_time
        elif kind == EventKind.SEEK:
            direction = (
                SeekDirection.FORWARD
                if event.position_s > event.seek_from_s
                else SeekDirection.BACKWARD
            )
            seeks.append(
                SeekAction(
                    student_id=session.student_id,
                    video_id=event.video_id,
                    wall_time=event.wall_time,
                    from_pos_s=event.seek_from_s,
                    to_pos_s=event.position_s,
                    direction=direction,
                    day_index=calendar.day_index(event.wall_time),
                    session_id=session.session_id,
                )
            )
            if st.playing:
                close_segment(trusted_close_pos(event, event.seek_from_s))
                open_segment(event, event.position_s)
            else:
                st.confirmed_pos = event.position_s
                st.confirmed_wall = event.wall_time
            st.position = event.position_s
        elif kind == EventKind.RATE_CHANGE:
            if st.playing:
                close_segment(trusted_close_pos(event, event.position_s))
                st.rate = event.rate
                open_segment(event, event.position_s)
            else:
                st.rate = event.rate
                st.confirmed_pos = event.position_s
                st.confirmed_wall = event.wall_time
            st.position = event.position_s
        elif kind in (EventKind.FOCUS, EventKind.BLUR):
            new_focus = kind == EventKind.FOCUS
            if st.playing and new_focus != st.focused:
                close_segment(trusted_close_pos(event, event.position_s))
                st.focused = new_focus
                open_segment(event, event.position_s)
            else:
                st.focused = new_focus
                st.confirmed_pos = event.position_s
                st.confirmed_wall = event.wall_time
            st.position = event.position_s
        elif kind == EventKind.HEARTBEAT:
            if st.playing:
                st.confirmed_pos = event.position_s
                st.confirmed_wall = event.wall_time
            st.position = event.position_s
        elif kind == EventKind.ENDED:
            if st.playing:
                close_segment(trusted_close_pos(event, event.position_s))
                st.playing = False
            st.position = event.position_s
            st.confirmed_pos = event.position_s
            st.confirmed_wall = event.wall_time

    if st.playing:
        close_segment(st.confirmed_pos)
    return segments, seeks


def derive_all(
    events: list[InteractionEvent],
    calendar: CourseCalendar,
    gap_s: int = SESSION_GAP_S,
) -> tuple[list[PlaybackSegment], list[SeekAction], list[Session]]:
    """Sessionize a whole course log (any mix of students and videos) and
    derive every segment and seek action."""
    by_student: dict[str, list[InteractionEvent]] = {}
    for event in sorted(events, key=lambda e: e.wall_time):
        by_student.setdefault(event.student_id, []).append(event)

    segments: list[PlaybackSegment] = []
    seeks: list[SeekAction] = []
    sessions: list[Session] = []
    for student in sorted(by_student):
        for session in reconstruct_sessions(by_student[student], gap_s=gap_s):
            sessions.append(session)
            segs, sks = derive_segments(session, calendar)
            segments.extend(segs)
            seeks.extend(sks)
    return segments, seeks, sessions
