"""Read-side measurements over the event log: usage summaries, plateau
detection on normalized timelines, important-part match evaluation, and
contour snapshots over time.

The "did the guidance work" judgment is formalized as: does any detected
high plateau overlap the instructor's annotated interval. Thresholds are
parameters, not constants baked into the comparison.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

from .ingest import SESSION_GAP_S, derive_all, derive_segments, reconstruct_sessions
from .model import (
    BinScoreTimeline,
    CourseCalendar,
    ImportantPartAnnotation,
    InteractionEvent,
    VideoMeta,
    WeightConfig,
)
from .scoring import covered_bins, recompute_timeline

PLATEAU_THRESHOLD = 0.9
PLATEAU_MIN_LEN_S = 10
PLATEAU_RELAX_STEP = 0.05
MATCH_MIN_OVERLAP_S = 1
_LEVEL_EPS = 1e-9


@dataclass(frozen=True)
class UsageSummary:
    n_students: int
    n_videos: int
    n_sessions: int
    total_playback_hours: float
    avg_playback_min_per_student: float


@dataclass(frozen=True)
class Plateau:
    """A maximal run of consecutive bins at high normalized score."""

    video_id: str
    start_s: int
    end_s: int
    level: float

    def __post_init__(self):
        if self.start_s >= self.end_s:
            raise ValueError("plateau requires start_s < end_s")

    @property
    def length_s(self) -> int:
        return self.end_s - self.start_s


def usage_summary(
    events: list[InteractionEvent],
    catalog: dict[str, VideoMeta],
    calendar: CourseCalendar,
    gap_s: int = SESSION_GAP_S,
) -> UsageSummary:
    """Cohort-level usage: students, sessions, and wall-clock listening time.

    Playback time is video seconds divided by rate, i.e. the time the
    student actually spent listening.
    """
    segments, _, sessions = derive_all(events, calendar, gap_s=gap_s)
    students = {e.student_id for e in events}
    total_seconds = sum(s.listening_seconds for s in segments)
    n_students = len(students)
    total_minutes = total_seconds / 60.0
    return UsageSummary(
        n_students=n_students,
        n_videos=len(catalog),
        n_sessions=len(sessions),
        total_playback_hours=total_seconds / 3600.0,
        avg_playback_min_per_student=(total_minutes / n_students if n_students else 0.0),
    )


def _runs_at(normalized: tuple[float, ...], threshold: float) -> list[tuple[int, int]]:
    """Maximal [start, end) runs of bins with normalized >= threshold."""
    runs = []
    start = None
    for i, value in enumerate(normalized):
        if value >= threshold - _LEVEL_EPS:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(normalized)))
    return runs


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def highest_plateau(
    timeline: BinScoreTimeline,
    threshold_frac: float = PLATEAU_THRESHOLD,
    min_len_s: int = PLATEAU_MIN_LEN_S,
) -> list[Plateau]:
    """Detect the video's most-watched stretches.

    Returns every maximal run of bins at or above ``threshold_frac`` that is
    at least ``min_len_s`` long, ordered by start. When nothing qualifies,
    the threshold steps down by 0.05 until some run is long enough and the
    single longest run at that level is returned (earliest on ties), so a
    video with any usage always yields guidance. An unused (all-zero)
    timeline yields nothing.
    """
    norm = timeline.normalized
    if max(norm) <= 0.0:
        return []

    def plateaus_for(runs: list[tuple[int, int]]) -> list[Plateau]:
        return [
            Plateau(timeline.video_id, s, e, _mean(norm[s:e])) for s, e in runs
        ]

    qualifying = [r for r in _runs_at(norm, threshold_frac) if r[1] - r[0] >= min_len_s]
    if qualifying:
        return plateaus_for(qualifying)

    threshold = threshold_frac - PLATEAU_RELAX_STEP
    while threshold > _LEVEL_EPS:
        runs = [r for r in _runs_at(norm, threshold) if r[1] - r[0] >= min_len_s]
        if runs:
            best = max(runs, key=lambda r: (r[1] - r[0], -r[0]))
            return plateaus_for([best])
        threshold -= PLATEAU_RELAX_STEP

    # Shorter than min_len_s even at threshold zero (short video): return the
    # longest nonzero-capable run outright.
    runs = _runs_at(norm, 0.0)
    best = max(runs, key=lambda r: (r[1] - r[0], -r[0]))
    return plateaus_for([best])


def interval_overlap_s(
    a_start: float, a_end: float, b_start: float, b_end: float
) -> float:
    return max(0.0, min(a_end, b_end) - max(a_start, b_start))


def match_important_part(
    plateaus: list[Plateau],
    annotation: ImportantPartAnnotation,
    min_overlap_s: int = MATCH_MIN_OVERLAP_S,
) -> bool:
    """True when any detected plateau covers the annotated interval by at
    least ``min_overlap_s`` seconds."""
    return any(
        interval_overlap_s(p.start_s, p.end_s, annotation.start_s, annotation.end_s)
        >= min_overlap_s
        for p in plateaus
        if p.video_id == annotation.video_id
    )


@dataclass(frozen=True)
class VideoMatchRow:
    video_id: str
    plateaus: tuple[Plateau, ...]
    annotation: ImportantPartAnnotation
    matched: bool


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[VideoMatchRow, ...]
    excluded_videos: tuple[str, ...]
    matched: int
    evaluated: int

    @property
    def match_rate(self) -> float | None:
        return self.matched / self.evaluated if self.evaluated else None


def evaluation_report(
    catalog: dict[str, VideoMeta],
    events: list[InteractionEvent],
    annotations: dict[str, ImportantPartAnnotation],
    config: WeightConfig,
    calendar: CourseCalendar,
    horizon: datetime,
    threshold_frac: float = PLATEAU_THRESHOLD,
    min_len_s: int = PLATEAU_MIN_LEN_S,
    min_overlap_s: int = MATCH_MIN_OVERLAP_S,
) -> EvaluationReport:
    """Per-video plateau-vs-annotation match table plus the aggregate rate.

    Videos without an annotation are excluded from the rate and listed
    separately.
    """
    rows = []
    excluded = []
    for video_id in sorted(catalog):
        annotation = annotations.get(video_id)
        if annotation is None:
            excluded.append(video_id)
            continue
        timeline = recompute_timeline(
            catalog[video_id], events, config, calendar, horizon
        )
        plateaus = highest_plateau(timeline, threshold_frac, min_len_s)
        rows.append(
            VideoMatchRow(
                video_id=video_id,
                plateaus=tuple(plateaus),
                annotation=annotation,
                matched=match_important_part(plateaus, annotation, min_overlap_s),
            )
        )
    return EvaluationReport(
        rows=tuple(rows),
        excluded_videos=tuple(excluded),
        matched=sum(r.matched for r in rows),
        evaluated=len(rows),
    )


def evaluation_report_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["video_id", "plateaus", "annotation_start_s", "annotation_end_s", "matched"]
    )
    for row in report.rows:
        plateau_str = ";".join(f"{p.start_s}-{p.end_s}" for p in row.plateaus)
        writer.writerow(
            [
                row.video_id,
                plateau_str,
                row.annotation.start_s,
                row.annotation.end_s,
                "yes" if row.matched else "no",
            ]
        )
    return buf.getvalue()


def contour_snapshots(
    video: VideoMeta,
    events: list[InteractionEvent],
    dates: list[date],
    config: WeightConfig,
    calendar: CourseCalendar,
) -> list[BinScoreTimeline]:
    """One timeline per date, each covering events up to that date's
    midnight, for before/after comparisons of how the contour evolved."""
    if any(b < a for a, b in zip(dates, dates[1:])):
        raise ValueError("dates must be ascending")
    return [
        recompute_timeline(
            video, events, config, calendar, calendar.midnight(d), computed_at=d
        )
        for d in dates
    ]


def coverage(
    student_id: str,
    video: VideoMeta,
    events: list[InteractionEvent],
    calendar: CourseCalendar,
    gap_s: int = SESSION_GAP_S,
) -> float:
    """Fraction of the video's bins this student has ever played."""
    own = sorted(
        (e for e in events if e.student_id == student_id), key=lambda e: e.wall_time
    )
    bins: set[int] = set()
    for session in reconstruct_sessions(own, gap_s=gap_s):
        segments, _ = derive_segments(session, calendar)
        for segment in segments:
            if segment.video_id != video.video_id:
                continue
            for b in covered_bins(segment.start_pos_s, segment.end_pos_s):
                if 0 <= b < video.duration_s:
                    bins.add(b)
    return len(bins) / video.duration_s


def annotations_from_csv(text: str) -> dict[str, ImportantPartAnnotation]:
    """Parse the annotations file: CSV rows of video_id,start_s,end_s.

    A header row is optional. Exactly one interval per video.
    """
    result: dict[str, ImportantPartAnnotation] = {}
    reader = csv.reader(io.StringIO(text))
    for row in reader:
        if not row or not "".join(row).strip():
            continue
        if row[0].strip().lower() == "video_id":
            continue
        if len(row) < 3:
            raise ValueError(f"annotation row needs video_id,start_s,end_s: {row!r}")
        video_id = row[0].strip()
        if video_id in result:
            raise ValueError(f"multiple annotations for video {video_id}")
        result[video_id] = ImportantPartAnnotation(
            video_id=video_id, start_s=int(row[1]), end_s=int(row[2])
        )
    return result


def load_annotations(path: Path) -> dict[str, ImportantPartAnnotation]:
    return annotations_from_csv(Path(path).read_text(encoding="utf-8"))
