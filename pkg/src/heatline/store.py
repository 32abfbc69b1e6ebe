"""On-disk layout and orchestration for courses.

    data_dir/
      courses/<course_id>/
        course.json            course config (see heatline.config)
        videos.json            catalog, list of video entries
        events.ndjson          append-only event log
        annotations.csv        optional video_id,start_s,end_s rows
        timelines/<video>.bin  published timeline snapshots

Published snapshots are replaced atomically (write-then-rename), so readers
never observe a partial timeline. Everything above the event log and the
snapshots is derived and can be rebuilt by a recompute.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

from .analytics import load_annotations
from .config import CourseConfig, load_course_config, save_course_config
from .errors import UnknownCourseError, UnknownVideoError
from .ingest import AppendResult, EventLog
from .model import (
    BinScoreTimeline,
    ImportantPartAnnotation,
    InteractionEvent,
    VideoMeta,
    isoformat_ms,
)
from .scoring import (
    recompute_timeline,
    timeline_from_bytes,
    timeline_to_bytes,
    zero_timeline,
)


@dataclass(frozen=True)
class RecomputeRow:
    video_id: str
    horizon: datetime
    max_raw: float | None
    published: bool
    error: str | None = None


@dataclass(frozen=True)
class RecomputeReport:
    course_id: str
    horizon: datetime
    rows: tuple[RecomputeRow, ...]


class CourseStore:
    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self._logs: dict[str, EventLog] = {}
        self._locks_guard = threading.Lock()

    # -- paths ------------------------------------------------------------

    def course_dir(self, course_id: str) -> Path:
        return self.data_dir / "courses" / course_id

    def _config_path(self, course_id: str) -> Path:
        return self.course_dir(course_id) / "course.json"

    def _videos_path(self, course_id: str) -> Path:
        return self.course_dir(course_id) / "videos.json"

    def _events_path(self, course_id: str) -> Path:
        return self.course_dir(course_id) / "events.ndjson"

    def _annotations_path(self, course_id: str) -> Path:
        return self.course_dir(course_id) / "annotations.csv"

    def _timeline_path(self, course_id: str, video_id: str) -> Path:
        return self.course_dir(course_id) / "timelines" / f"{video_id}.bin"

    # -- courses ----------------------------------------------------------

    def list_courses(self) -> list[str]:
        root = self.data_dir / "courses"
        if not root.is_dir():
            return []
        return sorted(p.name for p in root.iterdir() if (p / "course.json").exists())

    def has_course(self, course_id: str) -> bool:
        return self._config_path(course_id).exists()

    def create_course(self, config: CourseConfig) -> CourseConfig:
        if self.has_course(config.course_id):
            raise ValueError(f"course {config.course_id} already exists")
        save_course_config(config, self._config_path(config.course_id))
        self._videos_path(config.course_id).write_text("[]\n", encoding="utf-8")
        return config

    def get_config(self, course_id: str) -> CourseConfig:
        path = self._config_path(course_id)
        if not path.exists():
            raise UnknownCourseError(course_id)
        return load_course_config(path)

    # -- catalog ----------------------------------------------------------

    def catalog(self, course_id: str) -> dict[str, VideoMeta]:
        path = self._videos_path(course_id)
        if not path.exists():
            if not self.has_course(course_id):
                raise UnknownCourseError(course_id)
            return {}
        entries = json.loads(path.read_text(encoding="utf-8"))
        videos = {}
        for entry in entries:
            videos[entry["video_id"]] = VideoMeta(
                video_id=entry["video_id"],
                title=entry["title"],
                duration_s=int(entry["duration_s"]),
                published_at=date.fromisoformat(entry["published_at"]),
                course_id=course_id,
                media_url=entry.get("media_url"),
            )
        return videos

    def add_video(self, course_id: str, video: VideoMeta) -> VideoMeta:
        """Register a video and publish its cold-start (all zero) timeline."""
        if not self.has_course(course_id):
            raise UnknownCourseError(course_id)
        videos = self.catalog(course_id)
        if video.video_id in videos:
            raise ValueError(f"video {video.video_id} already exists")
        entries = [self._video_entry(v) for v in videos.values()]
        entries.append(self._video_entry(video))
        self._write_json(self._videos_path(course_id), entries)
        self.publish_timeline(course_id, zero_timeline(video, video.published_at))
        return video

    @staticmethod
    def _video_entry(video: VideoMeta) -> dict:
        return {
            "video_id": video.video_id,
            "title": video.title,
            "duration_s": video.duration_s,
            "published_at": video.published_at.isoformat(),
            "media_url": video.media_url,
        }

    @staticmethod
    def _write_json(path: Path, payload) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        tmp.replace(path)

    # -- events -----------------------------------------------------------

    def event_log(self, course_id: str) -> EventLog:
        with self._locks_guard:
            log = self._logs.get(course_id)
            if log is None:
                log = EventLog(self._events_path(course_id))
                self._logs[course_id] = log
            return log

    def append_events(
        self, course_id: str, batch: list[InteractionEvent]
    ) -> AppendResult:
        config = self.get_config(course_id)
        return self.event_log(course_id).append_events(
            batch,
            self.catalog(course_id),
            min_wall_time=config.calendar.midnight(config.course_start),
        )

    def events(self, course_id: str) -> list[InteractionEvent]:
        if not self.has_course(course_id):
            raise UnknownCourseError(course_id)
        return self.event_log(course_id).read_all()

    # -- annotations -------------------------------------------------------

    def annotations(self, course_id: str) -> dict[str, ImportantPartAnnotation]:
        path = self._annotations_path(course_id)
        if not path.exists():
            return {}
        return load_annotations(path)

    def set_annotation(self, course_id: str, annotation: ImportantPartAnnotation) -> None:
        current = self.annotations(course_id)
        current[annotation.video_id] = annotation
        lines = ["video_id,start_s,end_s"]
        for video_id in sorted(current):
            a = current[video_id]
            lines.append(f"{a.video_id},{a.start_s},{a.end_s}")
        path = self._annotations_path(course_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    # -- timelines ----------------------------------------------------------

    def publish_timeline(self, course_id: str, timeline: BinScoreTimeline) -> None:
        path = self._timeline_path(course_id, timeline.video_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(timeline_to_bytes(timeline))
        tmp.replace(path)

    def load_timeline(self, course_id: str, video_id: str) -> BinScoreTimeline:
        path = self._timeline_path(course_id, video_id)
        if not path.exists():
            if video_id not in self.catalog(course_id):
                raise UnknownVideoError(video_id)
            # Catalog entry without a snapshot (manually assembled data
            # dir): treat as cold start.
            video = self.catalog(course_id)[video_id]
            return zero_timeline(video, video.published_at)
        return timeline_from_bytes(path.read_bytes())

    # -- recompute ----------------------------------------------------------

    def recompute_course(self, course_id: str, horizon: datetime) -> RecomputeReport:
        """Recompute and atomically republish every timeline in the course.

        A failure on one video leaves its previous snapshot published and is
        reported in that video's row.
        """
        config = self.get_config(course_id)
        events = self.events(course_id)
        rows = []
        for video_id in sorted(self.catalog(course_id)):
            video = self.catalog(course_id)[video_id]
            try:
                timeline = recompute_timeline(
                    video, events, config.weights, config.calendar, horizon
                )
                self.publish_timeline(course_id, timeline)
                rows.append(
                    RecomputeRow(
                        video_id=video_id,
                        horizon=horizon,
                        max_raw=max(timeline.raw),
                        published=True,
                    )
                )
            except Exception as exc:  # keep serving the previous snapshot
                rows.append(
                    RecomputeRow(
                        video_id=video_id,
                        horizon=horizon,
                        max_raw=None,
                        published=False,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
        return RecomputeReport(course_id=course_id, horizon=horizon, rows=tuple(rows))


def recompute_report_json(report: RecomputeReport) -> dict:
    return {
        "course_id": report.course_id,
        "horizon": isoformat_ms(report.horizon),
        "videos": [
            {
                "video_id": row.video_id,
                "horizon": isoformat_ms(row.horizon),
                "max_raw": row.max_raw,
                "published": row.published,
                "error": row.error,
            }
            for row in report.rows
        ],
    }
