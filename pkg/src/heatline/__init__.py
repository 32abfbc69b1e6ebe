"""Playback analytics engine for educational video.

Ingests fine-grained player events, scores every 1-second bin of each video
with context-weighted, recency-boosted increments, and serves normalized
usage timelines that guide viewers to the most-watched parts.
"""

from .config import CourseConfig
from .model import (
    BinScoreTimeline,
    CourseCalendar,
    EventKind,
    ImportantPartAnnotation,
    InteractionEvent,
    PlaybackSegment,
    SeekAction,
    SeekDirection,
    Session,
    VideoMeta,
    WeightConfig,
    day_index_of,
    day_multiplier,
)

__version__ = "1.0.0"

__all__ = [
    "BinScoreTimeline",
    "CourseCalendar",
    "CourseConfig",
    "EventKind",
    "ImportantPartAnnotation",
    "InteractionEvent",
    "PlaybackSegment",
    "SeekAction",
    "SeekDirection",
    "Session",
    "VideoMeta",
    "WeightConfig",
    "day_index_of",
    "day_multiplier",
    "__version__",
]
