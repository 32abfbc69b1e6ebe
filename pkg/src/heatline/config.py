"""Course configuration file handling.

A course config is a single JSON object (UTF-8, human-editable):

    {
      "course_id": "ca259",
      "title": "Data Analytics",
      "course_start": "2021-01-18",
      "timezone": "Europe/Dublin",
      "join_code": "QX7KP2ZD",
      "instructor_key": "...",
      "token_secret": "...",
      "weights": { "play_focused": 1.0, ... }
    }

``weights`` keys match WeightConfig field names; omitted keys keep their
defaults. ``join_code`` is the 8-character code students log in with,
``instructor_key`` authorizes catalog changes and manual recomputes, and
``token_secret`` signs session tokens (keep both private).
"""

from __future__ import annotations

import json
import secrets
import string
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from zoneinfo import ZoneInfo

from .model import CourseCalendar, WeightConfig

JOIN_CODE_LENGTH = 8
_JOIN_CODE_ALPHABET = string.ascii_uppercase + string.digits


def generate_join_code() -> str:
    return "".join(secrets.choice(_JOIN_CODE_ALPHABET) for _ in range(JOIN_CODE_LENGTH))


@dataclass(frozen=True)
class CourseConfig:
    course_id: str
    course_start: date
    timezone: str = "UTC"
    title: str = ""
    join_code: str = field(default_factory=generate_join_code)
    instructor_key: str = field(default_factory=lambda: secrets.token_urlsafe(24))
    token_secret: str = field(default_factory=lambda: secrets.token_urlsafe(32))
    weights: WeightConfig = field(default_factory=WeightConfig)

    def __post_init__(self):
        if len(self.join_code) != JOIN_CODE_LENGTH:
            raise ValueError(f"join_code must be exactly {JOIN_CODE_LENGTH} characters")
        ZoneInfo(self.timezone)  # fail fast on unknown zones

    @property
    def calendar(self) -> CourseCalendar:
        return CourseCalendar(course_start=self.course_start, timezone=self.timezone)

    def to_dict(self) -> dict:
        return {
            "course_id": self.course_id,
            "title": self.title,
            "course_start": self.course_start.isoformat(),
            "timezone": self.timezone,
            "join_code": self.join_code,
            "instructor_key": self.instructor_key,
            "token_secret": self.token_secret,
            "weights": self.weights.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CourseConfig":
        return cls(
            course_id=data["course_id"],
            title=data.get("title", ""),
            course_start=date.fromisoformat(data["course_start"]),
            timezone=data.get("timezone", "UTC"),
            join_code=data["join_code"],
            instructor_key=data["instructor_key"],
            token_secret=data["token_secret"],
            weights=WeightConfig.from_dict(data.get("weights", {})),
        )


def load_course_config(path: Path) -> CourseConfig:
    with open(path, encoding="utf-8") as fh:
        return CourseConfig.from_dict(json.load(fh))


def save_course_config(config: CourseConfig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)


def load_weights(path: Path) -> WeightConfig:
    """Read a standalone weights file (the ``weights`` object on its own)."""
    with open(path, encoding="utf-8") as fh:
        return WeightConfig.from_dict(json.load(fh))
