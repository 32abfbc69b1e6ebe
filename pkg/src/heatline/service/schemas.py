"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from datetime import date, datetime

from pydantic import BaseModel, Field

from ..model import EventKind

MAX_EVENT_BATCH = 500


class CourseCreateIn(BaseModel):
    course_id: str = Field(min_length=1, max_length=64, pattern=r"^[A-Za-z0-9_-]+$")
    title: str = ""
    course_start: date
    timezone: str = "UTC"
    join_code: str | None = Field(default=None, min_length=8, max_length=8)


class CourseCreateOut(BaseModel):
    course_id: str
    title: str
    course_start: date
    timezone: str
    join_code: str
    instructor_key: str


class LoginIn(BaseModel):
    email: str = Field(min_length=3, max_length=254)
    code: str = Field(min_length=8, max_length=8)


class LoginOut(BaseModel):
    token: str
    student_id: str
    role: str
    course_id: str
    course_title: str


class SeedAnnotationIn(BaseModel):
    start_s: int = Field(ge=0)
    end_s: int = Field(gt=0)


class VideoIn(BaseModel):
    video_id: str = Field(min_length=1, max_length=64, pattern=r"^[A-Za-z0-9_-]+$")
    title: str
    duration_s: int | None = None
    published_at: date | None = None
    media_url: str | None = None
    seed_annotation: SeedAnnotationIn | None = None


class VideoOut(BaseModel):
    video_id: str
    title: str
    duration_s: int
    published_at: date
    media_url: str | None = None


class EventIn(BaseModel):
    event_id: str = Field(min_length=1, max_length=128)
    video_id: str
    wall_time: datetime
    kind: EventKind
    position_s: float = Field(ge=0)
    rate: float = Field(default=1.0, gt=0)
    seek_from_s: float | None = Field(default=None, ge=0)


class EventBatchIn(BaseModel):
    events: list[EventIn]


class RejectedEventOut(BaseModel):
    event_id: str | None
    reason: str


class AppendOut(BaseModel):
    accepted: int
    duplicates: int
    rejected: list[RejectedEventOut]


class TimelineOut(BaseModel):
    video_id: str
    duration_s: int
    bin_width_s: int
    normalized: list[float]
    computed_at: date
    event_horizon: datetime | None


class RecomputeIn(BaseModel):
    as_of: date | None = None


class RecomputeVideoOut(BaseModel):
    video_id: str
    horizon: datetime
    max_raw: float | None
    published: bool
    error: str | None = None


class RecomputeOut(BaseModel):
    course_id: str
    horizon: datetime
    videos: list[RecomputeVideoOut]


class ErrorOut(BaseModel):
    detail: str
