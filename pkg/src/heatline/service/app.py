"""HTTP service: event ingestion, catalog, published timelines, and the
nightly recompute loop, plus static hosting for the player UI bundle.

Students authenticate with their email plus the course's 8-character join
code and receive a bearer token; instructor operations (catalog changes,
manual recompute) authenticate with the course's instructor key header.
Timelines served are the last published snapshot, not live scores, matching
the daily recompute cadence.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..config import CourseConfig, generate_join_code
from ..errors import UnknownCourseError, UnknownVideoError
from ..ingest import REASON_MALFORMED
from ..model import ImportantPartAnnotation, InteractionEvent, VideoMeta
from ..store import CourseStore
from . import auth, schemas
from .scheduler import Clock, NightlyScheduler

logger = logging.getLogger(__name__)

API_VERSION = "1.0.0"


class ApiError(Exception):
    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        self.detail = detail


def create_app(
    data_dir: str | Path,
    enable_scheduler: bool = True,
    clock: Clock | None = None,
    frontend_dir: str | Path | None = None,
    poll_interval_s: float = 30.0,
) -> FastAPI:
    store = CourseStore(Path(data_dir))
    scheduler = NightlyScheduler(store, clock=clock)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        stop = asyncio.Event()
        task = None
        if enable_scheduler:
            task = asyncio.create_task(scheduler.run(poll_interval_s, stop))
        yield
        if task is not None:
            stop.set()
            await task

    app = FastAPI(
        title="heatline",
        version=API_VERSION,
        description="Playback-usage timelines for educational video.",
        lifespan=lifespan,
    )
    app.state.store = store
    app.state.scheduler = scheduler

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code, content={"detail": exc.detail})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"detail": "malformed request", "errors": exc.errors()},
        )

    def get_course(course_id: str) -> CourseConfig:
        try:
            return store.get_config(course_id)
        except UnknownCourseError:
            raise ApiError(404, f"unknown course {course_id}")

    def require_claims(
        course_id: str, authorization: str | None = Header(default=None)
    ) -> auth.TokenClaims:
        if not authorization or not authorization.startswith("Bearer "):
            raise ApiError(401, "missing bearer token")
        config = get_course(course_id)
        try:
            claims = auth.verify_token(config.token_secret, authorization[7:])
        except auth.AuthError as exc:
            raise ApiError(401, str(exc))
        if claims.course_id != course_id:
            raise ApiError(401, "token is for a different course")
        return claims

    def require_instructor(
        course_id: str, x_instructor_key: str | None = Header(default=None)
    ) -> CourseConfig:
        config = get_course(course_id)
        if not x_instructor_key or x_instructor_key != config.instructor_key:
            raise ApiError(403, "instructor key required")
        return config

    # -- meta ---------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok", "version": API_VERSION}

    # -- courses ------------------------------------------------------------

    @app.post("/api/courses", response_model=schemas.CourseCreateOut, status_code=201)
    def create_course(body: schemas.CourseCreateIn):
        if store.has_course(body.course_id):
            raise ApiError(409, f"course {body.course_id} already exists")
        config = CourseConfig(
            course_id=body.course_id,
            title=body.title,
            course_start=body.course_start,
            timezone=body.timezone,
            join_code=body.join_code or generate_join_code(),
        )
        store.create_course(config)
        return schemas.CourseCreateOut(
            course_id=config.course_id,
            title=config.title,
            course_start=config.course_start,
            timezone=config.timezone,
            join_code=config.join_code,
            instructor_key=config.instructor_key,
        )

    @app.post("/api/courses/{course_id}/login", response_model=schemas.LoginOut)
    def login(course_id: str, body: schemas.LoginIn):
        config = get_course(course_id)
        if body.code != config.join_code:
            raise ApiError(401, "wrong course code")
        student_id = auth.pseudonymize_email(config.token_secret, body.email)
        token = auth.issue_token(
            config.token_secret, course_id, student_id, auth.ROLE_STUDENT
        )
        return schemas.LoginOut(
            token=token,
            student_id=student_id,
            role=auth.ROLE_STUDENT,
            course_id=course_id,
            course_title=config.title,
        )

    # -- catalog ------------------------------------------------------------

    @app.get("/api/courses/{course_id}/videos", response_model=list[schemas.VideoOut])
    def list_videos(course_id: str, claims: auth.TokenClaims = Depends(require_claims)):
        catalog = store.catalog(course_id)
        return [
            schemas.VideoOut(
                video_id=v.video_id,
                title=v.title,
                duration_s=v.duration_s,
                published_at=v.published_at,
                media_url=v.media_url,
            )
            for _, v in sorted(catalog.items())
        ]

    @app.post(
        "/api/courses/{course_id}/videos",
        response_model=schemas.VideoOut,
        status_code=201,
    )
    def register_video(
        course_id: str,
        body: schemas.VideoIn,
        config: CourseConfig = Depends(require_instructor),
    ):
        if body.duration_s is None or body.duration_s < 1:
            raise ApiError(400, "duration_s is required and must be >= 1")
        video = VideoMeta(
            video_id=body.video_id,
            title=body.title,
            duration_s=body.duration_s,
            published_at=body.published_at or config.calendar.local_date(
                scheduler.clock.now()
            ),
            course_id=course_id,
            media_url=body.media_url,
        )
        try:
            store.add_video(course_id, video)
        except ValueError as exc:
            raise ApiError(409, str(exc))
        if body.seed_annotation is not None:
            # Stored for evaluation and seeding experiments; never affects
            # the score pipeline by itself.
            store.set_annotation(
                course_id,
                ImportantPartAnnotation(
                    video_id=video.video_id,
                    start_s=body.seed_annotation.start_s,
                    end_s=body.seed_annotation.end_s,
                ),
            )
        return schemas.VideoOut(
            video_id=video.video_id,
            title=video.title,
            duration_s=video.duration_s,
            published_at=video.published_at,
            media_url=video.media_url,
        )

    # -- events ---------------------------------------------------------------

    @app.post(
        "/api/courses/{course_id}/events",
        response_model=schemas.AppendOut,
        status_code=202,
    )
    def ingest_events(
        course_id: str,
        body: schemas.EventBatchIn,
        claims: auth.TokenClaims = Depends(require_claims),
    ):
        if len(body.events) > schemas.MAX_EVENT_BATCH:
            raise ApiError(
                413, f"batch exceeds {schemas.MAX_EVENT_BATCH} events"
            )
        events = []
        rejected = []
        for item in body.events:
            try:
                events.append(
                    InteractionEvent(
                        event_id=item.event_id,
                        student_id=claims.subject,
                        video_id=item.video_id,
                        wall_time=item.wall_time,
                        kind=item.kind,
                        position_s=item.position_s,
                        rate=item.rate,
                        seek_from_s=item.seek_from_s,
                    )
                )
            except ValueError as exc:
                rejected.append(
                    schemas.RejectedEventOut(
                        event_id=item.event_id, reason=f"{REASON_MALFORMED}: {exc}"
                    )
                )
        result = store.append_events(course_id, events)
        return schemas.AppendOut(
            accepted=result.accepted,
            duplicates=result.duplicates,
            rejected=rejected
            + [
                schemas.RejectedEventOut(event_id=r.event_id, reason=r.reason)
                for r in result.rejected
            ],
        )

    # -- timelines --------------------------------------------------------------

    @app.get(
        "/api/courses/{course_id}/videos/{video_id}/timeline",
        response_model=schemas.TimelineOut,
    )
    def get_timeline(
        course_id: str,
        video_id: str,
        claims: auth.TokenClaims = Depends(require_claims),
    ):
        try:
            timeline = store.load_timeline(course_id, video_id)
        except UnknownVideoError:
            raise ApiError(404, f"unknown video {video_id}")
        return schemas.TimelineOut(
            video_id=timeline.video_id,
            duration_s=timeline.duration_s,
            bin_width_s=timeline.bin_width_s,
            normalized=list(timeline.normalized),
            computed_at=timeline.computed_at,
            event_horizon=timeline.event_horizon,
        )

    @app.post("/api/courses/{course_id}/recompute", response_model=schemas.RecomputeOut)
    def manual_recompute(
        course_id: str,
        body: schemas.RecomputeIn,
        config: CourseConfig = Depends(require_instructor),
    ):
        # Explicit as_of pins the horizon to that date's midnight (the same
        # instant the nightly run would use); otherwise cover everything up
        # to now.
        if body.as_of is not None:
            horizon = config.calendar.midnight(body.as_of)
        else:
            horizon = scheduler.clock.now()
        report = store.recompute_course(course_id, horizon)
        return schemas.RecomputeOut(
            course_id=report.course_id,
            horizon=report.horizon,
            videos=[
                schemas.RecomputeVideoOut(
                    video_id=row.video_id,
                    horizon=row.horizon,
                    max_raw=row.max_raw,
                    published=row.published,
                    error=row.error,
                )
                for row in report.rows
            ],
        )

    # -- static UI ---------------------------------------------------------------

    bundle = Path(frontend_dir).resolve() if frontend_dir else None
    if bundle and bundle.is_dir():
        app.mount("/app", StaticFiles(directory=bundle, html=True), name="ui")

    return app
