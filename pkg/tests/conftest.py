import itertools
from datetime import date, datetime, timedelta, timezone

import pytest

from heatline.model import (
    CourseCalendar,
    EventKind,
    InteractionEvent,
    VideoMeta,
    WeightConfig,
)

COURSE_START = date(2021, 1, 18)
T0 = datetime(2021, 1, 18, 9, 0, tzinfo=timezone.utc)


@pytest.fixture
def config():
    return WeightConfig()


@pytest.fixture
def calendar():
    return CourseCalendar(course_start=COURSE_START, timezone="UTC")


@pytest.fixture
def video():
    return VideoMeta(
        video_id="v1",
        title="Worked example",
        duration_s=600,
        published_at=COURSE_START,
        course_id="c1",
    )


@pytest.fixture
def make_event():
    """Event factory: times are seconds after T0, ids auto-increment."""
    counter = itertools.count(1)

    def factory(kind, pos, t_s=0.0, student="s1", video_id="v1", rate=1.0, seek_from=None):
        return InteractionEvent(
            event_id=f"ev{next(counter):05d}",
            student_id=student,
            video_id=video_id,
            wall_time=T0 + timedelta(seconds=t_s),
            kind=EventKind(kind),
            position_s=pos,
            rate=rate,
            seek_from_s=seek_from,
        )

    return factory
