"""Nightly recompute schedule.

Each course recomputes once per local calendar day, with the horizon pinned
to that day's midnight instant. The poll is horizon-based rather than
delta-based: if the process slept through a midnight (or several), the next
poll still recomputes over the full log, so nothing is ever missed.
"""

from __future__ import annotations

import asyncio
import logging
from datetime import date, datetime, timezone
from typing import Callable, Protocol

from ..store import CourseStore, RecomputeReport

logger = logging.getLogger(__name__)


class Clock(Protocol):
    def now(self) -> datetime: ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class NightlyScheduler:
    """Runs the per-course midnight recompute when a poll crosses a local
    date boundary. Drive it with ``poll()`` (tests) or ``run()`` (service).
    """

    def __init__(self, store: CourseStore, clock: Clock | None = None):
        self.store = store
        self.clock = clock or SystemClock()
        self._last_run_date: dict[str, date] = {}

    def poll(self) -> list[RecomputeReport]:
        """Recompute every course whose local date advanced since the last
        completed run. The first poll after startup only records the current
        date; the first real run happens at the next midnight."""
        reports = []
        now = self.clock.now()
        for course_id in self.store.list_courses():
            config = self.store.get_config(course_id)
            local_today = config.calendar.local_date(now)
            last = self._last_run_date.get(course_id)
            if last is None:
                self._last_run_date[course_id] = local_today
                continue
            if local_today > last:
                horizon = config.calendar.midnight(local_today)
                report = self.store.recompute_course(course_id, horizon)
                self._last_run_date[course_id] = local_today
                reports.append(report)
                failures = [r for r in report.rows if not r.published]
                logger.info(
                    "nightly recompute for %s: %d videos, %d failures",
                    course_id, len(report.rows), len(failures),
                )
        return reports

    async def run(self, poll_interval_s: float = 30.0, stop: asyncio.Event | None = None):
        stop = stop or asyncio.Event()
        while not stop.is_set():
            try:
                await asyncio.to_thread(self.poll)
            except Exception:
                logger.exception("nightly poll failed; will retry")
            try:
                await asyncio.wait_for(stop.wait(), timeout=poll_interval_s)
            except asyncio.TimeoutError:
                pass
