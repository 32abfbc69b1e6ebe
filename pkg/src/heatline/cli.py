"""Operator command line: serve the API, manage courses, ingest logs,
recompute, report, evaluate, simulate, and export contours.

Every subcommand is a thin wrapper over the core package and touches only
the data directory; ``serve`` is the one long-running command. Errors exit
nonzero with a single machine-parsable ``error: <kind>: <message>`` line on
stderr.
"""

from __future__ import annotations

import functools
import json
import sys
from datetime import date, datetime, timezone
from pathlib import Path

import click

from .analytics import (
    evaluation_report,
    evaluation_report_csv,
    load_annotations,
    usage_summary,
)
from .config import CourseConfig, generate_join_code
from .model import InteractionEvent, VideoMeta
from .render import contour_svg
from .simulate import load_simulation_plan, simulate_cohort, SimulationPlan
from .scoring import timeline_to_csv
from .store import CourseStore


def _fail(exc: BaseException) -> "click.exceptions.Exit":
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    return click.exceptions.Exit(1)


def friendly_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, click.Abort):
            raise
        except Exception as exc:
            raise _fail(exc)

    return wrapper


def _parse_date(value: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise click.BadParameter(f"{value!r} is not a YYYY-MM-DD date")


data_dir_option = click.option(
    "--data-dir", type=click.Path(path_type=Path), default=Path("./data"),
    show_default=True, help="Directory holding course data.",
)
course_option = click.option("--course", "course_id", required=True, help="Course id.")


@click.group(context_settings={"auto_envvar_prefix": "HEATLINE"})
@click.version_option(package_name="heatline")
def main():
    """Playback-usage analytics for educational video.

    Every flag can also be set via environment variables named
    HEATLINE_<COMMAND>_<FLAG>, e.g. HEATLINE_SERVE_PORT=9000.
    """


@main.command("serve")
@data_dir_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--timezone", "tz", default="UTC", show_default=True,
              help="Timezone for a bootstrapped default course.")
@click.option("--course-start", default=None,
              help="Course start date for a bootstrapped default course.")
@click.option("--frontend", type=click.Path(path_type=Path), default=None,
              help="Directory with the built player UI bundle.")
@click.option("--scheduler/--no-scheduler", default=True, show_default=True,
              help="Run the nightly recompute loop.")
@friendly_errors
def serve(data_dir, host, port, tz, course_start, frontend, scheduler):
    """Run the HTTP service.

    If the data directory holds no course yet, a course named ``default``
    is bootstrapped from --timezone/--course-start and its join code and
    instructor key are printed once.
    """
    import uvicorn

    from .service.app import create_app

    store = CourseStore(data_dir)
    if not store.list_courses():
        start = _parse_date(course_start) if course_start else datetime.now(
            timezone.utc
        ).date()
        config = CourseConfig(
            course_id="default", course_start=start, timezone=tz,
            title="Default course",
        )
        store.create_course(config)
        click.echo(f"bootstrapped course 'default' (start {start}, zone {tz})")
        click.echo(f"join code:      {config.join_code}")
        click.echo(f"instructor key: {config.instructor_key}")

    app = create_app(
        data_dir, enable_scheduler=scheduler,
        frontend_dir=frontend if frontend else _default_frontend(),
    )
    uvicorn.run(app, host=host, port=port)


def _default_frontend() -> Path | None:
    repo_root = Path(__file__).resolve().parent.parent.parent
    bundled = repo_root / "frontend" / "dist"
    return bundled if bundled.is_dir() else None


@main.command("init-course")
@data_dir_option
@course_option
@click.option("--course-start", required=True, help="First day of the course (YYYY-MM-DD).")
@click.option("--timezone", "tz", default="UTC", show_default=True)
@click.option("--title", default="")
@click.option("--join-code", default=None, help="8-character login code (generated if omitted).")
@friendly_errors
def init_course(data_dir, course_id, course_start, tz, title, join_code):
    """Create a course in the data directory."""
    config = CourseConfig(
        course_id=course_id,
        course_start=_parse_date(course_start),
        timezone=tz,
        title=title,
        join_code=join_code or generate_join_code(),
    )
    CourseStore(data_dir).create_course(config)
    click.echo(f"created course {course_id}")
    click.echo(f"join code:      {config.join_code}")
    click.echo(f"instructor key: {config.instructor_key}")


@main.command("add-video")
@data_dir_option
@course_option
@click.option("--video-id", required=True)
@click.option("--title", required=True)
@click.option("--duration-s", required=True, type=int)
@click.option("--published-at", default=None, help="Defaults to the course start date.")
@click.option("--media-url", default=None)
@friendly_errors
def add_video(data_dir, course_id, video_id, title, duration_s, published_at, media_url):
    """Register a video; its timeline starts at zero."""
    store = CourseStore(data_dir)
    config = store.get_config(course_id)
    video = VideoMeta(
        video_id=video_id,
        title=title,
        duration_s=duration_s,
        published_at=_parse_date(published_at) if published_at else config.course_start,
        course_id=course_id,
        media_url=media_url,
    )
    store.add_video(course_id, video)
    click.echo(f"added {video_id} ({duration_s}s) to {course_id}")


@main.command("ingest")
@data_dir_option
@course_option
@click.argument("events_file", type=click.File("r"))
@friendly_errors
def ingest(data_dir, course_id, events_file):
    """Append events from a newline-delimited JSON file to the course log."""
    events = []
    for line_no, line in enumerate(events_file, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            events.append(InteractionEvent.from_wire(json.loads(line)))
        except (ValueError, KeyError) as exc:
            raise click.ClickException(f"line {line_no}: {exc}")
    result = CourseStore(data_dir).append_events(course_id, events)
    click.echo(
        f"accepted {result.accepted}, duplicates {result.duplicates}, "
        f"rejected {len(result.rejected)}"
    )
    for rejection in result.rejected:
        click.echo(f"  rejected {rejection.event_id}: {rejection.reason}", err=True)


def _horizon_for(store: CourseStore, course_id: str, as_of: str | None) -> datetime:
    config = store.get_config(course_id)
    if as_of is None:
        return datetime.now(timezone.utc)
    return config.calendar.midnight(_parse_date(as_of))


@main.command("recompute")
@data_dir_option
@course_option
@click.option("--as-of", default=None,
              help="Recompute as of this date's midnight (defaults to now).")
@friendly_errors
def recompute(data_dir, course_id, as_of):
    """Recompute and republish every timeline in a course."""
    store = CourseStore(data_dir)
    report = store.recompute_course(course_id, _horizon_for(store, course_id, as_of))
    for row in report.rows:
        status = f"max_raw={row.max_raw:.3f}" if row.published else f"FAILED: {row.error}"
        click.echo(f"{row.video_id}: {status}")
    if any(not row.published for row in report.rows):
        raise click.exceptions.Exit(1)


@main.command("report")
@data_dir_option
@course_option
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Also write the summary as CSV.")
@friendly_errors
def report(data_dir, course_id, out):
    """Usage summary: students, sessions, playback hours."""
    store = CourseStore(data_dir)
    config = store.get_config(course_id)
    summary = usage_summary(
        store.events(course_id), store.catalog(course_id), config.calendar
    )
    rows = [
        ("students", summary.n_students),
        ("videos", summary.n_videos),
        ("sessions", summary.n_sessions),
        ("total_playback_hours", round(summary.total_playback_hours, 2)),
        ("avg_playback_min_per_student", round(summary.avg_playback_min_per_student, 2)),
    ]
    for key, value in rows:
        click.echo(f"{key}: {value}")
    if out:
        out.write_text(
            "metric,value\n" + "".join(f"{k},{v}\n" for k, v in rows), encoding="utf-8"
        )
        click.echo(f"wrote {out}")


@main.command("evaluate")
@data_dir_option
@course_option
@click.option("--annotations", "annotations_path", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="CSV of video_id,start_s,end_s.")
@click.option("--threshold", default=0.9, show_default=True, type=float)
@click.option("--min-len", default=10, show_default=True, type=int)
@click.option("--min-overlap", default=1, show_default=True, type=int)
@click.option("--as-of", default=None)
@click.option("--sweep", default=None,
              help="Comma-separated thresholds; prints one match rate per value.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Write the per-video table as CSV.")
@friendly_errors
def evaluate(data_dir, course_id, annotations_path, threshold, min_len, min_overlap,
             as_of, sweep, out):
    """Check detected plateaus against instructor annotations."""
    store = CourseStore(data_dir)
    config = store.get_config(course_id)
    events = store.events(course_id)
    catalog = store.catalog(course_id)
    annotations = load_annotations(annotations_path)
    horizon = _horizon_for(store, course_id, as_of)

    def run(at_threshold):
        return evaluation_report(
            catalog, events, annotations, config.weights, config.calendar, horizon,
            threshold_frac=at_threshold, min_len_s=min_len, min_overlap_s=min_overlap,
        )

    if sweep:
        click.echo("threshold,matched,evaluated,match_rate")
        for raw_value in sweep.split(","):
            value = float(raw_value)
            result = run(value)
            rate = "n/a" if result.match_rate is None else f"{result.match_rate:.3f}"
            click.echo(f"{value},{result.matched},{result.evaluated},{rate}")
        return

    result = run(threshold)
    for row in result.rows:
        plateaus = ";".join(f"{p.start_s}-{p.end_s}" for p in row.plateaus) or "-"
        mark = "match" if row.matched else "miss"
        click.echo(
            f"{row.video_id}: plateaus {plateaus} vs annotation "
            f"{row.annotation.start_s}-{row.annotation.end_s} -> {mark}"
        )
    for video_id in result.excluded_videos:
        click.echo(f"{video_id}: no annotation, excluded")
    rate = "n/a" if result.match_rate is None else f"{100 * result.match_rate:.1f}%"
    click.echo(f"matched {result.matched}/{result.evaluated} ({rate})")
    if out:
        out.write_text(evaluation_report_csv(result), encoding="utf-8")
        click.echo(f"wrote {out}")


@main.command("simulate")
@data_dir_option
@course_option
@click.option("--profiles", "profiles_path", required=True,
              type=click.Path(exists=True, path_type=Path),
              help="Behavior profile config (JSON).")
@click.option("--seed", default=None, type=int, help="Override the plan's seed.")
@click.option("--days", default=None, type=int, help="Override the plan's day count.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Write events to an NDJSON file instead of the course log.")
@friendly_errors
def simulate(data_dir, course_id, profiles_path, seed, days, out):
    """Generate a synthetic cohort log from behavior profiles."""
    store = CourseStore(data_dir)
    config = store.get_config(course_id)
    plan = load_simulation_plan(profiles_path)
    if seed is not None or days is not None:
        plan = SimulationPlan(
            cohort=plan.cohort,
            days=days if days is not None else plan.days,
            seed=seed if seed is not None else plan.seed,
        )
    catalog = store.catalog(course_id)
    events = simulate_cohort(plan, catalog, config.calendar, config.weights)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for event in events:
                fh.write(json.dumps(event.to_wire()) + "\n")
        click.echo(f"wrote {len(events)} events to {out}")
    else:
        result = store.append_events(course_id, events)
        click.echo(
            f"appended {result.accepted} events "
            f"({result.duplicates} duplicates, {len(result.rejected)} rejected)"
        )


@main.command("export")
@data_dir_option
@course_option
@click.option("--video", "video_id", required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "svg"]), default="csv",
              show_default=True)
@click.option("--annotations", "annotations_path", default=None,
              type=click.Path(exists=True, path_type=Path),
              help="Shade this video's annotated interval in SVG output.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output file (defaults to <video>.<format>).")
@friendly_errors
def export(data_dir, course_id, video_id, fmt, annotations_path, out):
    """Export the published timeline as CSV or an SVG contour."""
    store = CourseStore(data_dir)
    timeline = store.load_timeline(course_id, video_id)
    if fmt == "csv":
        payload = timeline_to_csv(timeline)
    else:
        annotation = None
        if annotations_path:
            annotation = load_annotations(annotations_path).get(video_id)
        else:
            annotation = store.annotations(course_id).get(video_id)
        catalog = store.catalog(course_id)
        title = catalog[video_id].title if video_id in catalog else video_id
        payload = contour_svg(timeline, annotation=annotation, title=title)
    target = out or Path(f"{video_id}.{fmt}")
    target.write_text(payload, encoding="utf-8")
    click.echo(f"wrote {target}")


if __name__ == "__main__":
    main()
