"""HTTP API behavior: auth, ingestion, timelines, recompute scheduling."""

from datetime import date, datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from heatline.config import CourseConfig
from heatline.service.app import create_app
from heatline.service.auth import issue_token, pseudonymize_email, verify_token, AuthError
from heatline.service.scheduler import NightlyScheduler
from heatline.store import CourseStore

COURSE_START = date(2021, 1, 18)
T0 = datetime(2021, 1, 18, 9, 0, tzinfo=timezone.utc)


class FakeClock:
    def __init__(self, now):
        self._now = now

    def now(self):
        return self._now

    def advance(self, **kwargs):
        self._now += timedelta(**kwargs)


@pytest.fixture
def clock():
    return FakeClock(T0)


@pytest.fixture
def client(tmp_path, clock):
    app = create_app(tmp_path / "data", enable_scheduler=False, clock=clock)
    with TestClient(app) as test_client:
        yield test_client


def _create_course(client, course_id="c1", join_code="ABCD1234"):
    response = client.post(
        "/api/courses",
        json={
            "course_id": course_id,
            "title": "Demo course",
            "course_start": COURSE_START.isoformat(),
            "timezone": "UTC",
            "join_code": join_code,
        },
    )
    assert response.status_code == 201, response.text
    return response.json()


def _add_video(client, instructor_key, course_id="c1", video_id="v1", duration=600):
    response = client.post(
        f"/api/courses/{course_id}/videos",
        headers={"X-Instructor-Key": instructor_key},
        json={"video_id": video_id, "title": "Clip", "duration_s": duration,
              "published_at": COURSE_START.isoformat()},
    )
    assert response.status_code == 201, response.text
    return response.json()


def _login(client, course_id="c1", email="alice@example.edu", code="ABCD1234"):
    response = client.post(
        f"/api/courses/{course_id}/login", json={"email": email, "code": code}
    )
    assert response.status_code == 200, response.text
    return response.json()


def _auth(token):
    return {"Authorization": f"Bearer {token}"}


def _event(event_id, kind, pos, t_s=0.0, video_id="v1", rate=1.0, seek_from=None):
    return {
        "event_id": event_id,
        "video_id": video_id,
        "wall_time": (T0 + timedelta(seconds=t_s)).isoformat(),
        "kind": kind,
        "position_s": pos,
        "rate": rate,
        "seek_from_s": seek_from,
    }


class TestAuth:
    def test_wrong_join_code_rejected(self, client):
        _create_course(client)
        response = client.post(
            "/api/courses/c1/login",
            json={"email": "alice@example.edu", "code": "WRONGCO1"},
        )
        assert response.status_code == 401

    def test_join_code_must_be_eight_chars(self, client):
        response = client.post(
            "/api/courses",
            json={"course_id": "c9", "course_start": "2021-01-18",
                  "join_code": "SHORT"},
        )
        assert response.status_code == 400

    def test_email_pseudonymized_and_stable(self, client):
        _create_course(client)
        first = _login(client)
        second = _login(client)
        assert first["student_id"] == second["student_id"]
        assert "alice" not in first["student_id"]
        other = _login(client, email="bob@example.edu")
        assert other["student_id"] != first["student_id"]

    def test_requests_require_token(self, client):
        _create_course(client)
        assert client.get("/api/courses/c1/videos").status_code == 401

    def test_expired_token_rejected(self):
        secret = "s" * 32
        token = issue_token(secret, "c1", "stu-1", "student", now=1000.0, ttl_s=10)
        assert verify_token(secret, token, now=1005.0).subject == "stu-1"
        with pytest.raises(AuthError):
            verify_token(secret, token, now=1011.0)

    def test_pseudonym_ignores_case_and_spacing(self):
        assert pseudonymize_email("k", " Alice@Example.EDU ") == pseudonymize_email(
            "k", "alice@example.edu"
        )

    def test_instructor_key_required_for_catalog(self, client):
        created = _create_course(client)
        response = client.post(
            "/api/courses/c1/videos",
            json={"video_id": "v1", "title": "Clip", "duration_s": 60},
        )
        assert response.status_code == 403
        assert _add_video(client, created["instructor_key"])["video_id"] == "v1"


class TestCatalog:
    def test_register_initializes_zero_timeline(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"], duration=608)
        token = _login(client)["token"]
        response = client.get("/api/courses/c1/videos/v1/timeline", headers=_auth(token))
        assert response.status_code == 200
        body = response.json()
        assert body["duration_s"] == 608
        assert len(body["normalized"]) == 608
        assert set(body["normalized"]) == {0.0}

    def test_duplicate_titles_allowed_distinct_ids(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"], video_id="v1")
        _add_video(client, created["instructor_key"], video_id="v2")
        token = _login(client)["token"]
        listing = client.get("/api/courses/c1/videos", headers=_auth(token)).json()
        assert [v["video_id"] for v in listing] == ["v1", "v2"]

    def test_duplicate_video_id_conflicts(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        response = client.post(
            "/api/courses/c1/videos",
            headers={"X-Instructor-Key": created["instructor_key"]},
            json={"video_id": "v1", "title": "Again", "duration_s": 60},
        )
        assert response.status_code == 409

    def test_missing_duration_is_400(self, client):
        created = _create_course(client)
        response = client.post(
            "/api/courses/c1/videos",
            headers={"X-Instructor-Key": created["instructor_key"]},
            json={"video_id": "v1", "title": "Clip"},
        )
        assert response.status_code == 400

    def test_seed_annotation_stored(self, client, tmp_path):
        created = _create_course(client)
        client.post(
            "/api/courses/c1/videos",
            headers={"X-Instructor-Key": created["instructor_key"]},
            json={"video_id": "v1", "title": "Clip", "duration_s": 600,
                  "seed_annotation": {"start_s": 100, "end_s": 200}},
        )
        store = CourseStore(tmp_path / "data")
        annotation = store.annotations("c1")["v1"]
        assert (annotation.start_s, annotation.end_s) == (100, 200)

    def test_unknown_video_timeline_404(self, client):
        _create_course(client)
        token = _login(client)["token"]
        response = client.get("/api/courses/c1/videos/nope/timeline", headers=_auth(token))
        assert response.status_code == 404


class TestIngestEndpoint:
    def test_valid_batch_accepted(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        response = client.post(
            "/api/courses/c1/events",
            headers=_auth(token),
            json={"events": [
                _event("e1", "play", 0.0),
                _event("e2", "heartbeat", 10.0, t_s=10),
                _event("e3", "pause", 12.0, t_s=12),
            ]},
        )
        assert response.status_code == 202
        assert response.json()["accepted"] == 3

    def test_unknown_video_rejected_with_reason(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        response = client.post(
            "/api/courses/c1/events",
            headers=_auth(token),
            json={"events": [
                _event("e1", "play", 0.0),
                _event("e2", "play", 0.0, video_id="ghost"),
                _event("e3", "pause", 5.0, t_s=5),
            ]},
        )
        body = response.json()
        assert body["accepted"] == 2
        assert body["rejected"][0]["reason"] == "unknown_video"

    def test_duplicate_batch_retry_is_idempotent(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        batch = {"events": [_event("e1", "play", 0.0), _event("e2", "pause", 3.0, t_s=3)]}
        first = client.post("/api/courses/c1/events", headers=_auth(token), json=batch)
        assert first.json()["accepted"] == 2
        retry = client.post("/api/courses/c1/events", headers=_auth(token), json=batch)
        assert retry.json()["accepted"] == 0
        assert retry.json()["duplicates"] == 2

    def test_oversize_batch_413(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        events = [_event(f"e{i}", "heartbeat", 1.0, t_s=i) for i in range(501)]
        response = client.post(
            "/api/courses/c1/events", headers=_auth(token), json={"events": events}
        )
        assert response.status_code == 413

    def test_malformed_batch_400(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        response = client.post(
            "/api/courses/c1/events", headers=_auth(token),
            json={"events": [{"event_id": "e1", "kind": "play"}]},
        )
        assert response.status_code == 400

    def test_server_stamps_student_from_token(self, client, tmp_path):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        login = _login(client)
        client.post(
            "/api/courses/c1/events", headers=_auth(login["token"]),
            json={"events": [_event("e1", "play", 0.0)]},
        )
        store = CourseStore(tmp_path / "data")
        (event,) = store.events("c1")
        assert event.student_id == login["student_id"]


class TestRecompute:
    def _ingest_watch(self, client, token):
        events = [_event("w1", "play", 0.0)]
        events += [
            _event(f"hb{i}", "heartbeat", float(i), t_s=float(i)) for i in (10, 20, 30)
        ]
        events.append(_event("w2", "pause", 40.0, t_s=40))
        response = client.post(
            "/api/courses/c1/events", headers=_auth(token), json={"events": events}
        )
        assert response.json()["accepted"] == 5

    def test_manual_recompute_publishes(self, client, clock):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        self._ingest_watch(client, token)
        clock.advance(hours=2)
        response = client.post(
            "/api/courses/c1/recompute",
            headers={"X-Instructor-Key": created["instructor_key"]},
            json={},
        )
        assert response.status_code == 200
        assert response.json()["videos"][0]["max_raw"] == 1.0
        timeline = client.get(
            "/api/courses/c1/videos/v1/timeline", headers=_auth(token)
        ).json()
        assert timeline["normalized"][:40] == [1.0] * 40
        assert set(timeline["normalized"][40:]) == {0.0}

    def test_as_of_before_events_gives_zeros(self, client):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        self._ingest_watch(client, token)
        response = client.post(
            "/api/courses/c1/recompute",
            headers={"X-Instructor-Key": created["instructor_key"]},
            json={"as_of": COURSE_START.isoformat()},
        )
        assert response.json()["videos"][0]["max_raw"] == 0.0

    def test_get_is_stable_until_next_publish(self, client, clock):
        created = _create_course(client)
        _add_video(client, created["instructor_key"])
        token = _login(client)["token"]
        before = client.get(
            "/api/courses/c1/videos/v1/timeline", headers=_auth(token)
        ).json()
        self._ingest_watch(client, token)
        after_ingest = client.get(
            "/api/courses/c1/videos/v1/timeline", headers=_auth(token)
        ).json()
        assert after_ingest == before  # served timeline is the snapshot


class TestNightlyScheduler:
    def _setup(self, tmp_path, clock):
        store = CourseStore(tmp_path / "data")
        config = CourseConfig(
            course_id="c1", course_start=COURSE_START, timezone="UTC",
            join_code="ABCD1234",
        )
        store.create_course(config)
        from heatline.model import VideoMeta

        store.add_video("c1", VideoMeta("v1", "clip", 120, COURSE_START, "c1"))
        return store, NightlyScheduler(store, clock=clock)

    def _watch_events(self, t0, prefix="n"):
        from heatline.model import EventKind, InteractionEvent

        return [
            InteractionEvent(f"{prefix}1", "s1", "v1", t0, EventKind.PLAY, 0.0),
            InteractionEvent(
                f"{prefix}2", "s1", "v1", t0 + timedelta(seconds=10),
                EventKind.HEARTBEAT, 10.0,
            ),
            InteractionEvent(
                f"{prefix}3", "s1", "v1", t0 + timedelta(seconds=20),
                EventKind.PAUSE, 20.0,
            ),
        ]

    def test_runs_once_per_midnight_and_advances_computed_at(self, tmp_path, clock):
        store, scheduler = self._setup(tmp_path, clock)
        store.append_events("c1", self._watch_events(T0))

        assert scheduler.poll() == []  # first poll only arms the schedule
        clock.advance(hours=1)
        assert scheduler.poll() == []  # 23:59 same day: nothing
        before = store.load_timeline("c1", "v1")
        assert before.computed_at == COURSE_START  # cold snapshot

        clock.advance(hours=14)  # crosses midnight into Jan 19
        (report,) = scheduler.poll()
        assert report.rows[0].published
        after = store.load_timeline("c1", "v1")
        assert after.computed_at == COURSE_START + timedelta(days=1)
        assert after.raw[:20] == (1.0,) * 20
        assert scheduler.poll() == []  # already ran today

    def test_skipped_day_still_covers_all_events(self, tmp_path, clock):
        store, scheduler = self._setup(tmp_path, clock)
        scheduler.poll()
        store.append_events("c1", self._watch_events(T0))
        store.append_events(
            "c1", self._watch_events(T0 + timedelta(days=1, seconds=100), prefix="m")
        )
        clock.advance(days=3)  # process slept through two midnights
        (report,) = scheduler.poll()
        timeline = store.load_timeline("c1", "v1")
        # Day-0 watch (x1.0) and day-1 watch (x1.1) both included.
        assert timeline.raw[0] == pytest.approx(2.1)

    def test_no_new_events_same_scores_new_date(self, tmp_path, clock):
        store, scheduler = self._setup(tmp_path, clock)
        store.append_events("c1", self._watch_events(T0))
        scheduler.poll()
        clock.advance(days=1)
        scheduler.poll()
        first = store.load_timeline("c1", "v1")
        clock.advance(days=1)
        scheduler.poll()
        second = store.load_timeline("c1", "v1")
        assert second.raw == first.raw
        assert second.normalized == first.normalized
        assert second.computed_at == first.computed_at + timedelta(days=1)


class TestDeterminism:
    def test_restart_and_recompute_byte_identical(self, tmp_path, clock):
        data_dir = tmp_path / "data"
        horizon_date = (COURSE_START + timedelta(days=2)).isoformat()

        def run_once():
            app = create_app(data_dir, enable_scheduler=False, clock=clock)
            with TestClient(app) as client:
                if not (data_dir / "courses").exists():
                    created = _create_course(client)
                    (data_dir / "instructor.key").write_text(created["instructor_key"])
                    _add_video(client, created["instructor_key"])
                    token = _login(client)["token"]
                    client.post(
                        "/api/courses/c1/events", headers=_auth(token),
                        json={"events": [
                            _event("e1", "play", 0.0),
                            _event("e2", "seek", 300.0, t_s=20, seek_from=20.0),
                            _event("e3", "heartbeat", 310.0, t_s=30),
                            _event("e4", "pause", 330.0, t_s=50),
                        ]},
                    )
                key = (data_dir / "instructor.key").read_text()
                client.post(
                    "/api/courses/c1/recompute",
                    headers={"X-Instructor-Key": key},
                    json={"as_of": horizon_date},
                )
            return (data_dir / "courses/c1/timelines/v1.bin").read_bytes()

        first = run_once()
        second = run_once()  # fresh app over the same data dir
        assert first == second


def test_health(client):
    body = client.get("/api/health").json()
    assert body["status"] == "ok"


def test_committed_api_schema_is_current(tmp_path):
    """The versioned schema file in api/ must match the live app."""
    import json
    from pathlib import Path

    from heatline.service.app import create_app as make

    repo_root = Path(__file__).resolve().parent.parent
    committed = json.loads((repo_root / "api" / "openapi.json").read_text())
    live = make(tmp_path / "data", enable_scheduler=False).openapi()
    assert committed == json.loads(json.dumps(live, sort_keys=True))


def test_ui_bundle_mounted_when_built(tmp_path):
    from pathlib import Path

    dist = Path(__file__).resolve().parent.parent / "frontend" / "dist"
    if not dist.is_dir():
        pytest.skip("frontend bundle not built (run npm run build in frontend/)")
    app = create_app(tmp_path / "data", enable_scheduler=False, frontend_dir=dist)
    with TestClient(app) as client:
        assert client.get("/app/").status_code == 200
        assert client.get("/app/main.js").status_code == 200


def test_default_weights_file_matches_defaults():
    import json
    from pathlib import Path

    from heatline.config import load_weights
    from heatline.model import WeightConfig

    repo_root = Path(__file__).resolve().parent.parent
    weights = load_weights(repo_root / "configs" / "weights.default.json")
    assert weights == WeightConfig()
