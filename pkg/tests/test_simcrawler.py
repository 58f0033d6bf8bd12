import os
import socket
import sys
import time

import pytest
import requests

# Add parent directory to path to import packages
REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(REPO_ROOT)
from metrics import compute_performance_results
from race import ERROR, PAGE_COMPLETE, ROUND_FINISH, ROUND_START, CrawlerAdapter, read_events, run_round
from simcrawler import (CrawlAbortedError, FaultRule, FixtureServer, FixtureServerError, SpeedProfile,
                        fault_from_dict, run_sim_crawl, serve_fixture)
from warc_core import index_warc_files, parse_http_response, read_warc_files

# --- Constants ---
PAGES = ["index.html", "about.html", "gallery.html", "media.html", "blog.html", "contact.html"]
FAULTS = [
    FaultRule("/style.css", status=404),
    FaultRule("/app.js", status=503),
    FaultRule("/img/hero.png", drop=True),
]
RACE_ROUNDS = 100


# --- Fixtures ---

@pytest.fixture
def server():
    with FixtureServer() as running:
        yield running


@pytest.fixture
def faulty_server():
    with FixtureServer(faults=FAULTS) as running:
        yield running


@pytest.fixture(autouse=True)
def fast_polling(monkeypatch):
    monkeypatch.setattr("race.supervisor.POLL_INTERVAL_SECONDS", 0.01)


# --- Helpers ---

def seeds_for(base_url, count):
    return [base_url + PAGES[n % len(PAGES)] for n in range(count)]


def crawl(tmp_path, seeds, delay_ms=0, name="crawl"):
    events_file = str(tmp_path / name / "events.jsonl")
    result = run_sim_crawl(seeds, SpeedProfile(per_page_delay_ms=delay_ms), str(tmp_path / name / "warcs"),
                           events_file)
    return result, read_events(events_file)


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def sim_adapter(name, delay_ms):
    template = (f"{{python}} -m cli -q sim-crawl --seeds {{seeds_file}} --delay-ms {delay_ms} "
                f"--out {{output_dir}} --events {{events_file}}")
    return CrawlerAdapter(name=name, command_template=template, timeout_seconds=60)


# --- Fixture server ---

def test_server_serves_site_with_media_types(server):
    page = requests.get(server.url + "index.html", timeout=5)
    script = requests.get(server.url + "app.js", timeout=5)

    assert page.status_code == 200
    assert page.headers["Content-Type"] == "text/html; charset=utf-8"
    assert b"style.css" in page.content
    assert script.headers["Content-Type"] == "application/javascript"


def test_status_fault_replaces_the_resource(faulty_server):
    response = requests.get(faulty_server.url + "style.css", timeout=5)

    assert response.status_code == 404
    assert response.content == b""


def test_drop_fault_closes_without_response(faulty_server):
    with pytest.raises(requests.exceptions.ConnectionError):
        requests.get(faulty_server.url + "img/hero.png", timeout=5)


def test_delay_fault_still_serves_the_resource():
    with FixtureServer(faults=[FaultRule("/about.html", delay_ms=200)]) as running:
        started = time.monotonic()
        response = requests.get(running.url + "about.html", timeout=5)
        elapsed = time.monotonic() - started

    assert response.status_code == 200
    assert elapsed >= 0.2


def test_first_matching_fault_wins():
    faults = [FaultRule("/index.html", status=410), FaultRule("/*.html", status=500)]

    with FixtureServer(faults=faults) as running:
        assert requests.get(running.url + "index.html", timeout=5).status_code == 410
        assert requests.get(running.url + "about.html", timeout=5).status_code == 500
        assert requests.get(running.url + "style.css", timeout=5).status_code == 200


def test_busy_port_is_reported(server):
    with pytest.raises(FixtureServerError):
        FixtureServer(port=server.port).start()


@pytest.mark.parametrize("data", [
    {"path": "/a", "status": 404, "drop": True},
    {"path": "/a", "status": 99},
    {"path": "/a", "delay_ms": -1},
    {"path": "/a"},
    {"status": 404},
])
def test_invalid_fault_rules_are_rejected(data):
    with pytest.raises(FixtureServerError):
        fault_from_dict(data)


# --- Sim crawler ---

def test_speed_profile_delays_are_reproducible():
    profile = SpeedProfile(per_page_delay_ms=10, jitter_ms=5, seed=3)

    delays = profile.delays(20)

    assert delays == SpeedProfile(per_page_delay_ms=10, jitter_ms=5, seed=3).delays(20)
    assert all(0.010 <= delay <= 0.015 for delay in delays)


def test_sim_crawl_reports_every_seed_and_honours_delays(server, tmp_path):
    started = time.monotonic()
    result, events = crawl(tmp_path, seeds_for(server.url, 20), delay_ms=10)
    elapsed = time.monotonic() - started

    assert [event.kind for event in events].count(PAGE_COMPLETE) == 20
    assert events[0].kind == ROUND_START and events[-1].kind == ROUND_FINISH
    assert events[-1].pages_so_far == 20
    assert result.pages_archived == 20
    assert result.event_count == len(events)
    assert elapsed >= 0.2
    assert (events[-1].at - events[0].at).total_seconds() >= 0.2


def test_sim_crawl_event_offsets_are_reproducible(server, tmp_path):
    profile = SpeedProfile(per_page_delay_ms=10, jitter_ms=10, seed=5)
    offsets = []
    for name in ("first", "second"):
        events_file = str(tmp_path / name / "events.jsonl")
        run_sim_crawl(seeds_for(server.url, 8), profile, str(tmp_path / name / "warcs"), events_file)
        events = read_events(events_file)
        start = events[0].at
        offsets.append([(event.at - start).total_seconds() for event in events if event.kind == PAGE_COMPLETE])

    assert len(offsets[0]) == 8
    assert offsets[1] == pytest.approx(offsets[0], abs=0.1)


def test_sim_crawl_without_seeds_still_finishes(tmp_path):
    result, events = crawl(tmp_path, [])

    assert [event.kind for event in events] == [ROUND_START, ROUND_FINISH]
    records = read_warc_files(result.warc_paths)
    assert [record.record_type for record in records] == ["warcinfo"]


def test_sim_crawl_writes_a_readable_warc(server, tmp_path):
    result, _ = crawl(tmp_path, seeds_for(server.url, 6))

    records = read_warc_files(result.warc_paths)

    assert records[0].record_type == "warcinfo"
    responses = [record for record in records if record.record_type == "response"]
    assert len(responses) == result.records_written - 1
    assert len({record.target_uri for record in responses}) == len(responses)
    assert all(record.get_header("WARC-Payload-Digest").startswith("sha1:") for record in responses)


def test_sim_crawl_archives_every_redirect_hop(server, tmp_path):
    result, events = crawl(tmp_path, [server.url + "img"])

    responses = {record.target_uri: parse_http_response(record.payload).status_code
                 for record in read_warc_files(result.warc_paths) if record.record_type == "response"}

    assert responses == {server.url + "img": 301, server.url + "img/": 200}
    assert [event.uri for event in events if event.kind == PAGE_COMPLETE] == [server.url + "img"]


def test_unreachable_seed_aborts_with_error_event(tmp_path):
    seeds = [f"http://127.0.0.1:{free_port()}/index.html"]

    with pytest.raises(CrawlAbortedError):
        crawl(tmp_path, seeds)

    events = read_events(str(tmp_path / "crawl" / "events.jsonl"))
    assert [event.kind for event in events] == [ROUND_START, ERROR]


def test_crawl_index_is_sorted(server, tmp_path):
    result, _ = crawl(tmp_path, seeds_for(server.url, 6))

    entries = index_warc_files(result.warc_paths)

    keys = [(entry.surt_key, entry.timestamp14) for entry in entries]
    assert keys == sorted(keys)
    assert all(entry.surt_key.startswith("127.0.0.1:") for entry in entries)
    assert len(entries) == result.records_written - 1


# --- Analysis over the fixture site ---

def test_injected_faults_show_up_in_performance_results(faulty_server, tmp_path):
    seeds = [faulty_server.url + page for page in PAGES[:5]]
    result, events = crawl(tmp_path, seeds)

    results = compute_performance_results(read_warc_files(result.warc_paths), events, "sim", 1)

    assert results.pages_archived == 5
    assert results.resources_404 == 1
    assert results.resources_other_4xx_5xx == 1
    assert results.missing_by_type == {"css": 1, "image": 1, "javascript": 1}


def test_clean_crawl_has_nothing_missing(server, tmp_path):
    seeds = [server.url + page for page in PAGES]
    result, events = crawl(tmp_path, seeds)

    results = compute_performance_results(read_warc_files(result.warc_paths), events, "sim", 1)

    assert results.pages_archived == 6
    assert (results.resources_404, results.resources_other_4xx_5xx) == (0, 0)
    assert results.missing_by_type == {}


def test_serve_fixture_returns_running_server():
    running = serve_fixture()
    try:
        assert requests.get(running.url + "print.css", timeout=5).status_code == 200
    finally:
        running.shutdown()


# --- Races between sim crawlers ---

def test_faster_sim_crawler_wins_repeated_rounds(server, tmp_path, monkeypatch):
    monkeypatch.setenv("PYTHONPATH", REPO_ROOT)
    adapters = [sim_adapter("quick", 10), sim_adapter("steady", 20)]
    seeds = seeds_for(server.url, 20)

    wins = 0
    for number in range(1, RACE_ROUNDS + 1):
        result = run_round(adapters, seeds, number, str(tmp_path))
        wins += result.winner == "quick"
        assert result.per_crawler["quick"].results.speedrun_seconds >= 0.2
        assert result.per_crawler["steady"].results.speedrun_seconds >= 0.4
        assert result.per_crawler["quick"].results.pages_archived == 20

    assert wins >= 95
