import json
import os
import sys
from datetime import datetime, timedelta
from unittest.mock import MagicMock

import pytest
import pytz

# Add parent directory to path to import packages
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from cli import build_plan, main
from gamemap import PROFILE_DIR
from metrics import PerformanceResults, load_results, results_filename, write_results
from race import PAGE_COMPLETE, ROUND_FINISH, ROUND_START, ProgressEvent, parse_hms, write_events
from warc_core import WarcRecord, WarcWriter, read_cdxj

# --- Constants ---
T0 = datetime(2023, 6, 1, 12, 0, 0, tzinfo=pytz.utc)
ROSTER_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures", "nfl_roster.txt")
BROZZLER_TIMES = ["0:19:16", "0:19:16", "0:19:38", "0:20:17", "0:18:47",
                  "0:19:49", "0:19:16", "0:19:37", "0:19:53", "0:19:47"]
BROWSERTRIX_TIMES = ["0:21:52", "0:21:13", "0:22:22", "0:23:28", "0:19:15",
                     "0:22:16", "0:21:59", "0:22:18", "0:22:04", "0:21:54"]


# --- Helpers ---

def write_warc(path):
    page = b"HTTP/1.1 200 OK\r\nContent-Type: text/html\r\n\r\n<img src='missing.png'>"
    with open(path, "wb") as stream:
        WarcWriter(stream).write(WarcRecord.build("response", payload=page, target_uri="http://example.com/",
                                                  content_type="application/http; msgtype=response",
                                                  record_date=T0))


def write_crawl_log(path, pages=1, seconds=90):
    events = [ProgressEvent(ROUND_START, T0)]
    events += [ProgressEvent(PAGE_COMPLETE, T0 + timedelta(seconds=n), uri=f"http://example.com/{n}",
                             pages_so_far=n) for n in range(1, pages + 1)]
    events.append(ProgressEvent(ROUND_FINISH, T0 + timedelta(seconds=seconds), pages_so_far=pages))
    write_events(events, str(path))


def write_published_rounds(directory):
    for number, (brozzler, browsertrix) in enumerate(zip(BROZZLER_TIMES, BROWSERTRIX_TIMES), start=1):
        for name, time_text in (("Brozzler", brozzler), ("Browsertrix", browsertrix)):
            results = PerformanceResults(name, number, 20, float(parse_hms(time_text)))
            write_results(results, str(directory / results_filename(name, number)))


# --- Argument handling ---

@pytest.mark.parametrize("argv", [
    [],
    ["race", "--seeds", "s.txt"],
    ["sim-serve", "--port", "70000"],
    ["sim-crawl", "--seeds", "s", "--out", "o", "--events", "e", "--delay-ms", "-5"],
    ["gamemap", "--results", "r.json", "--profile", "p", "--out-config", "c.json", "--roster", "roster.txt"],
    ["leaderboard", "--format", "html", "results.json"],
])
def test_usage_errors_exit_with_status_2(argv):
    with pytest.raises(SystemExit) as excinfo:
        build_plan(argv)
    assert excinfo.value.code == 2


def test_verbosity_flags_set_log_level():
    assert build_plan(["-v", "cdx-summary", "x.cdxj"]).log_level == "DEBUG"
    assert build_plan(["-q", "cdx-summary", "x.cdxj"]).log_level == "WARNING"
    assert build_plan(["cdx-summary", "x.cdxj"]).options == {"cdxj": "x.cdxj", "out": None}


# --- Commands ---

def test_analyze_writes_results_file(tmp_path, capsys):
    write_warc(tmp_path / "crawl.warc.gz")
    write_crawl_log(tmp_path / "events.jsonl")
    out = tmp_path / "results.json"

    code = main(["analyze", "--warc", str(tmp_path / "crawl.warc.gz"), "--events", str(tmp_path / "events.jsonl"),
                 "--name", "sim", "--round", "2", "--out", str(out)])

    assert code == 0
    results = load_results(str(out))
    assert (results.crawler_name, results.round, results.pages_archived) == ("sim", 2, 1)
    assert results.speedrun_seconds == 90.0
    assert results.missing_by_type == {"image": 1}
    assert json.loads(capsys.readouterr().out) == results.to_dict()


def test_analyze_without_round_finish_fails(tmp_path):
    write_warc(tmp_path / "crawl.warc.gz")
    write_events([ProgressEvent(ROUND_START, T0)], str(tmp_path / "events.jsonl"))

    code = main(["analyze", "--warc", str(tmp_path / "crawl.warc.gz"), "--events", str(tmp_path / "events.jsonl"),
                 "--name", "sim", "--round", "1", "--out", str(tmp_path / "results.json")])

    assert code == 1
    assert not (tmp_path / "results.json").exists()


def test_cdx_index_then_summary(tmp_path, capsys):
    write_warc(tmp_path / "crawl.warc.gz")
    index = tmp_path / "crawl.cdxj"

    assert main(["cdx-index", "--warc", str(tmp_path / "crawl.warc.gz"), "--out", str(index)]) == 0
    assert len(read_cdxj(str(index))) == 1
    capsys.readouterr()

    assert main(["cdx-summary", str(index)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["total_captures"] == 1
    assert summary["by_status_class"] == {"2xx": 1}


def test_cdx_summary_of_empty_index(tmp_path, capsys):
    index = tmp_path / "empty.cdxj"
    index.write_text("")

    assert main(["cdx-summary", str(index)]) == 0
    assert json.loads(capsys.readouterr().out)["total_captures"] == 0


def test_cdx_summary_of_missing_file_fails(tmp_path):
    assert main(["cdx-summary", str(tmp_path / "absent.cdxj")]) == 1


def test_leaderboard_over_published_rounds(tmp_path, capsys):
    write_published_rounds(tmp_path)
    out = tmp_path / "leaderboard.md"

    code = main(["leaderboard", str(tmp_path / "results-*.json"), "--out", str(out)])

    assert code == 0
    markdown = capsys.readouterr().out
    assert markdown == out.read_text()
    assert "| Average speedrun time | 0:21:52 | **0:19:34** |" in markdown
    assert "| Rounds won | 0 | 10 |" in markdown


def test_leaderboard_as_json(tmp_path, capsys):
    write_published_rounds(tmp_path)

    assert main(["leaderboard", "--format", "json", str(tmp_path / "results-*.json")]) == 0

    data = json.loads(capsys.readouterr().out)
    assert data["crawlers"] == ["Browsertrix", "Brozzler"]
    assert len(data["rounds"]) == 10


def test_leaderboard_with_unmatched_glob_fails(tmp_path):
    assert main(["leaderboard", str(tmp_path / "nothing-*.json")]) == 1


def test_gamemap_end_to_end(tmp_path, capsys):
    write_results(PerformanceResults("Browsertrix", 1, 20, 1312.0), str(tmp_path / "results-Browsertrix-round1.json"))
    write_results(PerformanceResults("Brozzler", 1, 20, 1156.0), str(tmp_path / "results-Brozzler-round1.json"))
    adapter = tmp_path / "brozzler.json"
    adapter.write_text(json.dumps({"name": "Brozzler", "contributors": ["Ada", "Grace"],
                                   "command_template": "brozzler {seeds_file} {output_dir} {events_file}"}))

    code = main([
        "gamemap",
        "--results", str(tmp_path / "results-Browsertrix-round1.json"),
        "--results", str(tmp_path / "results-Brozzler-round1.json"),
        "--profile", "nfl_challenge",
        "--adapter", str(adapter),
        "--out-config", str(tmp_path / "config.json"),
        "--out-script", str(tmp_path / "script.jsonl"),
        "--roster", ROSTER_PATH,
        "--layout", os.path.join(PROFILE_DIR, "nfl_challenge_layout.json"),
        "--out-roster", str(tmp_path / "roster.txt"),
    ])

    assert code == 0
    config = json.loads((tmp_path / "config.json").read_text())
    assert [item["crawler_name"] for item in config["assignments"]] == ["Brozzler", "Browsertrix"]
    assert config["assignments"][0]["player_names"] == ["Ada", "Grace"]
    assert len((tmp_path / "script.jsonl").read_text().splitlines()) == 5
    roster = (tmp_path / "roster.txt").read_text()
    assert roster.splitlines()[0] == "TEAM|Brozzler    |HOM"
    assert "Wrote NFL Challenge configuration for 2 crawlers" in capsys.readouterr().out


def test_gamemap_with_unknown_profile_fails(tmp_path):
    write_results(PerformanceResults("a", 1, 1, 1.0), str(tmp_path / "results-a-round1.json"))

    code = main(["gamemap", "--results", str(tmp_path / "results-a-round1.json"), "--profile", "no_such_game",
                 "--out-config", str(tmp_path / "config.json")])

    assert code == 1


def test_publish_upserts_every_result(tmp_path, monkeypatch, capsys):
    write_published_rounds(tmp_path)
    table_client = MagicMock()
    monkeypatch.setattr("results_store.get_table_client", MagicMock(return_value=table_client))

    assert main(["publish", str(tmp_path / "results-*.json")]) == 0

    assert table_client.upsert_entity.call_count == 20
    assert "Published 20 results" in capsys.readouterr().out


def test_sim_crawl_command(tmp_path, capsys):
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("")

    code = main(["sim-crawl", "--seeds", str(seeds), "--out", str(tmp_path / "warcs"),
                 "--events", str(tmp_path / "events.jsonl")])

    assert code == 0
    assert json.loads(capsys.readouterr().out)["pages_archived"] == 0
