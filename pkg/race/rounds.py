"""Round results, the winner rule, and reloading rounds from results files."""
import json
import logging
import os
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from metrics import PerformanceResults, load_results

from .events import ROUND_FINISH, ProgressEvent, halfway_split, read_events

ROUND_SUMMARY_FILE = "round.json"
EVENTS_FILE = "events.jsonl"
RESULTS_FILE = "results.json"


@dataclass(frozen=True)
class CrawlerRun:
    name: str
    results: PerformanceResults
    events: Tuple[ProgressEvent, ...] = ()
    warc_paths: Tuple[str, ...] = ()
    finished: bool = True
    timed_out: bool = False
    exit_code: Optional[int] = None


@dataclass(frozen=True)
class RoundResult:
    round: int
    seeds: Tuple[str, ...]
    per_crawler: Dict[str, CrawlerRun] = field(default_factory=dict)
    winner: Optional[str] = None


def is_complete(run: CrawlerRun, seed_count: int) -> bool:
    """A finished run that archived exactly the seed list. A seed_count of 0 means the seeds are not known."""
    if not run.finished:
        return False
    return not seed_count or run.results.pages_archived == seed_count


def determine_winner(result: RoundResult) -> Optional[str]:
    """Fastest crawler that archived every seed and sent round_finish; ties go to the smaller name."""
    finishers = [run for run in result.per_crawler.values() if is_complete(run, len(result.seeds))]
    if not finishers:
        return None
    return min(finishers, key=lambda run: (run.results.speedrun_seconds, run.name)).name


def leader(result: RoundResult) -> Optional[str]:
    if not result.per_crawler:
        return None
    return min(result.per_crawler.values(), key=lambda run: (-run.results.pages_archived, run.name)).name


def with_winner(result: RoundResult) -> RoundResult:
    return replace(result, winner=determine_winner(result))


def round_summary(result: RoundResult) -> dict:
    crawlers = {}
    for name, run in result.per_crawler.items():
        crawlers[name] = {
            "finished": run.finished,
            "timed_out": run.timed_out,
            "exit_code": run.exit_code,
            "pages_archived": run.results.pages_archived,
            "speedrun_seconds": run.results.speedrun_seconds,
            "halfway_seconds": halfway_split(run.events, len(result.seeds)),
            "warc_paths": list(run.warc_paths),
        }
    return {
        "round": result.round,
        "seeds": list(result.seeds),
        "winner": result.winner,
        "crawlers": crawlers,
    }


def write_round_summary(result: RoundResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(json.dumps(round_summary(result), indent=2) + "\n")


def _seeds_for(results_path) -> Tuple[str, ...]:
    # results live at rounds/round-N/<crawler>/results.json; round.json sits one level up
    round_dir = os.path.dirname(os.path.dirname(os.path.abspath(results_path)))
    summary_path = os.path.join(round_dir, ROUND_SUMMARY_FILE)
    if not os.path.exists(summary_path):
        return ()
    with open(summary_path, "r", encoding="utf-8") as stream:
        return tuple(json.load(stream).get("seeds", ()))


def load_round_results(paths) -> List[RoundResult]:
    """Rebuilds RoundResults from results files, grouped by round number."""
    paths = list(paths)
    grouped: Dict[int, "OrderedDict[str, CrawlerRun]"] = {}
    seeds: Dict[int, Tuple[str, ...]] = {}
    for path in paths:
        results = load_results(path)
        events_path = os.path.join(os.path.dirname(os.path.abspath(path)), EVENTS_FILE)
        events: Tuple[ProgressEvent, ...] = ()
        finished = True
        if os.path.exists(events_path):
            events = tuple(read_events(events_path))
            finished = any(event.kind == ROUND_FINISH for event in events)
        runs = grouped.setdefault(results.round, OrderedDict())
        if results.crawler_name in runs:
            raise ValueError(f"{path}: crawler {results.crawler_name} appears twice in round {results.round}")
        runs[results.crawler_name] = CrawlerRun(
            name=results.crawler_name,
            results=results,
            events=events,
            finished=finished,
        )
        if results.round not in seeds:
            seeds[results.round] = _seeds_for(path)

    rounds = []
    for round_number in sorted(grouped):
        result = RoundResult(round=round_number, seeds=seeds[round_number], per_crawler=dict(grouped[round_number]))
        rounds.append(with_winner(result))
    logging.info(f"Loaded {len(rounds)} rounds from {len(paths)} results files")
    return rounds
