"""Command-line entry point: python -m cli <command> ..."""
import argparse
import glob
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import requests

from gamemap import (RankingError, assign_perks, digests_in_rank_order, emit_automation_script, load_layout,
                     load_profile, patch_roster, rank_crawlers, write_automation_script, write_config)
from metrics import compute_performance_results, summarize_cdx, write_results
from race import (build_leaderboard, is_complete, load_adapter, load_round_results, load_seed_list, read_events,
                  render_json, render_markdown, run_round)
from simcrawler import SITE_DIR, SpeedProfile, load_faults, run_sim_crawl, serve_fixture
from warc_core import index_warc_files, read_cdxj, read_warc_files, write_cdxj

LOG_LEVEL = os.environ.get("SPEEDRUN_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(message)s"
COMMANDS = ("race", "analyze", "cdx-index", "cdx-summary", "gamemap", "leaderboard", "sim-serve", "sim-crawl",
            "publish")


@dataclass(frozen=True)
class CommandPlan:
    command: str
    options: Dict[str, Any] = field(default_factory=dict)
    log_level: str = LOG_LEVEL


def _non_negative(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {number}")
    return number


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {number}")
    return number


def _port(value: str) -> int:
    number = int(value)
    if not 0 <= number <= 65535:
        raise argparse.ArgumentTypeError(f"port must be in 0-65535, got {number}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m cli", description="Web archiving speedrun toolkit")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    race = commands.add_parser("race", help="run speedrun rounds between crawler adapters")
    race.add_argument("--seeds", required=True, help="seed list, one URI per line")
    race.add_argument("--adapter", action="append", required=True, help="crawler adapter JSON (repeatable)")
    race.add_argument("--rounds", type=_positive, default=1)
    race.add_argument("--workdir", required=True)

    analyze = commands.add_parser("analyze", help="compute performance results for one crawler and round")
    analyze.add_argument("--warc", action="append", required=True, help="WARC file (repeatable)")
    analyze.add_argument("--events", required=True, help="events.jsonl of the crawl")
    analyze.add_argument("--name", required=True, help="crawler name")
    analyze.add_argument("--round", type=_positive, required=True)
    analyze.add_argument("--out", required=True, help="results JSON to write")

    cdx_index = commands.add_parser("cdx-index", help="write a sorted CDXJ index for WARC files")
    cdx_index.add_argument("--warc", action="append", required=True)
    cdx_index.add_argument("--out", required=True, help="CDXJ file to write, '-' for stdout")

    cdx_summary = commands.add_parser("cdx-summary", help="summarize a CDXJ index")
    cdx_summary.add_argument("cdxj")
    cdx_summary.add_argument("--out", help="also write the summary JSON here")

    gamemap = commands.add_parser("gamemap", help="turn round results into a game configuration")
    gamemap.add_argument("--results", action="append", required=True, help="results JSON (repeatable)")
    gamemap.add_argument("--profile", required=True, help="profile JSON or shipped profile name")
    gamemap.add_argument("--adapter", action="append", default=[], help="adapter JSON supplying contributors")
    gamemap.add_argument("--out-config", required=True)
    gamemap.add_argument("--out-script", help="JSON-lines UI action script to write")
    gamemap.add_argument("--roster", help="roster text file to patch")
    gamemap.add_argument("--layout", help="roster layout descriptor JSON")
    gamemap.add_argument("--out-roster", help="patched roster to write")

    leaderboard = commands.add_parser("leaderboard", help="render the multi-round leaderboard")
    leaderboard.add_argument("results", nargs="+", help="results files or glob patterns")
    leaderboard.add_argument("--format", choices=("markdown", "json"), default="markdown")
    leaderboard.add_argument("--out", help="also write the rendering here")

    sim_serve = commands.add_parser("sim-serve", help="serve the fixture site with fault injection")
    sim_serve.add_argument("--site", default=SITE_DIR)
    sim_serve.add_argument("--faults", help="fault rules JSON")
    sim_serve.add_argument("--port", type=_port, default=8000)
    sim_serve.add_argument("--duration", type=float, help="stop after this many seconds")

    sim_crawl = commands.add_parser("sim-crawl", help="run the simulated crawler over a seed list")
    sim_crawl.add_argument("--seeds", required=True)
    sim_crawl.add_argument("--delay-ms", type=_non_negative, default=0)
    sim_crawl.add_argument("--jitter-ms", type=_non_negative, default=0)
    sim_crawl.add_argument("--seed", type=int, default=0, help="jitter random seed")
    sim_crawl.add_argument("--out", required=True, help="directory for the WARC output")
    sim_crawl.add_argument("--events", required=True, help="events file to append to")

    publish = commands.add_parser("publish", help="upload results files to Table Storage")
    publish.add_argument("results", nargs="+")
    return parser


def build_plan(argv: Optional[List[str]] = None) -> CommandPlan:
    """Parses argv; usage errors exit with status 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gamemap":
        roster_options = [args.roster, args.layout, args.out_roster]
        if any(roster_options) and not all(roster_options):
            parser.error("--roster, --layout and --out-roster must be given together")
    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else LOG_LEVEL
    options = {key: value for key, value in vars(args).items() if key not in ("command", "verbose", "quiet")}
    return CommandPlan(command=args.command, options=options, log_level=level)


def _expand(patterns) -> List[str]:
    paths = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern, recursive=True)) if glob.has_magic(pattern) else [pattern]
        for path in matches:
            if path not in paths:
                paths.append(path)
    if not paths:
        raise ValueError(f"no results files match {' '.join(patterns)}")
    return paths


def _write_text(text: str, path) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)


def _race(options) -> None:
    seeds = load_seed_list(options["seeds"])
    adapters = [load_adapter(path) for path in options["adapter"]]
    rounds = []
    for number in range(1, options["rounds"] + 1):
        result = run_round(adapters, seeds, number, options["workdir"])
        rounds.append(result)
        print(f"Round {number}: winner {result.winner or 'none'}")
    markdown = render_markdown(build_leaderboard(rounds))
    _write_text(markdown, os.path.join(options["workdir"], "leaderboard.md"))
    print(markdown, end="")


def _analyze(options) -> None:
    records = read_warc_files(options["warc"])
    events = read_events(options["events"])
    results = compute_performance_results(records, events, options["name"], options["round"])
    write_results(results, options["out"])
    print(results.to_json(), end="")


def _cdx_index(options) -> None:
    entries = index_warc_files(options["warc"])
    if options["out"] == "-":
        write_cdxj(entries, sys.stdout)
        return
    directory = os.path.dirname(options["out"])
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(options["out"], "w", encoding="utf-8", newline="\n") as stream:
        count = write_cdxj(entries, stream)
    print(f"Indexed {count} captures into {options['out']}")


def _cdx_summary(options) -> None:
    summary = summarize_cdx(read_cdxj(options["cdxj"]))
    if options.get("out"):
        _write_text(summary.to_json(), options["out"])
    print(summary.to_json(), end="")


def _gamemap(options) -> None:
    rounds = load_round_results(options["results"])
    if len(rounds) != 1:
        raise RankingError(f"gamemap needs results from one round, got rounds {[r.round for r in rounds]}")
    result = rounds[0]
    unfinished = {name for name, run in result.per_crawler.items() if not is_complete(run, len(result.seeds))}
    results = [run.results for run in result.per_crawler.values()]
    ranking = rank_crawlers(results, unfinished)

    profile = load_profile(options["profile"])
    contributors = {adapter.name: adapter.contributors for adapter in map(load_adapter, options["adapter"])}
    config = assign_perks(ranking, profile, contributors, digests_in_rank_order(ranking, results))
    write_config(config, options["out_config"])
    print(f"Wrote {profile.game_name} configuration for {len(config.assignments)} crawlers to {options['out_config']}")

    if options.get("out_script"):
        actions = emit_automation_script(config, profile)
        write_automation_script(actions, options["out_script"])
        print(f"Wrote {len(actions)} UI actions to {options['out_script']}")
    if options.get("roster"):
        with open(options["roster"], "r", encoding="utf-8", newline="") as stream:
            roster_text = stream.read()
        patched = patch_roster(roster_text, load_layout(options["layout"]), config)
        with open(options["out_roster"], "w", encoding="utf-8", newline="") as stream:
            stream.write(patched)
        print(f"Wrote patched roster to {options['out_roster']}")


def _leaderboard(options) -> None:
    board = build_leaderboard(load_round_results(_expand(options["results"])))
    text = render_json(board) if options["format"] == "json" else render_markdown(board)
    if options.get("out"):
        _write_text(text, options["out"])
    print(text, end="")


def _sim_serve(options) -> None:
    faults = load_faults(options["faults"]) if options.get("faults") else []
    server = serve_fixture(options["site"], faults, options["port"])
    print(f"Serving {options['site']} at {server.url}", flush=True)
    try:
        if options.get("duration") is not None:
            time.sleep(options["duration"])
        else:
            while True:
                time.sleep(1)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


def _sim_crawl(options) -> None:
    seeds = load_seed_list(options["seeds"])
    profile = SpeedProfile(per_page_delay_ms=options["delay_ms"], jitter_ms=options["jitter_ms"], seed=options["seed"])
    result = run_sim_crawl(seeds, profile, options["out"], options["events"])
    print(json.dumps({"warc_paths": list(result.warc_paths), "event_count": result.event_count,
                      "pages_archived": result.pages_archived}))


def _publish(options) -> None:
    from results_store import get_table_client, publish_results

    table_client = get_table_client()
    published = 0
    for result in load_round_results(_expand(options["results"])):
        for run in result.per_crawler.values():
            publish_results(run.results, is_complete(run, len(result.seeds)), table_client=table_client)
            published += 1
    print(f"Published {published} results")


HANDLERS = {
    "race": _race,
    "analyze": _analyze,
    "cdx-index": _cdx_index,
    "cdx-summary": _cdx_summary,
    "gamemap": _gamemap,
    "leaderboard": _leaderboard,
    "sim-serve": _sim_serve,
    "sim-crawl": _sim_crawl,
    "publish": _publish,
}


def execute(plan: CommandPlan) -> int:
    """Runs a plan; 0 on success, 1 on operational errors."""
    started = time.time()
    try:
        HANDLERS[plan.command](plan.options)
    except (ValueError, OSError, requests.exceptions.RequestException) as e:
        logging.error(f"{plan.command} failed: {type(e).__name__}: {e}")
        return 1
    logging.debug(f"{plan.command} finished. Duration: {time.time() - started:.2f} seconds.")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    plan = build_plan(argv)
    logging.basicConfig(level=plan.log_level.upper(), format=LOG_FORMAT, stream=sys.stderr)
    return execute(plan)
