import glob
import logging
import os
import subprocess
import time
from dataclasses import dataclass, field
from typing import List, Optional

from metrics import compute_performance_results, write_results
from warc_core import WarcReader, WarcRecord, WarcStreamError

from .adapters import AdapterConfigError, CrawlerAdapter
from .events import (ERROR, PAGE_COMPLETE, ROUND_FINISH, ROUND_START, EventTail, ProgressEvent,
                     format_event_time, now_utc, write_events)
from .rounds import (EVENTS_FILE, RESULTS_FILE, ROUND_SUMMARY_FILE, CrawlerRun, RoundResult, with_winner,
                     write_round_summary)
from .seeds import write_seed_list

POLL_INTERVAL_SECONDS = float(os.environ.get("SPEEDRUN_POLL_INTERVAL_SECONDS", "0.05"))
EXIT_GRACE_SECONDS = 5.0
WARC_PATTERNS = ("*.warc", "*.warc.gz")


class RoundError(ValueError):
    pass


def round_directory(workdir, round_number: int) -> str:
    return os.path.join(os.fspath(workdir), "rounds", f"round-{round_number}")


def salvage_warc_records(paths, crawler_name: str = "") -> List[WarcRecord]:
    """Reads every file in turn, keeping the records that precede damage in a file."""
    records = []
    for path in paths:
        before = len(records)
        try:
            with open(path, "rb") as stream:
                for record in WarcReader(stream, filename=os.path.basename(path)):
                    records.append(record)
        except (WarcStreamError, OSError) as e:
            logging.error(f"WARC output of {crawler_name} is damaged in {path}, keeping {len(records) - before} "
                          f"records read before it: {type(e).__name__}: {e}")
    return records


@dataclass
class _CrawlerSlot:
    adapter: CrawlerAdapter
    directory: str
    process: Optional[subprocess.Popen] = None
    tail: Optional[EventTail] = None
    events: List[ProgressEvent] = field(default_factory=list)
    deadline: float = 0.0
    finish: Optional[ProgressEvent] = None
    stopped_at: Optional[object] = None
    exit_code: Optional[int] = None
    timed_out: bool = False
    failed: bool = False

    @property
    def name(self) -> str:
        return self.adapter.name

    @property
    def events_file(self) -> str:
        return os.path.join(self.directory, EVENTS_FILE)

    @property
    def warc_dir(self) -> str:
        return os.path.join(self.directory, "warcs")

    def launch(self, seeds_file: str):
        command = self.adapter.render_command(seeds_file, self.warc_dir, self.events_file)
        logging.info(f"Launching crawler {self.name}: {' '.join(command)}")
        log_path = os.path.join(self.directory, "crawler.log")
        try:
            with open(log_path, "wb") as log_stream:
                self.process = subprocess.Popen(command, stdout=log_stream, stderr=subprocess.STDOUT)
        except OSError as e:
            logging.error(f"Crawler {self.name} could not be launched: {type(e).__name__}: {e}")
            self.failed = True
            self.stopped_at = now_utc()
            return
        self.tail = EventTail(self.events_file)
        self.deadline = time.monotonic() + self.adapter.timeout_seconds

    def drain(self):
        for event in self.tail.poll():
            self.events.append(event)
            if event.kind == PAGE_COMPLETE:
                logging.info(f"Crawler {self.name}: {event.pages_so_far} pages archived, current {event.uri}")
            elif event.kind == ERROR:
                logging.warning(f"Crawler {self.name} reported an error: {event.message}")
            elif event.kind == ROUND_FINISH and self.finish is None:
                self.finish = event
                self.stopped_at = event.at
                logging.info(f"Crawler {self.name} finished at {format_event_time(event.at)}")

    def check(self) -> bool:
        """Returns True while the crawler is still racing."""
        self.drain()
        if self.finish is not None:
            return False
        code = self.process.poll()
        if code is not None:
            self.drain()
            self.exit_code = code
            if self.finish is None:
                self.stopped_at = now_utc()
                if code != 0:
                    self.failed = True
                    logging.error(f"Crawler {self.name} exited with code {code} before finishing")
                else:
                    logging.warning(f"Crawler {self.name} exited without a round_finish event")
            return False
        if time.monotonic() > self.deadline:
            self.stopped_at = now_utc()
            self.timed_out = True
            logging.warning(f"Crawler {self.name} timed out after {self.adapter.timeout_seconds} seconds; killing it")
            self.process.kill()
            self.exit_code = self.process.wait()
            self.drain()
            return False
        return True

    def reap(self):
        if self.process is None or self.exit_code is not None:
            return
        try:
            self.exit_code = self.process.wait(timeout=EXIT_GRACE_SECONDS)
        except subprocess.TimeoutExpired:
            logging.warning(f"Crawler {self.name} still running after round_finish; killing it")
            self.process.kill()
            self.exit_code = self.process.wait()

    def abandon(self):
        if self.process is None or self.exit_code is not None:
            return
        if self.process.poll() is None:
            logging.error(f"Killing crawler {self.name} after the round was interrupted")
            self.process.kill()
        self.exit_code = self.process.wait()

    def normalized_events(self, round_start) -> List[ProgressEvent]:
        kept = [event for event in self.events if event.kind != ROUND_START]
        if self.finish is None:
            kept = [event for event in kept if event.kind != ROUND_FINISH]
        return [ProgressEvent(kind=ROUND_START, at=round_start)] + kept

    def analyse(self, round_number: int, round_start) -> CrawlerRun:
        events = self.normalized_events(round_start)
        write_events(events, self.events_file)
        warc_paths = sorted({path for pattern in WARC_PATTERNS
                             for path in glob.glob(os.path.join(self.warc_dir, "**", pattern), recursive=True)})
        records = salvage_warc_records(warc_paths, self.name)

        finished = self.finish is not None
        stop = None if finished else max(self.stopped_at or round_start, round_start)
        results = compute_performance_results(records, events, self.name, round_number, round_finish=stop)
        write_results(results, os.path.join(self.directory, RESULTS_FILE))
        return CrawlerRun(
            name=self.name,
            results=results,
            events=tuple(events),
            warc_paths=tuple(warc_paths),
            finished=finished,
            timed_out=self.timed_out,
            exit_code=self.exit_code,
        )


def run_round(adapters: List[CrawlerAdapter], seeds: List[str], round: int, workdir) -> RoundResult:
    """Races every adapter over the same seeds from one shared start instant.

    Each crawler gets rounds/round-<N>/<name>/ holding its events.jsonl,
    warcs/ output, crawler.log and results.json. round.json summarises
    the round. Unfinished crawlers are analysed up to the moment they
    stopped.
    """
    if len(adapters) < 2:
        raise AdapterConfigError(f"a round needs at least two crawlers, got {len(adapters)}")
    names = [adapter.name for adapter in adapters]
    if len(set(names)) != len(names):
        raise AdapterConfigError(f"crawler names must be unique within a round: {names}")
    if not seeds:
        raise RoundError(f"round {round} has no seeds")

    directory = round_directory(workdir, round)
    seeds_file = os.path.join(directory, "seeds.txt")
    write_seed_list(seeds, seeds_file)
    slots = []
    for adapter in adapters:
        slot = _CrawlerSlot(adapter=adapter, directory=os.path.join(directory, adapter.name))
        os.makedirs(slot.warc_dir, exist_ok=True)
        if os.path.exists(slot.events_file):
            os.remove(slot.events_file)
        slots.append(slot)

    started = time.time()
    round_start = now_utc()
    logging.info(f"Round {round} started at {format_event_time(round_start)} with "
                 f"{len(slots)} crawlers and {len(seeds)} seeds")
    for slot in slots:
        slot.launch(seeds_file)

    try:
        racing = [slot for slot in slots if slot.process is not None]
        while racing:
            racing = [slot for slot in racing if slot.check()]
            if racing:
                time.sleep(POLL_INTERVAL_SECONDS)
        for slot in slots:
            slot.reap()
    finally:
        for slot in slots:
            slot.abandon()

    per_crawler = {}
    for slot in slots:
        try:
            per_crawler[slot.name] = slot.analyse(round, round_start)
        except ValueError as e:
            logging.error(f"Results for {slot.name} round {round} could not be computed: {type(e).__name__}: {e}")
            slot.failed = True

    result = with_winner(RoundResult(round=round, seeds=tuple(seeds), per_crawler=per_crawler))
    write_round_summary(result, os.path.join(directory, ROUND_SUMMARY_FILE))

    failed = [slot.name for slot in slots if slot.failed]
    duration = time.time() - started
    logging.info(f"Round {round} finished. Winner: {result.winner or 'none'}. Failed: {len(failed)}. "
                 f"Duration: {duration:.2f} seconds.")
    if len(failed) == len(slots):
        raise RoundError(f"every crawler failed in round {round}: {', '.join(failed)}")
    return result
