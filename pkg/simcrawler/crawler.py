import logging
import os
import random
import socket
import time
from collections import deque
from dataclasses import dataclass
from typing import List, Sequence, Tuple
from urllib.parse import urldefrag, urljoin, urlsplit

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from metrics import ResourceCategory, classify_resource, extract_references
from race.events import ERROR, PAGE_COMPLETE, ROUND_FINISH, ROUND_START, EventWriter
from warc_core import WarcRecord, WarcWriter, payload_digest

REQUEST_TIMEOUT = float(os.environ.get("SIMCRAWLER_REQUEST_TIMEOUT", "10"))
USER_AGENT = os.environ.get("SIMCRAWLER_USER_AGENT", "speedrun-simcrawler/1.0")
WARC_FILENAME = "simcrawl.warc.gz"
MAX_REDIRECTS = 10
# decoded bodies are archived, so these no longer describe the payload
DROPPED_HEADERS = {"content-encoding", "transfer-encoding", "content-length", "connection"}


class CrawlAbortedError(ValueError):
    pass


@dataclass(frozen=True)
class SpeedProfile:
    per_page_delay_ms: int = 0
    jitter_ms: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.per_page_delay_ms < 0 or self.jitter_ms < 0:
            raise ValueError("per_page_delay_ms and jitter_ms must be non-negative")

    def delays(self, count: int) -> List[float]:
        """Per-page pause in seconds; the same seed always yields the same pauses."""
        rng = random.Random(self.seed)
        return [(self.per_page_delay_ms + (rng.randint(0, self.jitter_ms) if self.jitter_ms else 0)) / 1000
                for _ in range(count)]


@dataclass(frozen=True)
class SimCrawlResult:
    warc_paths: Tuple[str, ...]
    event_count: int
    pages_archived: int
    records_written: int


def create_session() -> requests.Session:
    session = requests.Session()
    # status and read retries would hide injected faults
    retries = Retry(total=3, connect=3, read=0, status=0, redirect=3, backoff_factor=0.1)
    session.mount("http://", HTTPAdapter(max_retries=retries))
    session.mount("https://", HTTPAdapter(max_retries=retries))
    session.headers.update({"User-Agent": USER_AGENT})
    return session


def http_payload(response: requests.Response) -> bytes:
    """Rebuilds the HTTP response block stored in a WARC response record."""
    body = response.content
    lines = [f"HTTP/1.1 {response.status_code} {response.reason or ''}".rstrip()]
    for name, value in response.headers.items():
        if name.lower() not in DROPPED_HEADERS:
            lines.append(f"{name}: {value}")
    lines.append(f"Content-Length: {len(body)}")
    return ("\r\n".join(lines) + "\r\n\r\n").encode("iso-8859-1") + body


def _server_ip(uri: str) -> str:
    host = urlsplit(uri).hostname or ""
    try:
        return socket.gethostbyname(host)
    except OSError:
        return host


def _warcinfo(output_path: str) -> WarcRecord:
    fields = (f"software: {USER_AGENT}\r\n"
              f"format: WARC File Format 1.1\r\n"
              f"filename: {os.path.basename(output_path)}\r\n").encode("utf-8")
    return WarcRecord.build("warcinfo", payload=fields, content_type="application/warc-fields")


class _SimCrawler:
    def __init__(self, session: requests.Session, writer: WarcWriter):
        self.session = session
        self.writer = writer
        self.fetched = set()

    def fetch(self, uri: str) -> Tuple[requests.Response, str]:
        """Fetches uri, following redirects; every hop is archived under its own URI.

        Returns the last response and the URI it was served for.
        """
        for _ in range(MAX_REDIRECTS + 1):
            self.fetched.add(uri)
            response = self.session.get(uri, timeout=REQUEST_TIMEOUT, allow_redirects=False)
            self.archive(uri, response)
            if not response.is_redirect:
                return response, uri
            target = urldefrag(urljoin(uri, response.headers["Location"]))[0]
            if target in self.fetched:
                return response, uri
            logging.debug(f"Following {response.status_code} redirect from {uri} to {target}")
            uri = target
        raise requests.exceptions.TooManyRedirects(f"more than {MAX_REDIRECTS} redirects ending at {uri}")

    def archive(self, uri: str, response: requests.Response):
        payload = http_payload(response)
        self.writer.write(WarcRecord.build(
            "response",
            payload=payload,
            target_uri=uri,
            content_type="application/http; msgtype=response",
            extra_headers=(
                ("WARC-Payload-Digest", payload_digest(response.content)),
                ("WARC-IP-Address", _server_ip(uri)),
            ),
        ))

    def references(self, response: requests.Response, uri: str) -> List[str]:
        if not 200 <= response.status_code <= 299:
            return []
        category = classify_resource(response.headers.get("Content-Type"), uri)
        if category not in (ResourceCategory.HTML, ResourceCategory.CSS):
            return []
        return sorted(extract_references(response.content, category, uri))

    def archive_page(self, seed: str) -> int:
        """Fetches a seed and everything it references; returns the resource failure count."""
        seed = urldefrag(seed)[0]
        if seed in self.fetched:
            return 0
        page, page_uri = self.fetch(seed)
        queue = deque(self.references(page, page_uri))
        failures = 0
        while queue:
            uri = queue.popleft()
            if uri in self.fetched:
                continue
            try:
                response, final_uri = self.fetch(uri)
            except requests.exceptions.RequestException as e:
                failures += 1
                logging.warning(f"Could not fetch {uri}: {type(e).__name__}: {e}")
                continue
            queue.extend(self.references(response, final_uri))
        return failures


def run_sim_crawl(seeds: Sequence[str], profile: SpeedProfile, output_dir, events_file) -> SimCrawlResult:
    """Archives each seed and its references one page at a time, reporting progress events.

    The profile's per-page delay is taken before every seed, so the crawl
    takes at least the sum of the configured delays. A seed that cannot be
    fetched ends the crawl with an error event and no round_finish.
    """
    os.makedirs(output_dir, exist_ok=True)
    warc_path = os.path.join(os.fspath(output_dir), WARC_FILENAME)
    delays = profile.delays(len(seeds))
    session = create_session()
    started = time.time()
    pages = 0
    failures = 0
    with open(warc_path, "wb") as stream, EventWriter(events_file) as events:
        writer = WarcWriter(stream, gzipped=True)
        writer.write(_warcinfo(warc_path))
        crawler = _SimCrawler(session, writer)
        emitted = [events.emit(ROUND_START)]
        for seed, delay in zip(seeds, delays):
            time.sleep(delay)
            try:
                failures += crawler.archive_page(seed)
            except requests.exceptions.RequestException as e:
                emitted.append(events.emit(ERROR, pages_so_far=pages, message=f"seed {seed} failed: {e}"))
                stream.flush()
                logging.error(f"Sim crawl aborted at seed {seed}: {type(e).__name__}: {e}")
                raise CrawlAbortedError(f"seed {seed} could not be fetched: {e}")
            pages += 1
            stream.flush()
            emitted.append(events.emit(PAGE_COMPLETE, uri=seed, pages_so_far=pages))
        emitted.append(events.emit(ROUND_FINISH, pages_so_far=pages))

    duration = time.time() - started
    logging.info(f"Sim crawl finished. Pages: {pages}, records: {writer.records_written}, "
                 f"failed resources: {failures}. Duration: {duration:.3f} seconds.")
    return SimCrawlResult(
        warc_paths=(warc_path,),
        event_count=len(emitted),
        pages_archived=pages,
        records_written=writer.records_written,
    )
