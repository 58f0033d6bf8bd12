"""The performance results file written for every crawler and round."""
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable
from urllib.parse import quote, urldefrag, urlsplit, urlunsplit

from warc_core import (NotHttpResponseError, WarcRecord, parse_http_response, split_http_response,
                       surt_canonicalize)

from .categories import ResourceCategory, classify_resource
from .references import extract_references

RESULTS_KEYS = (
    "crawler_name",
    "round",
    "pages_archived",
    "speedrun_seconds",
    "resources_404",
    "resources_other_4xx_5xx",
    "missing_by_type",
)
COUNTER_KEYS = ("pages_archived", "resources_404", "resources_other_4xx_5xx")
CATEGORY_VALUES = {category.value for category in ResourceCategory}
URI_SAFE_CHARACTERS = "/%:@!$&'()*+,;=-._~"


class MissingRoundBoundaryError(ValueError):
    pass


class ResultsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PerformanceResults:
    crawler_name: str
    round: int
    pages_archived: int
    speedrun_seconds: float
    resources_404: int = 0
    resources_other_4xx_5xx: int = 0
    # category value -> count; absent categories mean zero
    missing_by_type: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "crawler_name": self.crawler_name,
            "round": self.round,
            "pages_archived": self.pages_archived,
            "speedrun_seconds": self.speedrun_seconds,
            "resources_404": self.resources_404,
            "resources_other_4xx_5xx": self.resources_other_4xx_5xx,
            "missing_by_type": {key: self.missing_by_type[key] for key in sorted(self.missing_by_type)
                                if self.missing_by_type[key]},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "PerformanceResults":
        if not isinstance(data, dict):
            raise ResultsFormatError("results document must be a JSON object")
        missing_keys = [key for key in RESULTS_KEYS if key not in data]
        if missing_keys:
            raise ResultsFormatError(f"results document lacks keys: {', '.join(missing_keys)}")

        name = data["crawler_name"]
        if not isinstance(name, str) or not name:
            raise ResultsFormatError("crawler_name must be a non-empty string")
        round_number = data["round"]
        if isinstance(round_number, bool) or not isinstance(round_number, int) or round_number < 1:
            raise ResultsFormatError(f"round must be a positive integer, got {round_number!r}")
        for key in COUNTER_KEYS:
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ResultsFormatError(f"{key} must be a non-negative integer, got {value!r}")
        seconds = data["speedrun_seconds"]
        if isinstance(seconds, bool) or not isinstance(seconds, (int, float)) or seconds < 0:
            raise ResultsFormatError(f"speedrun_seconds must be a non-negative number, got {seconds!r}")
        missing = data["missing_by_type"]
        if not isinstance(missing, dict):
            raise ResultsFormatError("missing_by_type must be an object")
        for key, value in missing.items():
            if key not in CATEGORY_VALUES:
                raise ResultsFormatError(f"missing_by_type has unknown category {key!r}")
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise ResultsFormatError(f"missing_by_type[{key}] must be a non-negative integer")

        return cls(
            crawler_name=name,
            round=round_number,
            pages_archived=data["pages_archived"],
            speedrun_seconds=float(seconds),
            resources_404=data["resources_404"],
            resources_other_4xx_5xx=data["resources_other_4xx_5xx"],
            missing_by_type=dict(missing),
        )

    @classmethod
    def from_json(cls, text: str) -> "PerformanceResults":
        try:
            data = json.loads(text)
        except ValueError as e:
            raise ResultsFormatError(f"results file is not valid JSON: {e}")
        return cls.from_dict(data)


def results_filename(crawler_name: str, round_number: int) -> str:
    return f"results-{crawler_name}-round{round_number}.json"


def write_results(results: PerformanceResults, path) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(results.to_json())


def load_results(path) -> PerformanceResults:
    with open(path, "r", encoding="utf-8") as stream:
        try:
            return PerformanceResults.from_json(stream.read())
        except ResultsFormatError as e:
            raise ResultsFormatError(f"{path}: {e}")


def _boundary(events, kind, pick_last=False):
    matches = [event.at for event in events if event.kind == kind]
    if not matches:
        return None
    return matches[-1] if pick_last else matches[0]


def capture_key(uri: str) -> str:
    """Comparison key for captured and referenced URIs; equal for case, port, www. and escaping variants."""
    try:
        parts = urlsplit(uri)
        escaped = urlunsplit((parts.scheme, parts.netloc, quote(parts.path, safe=URI_SAFE_CHARACTERS),
                              quote(parts.query, safe=URI_SAFE_CHARACTERS + "?"), ""))
        return surt_canonicalize(escaped)
    except ValueError:
        return uri


def compute_performance_results(records: Iterable[WarcRecord], crawl_log, crawler_name: str, round: int,
                                round_start=None, round_finish=None) -> PerformanceResults:
    """Builds the results file content for one crawler and round.

    A reference is missing when an archived 2xx html/css payload points at it
    and no 2xx response or revisit record exists for it. A 404 capture of a
    referenced URI is therefore counted both in resources_404 and as missing.
    URIs are matched by capture_key; missing URIs are deduplicated across pages.
    """
    from race.timing import compute_speedrun_time  # race imports this module

    events = list(crawl_log)
    start = round_start or _boundary(events, "round_start")
    finish = round_finish or _boundary(events, "round_finish", pick_last=True)
    if start is None or finish is None:
        absent = "round_start" if start is None else "round_finish"
        raise MissingRoundBoundaryError(
            f"crawl log for {crawler_name} round {round} has no {absent} event; "
            f"pass explicit round_start/round_finish timestamps")
    speedrun_seconds = compute_speedrun_time(start, finish)
    pages_archived = sum(1 for event in events if event.kind == "page_complete")

    resources_404 = 0
    resources_other = 0
    captured = set()
    referenced = set()
    for record in records:
        if not record.target_uri:
            continue
        uri = urldefrag(record.target_uri)[0]
        if record.record_type == "revisit":
            captured.add(uri)
            continue
        if record.record_type != "response":
            continue
        try:
            meta = parse_http_response(record.payload)
        except NotHttpResponseError as e:
            logging.warning(f"Ignoring response record {record.record_id} for {uri}: {e}")
            continue

        if meta.status_code == 404:
            resources_404 += 1
        elif 400 <= meta.status_code <= 599:
            resources_other += 1
        if not 200 <= meta.status_code <= 299:
            continue
        captured.add(uri)
        category = classify_resource(meta.declared_content_type, uri)
        if category in (ResourceCategory.HTML, ResourceCategory.CSS):
            body = split_http_response(record.payload)[1]
            referenced |= extract_references(body, category, record.target_uri)

    captured_keys = {capture_key(uri) for uri in captured}
    missing = sorted(uri for uri in referenced if capture_key(uri) not in captured_keys)
    for uri in missing:
        logging.debug(f"Missing resource for {crawler_name} round {round}: {uri}")
    missing_by_type = Counter(classify_resource(None, uri).value for uri in missing)

    logging.info(f"Performance results for {crawler_name} round {round}: pages archived {pages_archived}, "
                 f"404s {resources_404}, other 4xx/5xx {resources_other}, missing {len(missing)}, "
                 f"speedrun {speedrun_seconds:.3f} seconds")
    return PerformanceResults(
        crawler_name=crawler_name,
        round=round,
        pages_archived=pages_archived,
        speedrun_seconds=speedrun_seconds,
        resources_404=resources_404,
        resources_other_4xx_5xx=resources_other,
        missing_by_type=dict(sorted(missing_by_type.items())),
    )
