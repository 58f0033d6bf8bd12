"""Progress events: the JSON-lines contract between a crawler and the race supervisor."""
import json
import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime
from typing import List, Optional

import pytz

from .timing import compute_speedrun_time

ROUND_START = "round_start"
PAGE_COMPLETE = "page_complete"
ROUND_FINISH = "round_finish"
ERROR = "error"
EVENT_KINDS = (ROUND_START, PAGE_COMPLETE, ROUND_FINISH, ERROR)


def truncate_to_ms(value: datetime) -> datetime:
    return value.replace(microsecond=(value.microsecond // 1000) * 1000)


def now_utc() -> datetime:
    return truncate_to_ms(datetime.now(pytz.utc))


def format_event_time(value: datetime) -> str:
    value = value.astimezone(pytz.utc)
    return value.strftime("%Y-%m-%dT%H:%M:%S.") + f"{value.microsecond // 1000:03d}Z"


def parse_event_time(value: str) -> datetime:
    parsed = datetime.fromisoformat(value.strip().replace("Z", "+00:00"))
    if parsed.tzinfo is None:
        parsed = pytz.utc.localize(parsed)
    return truncate_to_ms(parsed.astimezone(pytz.utc))


@dataclass(frozen=True)
class ProgressEvent:
    kind: str
    at: datetime
    uri: Optional[str] = None
    pages_so_far: int = 0
    message: Optional[str] = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown progress event kind {self.kind!r}")
        if self.kind == PAGE_COMPLETE and not self.uri:
            raise ValueError("page_complete events need a uri")
        if self.pages_so_far < 0:
            raise ValueError(f"pages_so_far must be non-negative, got {self.pages_so_far}")
        if self.at.tzinfo is None:
            raise ValueError("event timestamps must be timezone-aware UTC")

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind,
            "at": format_event_time(self.at),
            "uri": self.uri,
            "pages_so_far": self.pages_so_far,
        }
        if self.message is not None:
            data["message"] = self.message
        return data

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict()) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ProgressEvent":
        return cls(
            kind=data["kind"],
            at=parse_event_time(data["at"]),
            uri=data.get("uri"),
            pages_so_far=int(data.get("pages_so_far", 0)),
            message=data.get("message"),
        )


def parse_event_line(line: str, where: str = "") -> ProgressEvent:
    try:
        return ProgressEvent.from_dict(json.loads(line))
    except (ValueError, KeyError, TypeError) as e:
        raise ValueError(f"malformed progress event{where}: {e}")


def read_events(path) -> List[ProgressEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as stream:
        for line_number, line in enumerate(stream, start=1):
            if line.strip():
                events.append(parse_event_line(line, f" at {path}:{line_number}"))
    return events


def write_events(events, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        for event in events:
            stream.write(event.to_json_line())


class EventWriter:
    """Appends events to a file, flushing each line so a supervisor can tail it."""

    def __init__(self, path):
        self.path = path
        self._stream = open(path, "a", encoding="utf-8", newline="\n")

    def emit(self, kind, uri=None, pages_so_far=0, message=None, at=None) -> ProgressEvent:
        event = ProgressEvent(kind=kind, at=at or now_utc(), uri=uri, pages_so_far=pages_so_far, message=message)
        self._stream.write(event.to_json_line())
        self._stream.flush()
        return event

    def close(self):
        self._stream.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class EventTail:
    """Incrementally reads an events file that another process is appending to."""

    def __init__(self, path):
        self.path = path
        self._position = 0
        self._partial = b""

    def poll(self) -> List[ProgressEvent]:
        if not os.path.exists(self.path):
            return []
        with open(self.path, "rb") as stream:
            stream.seek(self._position)
            chunk = stream.read()
            self._position = stream.tell()
        if not chunk:
            return []
        lines = (self._partial + chunk).split(b"\n")
        self._partial = lines.pop()
        events = []
        for raw in lines:
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                logging.warning(f"Skipping event line in {self.path}: not UTF-8 ({e})")
                continue
            if not line.strip():
                continue
            try:
                events.append(parse_event_line(line, f" in {self.path}"))
            except ValueError as e:
                logging.warning(f"Skipping event line: {e}")
        return events


def check_event_order(events) -> None:
    """Raises ValueError if a crawler's event stream breaks the ordering rules."""
    starts = sum(1 for event in events if event.kind == ROUND_START)
    finishes = sum(1 for event in events if event.kind == ROUND_FINISH)
    if starts != 1:
        raise ValueError(f"expected exactly one round_start event, found {starts}")
    if finishes > 1:
        raise ValueError(f"expected at most one round_finish event, found {finishes}")
    for previous, current in zip(events, events[1:]):
        if current.at < previous.at:
            raise ValueError(f"event at {format_event_time(current.at)} precedes {format_event_time(previous.at)}")
        if current.pages_so_far < previous.pages_so_far:
            raise ValueError(f"pages_so_far decreased from {previous.pages_so_far} to {current.pages_so_far}")


def halfway_split(events, seed_count: int) -> Optional[float]:
    """Seconds from round start to the ceil(n/2)-th completed page, or None."""
    if seed_count <= 0:
        return None
    start = next((event.at for event in events if event.kind == ROUND_START), None)
    pages = [event for event in events if event.kind == PAGE_COMPLETE]
    target = math.ceil(seed_count / 2)
    if start is None or len(pages) < target:
        return None
    return compute_speedrun_time(start, pages[target - 1].at)
