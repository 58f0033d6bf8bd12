import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

from warc_core import CdxjEntry

from .categories import classify_resource

STATUS_CLASSES = ("2xx", "3xx", "4xx", "5xx", "other")


@dataclass(frozen=True)
class CdxSummary:
    total_captures: int
    by_status_class: Dict[str, int] = field(default_factory=dict)
    by_category: Dict[str, int] = field(default_factory=dict)
    first_capture: Optional[str] = None
    last_capture: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "total_captures": self.total_captures,
            "by_status_class": {key: self.by_status_class[key] for key in STATUS_CLASSES if key in self.by_status_class},
            "by_category": dict(sorted(self.by_category.items())),
            "first_capture": self.first_capture,
            "last_capture": self.last_capture,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def status_class(status: int) -> str:
    if 200 <= status <= 599:
        return f"{status // 100}xx"
    return "other"


def summarize_cdx(entries: Iterable[CdxjEntry]) -> CdxSummary:
    statuses = Counter()
    categories = Counter()
    timestamps = []
    for entry in entries:
        statuses[status_class(entry.status)] += 1
        categories[classify_resource(entry.mime, entry.original_url).value] += 1
        timestamps.append(entry.timestamp14)
    return CdxSummary(
        total_captures=len(timestamps),
        by_status_class=dict(statuses),
        by_category=dict(categories),
        first_capture=min(timestamps) if timestamps else None,
        last_capture=max(timestamps) if timestamps else None,
    )
