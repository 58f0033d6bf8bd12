import math
from datetime import datetime


class ClockSkewError(ValueError):
    """Raised when a finish timestamp precedes the round start."""


def compute_speedrun_time(start: datetime, finish: datetime) -> float:
    """finish - start in seconds, keeping millisecond resolution."""
    if finish < start:
        raise ClockSkewError(f"finish {finish.isoformat()} is earlier than round start {start.isoformat()}")
    return round((finish - start).total_seconds(), 3)


def format_hms(seconds: float) -> str:
    """H:MM:SS rounded to the nearest second (1173.6 -> 0:19:34)."""
    total = int(math.floor(seconds + 0.5))
    hours, remainder = divmod(total, 3600)
    minutes, secs = divmod(remainder, 60)
    return f"{hours}:{minutes:02d}:{secs:02d}"


def parse_hms(value: str) -> float:
    """Inverse of format_hms for H:MM:SS or MM:SS strings."""
    parts = [int(part) for part in value.strip().split(":")]
    if not 2 <= len(parts) <= 3 or any(part < 0 for part in parts):
        raise ValueError(f"not an H:MM:SS duration: {value!r}")
    seconds = 0
    for part in parts:
        seconds = seconds * 60 + part
    return float(seconds)
