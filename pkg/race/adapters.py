import json
import os
import re
import shlex
import string
import sys
from dataclasses import dataclass
from typing import List, Tuple

REQUIRED_PLACEHOLDERS = ("seeds_file", "output_dir", "events_file")
OPTIONAL_PLACEHOLDERS = ("python",)
DEFAULT_TIMEOUT_SECONDS = float(os.environ.get("SPEEDRUN_TIMEOUT_SECONDS", "1800"))
SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class AdapterConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CrawlerAdapter:
    name: str
    command_template: str
    timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS
    contributors: Tuple[str, ...] = ()

    def __post_init__(self):
        if not SAFE_NAME.match(self.name or ""):
            raise AdapterConfigError(f"crawler name {self.name!r} must be usable as a directory name")
        try:
            placeholders = {name for _, name, _, _ in string.Formatter().parse(self.command_template) if name is not None}
        except ValueError as e:
            raise AdapterConfigError(f"adapter {self.name}: bad command template: {e}")
        absent = [name for name in REQUIRED_PLACEHOLDERS if name not in placeholders]
        if absent:
            raise AdapterConfigError(f"adapter {self.name}: command template lacks {', '.join('{' + n + '}' for n in absent)}")
        unknown = placeholders - set(REQUIRED_PLACEHOLDERS) - set(OPTIONAL_PLACEHOLDERS)
        if unknown:
            raise AdapterConfigError(f"adapter {self.name}: unknown placeholders {sorted(unknown)}")
        if self.timeout_seconds <= 0:
            raise AdapterConfigError(f"adapter {self.name}: timeout_seconds must be positive")

    def render_command(self, seeds_file, output_dir, events_file) -> List[str]:
        # split before substituting so paths with spaces stay single arguments
        values = {
            "seeds_file": os.fspath(seeds_file),
            "output_dir": os.fspath(output_dir),
            "events_file": os.fspath(events_file),
            "python": sys.executable,
        }
        return [token.format(**values) for token in shlex.split(self.command_template)]


def adapter_from_dict(data: dict) -> CrawlerAdapter:
    try:
        return CrawlerAdapter(
            name=data["name"],
            command_template=data["command_template"],
            timeout_seconds=float(data.get("timeout_seconds", DEFAULT_TIMEOUT_SECONDS)),
            contributors=tuple(data.get("contributors", ())),
        )
    except KeyError as e:
        raise AdapterConfigError(f"adapter definition lacks {e}")


def load_adapter(path) -> CrawlerAdapter:
    with open(path, "r", encoding="utf-8") as stream:
        try:
            data = json.load(stream)
        except ValueError as e:
            raise AdapterConfigError(f"{path}: not valid JSON: {e}")
    return adapter_from_dict(data)
