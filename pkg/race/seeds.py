import os
from typing import List
from urllib.parse import urlsplit


class SeedListError(ValueError):
    def __init__(self, path, line_number, value):
        super().__init__(f"{path}:{line_number}: not an absolute URI: {value!r}")
        self.line_number = line_number


def load_seed_list(path) -> List[str]:
    """One URI per line; blank lines and '#' comments are ignored, duplicates kept."""
    seeds = []
    with open(path, "r", encoding="utf-8") as stream:
        for line_number, line in enumerate(stream, start=1):
            value = line.strip()
            if not value or value.startswith("#"):
                continue
            parts = urlsplit(value)
            if not parts.scheme or not parts.netloc or any(char.isspace() for char in value):
                raise SeedListError(path, line_number, value)
            seeds.append(value)
    return seeds


def write_seed_list(seeds, path) -> None:
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        for seed in seeds:
            stream.write(seed + "\n")
