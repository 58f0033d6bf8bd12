"""Static fixture site server with per-path fault injection."""
import fnmatch
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from functools import partial
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Sequence
from urllib.parse import urlsplit

SITE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "site")
MEDIA_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".css": "text/css",
    ".js": "application/javascript",
    ".json": "application/json",
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".mp3": "audio/mpeg",
    ".mp4": "video/mp4",
}


class FixtureServerError(ValueError):
    pass


@dataclass(frozen=True)
class FaultRule:
    path_pattern: str
    status: Optional[int] = None
    drop: bool = False
    delay_ms: Optional[int] = None

    def __post_init__(self):
        behaviours = sum([self.status is not None, self.drop, self.delay_ms is not None])
        if behaviours != 1:
            raise FixtureServerError(f"fault rule for {self.path_pattern} needs exactly one of status, drop, delay_ms")
        if self.status is not None and not 100 <= self.status <= 599:
            raise FixtureServerError(f"fault status {self.status} outside 100-599")
        if self.delay_ms is not None and self.delay_ms < 0:
            raise FixtureServerError(f"fault delay {self.delay_ms} must be non-negative")

    def matches(self, path: str) -> bool:
        return fnmatch.fnmatchcase(path, self.path_pattern)


def fault_from_dict(data: dict) -> FaultRule:
    if "path" not in data:
        raise FixtureServerError(f"fault rule {data!r} lacks a path")
    return FaultRule(
        path_pattern=data["path"],
        status=data.get("status"),
        drop=bool(data.get("drop", False)),
        delay_ms=data.get("delay_ms"),
    )


def load_faults(path) -> list:
    with open(path, "r", encoding="utf-8") as stream:
        try:
            data = json.load(stream)
        except ValueError as e:
            raise FixtureServerError(f"{path}: not valid JSON: {e}")
    if not isinstance(data, list):
        raise FixtureServerError(f"{path}: fault rules must be a JSON list")
    return [fault_from_dict(item) for item in data]


class FixtureRequestHandler(SimpleHTTPRequestHandler):
    extensions_map = {**SimpleHTTPRequestHandler.extensions_map, **MEDIA_TYPES}

    def __init__(self, *args, faults: Sequence[FaultRule] = (), **kwargs):
        self.faults = faults
        super().__init__(*args, **kwargs)

    def _fault(self) -> Optional[FaultRule]:
        path = urlsplit(self.path).path
        for rule in self.faults:
            if rule.matches(path):
                return rule
        return None

    def _apply_fault(self) -> bool:
        """Returns True when the fault produced the whole response."""
        rule = self._fault()
        if rule is None:
            return False
        if rule.delay_ms is not None:
            time.sleep(rule.delay_ms / 1000)
            return False
        if rule.drop:
            logging.debug(f"Dropping connection for {self.path}")
            self.close_connection = True
            return True
        self.send_response(rule.status)
        self.send_header("Content-Type", "text/plain")
        self.send_header("Content-Length", "0")
        self.end_headers()
        return True

    def do_GET(self):
        if not self._apply_fault():
            super().do_GET()

    def do_HEAD(self):
        if not self._apply_fault():
            super().do_HEAD()

    def log_message(self, format, *args):
        logging.debug(f"Fixture server: {self.address_string()} {format % args}")


class FixtureServer:
    def __init__(self, site_dir=SITE_DIR, faults: Sequence[FaultRule] = (), port: int = 0, host: str = "127.0.0.1"):
        self.site_dir = os.fspath(site_dir)
        self.faults = tuple(faults)
        self.host = host
        self.requested_port = port
        self._server = None
        self._thread = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}/"

    def start(self) -> "FixtureServer":
        if not os.path.isdir(self.site_dir):
            raise FixtureServerError(f"fixture site directory {self.site_dir} does not exist")
        handler = partial(FixtureRequestHandler, directory=self.site_dir, faults=self.faults)
        try:
            self._server = ThreadingHTTPServer((self.host, self.requested_port), handler)
        except OSError as e:
            raise FixtureServerError(f"cannot listen on {self.host}:{self.requested_port}: {e}")
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, name="fixture-server", daemon=True)
        self._thread.start()
        logging.info(f"Fixture server serving {self.site_dir} at {self.url} with {len(self.faults)} fault rules")
        return self

    def shutdown(self):
        if self._server is None:
            return
        self._server.shutdown()
        self._server.server_close()
        self._thread.join()
        self._server = None
        logging.info("Fixture server stopped")

    def __enter__(self):
        return self if self._server else self.start()

    def __exit__(self, *exc):
        self.shutdown()


def serve_fixture(site_dir=SITE_DIR, faults: Sequence[FaultRule] = (), port: int = 0) -> FixtureServer:
    """Starts the fixture server in a background thread; port 0 picks a free port."""
    return FixtureServer(site_dir, faults, port).start()
