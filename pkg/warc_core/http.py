import base64
import hashlib
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

STATUS_LINE = re.compile(rb"^HTTP/1\.[01][ \t]+(\d{3})(?:[ \t].*)?$")


class NotHttpResponseError(ValueError):
    """Raised when a payload does not start with an HTTP/1.x status line."""


def payload_digest(data: bytes) -> str:
    """sha1 digest in the "sha1:<base32>" form used by WARC and CDX indexes."""
    return "sha1:" + base64.b32encode(hashlib.sha1(data).digest()).decode("ascii")


def media_type(value: Optional[str]) -> Optional[str]:
    """Strips parameters from a Content-Type value; None for empty input."""
    if not value:
        return None
    base = value.split(";", 1)[0].strip().lower()
    return base or None


@dataclass(frozen=True)
class HttpResponseMeta:
    status_code: int
    declared_content_type: Optional[str]
    payload_digest: str
    payload_length: int

    def __post_init__(self):
        if not 100 <= self.status_code <= 599:
            raise NotHttpResponseError(f"HTTP status {self.status_code} outside 100-599")


def split_http_response(payload: bytes) -> Tuple[bytes, bytes]:
    """Splits an archived HTTP response into (head, body) at the blank line."""
    for terminator in (b"\r\n\r\n", b"\n\n"):
        index = payload.find(terminator)
        if index >= 0:
            return payload[:index], payload[index + len(terminator):]
    return payload, b""


def parse_http_headers(head: bytes) -> List[Tuple[str, str]]:
    headers = []
    for line in head.splitlines()[1:]:
        name, separator, value = line.decode("iso-8859-1").partition(":")
        if separator:
            headers.append((name.strip(), value.strip()))
    return headers


def parse_http_response(payload: bytes) -> HttpResponseMeta:
    head, body = split_http_response(payload)
    status_line = head.split(b"\n", 1)[0].rstrip(b"\r")
    match = STATUS_LINE.match(status_line)
    if not match:
        raise NotHttpResponseError(f"record payload is not an HTTP response: {status_line[:60]!r}")
    content_type = None
    for name, value in parse_http_headers(head):
        if name.lower() == "content-type":
            content_type = value
            break
    return HttpResponseMeta(
        status_code=int(match.group(1)),
        declared_content_type=content_type,
        payload_digest=payload_digest(body),
        payload_length=len(body),
    )
