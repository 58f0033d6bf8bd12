import re
from urllib.parse import urlsplit

DEFAULT_PORTS = {"http": 80, "https": 443, "ws": 80, "wss": 443, "ftp": 21}
IPV4_HOST = re.compile(r"^\d{1,3}(?:\.\d{1,3}){3}$")


class SurtError(ValueError):
    """Raised for URIs that have no scheme or host."""


def surt_canonicalize(uri: str) -> str:
    """Sort-friendly key: "https://www.example.com/page" -> "com,example)/page".

    Lowercases everything, drops scheme, userinfo, fragment, default ports
    and a leading "www.", reverses host labels and sorts query parameters.
    """
    try:
        parts = urlsplit(uri.strip())
        port = parts.port
    except ValueError as e:
        raise SurtError(f"cannot canonicalize {uri!r}: {e}")
    host = (parts.hostname or "").rstrip(".")
    if not parts.scheme or not host:
        raise SurtError(f"not an absolute URI with a host: {uri!r}")

    if host.startswith("www."):
        host = host[4:]
    if not IPV4_HOST.match(host):
        host = ",".join(reversed(host.split(".")))
    if port is not None and port != DEFAULT_PORTS.get(parts.scheme.lower()):
        host = f"{host}:{port}"

    key = f"{host}){parts.path or '/'}"
    pairs = [pair for pair in parts.query.split("&") if pair]
    if pairs:
        pairs.sort(key=lambda pair: (pair.lower().partition("=")[0], pair.lower()))
        key += "?" + "&".join(pairs)
    return key.lower()
