import posixpath
from enum import Enum
from typing import Optional
from urllib.parse import urlsplit

from warc_core import media_type


class ResourceCategory(str, Enum):
    JAVASCRIPT = "javascript"
    CSS = "css"
    IMAGE = "image"
    VIDEO = "video"
    AUDIO = "audio"
    HTML = "html"
    OTHER = "other"


JAVASCRIPT_TYPES = {
    "application/javascript",
    "text/javascript",
    "application/x-javascript",
    "application/ecmascript",
    "text/ecmascript",
}
HTML_TYPES = {"text/html", "application/xhtml+xml"}
MEDIA_TYPE_PREFIXES = {
    "image/": ResourceCategory.IMAGE,
    "video/": ResourceCategory.VIDEO,
    "audio/": ResourceCategory.AUDIO,
}
EXTENSION_CATEGORIES = {
    ".js": ResourceCategory.JAVASCRIPT,
    ".mjs": ResourceCategory.JAVASCRIPT,
    ".css": ResourceCategory.CSS,
    ".png": ResourceCategory.IMAGE,
    ".jpg": ResourceCategory.IMAGE,
    ".jpeg": ResourceCategory.IMAGE,
    ".gif": ResourceCategory.IMAGE,
    ".webp": ResourceCategory.IMAGE,
    ".svg": ResourceCategory.IMAGE,
    ".ico": ResourceCategory.IMAGE,
    ".mp4": ResourceCategory.VIDEO,
    ".webm": ResourceCategory.VIDEO,
    ".mp3": ResourceCategory.AUDIO,
    ".ogg": ResourceCategory.AUDIO,
    ".wav": ResourceCategory.AUDIO,
    ".html": ResourceCategory.HTML,
    ".htm": ResourceCategory.HTML,
}


def _category_for_media_type(value: str) -> Optional[ResourceCategory]:
    if value in JAVASCRIPT_TYPES:
        return ResourceCategory.JAVASCRIPT
    if value == "text/css":
        return ResourceCategory.CSS
    if value in HTML_TYPES:
        return ResourceCategory.HTML
    for prefix, category in MEDIA_TYPE_PREFIXES.items():
        if value.startswith(prefix):
            return category
    return None


def classify_resource(declared_content_type: Optional[str], uri: str) -> ResourceCategory:
    """Media type first, then the URI path extension, then OTHER."""
    declared = media_type(declared_content_type)
    if declared:
        category = _category_for_media_type(declared)
        if category is not None:
            return category
    extension = posixpath.splitext(urlsplit(uri).path)[1].lower()
    return EXTENSION_CATEGORIES.get(extension, ResourceCategory.OTHER)
