"""Static discovery of embedded resources in archived HTML and CSS."""
import re
from typing import Iterator, Set, Union
from urllib.parse import urldefrag, urljoin, urlsplit

from bs4 import BeautifulSoup

from .categories import ResourceCategory

CSS_URL = re.compile(r"""url\(\s*(['"]?)(.*?)\1\s*\)""", re.IGNORECASE | re.DOTALL)
CSS_IMPORT = re.compile(r"""@import\s+(['"])(.*?)\1""", re.IGNORECASE)
LINK_RELS = {"stylesheet", "icon"}
FETCHABLE_SCHEMES = ("http", "https")


def _css_values(text: str) -> Iterator[str]:
    for match in CSS_URL.finditer(text):
        yield match.group(2)
    for match in CSS_IMPORT.finditer(text):
        yield match.group(2)


def _srcset_values(srcset: str) -> Iterator[str]:
    for candidate in srcset.split(","):
        parts = candidate.split()
        if parts:
            yield parts[0]


def _html_values(text: str, base_uri: str):
    soup = BeautifulSoup(text, "html.parser")
    base = soup.find("base", href=True)
    if base is not None:
        base_uri = urljoin(base_uri, base["href"])

    values = []
    for tag in soup.find_all(src=True):
        values.append(tag["src"])
    for tag in soup.find_all("link", href=True):
        rels = tag.get("rel") or []
        if isinstance(rels, str):
            rels = rels.split()
        if any(rel.lower() in LINK_RELS for rel in rels):
            values.append(tag["href"])
    for tag in soup.find_all(srcset=True):
        values.extend(_srcset_values(tag["srcset"]))
    for tag in soup.find_all(poster=True):
        values.append(tag["poster"])
    for tag in soup.find_all("style"):
        values.extend(_css_values(tag.get_text()))
    for tag in soup.find_all(style=True):
        values.extend(_css_values(tag["style"]))
    return values, base_uri


def extract_references(payload: Union[bytes, str], category: ResourceCategory, base_uri: str) -> Set[str]:
    """Absolute, fragment-free http(s) URIs referenced by an html or css body."""
    text = payload.decode("utf-8", errors="replace") if isinstance(payload, bytes) else payload
    if category == ResourceCategory.HTML:
        values, base_uri = _html_values(text, base_uri)
    elif category == ResourceCategory.CSS:
        values = list(_css_values(text))
    else:
        raise ValueError(f"reference extraction supports html and css, not {category.value}")

    references = set()
    for value in values:
        value = value.strip()
        if not value:
            continue
        absolute = urldefrag(urljoin(base_uri, value))[0]
        if urlsplit(absolute).scheme in FETCHABLE_SCHEMES:
            references.add(absolute)
    return references
