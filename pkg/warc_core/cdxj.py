import json
import logging
import os
import re
import time
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, List

from .http import NotHttpResponseError, media_type, parse_http_response, payload_digest, split_http_response
from .records import WarcRecord, iter_warc_file
from .surt import SurtError, surt_canonicalize

TIMESTAMP14 = re.compile(r"^\d{14}$")
INDEXED_RECORD_TYPES = ("response", "revisit")
REVISIT_MIME = "warc/revisit"
UNKNOWN_MIME = "unk"


@dataclass(frozen=True)
class CdxjEntry:
    surt_key: str
    timestamp14: str
    original_url: str
    mime: str
    status: int
    digest: str
    length: int
    offset: int
    filename: str

    def __post_init__(self):
        if not TIMESTAMP14.match(self.timestamp14):
            raise ValueError(f"timestamp {self.timestamp14!r} is not 14 digits")
        datetime.strptime(self.timestamp14, "%Y%m%d%H%M%S")
        if self.surt_key != self.surt_key.lower():
            raise ValueError(f"SURT key {self.surt_key!r} contains uppercase characters")

    def to_line(self) -> str:
        block = json.dumps({
            "url": self.original_url,
            "mime": self.mime,
            "status": self.status,
            "digest": self.digest,
            "length": self.length,
            "offset": self.offset,
            "filename": self.filename,
        }, ensure_ascii=False)
        return f"{self.surt_key} {self.timestamp14} {block}"

    @classmethod
    def from_line(cls, line: str) -> "CdxjEntry":
        try:
            surt_key, timestamp14, block = line.rstrip("\r\n").split(" ", 2)
            data = json.loads(block)
            return cls(
                surt_key=surt_key,
                timestamp14=timestamp14,
                original_url=data["url"],
                mime=data.get("mime", UNKNOWN_MIME),
                status=int(data.get("status", 0)),
                digest=data.get("digest", ""),
                length=int(data.get("length", 0)),
                offset=int(data.get("offset", 0)),
                filename=data.get("filename", ""),
            )
        except (ValueError, KeyError) as e:
            raise ValueError(f"malformed CDXJ line {line[:80]!r}: {e}")


def _entry_for(record: WarcRecord, surt_key: str, filename: str) -> CdxjEntry:
    status, mime = 0, record.content_type or UNKNOWN_MIME
    digest = None
    try:
        meta = parse_http_response(record.payload)
        status = meta.status_code
        mime = media_type(meta.declared_content_type) or UNKNOWN_MIME
        digest = meta.payload_digest
    except NotHttpResponseError:
        logging.debug(f"Record {record.record_id} for {record.target_uri} has no HTTP head")

    if record.record_type == "revisit":
        if status == 0:
            mime = REVISIT_MIME
        digest = record.get_header("WARC-Payload-Digest") or digest
    if digest is None:
        digest = payload_digest(split_http_response(record.payload)[1])

    return CdxjEntry(
        surt_key=surt_key,
        timestamp14=record.record_date.strftime("%Y%m%d%H%M%S"),
        original_url=record.target_uri,
        mime=mime,
        status=status,
        digest=digest,
        length=record.source_length,
        offset=record.source_offset,
        filename=filename,
    )


def generate_cdxj(records: Iterable[WarcRecord], filename: str) -> List[CdxjEntry]:
    """One entry per response/revisit record, sorted by (surt_key, timestamp14).

    The sort is stable, so captures sharing a key stay in file-offset order.
    """
    entries = []
    skipped = 0
    for record in records:
        if record.record_type not in INDEXED_RECORD_TYPES:
            continue
        if not record.target_uri:
            skipped += 1
            logging.warning(f"Record {record.record_id} at offset {record.source_offset} in {filename} has no WARC-Target-URI; not indexed")
            continue
        try:
            surt_key = surt_canonicalize(record.target_uri)
        except SurtError as e:
            skipped += 1
            logging.warning(f"Record {record.record_id} at offset {record.source_offset} in {filename}: {e}; not indexed")
            continue
        entries.append(_entry_for(record, surt_key, filename))

    if skipped:
        logging.warning(f"Skipped {skipped} record(s) without a usable WARC-Target-URI in {filename}.")
    entries.sort(key=lambda entry: (entry.surt_key, entry.timestamp14))
    return entries


def index_warc_files(paths) -> List[CdxjEntry]:
    """Indexes several WARC files into one sorted index."""
    start_time = time.time()
    entries = []
    for path in paths:
        records = iter_warc_file(path)
        file_entries = generate_cdxj(records, filename=os.path.basename(path))
        logging.info(f"Indexed {len(file_entries)} captures from {path}")
        entries.extend(file_entries)
    entries.sort(key=lambda entry: (entry.surt_key, entry.timestamp14))
    logging.info(f"CDXJ indexing finished. Files: {len(paths)}, entries: {len(entries)}. "
                 f"Duration: {time.time() - start_time:.2f} seconds.")
    return entries


def write_cdxj(entries: Iterable[CdxjEntry], stream) -> int:
    count = 0
    for entry in entries:
        stream.write(entry.to_line() + "\n")
        count += 1
    return count


def read_cdxj(path) -> List[CdxjEntry]:
    with open(path, "r", encoding="utf-8") as stream:
        return [CdxjEntry.from_line(line) for line in stream if line.strip()]
