"""WARC record model, reader and writer.

Reads WARC/1.0 and WARC/1.1, plain or one gzip member per record, and
always writes WARC/1.1.
"""
import gzip
import io
import logging
import os
import uuid
import zlib
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Iterator, List, Optional, Tuple

import pytz

WARC_VERSION = b"WARC/1.1"
READABLE_VERSIONS = (b"WARC/1.0", b"WARC/1.1")
KNOWN_RECORD_TYPES = frozenset({"response", "request", "revisit", "metadata", "warcinfo", "resource"})
GZIP_MAGIC = b"\x1f\x8b"
CRLF = b"\r\n"
RECORD_TERMINATOR = b"\r\n\r\n"
READ_CHUNK_SIZE = 64 * 1024

# Headers modelled as WarcRecord fields; any other header goes to extra_headers.
FIELD_HEADERS = ("warc-type", "warc-record-id", "warc-date", "warc-target-uri", "content-type", "content-length")
REQUIRED_HEADERS = ("warc-type", "warc-record-id", "warc-date", "content-length")


class WarcRecordError(ValueError):
    """A single record could not be read. The reader may skip it and continue."""

    def __init__(self, offset, message):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class WarcStreamError(ValueError):
    """The stream is damaged beyond the current record (truncation, corrupt gzip)."""

    def __init__(self, offset, message):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


def format_warc_date(value: datetime) -> str:
    return value.astimezone(pytz.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_warc_date(value: str) -> datetime:
    """Parses a WARC-Date into an aware UTC datetime truncated to seconds."""
    parsed = datetime.fromisoformat(value.strip().replace("Z", "+00:00"))
    if parsed.tzinfo is None:
        parsed = pytz.utc.localize(parsed)
    return parsed.astimezone(pytz.utc).replace(microsecond=0)


@dataclass(frozen=True)
class WarcRecord:
    record_type: str
    record_id: str
    record_date: datetime
    content_length: int
    payload: bytes
    target_uri: Optional[str] = None
    content_type: str = ""
    extra_headers: Tuple[Tuple[str, str], ...] = ()
    source_offset: int = field(default=0, compare=False)
    source_filename: str = field(default="", compare=False)
    source_length: int = field(default=0, compare=False)

    @classmethod
    def build(cls, record_type, payload=b"", target_uri=None, content_type="",
              record_date=None, record_id=None, extra_headers=()):
        """Creates a record whose Content-Length matches its payload."""
        if record_date is None:
            record_date = datetime.now(pytz.utc)
        if record_date.tzinfo is None:
            record_date = pytz.utc.localize(record_date)
        return cls(
            record_type=record_type,
            record_id=record_id or f"urn:uuid:{uuid.uuid4()}",
            record_date=record_date.astimezone(pytz.utc).replace(microsecond=0),
            content_length=len(payload),
            payload=bytes(payload),
            target_uri=target_uri,
            content_type=content_type,
            extra_headers=tuple((str(name), str(value)) for name, value in extra_headers),
        )

    def get_header(self, name: str) -> Optional[str]:
        """Looks up a header kept in extra_headers, case-insensitively."""
        wanted = name.lower()
        for header_name, value in self.extra_headers:
            if header_name.lower() == wanted:
                return value
        return None


def _header_block(record: WarcRecord) -> bytes:
    lines = [WARC_VERSION]

    def add(name, value):
        value = str(value)
        if "\r" in value or "\n" in value:
            raise WarcRecordError(record.source_offset, f"header {name} of record {record.record_id} contains a line break")
        lines.append(f"{name}: {value}".encode("utf-8"))

    add("WARC-Type", record.record_type)
    add("WARC-Record-ID", f"<{record.record_id}>")
    add("WARC-Date", format_warc_date(record.record_date))
    if record.target_uri is not None:
        add("WARC-Target-URI", record.target_uri)
    if record.content_type:
        add("Content-Type", record.content_type)
    for name, value in record.extra_headers:
        add(name, value)
    add("Content-Length", record.content_length)
    return CRLF.join(lines) + CRLF + CRLF


def write_warc_record(record: WarcRecord, gzipped: bool = False) -> bytes:
    """Serializes one record; with gzipped the record is a single gzip member."""
    if record.content_length != len(record.payload):
        raise WarcRecordError(
            record.source_offset,
            f"Content-Length {record.content_length} does not match payload length {len(record.payload)} "
            f"for record {record.record_id}")
    data = _header_block(record) + record.payload + RECORD_TERMINATOR
    if gzipped:
        # mtime=0 keeps output identical across runs
        return gzip.compress(data, mtime=0)
    return data


class WarcWriter:
    """Appends records to an open binary stream."""

    def __init__(self, stream, gzipped: bool = True):
        self.stream = stream
        self.gzipped = gzipped
        self.records_written = 0

    def write(self, record: WarcRecord) -> int:
        data = write_warc_record(record, self.gzipped)
        self.stream.write(data)
        self.records_written += 1
        return len(data)


class _ByteSource:
    """Buffered reader that knows its absolute position in the stream."""

    def __init__(self, stream, position=0):
        self._stream = stream
        self._buffer = bytearray()
        self.position = position

    def _fill(self):
        chunk = self._stream.read(READ_CHUNK_SIZE)
        if chunk:
            self._buffer.extend(chunk)
        return bool(chunk)

    def _take(self, size):
        data = bytes(self._buffer[:size])
        del self._buffer[:size]
        self.position += len(data)
        return data

    def readline(self):
        start = 0
        while True:
            index = self._buffer.find(b"\n", start)
            if index >= 0:
                return self._take(index + 1)
            start = len(self._buffer)
            if not self._fill():
                return self._take(len(self._buffer))

    def read(self, size):
        while len(self._buffer) < size and self._fill():
            pass
        return self._take(size)

    def peek(self, size):
        while len(self._buffer) < size and self._fill():
            pass
        return bytes(self._buffer[:size])

    def read_chunk(self):
        if not self._buffer and not self._fill():
            return b""
        return self._take(len(self._buffer))

    def unread(self, data):
        if data:
            self._buffer[0:0] = data
            self.position -= len(data)


class WarcReader:
    """Iterates the records of one WARC stream in file order.

    Malformed header blocks raise WarcRecordError when strict, otherwise
    they are logged, collected in `skipped`, and reading resumes at the next
    version line. Truncation is always fatal (WarcStreamError).
    """

    def __init__(self, stream, gzipped: Optional[bool] = None, strict: bool = False, filename: str = ""):
        self._source = _ByteSource(stream)
        self.gzipped = gzipped
        self.strict = strict
        self.filename = filename
        self.skipped: List[WarcRecordError] = []
        self.records_read = 0

    def __iter__(self) -> Iterator[WarcRecord]:
        if self.gzipped is None:
            self.gzipped = self._source.peek(2) == GZIP_MAGIC
        records = self._iter_members() if self.gzipped else self._iter_plain(self._source)
        for record in records:
            self.records_read += 1
            yield record

    def _skip(self, error):
        if self.strict:
            raise error
        logging.warning(f"Skipping malformed WARC record in {self.filename or '<stream>'}: {error}")
        self.skipped.append(error)

    def _iter_plain(self, source, member_offset=None, member_length=None):
        line = source.readline()
        while line:
            if not line.strip():
                line = source.readline()
                continue
            offset = member_offset if member_offset is not None else source.position - len(line)
            try:
                record = self._read_record(source, line, offset)
            except WarcRecordError as error:
                self._skip(error)
                line = self._resync(source)
                continue
            if member_length is not None:
                record = replace(record, source_length=member_length)
            yield record
            line = source.readline()

    def _resync(self, source):
        while True:
            line = source.readline()
            if not line or line.rstrip(b"\r\n") in READABLE_VERSIONS:
                return line

    def _read_record(self, source, version_line, offset):
        version = version_line.rstrip(b"\r\n")
        if version not in READABLE_VERSIONS:
            raise WarcRecordError(offset, f"expected a WARC/1.0 or WARC/1.1 version line, found {version[:40]!r}")

        fields = {}
        extra_headers = []
        while True:
            line = source.readline()
            if not line:
                raise WarcStreamError(offset, "stream ended inside a header block")
            if line in (b"\r\n", b"\n"):
                break
            name, separator, value = line.decode("utf-8", errors="replace").partition(":")
            if not separator or not name.strip():
                raise WarcRecordError(offset, f"header line without a field name: {line[:60]!r}")
            name, value = name.strip(), value.strip()
            key = name.lower()
            if key in FIELD_HEADERS and key not in fields:
                fields[key] = value
            else:
                extra_headers.append((name, value))

        for required in REQUIRED_HEADERS:
            if required not in fields:
                raise WarcRecordError(offset, f"missing mandatory header {required}")
        try:
            content_length = int(fields["content-length"])
        except ValueError:
            raise WarcRecordError(offset, f"Content-Length is not an integer: {fields['content-length']!r}")
        if content_length < 0:
            raise WarcRecordError(offset, f"negative Content-Length {content_length}")
        try:
            record_date = parse_warc_date(fields["warc-date"])
        except ValueError:
            raise WarcRecordError(offset, f"unparseable WARC-Date {fields['warc-date']!r}")

        payload = source.read(content_length)
        if len(payload) < content_length:
            raise WarcStreamError(offset, f"truncated payload: expected {content_length} bytes, got {len(payload)}")
        if source.peek(4) == RECORD_TERMINATOR:
            source.read(4)
        else:
            logging.debug(f"Record at offset {offset} in {self.filename or '<stream>'} lacks the CRLFCRLF terminator")

        record_type = fields["warc-type"]
        if record_type not in KNOWN_RECORD_TYPES:
            logging.debug(f"Unknown WARC-Type '{record_type}' at offset {offset}")
        target_uri = fields.get("warc-target-uri")
        if target_uri and target_uri.startswith("<") and target_uri.endswith(">"):
            target_uri = target_uri[1:-1]

        return WarcRecord(
            record_type=record_type,
            record_id=fields["warc-record-id"].strip("<>"),
            record_date=record_date,
            content_length=content_length,
            payload=payload,
            target_uri=target_uri,
            content_type=fields.get("content-type", ""),
            extra_headers=tuple(extra_headers),
            source_offset=offset,
            source_filename=self.filename,
            source_length=source.position - offset,
        )

    def _iter_members(self):
        source = self._source
        while source.peek(1):
            member_offset = source.position
            if source.peek(2) != GZIP_MAGIC:
                self._skip(WarcRecordError(member_offset, "data after the last gzip member is not gzip"))
                return
            inflater = zlib.decompressobj(16 + zlib.MAX_WBITS)
            parts = []
            while not inflater.eof:
                chunk = source.read_chunk()
                if not chunk:
                    raise WarcStreamError(member_offset, "truncated gzip member")
                try:
                    parts.append(inflater.decompress(chunk))
                except zlib.error as e:
                    raise WarcStreamError(member_offset, f"corrupt gzip member: {e}")
            source.unread(inflater.unused_data)
            member = _ByteSource(io.BytesIO(b"".join(parts)))
            yield from self._iter_plain(member, member_offset, source.position - member_offset)


def parse_warc_stream(stream, gzipped: Optional[bool] = None, strict: bool = False, filename: str = "") -> Iterator[WarcRecord]:
    """Yields the records of a WARC stream; gzipped=None detects compression."""
    return iter(WarcReader(stream, gzipped=gzipped, strict=strict, filename=filename))


def iter_warc_file(path, strict: bool = False) -> Iterator[WarcRecord]:
    with open(path, "rb") as stream:
        yield from WarcReader(stream, strict=strict, filename=os.path.basename(path))


def read_warc_files(paths, strict: bool = False) -> List[WarcRecord]:
    """Reads every record of several files, file after file."""
    records = []
    for path in paths:
        records.extend(iter_warc_file(path, strict=strict))
    return records
