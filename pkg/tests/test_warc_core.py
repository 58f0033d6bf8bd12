import gzip
import io
import logging
import os
import random
import sys
from datetime import datetime, timedelta

import pytest
import pytz

# Add parent directory to path to import packages
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from warc_core import (CdxjEntry, NotHttpResponseError, SurtError, WarcReader, WarcRecord, WarcRecordError,
                       WarcStreamError, WarcWriter, generate_cdxj, index_warc_files, iter_warc_file,
                       parse_http_response, parse_warc_stream, payload_digest, read_cdxj, read_warc_files,
                       split_http_response, surt_canonicalize, write_cdxj, write_warc_record)

# --- Constants ---
BASE_DATE = datetime(2023, 6, 1, 12, 0, 0, tzinfo=pytz.utc)
HTML_BODY = b"<html><body><img src='a.png'></body></html>"


# --- Helpers ---

def http_response(status=200, content_type="text/html", body=HTML_BODY, reason="OK"):
    head = f"HTTP/1.1 {status} {reason}\r\nContent-Type: {content_type}\r\nContent-Length: {len(body)}\r\n\r\n"
    return head.encode("ascii") + body


def response_record(uri, status=200, content_type="text/html", body=HTML_BODY, seconds=0):
    payload = http_response(status, content_type, body)
    return WarcRecord.build(
        "response",
        payload=payload,
        target_uri=uri,
        content_type="application/http; msgtype=response",
        record_date=BASE_DATE + timedelta(seconds=seconds),
        extra_headers=(("WARC-Payload-Digest", payload_digest(body)),),
    )


def random_record(rng):
    record_type = rng.choice(["response", "request", "revisit", "metadata", "warcinfo", "resource"])
    body = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 300)))
    if record_type in ("response", "revisit"):
        payload = http_response(rng.choice([200, 301, 404, 503]), rng.choice(["text/html", "image/png"]), body)
        extra = (("WARC-Payload-Digest", payload_digest(body)),)
    else:
        payload = body
        extra = ()
    uri = None if record_type == "warcinfo" else f"http://example{rng.randint(0, 9)}.org/p/{rng.randint(0, 999)}"
    return WarcRecord.build(
        record_type,
        payload=payload,
        target_uri=uri,
        content_type=rng.choice(["", "application/http; msgtype=response", "application/octet-stream"]),
        record_date=BASE_DATE + timedelta(seconds=rng.randint(0, 10 ** 7)),
        extra_headers=extra,
    )


def write_records(records, gzipped):
    stream = io.BytesIO()
    writer = WarcWriter(stream, gzipped=gzipped)
    for record in records:
        writer.write(record)
    return stream.getvalue()


# --- Records ---

@pytest.mark.parametrize("gzipped", [False, True])
def test_random_records_survive_round_trip(gzipped):
    rng = random.Random(20230601)
    records = [random_record(rng) for _ in range(1000)]

    parsed = list(parse_warc_stream(io.BytesIO(write_records(records, gzipped))))

    assert parsed == records
    for record in parsed:
        if record.record_type == "response":
            body = split_http_response(record.payload)[1]
            assert payload_digest(body) == record.get_header("WARC-Payload-Digest")


def test_gzip_records_report_member_offsets():
    records = [response_record(f"http://example.com/{i}") for i in range(3)]
    data = write_records(records, gzipped=True)

    parsed = list(parse_warc_stream(io.BytesIO(data)))

    offset = 0
    for record in parsed:
        assert record.source_offset == offset
        member = data[offset:offset + record.source_length]
        assert gzip.decompress(member).startswith(b"WARC/1.1\r\n")
        offset += record.source_length
    assert offset == len(data)


def test_reader_accepts_warc_1_0():
    data = write_warc_record(response_record("http://example.com/")).replace(b"WARC/1.1", b"WARC/1.0", 1)

    parsed = list(parse_warc_stream(io.BytesIO(data), gzipped=False))

    assert len(parsed) == 1
    assert parsed[0].target_uri == "http://example.com/"


def test_missing_mandatory_header_is_skipped_and_reading_resumes(caplog):
    good = write_warc_record(response_record("http://example.com/good"))
    broken = b"WARC/1.1\r\nWARC-Type: response\r\nContent-Length: 0\r\n\r\n\r\n\r\n"
    stream = io.BytesIO(broken + good)
    reader = WarcReader(stream)

    with caplog.at_level(logging.WARNING):
        parsed = list(reader)

    assert [record.target_uri for record in parsed] == ["http://example.com/good"]
    assert len(reader.skipped) == 1
    assert reader.skipped[0].offset == 0
    assert "missing mandatory header warc-record-id" in caplog.text


def test_strict_reader_raises_record_error():
    broken = b"WARC/1.1\r\nWARC-Type: response\r\nContent-Length: 0\r\n\r\n\r\n\r\n"

    with pytest.raises(WarcRecordError):
        list(WarcReader(io.BytesIO(broken), strict=True))


@pytest.mark.parametrize("gzipped", [None, False, True])
def test_empty_input_has_no_records(gzipped):
    assert list(parse_warc_stream(io.BytesIO(b""), gzipped=gzipped)) == []


def test_file_with_only_a_warcinfo_record(tmp_path):
    path = tmp_path / "info.warc.gz"
    info = WarcRecord.build("warcinfo", payload=b"software: test\r\nformat: WARC File Format 1.1\r\n",
                            content_type="application/warc-fields", record_date=BASE_DATE)
    with open(path, "wb") as stream:
        WarcWriter(stream).write(info)

    records = read_warc_files([str(path)])

    assert [record.record_type for record in records] == ["warcinfo"]
    assert list(iter_warc_file(str(path)))[0].payload == info.payload


def test_truncated_payload_is_fatal():
    data = write_warc_record(response_record("http://example.com/"))

    with pytest.raises(WarcStreamError) as excinfo:
        list(parse_warc_stream(io.BytesIO(data[:-20]), gzipped=False))
    assert excinfo.value.offset == 0


def test_truncated_gzip_member_is_fatal():
    data = write_records([response_record("http://example.com/")], gzipped=True)

    with pytest.raises(WarcStreamError):
        list(parse_warc_stream(io.BytesIO(data[:len(data) // 2])))


def test_content_length_mismatch_is_rejected_on_write():
    record = response_record("http://example.com/")
    bad = WarcRecord(record.record_type, record.record_id, record.record_date, record.content_length + 1,
                     record.payload, record.target_uri)

    with pytest.raises(WarcRecordError):
        write_warc_record(bad)


def test_gzip_output_is_deterministic():
    record = response_record("http://example.com/")
    assert write_warc_record(record, gzipped=True) == write_warc_record(record, gzipped=True)


# --- HTTP payloads ---

def test_parse_http_response_reads_status_type_and_digest():
    meta = parse_http_response(http_response(404, "text/css; charset=utf-8", b"gone"))

    assert meta.status_code == 404
    assert meta.declared_content_type == "text/css; charset=utf-8"
    assert meta.payload_digest == payload_digest(b"gone")
    assert meta.payload_length == 4


def test_parse_http_response_rejects_non_http_payload():
    with pytest.raises(NotHttpResponseError):
        parse_http_response(b"software: test\r\n")


def test_payload_digest_format():
    digest = payload_digest(b"")
    assert digest == "sha1:3I42H3S6NNFQ2MSVX7XZKYAYSCX5QBYJ"


# --- SURT ---

@pytest.mark.parametrize("uri, expected", [
    ("https://www.example.com/page", "com,example)/page"),
    ("http://Example.COM", "com,example)/"),
    ("http://example.com:80/a", "com,example)/a"),
    ("https://example.com:8443/a", "com,example:8443)/a"),
    ("http://user:pw@sub.example.org/x#frag", "org,example,sub)/x"),
    ("http://example.com/s?b=2&a=1", "com,example)/s?a=1&b=2"),
    ("http://192.168.0.1/a", "192.168.0.1)/a"),
    ("http://WWW.Example.COM:80/A?b=2&a=1", "com,example)/a?a=1&b=2"),
])
def test_surt_canonicalize(uri, expected):
    assert surt_canonicalize(uri) == expected


def test_surt_keys_ignore_case_default_port_and_www():
    variants = ["http://example.com/path", "HTTP://EXAMPLE.COM/path", "http://example.com:80/path",
                "http://www.example.com/path", "http://WWW.Example.com:80/Path"]

    assert len({surt_canonicalize(uri) for uri in variants}) == 1


def test_surt_rejects_relative_uri():
    with pytest.raises(SurtError):
        surt_canonicalize("/relative/path")


# --- CDXJ ---

def test_generate_cdxj_sorts_by_key_then_timestamp():
    records = [
        response_record("http://b.example.com/", seconds=5),
        response_record("http://a.example.com/", seconds=9),
        response_record("http://a.example.com/", seconds=1),
        WarcRecord.build("request", payload=b"GET / HTTP/1.1\r\n\r\n", target_uri="http://a.example.com/"),
    ]
    entries = generate_cdxj(records, "test.warc")

    keys = [(entry.surt_key, entry.timestamp14) for entry in entries]
    assert keys == sorted(keys)
    assert [entry.surt_key for entry in entries] == ["com,example,a)/", "com,example,a)/", "com,example,b)/"]
    assert entries[0].timestamp14 == "20230601120001"


def test_generate_cdxj_skips_records_without_target_uri(caplog):
    orphan = WarcRecord.build("response", payload=http_response())

    with caplog.at_level(logging.WARNING):
        entries = generate_cdxj([orphan, response_record("http://example.com/")], "test.warc")

    assert len(entries) == 1
    assert "no WARC-Target-URI" in caplog.text


def test_revisit_without_http_head_uses_revisit_mime():
    revisit = WarcRecord.build("revisit", payload=b"", target_uri="http://example.com/",
                               extra_headers=(("WARC-Payload-Digest", "sha1:ABC"),))

    entry = generate_cdxj([revisit], "test.warc")[0]

    assert entry.mime == "warc/revisit"
    assert entry.digest == "sha1:ABC"
    assert entry.status == 0


def test_cdxj_file_round_trip(tmp_path):
    warc_path = tmp_path / "crawl.warc.gz"
    warc_path.write_bytes(write_records([response_record("http://example.com/"),
                                         response_record("http://example.com/style.css", content_type="text/css")],
                                        gzipped=True))
    entries = index_warc_files([str(warc_path)])
    cdxj_path = tmp_path / "crawl.cdxj"
    with open(cdxj_path, "w", encoding="utf-8") as stream:
        assert write_cdxj(entries, stream) == 2

    loaded = read_cdxj(str(cdxj_path))

    assert loaded == entries
    assert {entry.filename for entry in loaded} == {"crawl.warc.gz"}
    assert loaded[1].mime == "text/css"


def test_cdxj_entry_rejects_bad_timestamp():
    with pytest.raises(ValueError):
        CdxjEntry("com,example)/", "2023", "http://example.com/", "text/html", 200, "sha1:X", 1, 0, "f.warc")
