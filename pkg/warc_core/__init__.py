"""WARC reading/writing, archived HTTP responses, SURT keys and CDXJ indexes."""
from .cdxj import CdxjEntry, generate_cdxj, index_warc_files, read_cdxj, write_cdxj
from .http import (HttpResponseMeta, NotHttpResponseError, media_type, parse_http_headers,
                   parse_http_response, payload_digest, split_http_response)
from .records import (KNOWN_RECORD_TYPES, WarcReader, WarcRecord, WarcRecordError, WarcStreamError,
                      WarcWriter, format_warc_date, iter_warc_file, parse_warc_date, parse_warc_stream,
                      read_warc_files, write_warc_record)
from .surt import SurtError, surt_canonicalize
