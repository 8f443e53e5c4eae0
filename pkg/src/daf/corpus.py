"""Dataset ingestion, record model, sampling, and tokenization.

All record streams are line-oriented (one record per line) so that a
file can be partitioned into byte ranges and scanned in parallel.
Malformed lines are never silently dropped: they are counted, reported
with their position, and skipped.
"""

from __future__ import annotations

import json
import random
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Iterator

FORMATS = ("jsonl", "tsv-pairs", "plain-text-per-line")

RESERVED_META_KEYS = ("url", "timestamp", "source", "nsfw_tag")

# Cap on per-line detail kept in skip reports; totals are always exact.
MAX_SKIP_DETAIL = 100

# A token is a maximal run of letters/digits, with internal ASCII
# hyphens and straight/curly apostrophes preserved ("anti-aging",
# "l'élève").  Underscore is excluded on purpose.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*")

_WS_RE = re.compile(r"\s+")


class CorpusError(Exception):
    """Unusable dataset: unreadable path, unknown format, or mostly garbage."""


class RecordParseError(ValueError):
    """One malformed line; the stream skips it and keeps going."""


@dataclass(frozen=True)
class ImageRef:
    """Reference to an image by path or URL; pixels are never decoded here."""

    ref: str
    width: int | None = None
    height: int | None = None


@dataclass(frozen=True)
class Record:
    """One corpus item: text and/or an image reference plus metadata."""

    id: str
    text: str | None = None
    image: ImageRef | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise RecordParseError("record id must be non-empty")
        if self.text is None and self.image is None:
            raise RecordParseError("record needs text or an image reference")
        ts = self.meta.get("timestamp")
        if ts is not None and parse_timestamp(ts) is None:
            raise RecordParseError(f"timestamp does not parse as a date: {ts!r}")


@dataclass(frozen=True)
class DatasetHandle:
    """Where a dataset lives and how to parse it."""

    path: str
    format: str
    label: str = ""
    record_count: int | None = None

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise CorpusError(f"unknown dataset format: {self.format!r}")


@dataclass(frozen=True)
class TokenizationPolicy:
    """Deterministic, documentable tokenization settings.

    unicode_normalization: "none" or "nfkc" (compatibility-composed).
    The token rule itself is fixed; only folding/normalization vary.
    """

    case_fold: bool = True
    unicode_normalization: str = "nfkc"

    def __post_init__(self) -> None:
        if self.unicode_normalization not in ("none", "nfkc"):
            raise ValueError(
                f"unknown unicode normalization: {self.unicode_normalization!r}"
            )


@dataclass(frozen=True)
class Token:
    """A token plus its byte span (UTF-8 offsets) in the source string."""

    text: str
    start: int
    end: int


@dataclass
class SkipReport:
    """Accounting for malformed lines: count + positions of the first few."""

    total_lines: int = 0
    yielded: int = 0
    skipped: int = 0
    details: list[tuple[int, str]] = field(default_factory=list)  # (line no, reason)

    def note_skip(self, line_no: int, reason: str) -> None:
        self.skipped += 1
        if len(self.details) < MAX_SKIP_DETAIL:
            self.details.append((line_no, reason))

    @property
    def skipped_lines(self) -> list[int]:
        return [n for n, _ in self.details]


def parse_timestamp(value: str) -> date | None:
    """ISO-8601 date or datetime -> date, else None."""
    try:
        return date.fromisoformat(value)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(value).date()
    except ValueError:
        return None


def _parse_image(value: object) -> ImageRef:
    if isinstance(value, str):
        if not value:
            raise RecordParseError("empty image reference")
        return ImageRef(ref=value)
    if isinstance(value, dict):
        ref = value.get("ref") or value.get("path") or value.get("url")
        if not isinstance(ref, str) or not ref:
            raise RecordParseError("image object needs a 'ref'/'path'/'url' string")
        width = value.get("width")
        height = value.get("height")
        for dim in (width, height):
            if dim is not None and (not isinstance(dim, int) or dim < 0):
                raise RecordParseError("image dimensions must be non-negative ints")
        return ImageRef(ref=ref, width=width, height=height)
    raise RecordParseError(f"image must be a string or object, got {type(value).__name__}")


def parse_jsonl_line(line: str) -> Record:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordParseError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise RecordParseError("line is not a JSON object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise RecordParseError("missing or non-string 'id'")
    text = obj.get("text")
    if text is not None and not isinstance(text, str):
        raise RecordParseError("'text' must be a string")
    image = obj.get("image")
    image_ref = _parse_image(image) if image is not None else None
    meta_obj = obj.get("meta", {})
    if not isinstance(meta_obj, dict):
        raise RecordParseError("'meta' must be an object")
    meta: dict[str, str] = {}
    for key, value in meta_obj.items():
        if not isinstance(key, str) or not isinstance(value, str):
            raise RecordParseError("'meta' must map strings to strings")
        meta[key] = value
    return Record(id=rid, text=text, image=image_ref, meta=meta)


def parse_tsv_pairs_line(line: str) -> Record:
    parts = line.split("\t")
    if len(parts) != 3:
        raise RecordParseError(f"expected 3 tab-separated fields, got {len(parts)}")
    rid, text, image_url = parts
    if not rid:
        raise RecordParseError("empty id field")
    if not image_url:
        raise RecordParseError("empty image url field")
    return Record(id=rid, text=text, image=ImageRef(ref=image_url))


def parse_line(fmt: str, line: str, line_no: int) -> Record:
    """Parse one line of a line-oriented dataset into a Record."""
    if fmt == "jsonl":
        return parse_jsonl_line(line)
    if fmt == "tsv-pairs":
        return parse_tsv_pairs_line(line)
    if fmt == "plain-text-per-line":
        return Record(id=f"line-{line_no}", text=line)
    raise CorpusError(f"unknown dataset format: {fmt!r}")


class RecordStream:
    """Iterator over a dataset's records with skip accounting.

    Yields records in file order.  After exhaustion, ``report`` holds
    exact totals; a CorpusError is raised at the end if more than half
    of the input lines were malformed.
    """

    def __init__(self, handle: DatasetHandle):
        self.handle = handle
        self.report = SkipReport()
        path = Path(handle.path)
        if not path.is_file():
            raise CorpusError(f"dataset path not readable: {handle.path}")
        self._path = path

    def __iter__(self) -> Iterator[Record]:
        seen_ids: set[str] = set()
        with self._path.open("r", encoding="utf-8", newline="") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                self.report.total_lines += 1
                try:
                    record = parse_line(self.handle.format, line, line_no)
                except RecordParseError as exc:
                    self.report.note_skip(line_no, str(exc))
                    continue
                if record.id in seen_ids:
                    self.report.note_skip(line_no, f"duplicate id: {record.id!r}")
                    continue
                seen_ids.add(record.id)
                self.report.yielded += 1
                yield record
        total = self.report.total_lines
        if total > 0 and self.report.skipped * 2 > total:
            raise CorpusError(
                f"{self.report.skipped}/{total} lines malformed in "
                f"{self.handle.path}; refusing to treat this as a corpus"
            )


def open_dataset(handle: DatasetHandle) -> RecordStream:
    return RecordStream(handle)


def sample_records(stream: Iterable[Record], n: int, seed: int) -> list[Record]:
    """Uniform reservoir sample of size min(n, len), in stream order.

    Pure: the same (stream, n, seed) always produces the same sample.
    """
    if n < 0:
        raise ValueError("sample size must be >= 0")
    if n == 0:
        return []
    rng = random.Random(seed)
    reservoir: list[tuple[int, Record]] = []
    for idx, record in enumerate(stream):
        if len(reservoir) < n:
            reservoir.append((idx, record))
        else:
            j = rng.randint(0, idx)
            if j < n:
                reservoir[j] = (idx, record)
    reservoir.sort(key=lambda pair: pair[0])
    return [record for _, record in reservoir]


def normalize_text(text: str, policy: TokenizationPolicy) -> str:
    """Canonical text form: the identity under which duplicates are equal."""
    if policy.unicode_normalization == "nfkc":
        text = unicodedata.normalize("NFKC", text)
    if policy.case_fold:
        text = text.casefold()
    return _WS_RE.sub(" ", text).strip()


def _byte_offsets(text: str) -> list[int] | None:
    """char index -> byte offset map, or None when ASCII (identity)."""
    encoded_len = len(text.encode("utf-8"))
    if encoded_len == len(text):
        return None
    offsets = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        offsets[i] = pos
        pos += len(ch.encode("utf-8"))
    offsets[len(text)] = pos
    return offsets


def tokenize(text: str, policy: TokenizationPolicy) -> list[Token]:
    """Deterministic segmentation; spans are UTF-8 byte offsets into ``text``.

    Spans always reference the string as given, so callers that need
    positions must tokenize the original text.  Case folding (when the
    policy enables it) applies to the token text only.
    """
    offsets = _byte_offsets(text)
    tokens: list[Token] = []
    for match in _TOKEN_RE.finditer(text):
        token_text = match.group(0)
        if policy.case_fold:
            token_text = token_text.casefold()
        if offsets is None:
            start, end = match.start(), match.end()
        else:
            start, end = offsets[match.start()], offsets[match.end()]
        tokens.append(Token(text=token_text, start=start, end=end))
    return tokens


def byte_shards(path: str, n: int) -> list[tuple[int, int]]:
    """Split a file into n contiguous byte ranges covering it exactly."""
    if n < 1:
        raise ValueError("shard count must be >= 1")
    size = Path(path).stat().st_size
    cuts = [size * i // n for i in range(n + 1)]
    return [(cuts[i], cuts[i + 1]) for i in range(n)]


def iter_lines_in_range(path: str, start: int, end: int) -> Iterator[tuple[int, str]]:
    """Yield (byte offset, line) for lines whose first byte is in [start, end).

    A line belongs to exactly one range, so iterating all shards of
    ``byte_shards`` yields every line exactly once.
    """
    with open(path, "rb") as fh:
        if start > 0:
            fh.seek(start - 1)
            # If the previous byte is not a newline we are mid-line; that
            # line belongs to the preceding shard.
            if fh.read(1) != b"\n":
                fh.readline()
        while True:
            offset = fh.tell()
            if offset >= end:
                break
            raw = fh.readline()
            if not raw:
                break
            yield offset, raw.rstrip(b"\n").decode("utf-8")
