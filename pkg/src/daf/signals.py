"""Inferred signals: built-in heuristic providers and the wire protocol
for external classifier sidecars.

A signal is a per-record value produced by something other than the
raw bytes — a toxicity score, a topic label, an image content flag.
Built-in providers are pure functions of (text, bundled resources).
External providers speak a line protocol (version header first, one
JSON object per line) over a subprocess pipe or HTTP POST.

Missing signals reduce analysis denominators and are counted; they are
never imputed.
"""

from __future__ import annotations

import json
import math
import queue
import re
import subprocess
import threading
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path

from .corpus import Record, TokenizationPolicy, _byte_offsets, tokenize

PROTOCOL_VERSION = 1
PROTOCOL_HEADER = json.dumps({"daf_protocol": PROTOCOL_VERSION})

SIGNAL_KINDS = ("scalar01", "categorical", "boolean", "count", "spans")

# Language identification: minimum damped-cosine similarity for a
# verdict, and minimum text length worth classifying at all.
LANGUAGE_SIMILARITY_FLOOR = 0.15
LANGUAGE_MIN_CHARS = 20

_TOX_POLICY = TokenizationPolicy(case_fold=False, unicode_normalization="none")


class SignalError(Exception):
    pass


class ProtocolError(SignalError):
    """The provider broke the wire contract (vs. merely failing a record)."""


@dataclass(frozen=True)
class SignalDescriptor:
    name: str
    kind: str
    provider: str = ""

    def __post_init__(self) -> None:
        if self.kind not in SIGNAL_KINDS:
            raise SignalError(f"unknown signal kind: {self.kind!r}")


@dataclass(frozen=True)
class SignalValue:
    """One inferred value for one record; payload shape follows ``kind``."""

    record_id: str
    signal: str
    kind: str
    score: float | None = None
    label: str | None = None
    confidence: float | None = None
    flag: bool | None = None
    count: int | None = None
    spans: tuple[tuple[int, int, str], ...] | None = None

    def __post_init__(self) -> None:
        if self.kind == "scalar01":
            if self.score is None or not 0.0 <= self.score <= 1.0:
                raise SignalError(f"{self.signal}: scalar01 needs a score in [0,1]")
        elif self.kind == "categorical":
            if not isinstance(self.label, str):
                raise SignalError(f"{self.signal}: categorical needs a label")
            if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
                raise SignalError(f"{self.signal}: confidence outside [0,1]")
        elif self.kind == "boolean":
            if not isinstance(self.flag, bool):
                raise SignalError(f"{self.signal}: boolean needs a flag")
        elif self.kind == "count":
            if not isinstance(self.count, int) or self.count < 0:
                raise SignalError(f"{self.signal}: count must be a non-negative int")
        elif self.kind == "spans":
            if self.spans is None:
                raise SignalError(f"{self.signal}: spans payload missing")
        else:
            raise SignalError(f"unknown signal kind: {self.kind!r}")


@dataclass(frozen=True)
class SignalMiss:
    """A (record, signal) pair the provider could not score."""

    record_id: str
    signal: str
    reason: str


def threshold_signal(value: SignalValue, threshold: float) -> bool:
    """score >= threshold (inclusive, by convention)."""
    if value.kind != "scalar01":
        raise SignalError(f"threshold_signal needs scalar01, got {value.kind}")
    assert value.score is not None
    return value.score >= threshold


# --------------------------------------------------------------------------
# Built-in PII scanning

_PII_PATTERNS: list[tuple[str, re.Pattern[str]]] = [
    ("email", re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9][A-Za-z0-9.-]*\.[A-Za-z]{2,}")),
    ("ipv4", re.compile(r"(?<!\d)(?:\d{1,3}\.){3}\d{1,3}(?!\d)")),
    ("id-number-pattern", re.compile(r"(?<!\d)\d{3}-\d{2}-\d{4}(?!\d)")),
    ("phone", re.compile(r"(?<!\d)(?:\+?\d{1,2}[ .-]?)?(?:\(\d{3}\)[ .-]?|\d{3}[ .-]?)\d{3}[ .-]?\d{4}(?!\d)")),
]


def _valid_ipv4(text: str) -> bool:
    return all(int(part) <= 255 for part in text.split("."))


def builtin_pii_scan(text: str) -> list[tuple[int, int, str]]:
    """Fixed-pattern PII detection; spans are UTF-8 byte offsets.

    Labels: email, phone, ipv4, id-number-pattern.  When patterns
    overlap, the earlier pattern in the priority list wins and the
    overlapped match is dropped, so spans never overlap.
    """
    candidates: list[tuple[int, int, int, str]] = []
    for priority, (label, pattern) in enumerate(_PII_PATTERNS):
        for match in pattern.finditer(text):
            if label == "ipv4" and not _valid_ipv4(match.group(0)):
                continue
            candidates.append((match.start(), priority, match.end(), label))
    candidates.sort()
    accepted: list[tuple[int, int, str]] = []
    taken_until = -1
    for start, _, end, label in candidates:
        if start <= taken_until:
            continue
        accepted.append((start, end, label))
        taken_until = end - 1
    offsets = _byte_offsets(text)
    if offsets is not None:
        accepted = [(offsets[s], offsets[e], label) for s, e, label in accepted]
    return accepted


# --------------------------------------------------------------------------
# Built-in language identification (character trigrams)

_WS_RE = re.compile(r"\s+")


def trigram_counts(text: str) -> Counter[str]:
    """Character trigram counts over the space-padded, folded text."""
    folded = _WS_RE.sub(" ", text).strip().casefold()
    padded = f" {folded} "
    return Counter(padded[i:i + 3] for i in range(len(padded) - 2))


def damped_cosine(a: Counter[str], b: Counter[str]) -> float:
    """Cosine over log1p-damped counts, so frequent trigrams cannot
    drown out the distinctive ones."""
    if not a or not b:
        return 0.0
    smaller, larger = (a, b) if len(a) <= len(b) else (b, a)
    dot = sum(math.log1p(count) * math.log1p(larger[gram]) for gram, count in smaller.items() if gram in larger)
    norm_a = math.sqrt(sum(math.log1p(c) ** 2 for c in a.values()))
    norm_b = math.sqrt(sum(math.log1p(c) ** 2 for c in b.values()))
    return dot / (norm_a * norm_b)


class _LanguageProfiles:
    _cache: dict[str, Counter[str]] | None = None

    @classmethod
    def load(cls) -> dict[str, Counter[str]]:
        if cls._cache is None:
            raw = (
                importlib_resources.files("daf")
                .joinpath("resources/language_profiles.json")
                .read_text(encoding="utf-8")
            )
            data = json.loads(raw)
            cls._cache = {lang: Counter(grams) for lang, grams in data["profiles"].items()}
        return cls._cache


def builtin_language_id(text: str) -> tuple[str, float]:
    """Trigram-profile language guess over the bundled profile set.

    Similarity is damped cosine against each profile; the reported
    confidence is best / (best + runner-up), i.e. 0.5 on an exact tie
    and 1.0 when nothing else matches at all.  Returns ("und", 0.0)
    for texts under LANGUAGE_MIN_CHARS characters or when the best
    similarity is under LANGUAGE_SIMILARITY_FLOOR.
    """
    folded = _WS_RE.sub(" ", text).strip()
    if len(folded) < LANGUAGE_MIN_CHARS:
        return ("und", 0.0)
    counts = trigram_counts(text)
    profiles = _LanguageProfiles.load()
    sims = sorted(
        ((damped_cosine(counts, profile), lang) for lang, profile in profiles.items()),
        key=lambda pair: (-pair[0], pair[1]),
    )
    best_sim, best_lang = sims[0]
    if best_sim < LANGUAGE_SIMILARITY_FLOOR:
        return ("und", 0.0)
    second_sim = sims[1][0] if len(sims) > 1 else 0.0
    confidence = 1.0 if second_sim == 0.0 else best_sim / (best_sim + second_sim)
    return (best_lang, confidence)


# --------------------------------------------------------------------------
# Lexicon-backed toxicity and keyword topics

def _score_tokens(text: str) -> list[str]:
    """Lowercased tokens under the simple rule shared with sidecars."""
    return [t.text for t in tokenize(text.lower(), _TOX_POLICY)]


def _phrase_hits(tokens: list[str], phrase: tuple[str, ...]) -> int:
    width = len(phrase)
    if width == 0 or width > len(tokens):
        return 0
    return sum(1 for i in range(len(tokens) - width + 1) if tuple(tokens[i:i + width]) == phrase)


def load_weighted_lexicon(path: str) -> dict[str, float]:
    """JSON {"terms": {term: weight}} with weights in [0,1]."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    terms = obj.get("terms")
    if not isinstance(terms, dict):
        raise SignalError(f"{path}: weighted lexicon needs a 'terms' object")
    weights: dict[str, float] = {}
    for term, weight in terms.items():
        if not isinstance(term, str) or not term.strip():
            raise SignalError(f"{path}: empty term")
        if not isinstance(weight, (int, float)) or not 0.0 <= weight <= 1.0:
            raise SignalError(f"{path}: weight for {term!r} outside [0,1]")
        weights[term.lower()] = float(weight)
    return weights


def load_keyword_map(path: str) -> dict[str, list[str]]:
    """JSON {"categories": {category: [keyword, ...]}}."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    categories = obj.get("categories")
    if not isinstance(categories, dict):
        raise SignalError(f"{path}: keyword map needs a 'categories' object")
    out: dict[str, list[str]] = {}
    for category, keywords in categories.items():
        if not isinstance(keywords, list) or not all(isinstance(k, str) and k.strip() for k in keywords):
            raise SignalError(f"{path}: category {category!r} needs a list of keywords")
        out[category] = [k.lower() for k in keywords]
    return out


def lexicon_toxicity_score(text: str, weights: dict[str, float]) -> float:
    """Max weight among matched terms; 0.0 when nothing matches."""
    tokens = _score_tokens(text)
    best = 0.0
    for term, weight in weights.items():
        if weight <= best:
            continue
        if _phrase_hits(tokens, tuple(term.split())) > 0:
            best = weight
    return best


def keyword_topic_label(text: str, categories: dict[str, list[str]]) -> str:
    """Category with the most keyword occurrences; ties go to the
    lexicographically smallest category; 'other' when nothing hits."""
    tokens = _score_tokens(text)
    best_label = "other"
    best_hits = 0
    for category in sorted(categories):
        hits = sum(_phrase_hits(tokens, tuple(k.split())) for k in categories[category])
        if hits > best_hits:
            best_label, best_hits = category, hits
    return best_label


# --------------------------------------------------------------------------
# Providers

class Provider:
    """Answers signal queries for record batches.

    Subclasses fill in ``_query``; ``query`` enforces the contract that
    every (record, signal) pair comes back as exactly one value or is
    covered by a miss entry.
    """

    transport = "builtin"

    def __init__(self, provider_id: str, descriptors: list[SignalDescriptor],
                 batch_size: int = 32, timeout: float = 10.0):
        if not descriptors:
            raise SignalError(f"provider {provider_id!r} supports no signals")
        self.id = provider_id
        self.descriptors = {d.name: d for d in descriptors}
        self.batch_size = batch_size
        self.timeout = timeout

    def supports(self, signal: str) -> bool:
        return signal in self.descriptors

    def query(self, batch: list[Record], signals: list[str]) -> tuple[list[SignalValue], list[SignalMiss]]:
        for signal in signals:
            if not self.supports(signal):
                raise SignalError(f"provider {self.id!r} does not support signal {signal!r}")
        if not batch:
            return [], []
        values, misses = self._query(batch, signals)
        covered = {(v.record_id, v.signal) for v in values} | {(m.record_id, m.signal) for m in misses}
        expected = {(r.id, s) for r in batch for s in signals}
        if covered != expected:
            raise ProtocolError(
                f"provider {self.id!r} responses do not partition the request set "
                f"(missing {sorted(expected - covered)[:3]}, extra {sorted(covered - expected)[:3]})"
            )
        return values, misses

    def _query(self, batch: list[Record], signals: list[str]) -> tuple[list[SignalValue], list[SignalMiss]]:
        raise NotImplementedError

    def close(self) -> None:
        pass


def query_provider(provider: Provider, batch: list[Record], signals: list[str]) -> tuple[list[SignalValue], list[SignalMiss]]:
    return provider.query(batch, signals)


class PiiProvider(Provider):
    def __init__(self, provider_id: str = "builtin-pii"):
        super().__init__(provider_id, [SignalDescriptor("pii", "spans", provider_id)])

    def _query(self, batch, signals):
        values = []
        misses = []
        for record in batch:
            if record.text is None:
                misses.append(SignalMiss(record.id, "pii", "no text"))
                continue
            spans = tuple(builtin_pii_scan(record.text))
            values.append(SignalValue(record.id, "pii", "spans", spans=spans))
        return values, misses


class LanguageProvider(Provider):
    def __init__(self, provider_id: str = "builtin-language"):
        super().__init__(provider_id, [SignalDescriptor("language", "categorical", provider_id)])

    def _query(self, batch, signals):
        values = []
        misses = []
        for record in batch:
            if record.text is None:
                misses.append(SignalMiss(record.id, "language", "no text"))
                continue
            label, confidence = builtin_language_id(record.text)
            values.append(SignalValue(record.id, "language", "categorical", label=label, confidence=confidence))
        return values, misses


class LexiconToxicityProvider(Provider):
    def __init__(self, lexicon_path: str, provider_id: str = "builtin-toxicity"):
        self.weights = load_weighted_lexicon(lexicon_path)
        super().__init__(provider_id, [SignalDescriptor("toxicity", "scalar01", provider_id)])

    def _query(self, batch, signals):
        values = []
        misses = []
        for record in batch:
            if record.text is None:
                misses.append(SignalMiss(record.id, "toxicity", "no text"))
                continue
            score = lexicon_toxicity_score(record.text, self.weights)
            values.append(SignalValue(record.id, "toxicity", "scalar01", score=score))
        return values, misses


class KeywordTopicProvider(Provider):
    def __init__(self, keyword_map_path: str, provider_id: str = "builtin-topic"):
        self.categories = load_keyword_map(keyword_map_path)
        super().__init__(provider_id, [SignalDescriptor("topic", "categorical", provider_id)])

    def _query(self, batch, signals):
        values = []
        misses = []
        for record in batch:
            if record.text is None:
                misses.append(SignalMiss(record.id, "topic", "no text"))
                continue
            label = keyword_topic_label(record.text, self.categories)
            values.append(SignalValue(record.id, "topic", "categorical", label=label))
        return values, misses


def _value_from_raw(record_id: str, descriptor: SignalDescriptor, raw: object) -> SignalValue:
    """Interpret a manifest/wire payload according to the declared kind."""
    kind = descriptor.kind
    name = descriptor.name
    if kind == "scalar01":
        if not isinstance(raw, (int, float)):
            raise SignalError(f"{name}: expected a number")
        return SignalValue(record_id, name, kind, score=float(raw))
    if kind == "categorical":
        if isinstance(raw, str):
            return SignalValue(record_id, name, kind, label=raw)
        if isinstance(raw, dict) and isinstance(raw.get("label"), str):
            conf = raw.get("confidence")
            return SignalValue(record_id, name, kind, label=raw["label"],
                               confidence=float(conf) if conf is not None else None)
        raise SignalError(f"{name}: expected a label")
    if kind == "boolean":
        if not isinstance(raw, bool):
            raise SignalError(f"{name}: expected a boolean")
        return SignalValue(record_id, name, kind, flag=raw)
    if kind == "count":
        if not isinstance(raw, int) or isinstance(raw, bool):
            raise SignalError(f"{name}: expected an integer")
        return SignalValue(record_id, name, kind, count=raw)
    if kind == "spans":
        if not isinstance(raw, list):
            raise SignalError(f"{name}: expected a span list")
        spans = []
        for item in raw:
            if not (isinstance(item, list) and len(item) == 3 and isinstance(item[2], str)):
                raise SignalError(f"{name}: spans must be [start, end, label] triples")
            spans.append((int(item[0]), int(item[1]), item[2]))
        return SignalValue(record_id, name, kind, spans=tuple(spans))
    raise SignalError(f"unknown signal kind: {kind!r}")


class ManifestProvider(Provider):
    """Precomputed signals from a manifest file, for fixtures and tests.

    Manifest JSON: {"records": {id: {signal: value}},
                    "images": {image ref: {signal: value}}}.
    Record-id entries take precedence over image-ref entries.
    """

    def __init__(self, manifest_path: str, descriptors: list[SignalDescriptor],
                 provider_id: str = "manifest"):
        obj = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        self.by_id: dict[str, dict] = obj.get("records", {})
        self.by_image: dict[str, dict] = obj.get("images", {})
        super().__init__(provider_id, descriptors)

    def _lookup(self, record: Record) -> dict | None:
        entry = self.by_id.get(record.id)
        if entry is None and record.image is not None:
            entry = self.by_image.get(record.image.ref)
        return entry

    def _query(self, batch, signals):
        values = []
        misses = []
        for record in batch:
            entry = self._lookup(record)
            for signal in signals:
                raw = None if entry is None else entry.get(signal)
                if raw is None:
                    misses.append(SignalMiss(record.id, signal, "no manifest entry"))
                    continue
                values.append(_value_from_raw(record.id, self.descriptors[signal], raw))
        return values, misses


# --------------------------------------------------------------------------
# Wire protocol

def encode_request_line(record: Record, signals: list[str]) -> str:
    return json.dumps(
        {
            "id": record.id,
            "text": record.text,
            "image_path": record.image.ref if record.image is not None else None,
            "signals": list(signals),
        },
        ensure_ascii=False,
    )


def parse_header_line(line: str) -> None:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"bad protocol header: {line!r}") from exc
    if not isinstance(obj, dict) or obj.get("daf_protocol") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol header: {line!r}")


def decode_response_lines(
    lines: list[str],
    batch: list[Record],
    signals: list[str],
    descriptors: dict[str, SignalDescriptor],
) -> tuple[list[SignalValue], list[SignalMiss]]:
    """Turn response lines into values/misses, enforcing the contract."""
    pending = {record.id for record in batch}
    values: list[SignalValue] = []
    misses: list[SignalMiss] = []
    for line in lines:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed response line: {line!r}") from exc
        if not isinstance(obj, dict) or not isinstance(obj.get("id"), str):
            raise ProtocolError(f"response line missing id: {line!r}")
        record_id = obj["id"]
        if record_id not in pending:
            raise ProtocolError(f"response for unknown or duplicate id {record_id!r}")
        pending.discard(record_id)
        if "error" in obj:
            for signal in signals:
                misses.append(SignalMiss(record_id, signal, str(obj["error"])))
            continue
        raw_values = obj.get("values")
        if not isinstance(raw_values, list):
            raise ProtocolError(f"response line missing values: {line!r}")
        seen: set[str] = set()
        for raw in raw_values:
            if not isinstance(raw, dict) or not isinstance(raw.get("signal"), str):
                raise ProtocolError(f"value entry missing signal name: {line!r}")
            signal = raw["signal"]
            if signal not in signals:
                raise ProtocolError(f"provider returned unrequested signal {signal!r}")
            if signal in seen:
                raise ProtocolError(f"duplicate value for signal {signal!r} on {record_id!r}")
            seen.add(signal)
            descriptor = descriptors[signal]
            kind = raw.get("kind", descriptor.kind)
            if kind != descriptor.kind:
                raise ProtocolError(
                    f"kind mismatch for {signal!r}: declared {descriptor.kind}, got {kind}"
                )
            try:
                value = _decode_wire_value(record_id, descriptor, raw)
            except SignalError as exc:
                raise ProtocolError(f"bad payload for {signal!r} on {record_id!r}: {exc}") from exc
            values.append(value)
        for signal in signals:
            if signal not in seen:
                misses.append(SignalMiss(record_id, signal, "signal omitted by provider"))
    for record_id in sorted(pending):
        for signal in signals:
            misses.append(SignalMiss(record_id, signal, "no response line"))
    return values, misses


def _decode_wire_value(record_id: str, descriptor: SignalDescriptor, raw: dict) -> SignalValue:
    kind = descriptor.kind
    if kind == "scalar01":
        return _value_from_raw(record_id, descriptor, raw.get("score"))
    if kind == "categorical":
        if raw.get("confidence") is not None:
            return _value_from_raw(record_id, descriptor,
                                   {"label": raw.get("label"), "confidence": raw.get("confidence")})
        return _value_from_raw(record_id, descriptor, raw.get("label"))
    if kind == "boolean":
        return _value_from_raw(record_id, descriptor, raw.get("flag"))
    if kind == "count":
        return _value_from_raw(record_id, descriptor, raw.get("count"))
    return _value_from_raw(record_id, descriptor, raw.get("spans"))


class SubprocessLinesProvider(Provider):
    """External provider over a child process's stdin/stdout.

    One session per provider; batches are serialized on the pipe.  A
    read timeout kills the child and retries (fresh process) up to
    ``retries`` times, after which the whole batch is counted missing.
    """

    transport = "subprocess-lines"

    def __init__(self, provider_id: str, command: list[str], descriptors: list[SignalDescriptor],
                 batch_size: int = 32, timeout: float = 10.0, retries: int = 2):
        super().__init__(provider_id, descriptors, batch_size=batch_size, timeout=timeout)
        self.command = command
        self.retries = retries
        self._proc: subprocess.Popen[str] | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()

    def _start(self) -> None:
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines = queue.Queue()
        thread = threading.Thread(target=self._pump, args=(self._proc,), daemon=True)
        thread.start()
        self._send(PROTOCOL_HEADER)
        parse_header_line(self._read_line())

    def _pump(self, proc: subprocess.Popen[str]) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            self._lines.put(line.rstrip("\n"))
        self._lines.put(None)

    def _send(self, line: str) -> None:
        assert self._proc is not None and self._proc.stdin is not None
        self._proc.stdin.write(line + "\n")
        self._proc.stdin.flush()

    def _read_line(self) -> str:
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty as exc:
            raise TimeoutError(f"provider {self.id!r} timed out after {self.timeout}s") from exc
        if line is None:
            raise TimeoutError(f"provider {self.id!r} closed its output")
        return line

    def _query(self, batch, signals):
        last_timeout: TimeoutError | None = None
        for _ in range(self.retries + 1):
            try:
                if self._proc is None or self._proc.poll() is not None:
                    self._start()
                for record in batch:
                    self._send(encode_request_line(record, signals))
                lines = [self._read_line() for _ in batch]
                return decode_response_lines(lines, batch, signals, self.descriptors)
            except (TimeoutError, BrokenPipeError, OSError) as exc:
                last_timeout = TimeoutError(str(exc))
                self.close()
        misses = [
            SignalMiss(record.id, signal, f"provider unavailable: {last_timeout}")
            for record in batch
            for signal in signals
        ]
        return [], misses

    def close(self) -> None:
        if self._proc is not None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=2.0)
            except OSError:
                pass
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None


class HttpProvider(Provider):
    """External provider over HTTP POST; body is the same line protocol."""

    transport = "http"

    def __init__(self, provider_id: str, url: str, descriptors: list[SignalDescriptor],
                 batch_size: int = 32, timeout: float = 10.0, retries: int = 2):
        super().__init__(provider_id, descriptors, batch_size=batch_size, timeout=timeout)
        self.url = url
        self.retries = retries

    def _query(self, batch, signals):
        body_lines = [PROTOCOL_HEADER] + [encode_request_line(r, signals) for r in batch]
        body = ("\n".join(body_lines) + "\n").encode("utf-8")
        request = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/x-ndjson"}
        )
        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    payload = response.read().decode("utf-8")
                lines = [line for line in payload.split("\n") if line]
                if not lines:
                    raise ProtocolError("empty response body")
                parse_header_line(lines[0])
                return decode_response_lines(lines[1:], batch, signals, self.descriptors)
            except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
                last_error = exc
        misses = [
            SignalMiss(record.id, signal, f"provider unavailable: {last_error}")
            for record in batch
            for signal in signals
        ]
        return [], misses
