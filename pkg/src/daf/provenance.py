"""Provenance analyses: source domains, geography, recency, duplication,
and cross-dataset overlap.

Domain attribution is public-suffix aware ("news.bbc.co.uk" belongs to
"bbc.co.uk", not "co.uk") against a bundled snapshot, with a
last-two-labels fallback for unknown suffixes.  Geography is ccTLD-only
by design: generic TLDs land in an explicit "unattributed" bucket
rather than being guessed.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from importlib import resources as importlib_resources
from typing import Iterable
from urllib.parse import urlsplit

import numpy as np

from .corpus import TokenizationPolicy, normalize_text, parse_timestamp
from .results import Distribution, DomainStats, DuplicateReport, OverlapReport, TopSources
from .scan import Aggregator, RecordContext

# Near-duplicate defaults: 13-token shingles, 128 permutations, Jaccard 0.8.
DEFAULT_SHINGLE_WIDTH = 13
DEFAULT_PERMUTATIONS = 128
DEFAULT_JACCARD_THRESHOLD = 0.8
DEFAULT_DEDUP_SEED = 1
DEFAULT_OVERLAP_NGRAM = 13

_MERSENNE_61 = (1 << 61) - 1

_NORMALIZE_POLICY = TokenizationPolicy()


def _load_resource(name: str) -> str:
    return importlib_resources.files("daf").joinpath(f"resources/{name}").read_text(encoding="utf-8")


class PublicSuffixSnapshot:
    """Longest-match public suffix lookup over the bundled snapshot."""

    _instance: "PublicSuffixSnapshot | None" = None

    def __init__(self, text: str):
        self.suffixes: set[str] = set()
        self.wildcards: set[str] = set()  # "*.ck" stored as "ck"
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("//"):
                continue
            if line.startswith("*."):
                self.wildcards.add(line[2:])
            else:
                self.suffixes.add(line)

    @classmethod
    def bundled(cls) -> "PublicSuffixSnapshot":
        if cls._instance is None:
            cls._instance = cls(_load_resource("public_suffix.dat"))
        return cls._instance

    def suffix_length(self, labels: list[str]) -> int:
        """Number of trailing labels forming the longest known suffix."""
        best = 0
        for take in range(1, len(labels) + 1):
            candidate = ".".join(labels[-take:])
            if candidate in self.suffixes:
                best = take
            if take >= 2 and ".".join(labels[-(take - 1):]) in self.wildcards:
                best = max(best, take)
        return best


def registrable_domain(host: str, snapshot: PublicSuffixSnapshot | None = None) -> str | None:
    """Public-suffix-aware owner domain; None when the host is unusable."""
    snapshot = snapshot or PublicSuffixSnapshot.bundled()
    host = host.strip().strip(".").lower()
    if not host or any(not label for label in host.split(".")):
        return None
    labels = host.split(".")
    if len(labels) < 2:
        return None
    suffix_len = snapshot.suffix_length(labels)
    if suffix_len >= len(labels):
        return None  # the host IS a public suffix
    if suffix_len == 0:
        return ".".join(labels[-2:])  # fallback: last two labels
    return ".".join(labels[-(suffix_len + 1):])


def domain_of_url(url: str, snapshot: PublicSuffixSnapshot | None = None) -> str | None:
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    if not host:
        return None
    return registrable_domain(host, snapshot)


def load_cctld_table() -> dict[str, str]:
    table: dict[str, str] = {}
    for line in _load_resource("cctld_countries.tsv").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tld, _, name = line.partition("\t")
        table[tld] = name
    return table


class TopSourcesAggregator(Aggregator):
    def __init__(self, snapshot: PublicSuffixSnapshot | None = None):
        self.snapshot = snapshot or PublicSuffixSnapshot.bundled()
        self.records: Counter[str] = Counter()
        self.tokens: Counter[str] = Counter()
        self.missing_records = 0
        self.missing_tokens = 0

    def update(self, context: RecordContext) -> None:
        url = context.record.meta.get("url")
        domain = domain_of_url(url, self.snapshot) if url else None
        token_count = len(context.tokens)
        if domain is None:
            self.missing_records += 1
            self.missing_tokens += token_count
            return
        self.records[domain] += 1
        self.tokens[domain] += token_count

    def merge(self, other: "TopSourcesAggregator") -> None:
        self.records.update(other.records)
        self.tokens.update(other.tokens)
        self.missing_records += other.missing_records
        self.missing_tokens += other.missing_tokens

    def finalize_top(self, k: int) -> TopSources:
        ranked = sorted(self.records, key=lambda d: (-self.tokens[d], d))
        domains = tuple(
            DomainStats(domain=d, records=self.records[d], tokens=self.tokens[d]) for d in ranked[:k]
        )
        return TopSources(
            domains=domains,
            n_missing=self.missing_records,
            attributed_tokens=sum(self.tokens.values()),
            missing_tokens=self.missing_tokens,
        )

    def finalize(self) -> TopSources:
        return self.finalize_top(k=20)


class GeographyAggregator(Aggregator):
    """Country counts by the ccTLD of each record's registrable domain."""

    def __init__(self, snapshot: PublicSuffixSnapshot | None = None):
        self.snapshot = snapshot or PublicSuffixSnapshot.bundled()
        self.table = load_cctld_table()
        self.counts: Counter[str] = Counter()
        self.missing = 0

    def update(self, context: RecordContext) -> None:
        url = context.record.meta.get("url")
        domain = domain_of_url(url, self.snapshot) if url else None
        if domain is None:
            self.missing += 1
            return
        tld = domain.rsplit(".", 1)[-1]
        self.counts[self.table.get(tld, "unattributed")] += 1

    def merge(self, other: "GeographyAggregator") -> None:
        self.counts.update(other.counts)
        self.missing += other.missing

    def finalize(self) -> Distribution:
        return Distribution.from_counts(dict(self.counts))


class PublicationAggregator(Aggregator):
    def __init__(self):
        self.years: Counter[str] = Counter()
        self.missing = 0

    def update(self, context: RecordContext) -> None:
        raw = context.record.meta.get("timestamp")
        stamp = parse_timestamp(raw) if raw else None
        if stamp is None:
            self.missing += 1
            return
        self.years[str(stamp.year)] += 1

    def merge(self, other: "PublicationAggregator") -> None:
        self.years.update(other.years)
        self.missing += other.missing

    def finalize(self) -> Distribution:
        return Distribution(entries=tuple(sorted(self.years.items())))


# --------------------------------------------------------------------------
# Duplication

def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def record_digest(context: RecordContext) -> str | None:
    """Duplicate identity: normalized text, or raw image bytes for
    text-less records when the referenced file is readable."""
    record = context.record
    if record.text is not None:
        return _digest(normalize_text(record.text, _NORMALIZE_POLICY))
    if record.image is not None:
        try:
            with open(record.image.ref, "rb") as fh:
                return hashlib.sha256(fh.read()).hexdigest()
        except OSError:
            return None
    return None


def shingle_hashes(tokens: tuple[str, ...], width: int) -> np.ndarray:
    """64-bit hashes of the w-token shingles, deduplicated and sorted."""
    if len(tokens) < width:
        return np.empty(0, dtype=np.uint64)
    out = set()
    for i in range(len(tokens) - width + 1):
        shingle = "\x1f".join(tokens[i:i + width])
        out.add(int.from_bytes(hashlib.blake2b(shingle.encode("utf-8"), digest_size=8).digest(), "big"))
    return np.array(sorted(out), dtype=np.uint64)


class _MinHasher:
    """min over (a*x + b) mod 2^64 per permutation; a odd, seeded."""

    def __init__(self, permutations: int, seed: int):
        rng = np.random.default_rng(seed)
        self.a = (rng.integers(0, 2**63, size=permutations, dtype=np.uint64) << np.uint64(1)) | np.uint64(1)
        self.b = rng.integers(0, 2**63, size=permutations, dtype=np.uint64)
        self.permutations = permutations

    def sketch(self, hashes: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            table = self.a[:, None] * hashes[None, :] + self.b[:, None]
        return table.min(axis=1)


def _band_shape(permutations: int, threshold: float) -> tuple[int, int]:
    """(bands, rows) whose LSH crossover (1/b)^(1/r) sits at or below
    threshold^2.  Candidates err strongly toward recall; exact Jaccard
    verification removes the extra candidates afterwards."""
    target = threshold * threshold
    best = (permutations, 1)
    best_gap = float("inf")
    for rows in range(1, permutations + 1):
        if permutations % rows:
            continue
        bands = permutations // rows
        crossover = (1.0 / bands) ** (1.0 / rows)
        if crossover <= target and target - crossover < best_gap:
            best_gap = target - crossover
            best = (bands, rows)
    return best


def true_jaccard(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0 and len(b) == 0:
        return 0.0
    inter = len(np.intersect1d(a, b, assume_unique=True))
    union = len(a) + len(b) - inter
    return inter / union if union else 0.0


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic: smaller id becomes the root
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


class ExactDuplicateAggregator(Aggregator):
    def __init__(self):
        self.by_digest: dict[str, list[str]] = {}
        self.records_scanned = 0
        self.undigestable = 0

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        digest = record_digest(context)
        if digest is None:
            self.undigestable += 1
            return
        self.by_digest.setdefault(digest, []).append(context.record.id)

    def merge(self, other: "ExactDuplicateAggregator") -> None:
        self.records_scanned += other.records_scanned
        self.undigestable += other.undigestable
        for digest, ids in other.by_digest.items():
            self.by_digest.setdefault(digest, []).extend(ids)

    def finalize(self) -> DuplicateReport:
        clusters = tuple(
            tuple(sorted(ids))
            for _, ids in sorted(self.by_digest.items())
            if len(ids) >= 2
        )
        clusters = tuple(sorted(clusters))
        return DuplicateReport(
            mode="exact",
            clusters=clusters,
            records_scanned=self.records_scanned,
            parameters={},
        )


class NearDuplicateAggregator(Aggregator):
    """MinHash-LSH candidates verified by true Jaccard, then union-find.

    Records shorter than one shingle cannot be sketched; they fall back
    to exact-digest clustering and are counted in short_records.  With
    candidates="all-pairs" every pair is verified exactly (no sketch
    misses) — the small-corpus test mode.
    """

    def __init__(
        self,
        shingle_width: int = DEFAULT_SHINGLE_WIDTH,
        permutations: int = DEFAULT_PERMUTATIONS,
        jaccard_threshold: float = DEFAULT_JACCARD_THRESHOLD,
        seed: int = DEFAULT_DEDUP_SEED,
        candidates: str = "minhash",
    ):
        if candidates not in ("minhash", "all-pairs"):
            raise ValueError(f"unknown candidate mode: {candidates!r}")
        if not 0.0 < jaccard_threshold <= 1.0:
            raise ValueError("jaccard threshold must be in (0, 1]")
        self.shingle_width = shingle_width
        self.permutations = permutations
        self.jaccard_threshold = jaccard_threshold
        self.seed = seed
        self.candidates = candidates
        self.hasher = _MinHasher(permutations, seed)
        self.records_scanned = 0
        self.shingles: dict[str, np.ndarray] = {}
        self.sketches: dict[str, np.ndarray] = {}
        self.short: dict[str, str | None] = {}  # id -> exact digest (or None)

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        record_id = context.record.id
        hashes = shingle_hashes(context.tokens, self.shingle_width)
        if len(hashes) == 0:
            self.short[record_id] = record_digest(context)
            return
        self.shingles[record_id] = hashes
        if self.candidates == "minhash":
            self.sketches[record_id] = self.hasher.sketch(hashes)

    def merge(self, other: "NearDuplicateAggregator") -> None:
        self.records_scanned += other.records_scanned
        self.shingles.update(other.shingles)
        self.sketches.update(other.sketches)
        self.short.update(other.short)

    def _candidate_pairs(self) -> set[tuple[str, str]]:
        ids = sorted(self.shingles)
        if self.candidates == "all-pairs":
            return {(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]}
        bands, rows = _band_shape(self.permutations, self.jaccard_threshold)
        pairs: set[tuple[str, str]] = set()
        for band in range(bands):
            buckets: dict[bytes, list[str]] = {}
            lo, hi = band * rows, (band + 1) * rows
            for record_id in ids:
                key = self.sketches[record_id][lo:hi].tobytes()
                buckets.setdefault(key, []).append(record_id)
            for members in buckets.values():
                for i, a in enumerate(members):
                    for b in members[i + 1:]:
                        pairs.add((a, b) if a < b else (b, a))
        return pairs

    def finalize(self) -> DuplicateReport:
        uf = _UnionFind()
        for a, b in sorted(self._candidate_pairs()):
            if true_jaccard(self.shingles[a], self.shingles[b]) >= self.jaccard_threshold:
                uf.union(a, b)
        groups: dict[str, list[str]] = {}
        for record_id in self.shingles:
            groups.setdefault(uf.find(record_id), []).append(record_id)
        # records too short to shingle: exact-identity only
        short_by_digest: dict[str, list[str]] = {}
        for record_id, digest in self.short.items():
            if digest is not None:
                short_by_digest.setdefault(digest, []).append(record_id)
        clusters = [tuple(sorted(ids)) for ids in groups.values() if len(ids) >= 2]
        clusters.extend(tuple(sorted(ids)) for ids in short_by_digest.values() if len(ids) >= 2)
        return DuplicateReport(
            mode="near",
            clusters=tuple(sorted(clusters)),
            records_scanned=self.records_scanned,
            parameters={
                "shingle_width": self.shingle_width,
                "permutations": self.permutations,
                "jaccard_threshold": self.jaccard_threshold,
                "seed": self.seed,
                "candidates": self.candidates,
            },
            short_records=len(self.short),
        )


# --------------------------------------------------------------------------
# Cross-dataset overlap

class OverlapIndex:
    """Membership index over dataset B for overlap checks from A."""

    def __init__(self, mode: str, ngram_width: int = DEFAULT_OVERLAP_NGRAM):
        if mode not in ("exact-text", "ngram-containment"):
            raise ValueError(f"unknown overlap mode: {mode!r}")
        if mode == "ngram-containment" and ngram_width < 1:
            raise ValueError("ngram width must be >= 1")
        self.mode = mode
        self.ngram_width = ngram_width
        self.digests: set[str] = set()
        self.ngrams: set[bytes] = set()

    def add(self, context: RecordContext) -> None:
        if context.record.text is None:
            return
        if self.mode == "exact-text":
            self.digests.add(_digest(normalize_text(context.record.text, _NORMALIZE_POLICY)))
            return
        tokens = context.tokens
        width = self.ngram_width
        for i in range(len(tokens) - width + 1):
            gram = "\x1f".join(tokens[i:i + width])
            self.ngrams.add(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest())

    def matches(self, context: RecordContext) -> bool:
        if context.record.text is None:
            return False
        if self.mode == "exact-text":
            return _digest(normalize_text(context.record.text, _NORMALIZE_POLICY)) in self.digests
        tokens = context.tokens
        width = self.ngram_width
        for i in range(len(tokens) - width + 1):
            gram = "\x1f".join(tokens[i:i + width])
            if hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest() in self.ngrams:
                return True
        return False


class OverlapAggregator(Aggregator):
    """Scans dataset A against a pre-built index of dataset B."""

    SAMPLE_CAP = 50

    def __init__(self, index: OverlapIndex, label_a: str, label_b: str):
        self.index = index
        self.label_a = label_a
        self.label_b = label_b
        self.total = 0
        self.matched = 0
        self.sample: list[str] = []

    def update(self, context: RecordContext) -> None:
        self.total += 1
        if self.index.matches(context):
            self.matched += 1
            self.sample.append(context.record.id)
            if len(self.sample) > self.SAMPLE_CAP:
                self.sample.sort()
                del self.sample[self.SAMPLE_CAP:]

    def merge(self, other: "OverlapAggregator") -> None:
        self.total += other.total
        self.matched += other.matched
        self.sample.extend(other.sample)
        if len(self.sample) > self.SAMPLE_CAP:
            self.sample.sort()
            del self.sample[self.SAMPLE_CAP:]

    def finalize(self) -> OverlapReport:
        return OverlapReport(
            dataset_a=self.label_a,
            dataset_b=self.label_b,
            mode=self.index.mode,
            matched=self.matched,
            total_a=self.total,
            ngram_width=self.index.ngram_width if self.index.mode == "ngram-containment" else None,
            matched_sample=tuple(sorted(self.sample)),
        )


# --------------------------------------------------------------------------
# Functional entry points

def top_sources(stream: Iterable[RecordContext], k: int) -> TopSources:
    aggregator = TopSourcesAggregator()
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize_top(k)


def geographic_spread(stream: Iterable[RecordContext]) -> tuple[Distribution, int]:
    aggregator = GeographyAggregator()
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize(), aggregator.missing


def publication_histogram(stream: Iterable[RecordContext]) -> tuple[Distribution, int]:
    aggregator = PublicationAggregator()
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize(), aggregator.missing


def duplicate_report(stream: Iterable[RecordContext], mode: str = "exact", **params) -> DuplicateReport:
    if mode == "exact":
        aggregator: Aggregator = ExactDuplicateAggregator()
    elif mode == "near":
        aggregator = NearDuplicateAggregator(**params)
    else:
        raise ValueError(f"unknown duplication mode: {mode!r}")
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def dataset_overlap(
    stream_a: Iterable[RecordContext],
    stream_b: Iterable[RecordContext],
    mode: str = "exact-text",
    ngram_width: int = DEFAULT_OVERLAP_NGRAM,
    label_a: str = "A",
    label_b: str = "B",
) -> OverlapReport:
    index = OverlapIndex(mode, ngram_width)
    for context in stream_b:
        index.add(context)
    aggregator = OverlapAggregator(index, label_a, label_b)
    for context in stream_a:
        aggregator.update(context)
    return aggregator.finalize()
