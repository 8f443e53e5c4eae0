"""Per-record scan context shared by every analysis.

A RecordContext is a record plus everything computed once per pass:
its folded tokens, its term hits, and whatever inferred signals the
plan requested.  Analyses are mergeable aggregators over contexts, so
a sharded scan merges into exactly the single-shard result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .corpus import Record, TokenizationPolicy, tokenize
from .lexicon import TermHit, TermMatcher
from .signals import Provider, SignalValue

DEFAULT_POLICY = TokenizationPolicy()


@dataclass(frozen=True)
class RecordContext:
    record: Record
    tokens: tuple[str, ...]
    hits: tuple[TermHit, ...]
    signals: dict[str, SignalValue] = field(default_factory=dict)
    missing: frozenset[str] = frozenset()

    @property
    def token_set(self) -> frozenset[str]:
        return frozenset(self.tokens)


def build_context(
    record: Record,
    matcher: TermMatcher | None = None,
    signal_values: dict[str, SignalValue] | None = None,
    missing: Iterable[str] = (),
    policy: TokenizationPolicy = DEFAULT_POLICY,
) -> RecordContext:
    text = record.text or ""
    tokens = tokenize(text, policy)
    hits: tuple[TermHit, ...] = ()
    if matcher is not None and text:
        hits = tuple(matcher.match_tokens(tokens))
    return RecordContext(
        record=record,
        tokens=tuple(t.text for t in tokens),
        hits=hits,
        signals=dict(signal_values or {}),
        missing=frozenset(missing),
    )


class ContextStream:
    """Batches records through providers and yields enriched contexts.

    ``assignments`` maps each provider to the signal names it serves.
    Per-signal miss counts accumulate in ``miss_counts`` as iteration
    proceeds; contexts come out in record order regardless of provider
    batching.
    """

    def __init__(
        self,
        records: Iterable[Record],
        matcher: TermMatcher | None = None,
        assignments: list[tuple[Provider, list[str]]] | None = None,
        policy: TokenizationPolicy = DEFAULT_POLICY,
        chunk_size: int = 64,
    ):
        self.records = records
        self.matcher = matcher
        self.assignments = assignments or []
        self.policy = policy
        self.chunk_size = chunk_size
        self.miss_counts: dict[str, int] = {}
        self.records_scanned = 0

    def _signal_chunk(self, chunk: list[Record]) -> list[RecordContext]:
        per_record: dict[str, dict[str, SignalValue]] = {r.id: {} for r in chunk}
        per_record_missing: dict[str, set[str]] = {r.id: set() for r in chunk}
        for provider, signals in self.assignments:
            if not signals:
                continue
            step = max(1, provider.batch_size)
            for start in range(0, len(chunk), step):
                batch = chunk[start:start + step]
                values, misses = provider.query(batch, signals)
                for value in values:
                    per_record[value.record_id][value.signal] = value
                for miss in misses:
                    per_record_missing[miss.record_id].add(miss.signal)
                    self.miss_counts[miss.signal] = self.miss_counts.get(miss.signal, 0) + 1
        return [
            build_context(
                record,
                matcher=self.matcher,
                signal_values=per_record[record.id],
                missing=per_record_missing[record.id],
                policy=self.policy,
            )
            for record in chunk
        ]

    def __iter__(self) -> Iterator[RecordContext]:
        chunk: list[Record] = []
        for record in self.records:
            chunk.append(record)
            if len(chunk) >= self.chunk_size:
                for context in self._signal_chunk(chunk):
                    self.records_scanned += 1
                    yield context
                chunk = []
        if chunk:
            for context in self._signal_chunk(chunk):
                self.records_scanned += 1
                yield context


def contexts(
    records: Iterable[Record],
    matcher: TermMatcher | None = None,
    providers: list[tuple[Provider, list[str]]] | None = None,
    policy: TokenizationPolicy = DEFAULT_POLICY,
) -> ContextStream:
    """Convenience wrapper used by the functional analysis entry points."""
    return ContextStream(records, matcher=matcher, assignments=providers, policy=policy)


class Aggregator:
    """Mergeable analysis state: update per record, merge shards, finalize.

    merge() must be associative and commutative with the freshly
    constructed aggregator as identity, so shard topology never changes
    the final result.
    """

    def update(self, context: RecordContext) -> None:
        raise NotImplementedError

    def merge(self, other: "Aggregator") -> None:
        raise NotImplementedError

    def finalize(self) -> object:
        raise NotImplementedError
