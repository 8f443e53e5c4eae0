""""Who is in the data" analyses: people's presence and the
distribution of social characteristics.

Counting runs at two granularities on purpose: representation
questions count records (a record mentioning "man" three times is one
record about men), while term-frequency questions count occurrences.
Intersections are document-level co-occurrence of groups from
different axes.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .lexicon import LexiconError, TermMatcher
from .results import Distribution, IntersectionCount, Proportion
from .scan import Aggregator, RecordContext

PII_ID_SAMPLE_CAP = 100


@dataclass(frozen=True)
class IdentityStats:
    payload_kind = "distribution"

    by_axis: dict[str, Distribution]          # record-level group counts
    by_term: Distribution                     # occurrence-level term counts
    intersections: tuple[IntersectionCount, ...]
    records_scanned: int

    def group_count(self, axis: str, group: str) -> int:
        return self.by_axis.get(axis, Distribution(())).count(group)


@dataclass(frozen=True)
class HatefulTermStats:
    payload_kind = "distribution"

    by_term: Distribution                     # occurrence-level
    referenced_groups: dict[str, str]         # term -> group it references
    records_scanned: int


@dataclass(frozen=True)
class PiiStats:
    payload_kind = "proportion"

    proportion: Proportion
    label_counts: Distribution                # span-level counts per pii label
    flagged_ids: tuple[str, ...]              # capped sample; total below
    flagged_total: int


def _occurrences(context: RecordContext, kind: str) -> Counter[str]:
    """Occurrence counts by term; one occurrence per distinct span even
    when the same surface term belongs to several axes."""
    seen: set[tuple[str, int]] = set()
    counts: Counter[str] = Counter()
    for hit in context.hits:
        if hit.kind != kind:
            continue
        key = (hit.term, hit.start)
        if key in seen:
            continue
        seen.add(key)
        counts[hit.term] += 1
    return counts


class IdentityTermAggregator(Aggregator):
    """Group/term counting with optional windowed intersections.

    By default two groups intersect when they co-occur anywhere in one
    record; with intersection_window=N they must additionally have hits
    whose starting tokens lie within N tokens of each other.
    """

    def __init__(self, matcher: TermMatcher, intersections: Iterable[tuple[str, str]] = (),
                 intersection_window: int | None = None):
        if "identity" not in matcher.kinds:
            raise LexiconError("identity term stats need at least one identity lexicon")
        if intersection_window is not None and intersection_window < 1:
            raise ValueError("intersection window must be >= 1 token")
        identity_axes = {axis for axis, kind in matcher.axes.items() if kind == "identity"}
        self.intersections = []
        for left, right in intersections:
            for axis in (left, right):
                if axis not in identity_axes:
                    raise LexiconError(f"unknown identity axis in intersection request: {axis!r}")
            if left == right:
                raise LexiconError("intersections need two distinct axes")
            self.intersections.append((left, right))
        self.intersection_window = intersection_window
        self.group_counts: Counter[tuple[str, str]] = Counter()
        self.term_counts: Counter[str] = Counter()
        self.pair_counts: Counter[tuple[tuple[str, str], tuple[str, str]]] = Counter()
        self.records_scanned = 0

    def _within_window(self, context: RecordContext, left: tuple[str, str],
                       right: tuple[str, str]) -> bool:
        if self.intersection_window is None:
            return True
        lefts = [h.token_start for h in context.hits if (h.axis, h.group) == left]
        rights = [h.token_start for h in context.hits if (h.axis, h.group) == right]
        return any(abs(a - b) <= self.intersection_window for a in lefts for b in rights)

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        groups = {(h.axis, h.group) for h in context.hits if h.kind == "identity"}
        for group in groups:
            self.group_counts[group] += 1
        self.term_counts.update(_occurrences(context, "identity"))
        for left_axis, right_axis in self.intersections:
            lefts = sorted(g for a, g in groups if a == left_axis)
            rights = sorted(g for a, g in groups if a == right_axis)
            for lg in lefts:
                for rg in rights:
                    if self._within_window(context, (left_axis, lg), (right_axis, rg)):
                        self.pair_counts[((left_axis, lg), (right_axis, rg))] += 1

    def merge(self, other: "IdentityTermAggregator") -> None:
        self.group_counts.update(other.group_counts)
        self.term_counts.update(other.term_counts)
        self.pair_counts.update(other.pair_counts)
        self.records_scanned += other.records_scanned

    def finalize(self) -> IdentityStats:
        axes = sorted({axis for axis, _ in self.group_counts})
        by_axis = {
            axis: Distribution.from_counts(
                {group: count for (a, group), count in self.group_counts.items() if a == axis}
            )
            for axis in axes
        }
        intersections = tuple(
            IntersectionCount(groups=tuple(sorted(pair)), count=count)
            for pair, count in sorted(self.pair_counts.items())
        )
        return IdentityStats(
            by_axis=by_axis,
            by_term=Distribution.from_counts(dict(self.term_counts)),
            intersections=intersections,
            records_scanned=self.records_scanned,
        )


class PronounAggregator(Aggregator):
    def __init__(self, matcher: TermMatcher):
        if "pronoun" not in matcher.kinds:
            raise LexiconError("pronoun distribution needs a pronoun lexicon")
        self.counts: Counter[str] = Counter()
        self.records_scanned = 0

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        seen_spans: set[tuple[str, int]] = set()
        for hit in context.hits:
            if hit.kind != "pronoun":
                continue
            key = (hit.group, hit.start)
            if key in seen_spans:
                continue
            seen_spans.add(key)
            self.counts[hit.group] += 1

    def merge(self, other: "PronounAggregator") -> None:
        self.counts.update(other.counts)
        self.records_scanned += other.records_scanned

    def finalize(self) -> Distribution:
        return Distribution.from_counts(dict(self.counts))


class HatefulTermAggregator(Aggregator):
    def __init__(self, matcher: TermMatcher):
        self.matcher = matcher
        self.term_counts: Counter[str] = Counter()
        self.referenced_groups: dict[str, str] = {}
        self.records_scanned = 0

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        for hit in context.hits:
            if hit.kind != "hateful":
                continue
            self.referenced_groups[hit.term] = hit.group
        self.term_counts.update(dict(_occurrences(context, "hateful")))

    def merge(self, other: "HatefulTermAggregator") -> None:
        self.term_counts.update(other.term_counts)
        self.referenced_groups.update(other.referenced_groups)
        self.records_scanned += other.records_scanned

    def finalize(self) -> HatefulTermStats:
        return HatefulTermStats(
            by_term=Distribution.from_counts(dict(self.term_counts)),
            referenced_groups=dict(sorted(self.referenced_groups.items())),
            records_scanned=self.records_scanned,
        )


class PiiAggregator(Aggregator):
    """Presence of PII via the "pii" spans signal.

    The proportion is flagged records over records that actually have
    the signal; a record with several spans counts once there but each
    span counts toward its label.  The id sample keeps the id_cap
    lexicographically smallest flagged ids, so it is stable under any
    shard topology.
    """

    def __init__(self, id_cap: int = PII_ID_SAMPLE_CAP):
        self.id_cap = id_cap
        self.flagged_ids: list[str] = []
        self.flagged_total = 0
        self.scored = 0
        self.n_missing = 0
        self.label_counts: Counter[str] = Counter()
        self.records_scanned = 0

    def _keep_lowest(self, ids: Iterable[str]) -> None:
        self.flagged_ids.extend(ids)
        if len(self.flagged_ids) > self.id_cap:
            self.flagged_ids.sort()
            del self.flagged_ids[self.id_cap:]

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        value = context.signals.get("pii")
        if value is None:
            self.n_missing += 1
            return
        self.scored += 1
        assert value.spans is not None
        if value.spans:
            self.flagged_total += 1
            self._keep_lowest([context.record.id])
            for _, _, label in value.spans:
                self.label_counts[label] += 1

    def merge(self, other: "PiiAggregator") -> None:
        self.flagged_total += other.flagged_total
        self.scored += other.scored
        self.n_missing += other.n_missing
        self.label_counts.update(other.label_counts)
        self.records_scanned += other.records_scanned
        self._keep_lowest(other.flagged_ids)

    def finalize(self) -> PiiStats:
        return PiiStats(
            proportion=Proportion(
                numerator=self.flagged_total, denominator=self.scored, n_missing=self.n_missing
            ),
            label_counts=Distribution.from_counts(dict(self.label_counts)),
            flagged_ids=tuple(sorted(self.flagged_ids)),
            flagged_total=self.flagged_total,
        )


def identity_term_stats(
    stream: Iterable[RecordContext],
    matcher: TermMatcher,
    intersections: Iterable[tuple[str, str]] = (),
    intersection_window: int | None = None,
) -> IdentityStats:
    aggregator = IdentityTermAggregator(matcher, intersections, intersection_window)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def pronoun_distribution(stream: Iterable[RecordContext], matcher: TermMatcher) -> Distribution:
    aggregator = PronounAggregator(matcher)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def hateful_term_stats(stream: Iterable[RecordContext], matcher: TermMatcher) -> HatefulTermStats:
    aggregator = HatefulTermAggregator(matcher)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def pii_presence(stream: Iterable[RecordContext], id_cap: int = PII_ID_SAMPLE_CAP) -> PiiStats:
    aggregator = PiiAggregator(id_cap=id_cap)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()
