"""Human x Content association engine: disaggregated tables, top
co-occurrences, and lift flagging.

The unit of co-occurrence is the record: c(g, t) counts records
containing both the group and the token.  PMI(g, t) =
log2(c(g,t) * T / (c(g) * c(t))) over T scanned records.  A group's
own trigger terms are excluded from its co-occurrence list, otherwise
every group would trivially top its own chart.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .content_analyses import bin_index, bin_label
from .lexicon import TermMatcher
from .results import (
    AssociationFlag,
    CooccurrenceEntry,
    CooccurrenceResult,
    DisaggregatedTable,
    GroupCooccurrences,
    GroupKey,
)
from .scan import Aggregator, RecordContext
from .signals import SignalError

DEFAULT_LIFT_THRESHOLD = 2.0
DEFAULT_SUPPORT = 5


@dataclass(frozen=True)
class TermAxesSource:
    """Group keys from lexicon hits, optionally restricted to some axes."""

    axes: tuple[str, ...] | None = None

    def keys(self, context: RecordContext) -> frozenset[GroupKey] | None:
        keys = set()
        for hit in context.hits:
            if hit.kind != "identity":
                continue
            if self.axes is not None and hit.axis not in self.axes:
                continue
            keys.add(GroupKey("terms", hit.axis, hit.group))
        return frozenset(keys)

    def trigger_tokens(self, matcher: TermMatcher, key: GroupKey) -> frozenset[str]:
        return matcher.trigger_tokens(key.name, key.value)


@dataclass(frozen=True)
class SignalLabelSource:
    """Group keys from a categorical or spans-kind signal.

    Returns None when the record lacks the signal (missing, counted),
    and an empty set when the signal is present but carries no labels.
    """

    signal: str

    def keys(self, context: RecordContext) -> frozenset[GroupKey] | None:
        value = context.signals.get(self.signal)
        if value is None:
            return None
        if value.kind == "categorical":
            return frozenset({GroupKey("signal", self.signal, value.label)})
        if value.kind == "spans":
            return frozenset(GroupKey("signal", self.signal, label) for _, _, label in value.spans)
        raise SignalError(f"{self.signal}: group source needs categorical or spans, got {value.kind}")

    def trigger_tokens(self, matcher: TermMatcher, key: GroupKey) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True)
class CategoricalContent:
    signal: str

    def keys(self, context: RecordContext) -> frozenset[str] | None:
        value = context.signals.get(self.signal)
        if value is None:
            return None
        if value.kind != "categorical":
            raise SignalError(f"{self.signal}: content source needs categorical, got {value.kind}")
        return frozenset({value.label})


@dataclass(frozen=True)
class BinnedScalarContent:
    signal: str
    edges: tuple[float, ...]

    def keys(self, context: RecordContext) -> frozenset[str] | None:
        value = context.signals.get(self.signal)
        if value is None:
            return None
        if value.kind != "scalar01":
            raise SignalError(f"{self.signal}: content source needs scalar01, got {value.kind}")
        assert value.score is not None
        return frozenset({bin_label(self.edges, bin_index(self.edges, value.score))})


@dataclass(frozen=True)
class BooleanContent:
    """Boolean/thresholded-scalar/count signal as "true"/"false" columns."""

    signal: str
    threshold: float | None = None

    def keys(self, context: RecordContext) -> frozenset[str] | None:
        value = context.signals.get(self.signal)
        if value is None:
            return None
        if value.kind == "boolean":
            flag = value.flag
        elif value.kind == "scalar01":
            if self.threshold is None:
                raise SignalError(f"{self.signal}: scalar content needs a threshold")
            flag = value.score >= self.threshold
        elif value.kind == "count":
            flag = value.count > 0
        else:
            raise SignalError(f"{self.signal}: boolean content over unsupported kind {value.kind}")
        return frozenset({"true" if flag else "false"})


@dataclass(frozen=True)
class SpanLabelContent:
    """Labels of a spans-kind signal (e.g. detected image objects)."""

    signal: str

    def keys(self, context: RecordContext) -> frozenset[str] | None:
        value = context.signals.get(self.signal)
        if value is None:
            return None
        if value.kind != "spans":
            raise SignalError(f"{self.signal}: content source needs spans, got {value.kind}")
        return frozenset(label for _, _, label in value.spans)


@dataclass(frozen=True)
class TermAxisContent:
    """Groups of one lexicon axis used as content categories."""

    axis: str

    def keys(self, context: RecordContext) -> frozenset[str] | None:
        return frozenset(h.group for h in context.hits if h.axis == self.axis)


class CooccurrenceAggregator(Aggregator):
    """Record-level co-occurrence by default; with window=N, a token
    only co-occurs with a term-based group when it sits within N tokens
    of one of that group's hits (signal-based groups have no positions,
    so the window does not restrict them)."""

    def __init__(
        self,
        group_source: TermAxesSource | SignalLabelSource,
        stopwords: frozenset[str] = frozenset(),
        min_count: int = 1,
        matcher: TermMatcher | None = None,
        window: int | None = None,
    ):
        if min_count < 1:
            raise ValueError("min_count must be >= 1")
        if window is not None and window < 1:
            raise ValueError("window must be >= 1 token")
        self.group_source = group_source
        self.stopwords = stopwords
        self.min_count = min_count
        self.matcher = matcher
        self.window = window
        self.records_scanned = 0
        self.group_counts: Counter[GroupKey] = Counter()
        self.token_counts: Counter[str] = Counter()
        self.pair_counts: Counter[tuple[GroupKey, str]] = Counter()

    def _group_tokens(self, context: RecordContext, group: GroupKey,
                      tokens: frozenset[str]) -> frozenset[str]:
        if self.window is None or group.origin != "terms":
            return tokens
        near: set[str] = set()
        for hit in context.hits:
            if (hit.axis, hit.group) != (group.name, group.value):
                continue
            lo = max(0, hit.token_start - self.window)
            hi = min(len(context.tokens), hit.token_end + self.window)
            near.update(context.tokens[lo:hi])
        return tokens & near

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        tokens = context.token_set - self.stopwords
        for token in tokens:
            self.token_counts[token] += 1
        groups = self.group_source.keys(context)
        if not groups:
            return
        for group in groups:
            self.group_counts[group] += 1
            for token in self._group_tokens(context, group, tokens):
                self.pair_counts[(group, token)] += 1

    def merge(self, other: "CooccurrenceAggregator") -> None:
        self.records_scanned += other.records_scanned
        self.group_counts.update(other.group_counts)
        self.token_counts.update(other.token_counts)
        self.pair_counts.update(other.pair_counts)

    def pmi(self, group: GroupKey, token: str) -> float:
        joint = self.pair_counts[(group, token)]
        return math.log2(
            joint * self.records_scanned / (self.group_counts[group] * self.token_counts[token])
        )

    def finalize_ranked(self, k: int, ranking: str) -> CooccurrenceResult:
        if ranking not in ("count", "pmi"):
            raise ValueError(f"unknown ranking: {ranking!r}")
        if k < 1:
            raise ValueError("k must be >= 1")
        result = []
        for group in sorted(self.group_counts, key=lambda g: g.label):
            excluded = self.stopwords
            if self.matcher is not None:
                excluded = excluded | self.group_source.trigger_tokens(self.matcher, group)
            candidates = []
            for (g, token), count in self.pair_counts.items():
                if g != group or token in excluded or count < self.min_count:
                    continue
                candidates.append(CooccurrenceEntry(token=token, count=count, pmi=self.pmi(g, token)))
            if ranking == "count":
                candidates.sort(key=lambda e: (-e.count, e.token))
            else:
                candidates.sort(key=lambda e: (-e.pmi, e.token))
            result.append(GroupCooccurrences(group=group, entries=tuple(candidates[:k])))
        return CooccurrenceResult(groups=tuple(result), ranking=ranking, records_scanned=self.records_scanned)

    def finalize(self) -> CooccurrenceResult:
        return self.finalize_ranked(k=25, ranking="count")


class DisaggregateAggregator(Aggregator):
    def __init__(self, human_source, content_source):
        self.human_source = human_source
        self.content_source = content_source
        self.records_scanned = 0
        self.cells: Counter[tuple[GroupKey, str]] = Counter()
        self.row_counts: Counter[GroupKey] = Counter()
        self.col_counts: Counter[str] = Counter()
        self.grand_total = 0
        self.n_missing_content = 0
        self.n_missing_human = 0

    def update(self, context: RecordContext) -> None:
        self.records_scanned += 1
        groups = self.human_source.keys(context)
        categories = self.content_source.keys(context)
        if groups is None:
            if categories:
                self.n_missing_human += 1
            return
        if categories is None:
            if groups:
                self.n_missing_content += 1
            return
        if not groups or not categories:
            return
        self.grand_total += 1
        for group in groups:
            self.row_counts[group] += 1
            for category in categories:
                self.cells[(group, category)] += 1
        for category in categories:
            self.col_counts[category] += 1

    def merge(self, other: "DisaggregateAggregator") -> None:
        self.records_scanned += other.records_scanned
        self.cells.update(other.cells)
        self.row_counts.update(other.row_counts)
        self.col_counts.update(other.col_counts)
        self.grand_total += other.grand_total
        self.n_missing_content += other.n_missing_content
        self.n_missing_human += other.n_missing_human

    def finalize(self) -> DisaggregatedTable:
        return DisaggregatedTable(
            rows=tuple(sorted(self.row_counts, key=lambda g: g.label)),
            columns=tuple(sorted(self.col_counts)),
            cells=dict(self.cells),
            row_totals=dict(self.row_counts),
            col_totals=dict(self.col_counts),
            grand_total=self.grand_total,
            n_missing_content=self.n_missing_content,
            n_missing_human=self.n_missing_human,
        )


def top_cooccurrences(
    stream: Iterable[RecordContext],
    group_source: TermAxesSource | SignalLabelSource,
    k: int,
    ranking: str = "count",
    stopwords: frozenset[str] = frozenset(),
    min_count: int = 1,
    matcher: TermMatcher | None = None,
    window: int | None = None,
) -> CooccurrenceResult:
    aggregator = CooccurrenceAggregator(group_source, stopwords=stopwords, min_count=min_count,
                                        matcher=matcher, window=window)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize_ranked(k=k, ranking=ranking)


def disaggregate(stream: Iterable[RecordContext], human_source, content_source) -> DisaggregatedTable:
    aggregator = DisaggregateAggregator(human_source, content_source)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def association_lift(
    table: DisaggregatedTable,
    lift_threshold: float = DEFAULT_LIFT_THRESHOLD,
    support: int = DEFAULT_SUPPORT,
) -> list[AssociationFlag]:
    """Lift of every populated cell, flagged when lift >= threshold and
    the cell count >= support; sorted by lift descending."""
    if table.grand_total <= 0:
        raise ValueError("association lift needs a table with a positive grand total")
    flags = []
    for (group, category), count in table.cells.items():
        p_category = table.col_totals[category] / table.grand_total
        p_category_given_group = count / table.row_totals[group]
        lift = p_category_given_group / p_category
        flags.append(
            AssociationFlag(
                group=group,
                category=category,
                lift=lift,
                support=count,
                flagged=lift >= lift_threshold and count >= support,
            )
        )
    flags.sort(key=lambda f: (-f.lift, f.group.label, f.category))
    return flags
