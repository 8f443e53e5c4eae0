"""Content analyses: signal histograms, categorical distributions, and
boolean proportions.

Each analysis is a mergeable aggregator over record contexts.  Records
lacking the requested signal reduce the denominator and are counted as
missing; nothing is ever imputed.
"""

from __future__ import annotations

import bisect
from collections import Counter
from typing import Iterable

from .results import Distribution, Histogram, Proportion
from .scan import Aggregator, RecordContext
from .signals import SignalError, threshold_signal

DEFAULT_BIN_COUNT = 10


def uniform_edges(bins: int = DEFAULT_BIN_COUNT) -> tuple[float, ...]:
    return tuple(i / bins for i in range(bins + 1))


def bin_index(edges: tuple[float, ...], score: float) -> int:
    """Left-closed right-open bins, except the last bin which is closed."""
    if score >= edges[-2]:
        return len(edges) - 2
    return bisect.bisect_right(edges, score) - 1


def bin_label(edges: tuple[float, ...], index: int) -> str:
    closer = "]" if index == len(edges) - 2 else ")"
    return f"[{edges[index]:g},{edges[index + 1]:g}{closer}"


class ScalarHistogramAggregator(Aggregator):
    def __init__(self, signal: str, edges: tuple[float, ...] | None = None):
        edges = edges if edges is not None else uniform_edges()
        if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
            raise ValueError("bin edges must be strictly ascending")
        if edges[0] != 0.0 or edges[-1] != 1.0:
            raise ValueError("scalar01 histograms must span [0, 1]")
        self.signal = signal
        self.edges = tuple(edges)
        self.counts = [0] * (len(edges) - 1)
        self.n_missing = 0

    def update(self, context: RecordContext) -> None:
        value = context.signals.get(self.signal)
        if value is None:
            self.n_missing += 1
            return
        if value.kind != "scalar01":
            raise SignalError(f"{self.signal}: histogram needs scalar01, got {value.kind}")
        assert value.score is not None
        self.counts[bin_index(self.edges, value.score)] += 1

    def merge(self, other: "ScalarHistogramAggregator") -> None:
        self.counts = [a + b for a, b in zip(self.counts, other.counts)]
        self.n_missing += other.n_missing

    def finalize(self) -> Histogram:
        return Histogram(edges=self.edges, counts=tuple(self.counts), n_missing=self.n_missing)


class CategoricalDistributionAggregator(Aggregator):
    def __init__(self, signal: str):
        self.signal = signal
        self.counts: Counter[str] = Counter()
        self.n_missing = 0

    def update(self, context: RecordContext) -> None:
        value = context.signals.get(self.signal)
        if value is None:
            self.n_missing += 1
            return
        if value.kind != "categorical":
            raise SignalError(f"{self.signal}: distribution needs categorical, got {value.kind}")
        assert value.label is not None
        self.counts[value.label] += 1  # labels are counted verbatim

    def merge(self, other: "CategoricalDistributionAggregator") -> None:
        self.counts.update(other.counts)
        self.n_missing += other.n_missing

    def finalize(self) -> Distribution:
        return Distribution.from_counts(dict(self.counts))


class BooleanProportionAggregator(Aggregator):
    """Share of records whose signal is "on".

    Accepts boolean signals as-is, scalar01 signals with a threshold
    (inclusive), and count signals under a fixed "> 0" rule.
    """

    def __init__(self, signal: str, threshold: float | None = None):
        self.signal = signal
        self.threshold = threshold
        self.numerator = 0
        self.denominator = 0
        self.n_missing = 0

    def _flag(self, value) -> bool:
        if value.kind == "boolean":
            if self.threshold is not None:
                raise SignalError(f"{self.signal}: boolean signals take no threshold")
            return value.flag
        if value.kind == "scalar01":
            if self.threshold is None:
                raise SignalError(f"{self.signal}: scalar signals need a threshold")
            return threshold_signal(value, self.threshold)
        if value.kind == "count":
            if self.threshold is not None:
                raise SignalError(f"{self.signal}: count signals use the fixed > 0 rule")
            return value.count > 0
        raise SignalError(f"{self.signal}: proportion over unsupported kind {value.kind}")

    def update(self, context: RecordContext) -> None:
        value = context.signals.get(self.signal)
        if value is None:
            self.n_missing += 1
            return
        self.denominator += 1
        if self._flag(value):
            self.numerator += 1

    def merge(self, other: "BooleanProportionAggregator") -> None:
        self.numerator += other.numerator
        self.denominator += other.denominator
        self.n_missing += other.n_missing

    def finalize(self) -> Proportion:
        return Proportion(numerator=self.numerator, denominator=self.denominator, n_missing=self.n_missing)


def scalar_histogram(stream: Iterable[RecordContext], signal: str,
                     edges: tuple[float, ...] | None = None) -> Histogram:
    aggregator = ScalarHistogramAggregator(signal, edges)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def categorical_distribution(stream: Iterable[RecordContext], signal: str) -> Distribution:
    aggregator = CategoricalDistributionAggregator(signal)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()


def boolean_proportion(stream: Iterable[RecordContext], signal: str,
                       threshold: float | None = None) -> Proportion:
    aggregator = BooleanProportionAggregator(signal, threshold)
    for context in stream:
        aggregator.update(context)
    return aggregator.finalize()
