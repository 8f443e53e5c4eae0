from __future__ import annotations

import random

import pytest

from daf.content_analyses import (
    BooleanProportionAggregator,
    boolean_proportion,
    categorical_distribution,
    scalar_histogram,
    uniform_edges,
)
from daf.corpus import Record
from daf.scan import build_context
from daf.signals import SignalError, SignalValue


def scored_contexts(scores, signal="toxicity"):
    out = []
    for i, score in enumerate(scores):
        record = Record(id=f"r{i}", text="x")
        values = {}
        if score is not None:
            values[signal] = SignalValue(f"r{i}", signal, "scalar01", score=score)
        out.append(build_context(record, signal_values=values, missing=() if score is not None else (signal,)))
    return out


def labeled_contexts(labels, signal="topic"):
    out = []
    for i, label in enumerate(labels):
        record = Record(id=f"r{i}", text="x")
        values = {}
        if label is not None:
            values[signal] = SignalValue(f"r{i}", signal, "categorical", label=label)
        out.append(build_context(record, signal_values=values))
    return out


def flagged_contexts(flags, signal="sexual_image"):
    out = []
    for i, flag in enumerate(flags):
        record = Record(id=f"r{i}", text="x")
        values = {signal: SignalValue(f"r{i}", signal, "boolean", flag=flag)} if flag is not None else {}
        out.append(build_context(record, signal_values=values))
    return out


class TestScalarHistogram:
    def test_hand_binning(self):
        hist = scalar_histogram(scored_contexts([0.1, 0.1, 0.9]), "toxicity", (0.0, 0.5, 1.0))
        assert hist.counts == (2, 1)

    def test_empty_corpus(self):
        hist = scalar_histogram([], "toxicity", (0.0, 0.5, 1.0))
        assert hist.counts == (0, 0)
        assert hist.n_missing == 0

    def test_boundary_score_goes_right(self):
        hist = scalar_histogram(scored_contexts([0.5]), "toxicity", (0.0, 0.5, 1.0))
        assert hist.counts == (0, 1)

    def test_one_exactly_lands_in_last_bin(self):
        hist = scalar_histogram(scored_contexts([1.0, 0.0]), "toxicity", uniform_edges(10))
        assert hist.counts[0] == 1 and hist.counts[-1] == 1

    def test_counts_plus_missing_cover_corpus(self):
        scores = [0.2, None, 0.7, None, 1.0]
        hist = scalar_histogram(scored_contexts(scores), "toxicity")
        assert hist.total + hist.n_missing == len(scores)

    def test_oracle_equivalence(self):
        rng = random.Random(11)
        edges = uniform_edges(10)
        scores = [rng.random() for _ in range(100)]
        hist = scalar_histogram(scored_contexts(scores), "toxicity", edges)
        expected = [0] * 10
        for score in scores:
            for b in range(10):
                last = b == 9
                if edges[b] <= score < edges[b + 1] or (last and score == 1.0):
                    expected[b] += 1
                    break
        assert list(hist.counts) == expected

    def test_bad_edges_rejected(self):
        with pytest.raises(ValueError):
            scalar_histogram([], "toxicity", (0.0, 0.9))
        with pytest.raises(ValueError):
            scalar_histogram([], "toxicity", (0.0, 0.5, 0.5, 1.0))


class TestCategoricalDistribution:
    def test_hand_count(self):
        dist = categorical_distribution(labeled_contexts(["news", "news", "sport"]), "topic")
        assert dist.count("news") == 2
        assert dist.count("sport") == 1

    def test_all_missing(self):
        stream = labeled_contexts([None, None, None])
        dist = categorical_distribution(stream, "topic")
        assert dist.total == 0

    def test_labels_verbatim(self):
        dist = categorical_distribution(labeled_contexts(["News", "news"]), "topic")
        assert dist.count("News") == 1
        assert dist.count("news") == 1


class TestBooleanProportion:
    def test_flags(self):
        prop = boolean_proportion(flagged_contexts([True, False, False, True]), "sexual_image")
        assert prop.value == 0.5

    def test_threshold_rule_on_scalars(self):
        stream = scored_contexts([0.6, 0.4], signal="sexual_image")
        prop = boolean_proportion(stream, "sexual_image", threshold=0.5)
        assert prop.value == 0.5

    def test_no_signal_is_undefined(self):
        prop = boolean_proportion(flagged_contexts([None, None]), "sexual_image")
        assert prop.defined is False
        assert prop.n_missing == 2

    def test_threshold_on_boolean_is_error(self):
        with pytest.raises(SignalError):
            boolean_proportion(flagged_contexts([True]), "sexual_image", threshold=0.5)

    def test_missing_threshold_on_scalar_is_error(self):
        with pytest.raises(SignalError):
            boolean_proportion(scored_contexts([0.4], signal="sexual_image"), "sexual_image")

    def test_count_kind_uses_gt_zero(self):
        out = []
        for i, n in enumerate([0, 1, 3]):
            record = Record(id=f"r{i}", text="x")
            values = {"face_count": SignalValue(f"r{i}", "face_count", "count", count=n)}
            out.append(build_context(record, signal_values=values))
        prop = boolean_proportion(out, "face_count")
        assert prop.numerator == 2 and prop.denominator == 3

    def test_merge_matches_single_pass(self):
        rng = random.Random(2)
        scores = [rng.random() for _ in range(50)]
        stream = scored_contexts(scores, signal="sexual_image")
        single = BooleanProportionAggregator("sexual_image", threshold=0.5)
        for context in stream:
            single.update(context)
        parts = [BooleanProportionAggregator("sexual_image", threshold=0.5) for _ in range(3)]
        for i, context in enumerate(stream):
            parts[i % 3].update(context)
        merged = parts[0]
        for p in parts[1:]:
            merged.merge(p)
        assert merged.finalize() == single.finalize()
