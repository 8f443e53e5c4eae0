from __future__ import annotations

import random

import pytest

from daf.corpus import Record
from daf.human_analyses import (
    HatefulTermAggregator,
    IdentityTermAggregator,
    PiiAggregator,
    hateful_term_stats,
    identity_term_stats,
    pii_presence,
    pronoun_distribution,
)
from daf.lexicon import LexiconError, compile_matcher
from daf.scan import DEFAULT_POLICY, build_context, contexts
from daf.signals import PiiProvider
from tests.conftest import make_lexicon

PRONOUNS = make_lexicon("pronoun", {
    "he/him": ["he", "him", "his"],
    "she/her": ["she", "her", "hers"],
    "they/them": ["they", "them", "theirs"],
    "neopronouns": ["xe", "xem", "ze", "zir"],
}, kind="pronoun")

HATEFUL = make_lexicon("hateful_demo", {"old_age": ["geezer"], "newcomers": ["blow-in"]}, kind="hateful")


def ctxs(texts, lexicons):
    matcher = compile_matcher(lexicons, DEFAULT_POLICY)
    records = [Record(id=f"r{i}", text=t) for i, t in enumerate(texts, start=1)]
    return [build_context(r, matcher=matcher) for r in records], matcher


class TestIdentityTermStats:
    LEX = [make_lexicon("age", {"old_age": ["elderly"]}), make_lexicon("gender", {"man": ["man"]})]

    def test_hand_counted_fixture(self):
        stream, matcher = ctxs(["the elderly man", "a man", "elderly care", "nothing"], self.LEX)
        stats = identity_term_stats(stream, matcher, intersections=[("age", "gender")])
        assert stats.group_count("age", "old_age") == 2
        assert stats.group_count("gender", "man") == 2
        assert len(stats.intersections) == 1
        intersection = stats.intersections[0]
        assert intersection.groups == (("age", "old_age"), ("gender", "man"))
        assert intersection.count == 1

    def test_empty_corpus(self):
        stream, matcher = ctxs([], self.LEX)
        stats = identity_term_stats(stream, matcher)
        assert stats.by_axis == {}
        assert stats.by_term.total == 0
        assert stats.records_scanned == 0

    def test_record_vs_occurrence_granularity(self):
        stream, matcher = ctxs(["man man man"], self.LEX)
        stats = identity_term_stats(stream, matcher)
        assert stats.group_count("gender", "man") == 1
        assert stats.by_term.count("man") == 3

    def test_unknown_intersection_axis(self):
        _, matcher = ctxs([], self.LEX)
        with pytest.raises(LexiconError, match="religion"):
            IdentityTermAggregator(matcher, intersections=[("age", "religion")])

    def test_intersection_bounded_by_unitary_counts(self):
        rng = random.Random(5)
        words = ["elderly", "man", "care", "walk", "the"]
        texts = [" ".join(rng.choices(words, k=rng.randint(1, 8))) for _ in range(80)]
        stream, matcher = ctxs(texts, self.LEX)
        stats = identity_term_stats(stream, matcher, intersections=[("age", "gender")])
        for inter in stats.intersections:
            for axis, group in inter.groups:
                assert inter.count <= stats.group_count(axis, group)
                assert stats.group_count(axis, group) <= stats.records_scanned

    def test_brute_force_oracle_equivalence(self):
        rng = random.Random(8)
        lexicons = [
            make_lexicon("age", {"old_age": ["elderly", "old age"], "young_age": ["young"]}),
            make_lexicon("gender", {"man": ["man"], "woman": ["woman"]}),
        ]
        vocab = ["elderly", "old", "age", "young", "man", "woman", "walks", "sits", "the", "a"]
        texts = [" ".join(rng.choices(vocab, k=rng.randint(0, 10))) for _ in range(100)]
        stream, matcher = ctxs(texts, lexicons)
        stats = identity_term_stats(stream, matcher, intersections=[("age", "gender")])

        # oracle: per record, find groups by scanning token n-grams directly
        def record_groups(text: str) -> set[tuple[str, str]]:
            tokens = text.split()
            found = set()
            for lex in lexicons:
                for group, terms in lex.groups.items():
                    for term in terms:
                        tt = term.split()
                        for i in range(len(tokens) - len(tt) + 1):
                            if tokens[i:i + len(tt)] == tt:
                                found.add((lex.axis, group))
            return found

        for lex in lexicons:
            for group in lex.groups:
                expected = sum(1 for t in texts if (lex.axis, group) in record_groups(t))
                assert stats.group_count(lex.axis, group) == expected

        expected_inter = sum(
            1 for t in texts
            if any(a == "age" for a, _ in record_groups(t)) and any(a == "gender" for a, _ in record_groups(t))
        )
        assert sum(i.count for i in stats.intersections) >= 0
        total_inter_records = sum(
            1 for t in texts
            if {a for a, _ in record_groups(t)} >= {"age", "gender"}
        )
        assert expected_inter == total_inter_records

    def test_intersection_window_mode(self):
        # "elderly" at token 1, "man" at token 9: distance 8
        text = "the elderly person walked every single day beside a man"
        stream, matcher = ctxs([text], self.LEX)
        document_level = identity_term_stats(stream, matcher, [("age", "gender")])
        assert document_level.intersections[0].count == 1
        wide = identity_term_stats(stream, matcher, [("age", "gender")], intersection_window=8)
        assert wide.intersections[0].count == 1
        narrow = identity_term_stats(stream, matcher, [("age", "gender")], intersection_window=3)
        assert narrow.intersections == ()

    def test_merge_equals_single_pass(self):
        rng = random.Random(3)
        vocab = ["elderly", "man", "the", "old", "age"]
        texts = [" ".join(rng.choices(vocab, k=6)) for _ in range(60)]
        stream, matcher = ctxs(texts, self.LEX)
        single = IdentityTermAggregator(matcher, [("age", "gender")])
        for context in stream:
            single.update(context)
        sharded = [IdentityTermAggregator(matcher, [("age", "gender")]) for _ in range(4)]
        for i, context in enumerate(stream):
            sharded[i % 4].update(context)
        merged = sharded[0]
        for other in sharded[1:]:
            merged.merge(other)
        assert merged.finalize() == single.finalize()


class TestPronounDistribution:
    def test_hand_counted(self):
        stream, matcher = ctxs(["She said they left. He agreed."], [PRONOUNS])
        dist = pronoun_distribution(stream, matcher)
        assert dist.count("she/her") == 1
        assert dist.count("they/them") == 1
        assert dist.count("he/him") == 1

    def test_no_pronouns(self):
        stream, matcher = ctxs(["nothing here", "still nothing"], [PRONOUNS])
        dist = pronoun_distribution(stream, matcher)
        assert dist.total == 0

    def test_case_insensitive_occurrences(self):
        stream, matcher = ctxs(["They. THEY. they."], [PRONOUNS])
        assert pronoun_distribution(stream, matcher).count("they/them") == 3

    def test_requires_pronoun_lexicon(self):
        _, matcher = ctxs([], [make_lexicon("age", {"old_age": ["elderly"]})])
        with pytest.raises(LexiconError):
            pronoun_distribution([], matcher)


class TestHatefulTermStats:
    def test_planted_occurrences_with_groups(self):
        texts = ["you old geezer", "geezer!", "what a geezer", "fine text"]
        stream, matcher = ctxs(texts, [HATEFUL])
        stats = hateful_term_stats(stream, matcher)
        assert stats.by_term.count("geezer") == 3
        assert stats.referenced_groups["geezer"] == "old_age"

    def test_clean_corpus(self):
        stream, matcher = ctxs(["nothing", "clean"], [HATEFUL])
        stats = hateful_term_stats(stream, matcher)
        assert stats.by_term.total == 0

    def test_term_in_hateful_and_identity_counted_in_both(self):
        identity = make_lexicon("age", {"old_age": ["geezer"]})
        texts = ["a geezer walks"]
        stream, matcher = ctxs(texts, [HATEFUL, identity])
        hateful = hateful_term_stats(stream, matcher)
        identity_stats = identity_term_stats(stream, matcher)
        assert hateful.by_term.count("geezer") == 1
        assert identity_stats.group_count("age", "old_age") == 1


class TestPiiPresence:
    def stream(self, texts):
        records = [Record(id=f"r{i}", text=t) for i, t in enumerate(texts, start=1)]
        return contexts(records, providers=[(PiiProvider(), ["pii"])])

    def test_proportion_and_labels(self):
        texts = ["mail a@b.co", "nothing"] + ["plain"] * 7 + ["x@y.org here"]
        stats = pii_presence(self.stream(texts))
        assert stats.proportion.value == pytest.approx(0.2)
        assert stats.label_counts.count("email") == 2

    def test_empty_corpus_is_undefined_not_zero(self):
        stats = pii_presence(self.stream([]))
        assert stats.proportion.defined is False
        assert stats.proportion.value is None

    def test_multi_label_record_counts_once_in_proportion(self):
        stats = pii_presence(self.stream(["a@b.co and 415-555-0134"]))
        assert stats.proportion.numerator == 1
        assert stats.label_counts.count("email") == 1
        assert stats.label_counts.count("phone") == 1

    def test_id_sample_capped_total_preserved(self):
        texts = [f"user{i}@mail.com" for i in range(30)]
        records = [Record(id=f"r{i:03d}", text=t) for i, t in enumerate(texts)]
        stream = contexts(records, providers=[(PiiProvider(), ["pii"])])
        agg = PiiAggregator(id_cap=10)
        for context in stream:
            agg.update(context)
        stats = agg.finalize()
        assert stats.flagged_total == 30
        assert len(stats.flagged_ids) == 10
        assert list(stats.flagged_ids) == sorted(f"r{i:03d}" for i in range(10))
