from __future__ import annotations

import http.server
import json
import math
import sys
import threading
from collections import Counter

import pytest

from daf.corpus import Record
from daf.signals import (
    LANGUAGE_MIN_CHARS,
    LANGUAGE_SIMILARITY_FLOOR,
    HttpProvider,
    KeywordTopicProvider,
    LexiconToxicityProvider,
    ManifestProvider,
    PiiProvider,
    ProtocolError,
    Provider,
    SignalDescriptor,
    SignalError,
    SignalValue,
    SubprocessLinesProvider,
    builtin_language_id,
    builtin_pii_scan,
    decode_response_lines,
    keyword_topic_label,
    lexicon_toxicity_score,
    query_provider,
    threshold_signal,
    trigram_counts,
)

STUB = [sys.executable, "tests/stub_provider.py"]


def rec(rid: str, text: str | None = "some text") -> Record:
    return Record(id=rid, text=text)


class TestPiiScan:
    def test_email_span(self):
        assert builtin_pii_scan("mail me at a@b.co") == [(11, 17, "email")]

    def test_empty(self):
        assert builtin_pii_scan("") == []

    def test_two_phone_formats(self):
        spans = builtin_pii_scan("call 415-555-0134 or 4155550134")
        assert [label for _, _, label in spans] == ["phone", "phone"]
        assert spans[0] == (5, 17, "phone")
        assert spans[1] == (21, 31, "phone")

    def test_ipv4_and_octet_validation(self):
        assert builtin_pii_scan("host 10.0.0.1 up")[0][2] == "ipv4"
        assert all(label != "ipv4" for _, _, label in builtin_pii_scan("version 999.999.999.999"))

    def test_id_number(self):
        spans = builtin_pii_scan("ssn 078-05-1120 on file")
        assert [label for _, _, label in spans] == ["id-number-pattern"]

    def test_spans_never_overlap(self):
        spans = builtin_pii_scan("a@b.co 415-555-0134 10.0.0.1 078-05-1120 a@b.co")
        for left, right in zip(spans, spans[1:]):
            assert left[1] <= right[0]


def oracle_language(text: str) -> tuple[str, float]:
    """Independent reimplementation: damped cosine over the bundled profiles."""
    from importlib import resources

    data = json.loads(resources.files("daf").joinpath("resources/language_profiles.json").read_text("utf-8"))
    profiles = {lang: Counter(grams) for lang, grams in data["profiles"].items()}
    squeezed = " ".join(text.split())
    if len(squeezed) < LANGUAGE_MIN_CHARS:
        return ("und", 0.0)
    folded = f" {squeezed.casefold()} "
    counts = Counter(folded[i:i + 3] for i in range(len(folded) - 2))

    def sim(profile: Counter) -> float:
        dot = sum(math.log1p(c) * math.log1p(profile[g]) for g, c in counts.items() if g in profile)
        na = math.sqrt(sum(math.log1p(c) ** 2 for c in counts.values()))
        nb = math.sqrt(sum(math.log1p(c) ** 2 for c in profile.values()))
        return dot / (na * nb)

    ranked = sorted(((sim(p), lang) for lang, p in profiles.items()), key=lambda x: (-x[0], x[1]))
    best, lang = ranked[0]
    if best < LANGUAGE_SIMILARITY_FLOOR:
        return ("und", 0.0)
    return (lang, best / (best + ranked[1][0]))


class TestLanguageId:
    def test_english_pangram(self):
        label, confidence = builtin_language_id("the quick brown fox jumps over the lazy dog")
        assert label == "en"
        assert confidence >= 0.5

    def test_empty(self):
        assert builtin_language_id("") == ("und", 0.0)

    def test_spanish(self):
        label, confidence = builtin_language_id("el rápido zorro marrón salta sobre el perro perezoso")
        assert label == "es"
        assert confidence >= 0.5

    def test_short_text_is_und(self):
        assert builtin_language_id("hello there") == ("und", 0.0)

    def test_gibberish_is_und(self):
        assert builtin_language_id("xqzw vkjh zzyy qqpp wwoo kjxq zwvk")[0] == "und"

    @pytest.mark.parametrize("text", [
        "the quick brown fox jumps over the lazy dog",
        "el rápido zorro marrón salta sobre el perro perezoso",
        "les enfants vont à l'école et lisent des livres le matin",
        "die Kinder gehen zur Schule und lesen Bücher am Morgen",
        "",
        "too short",
    ])
    def test_matches_independent_oracle(self, text):
        got_label, got_conf = builtin_language_id(text)
        want_label, want_conf = oracle_language(text)
        assert got_label == want_label
        assert got_conf == pytest.approx(want_conf, abs=1e-12)


class TestScorers:
    WEIGHTS = {"vile": 0.9, "nasty": 0.6, "utterly vile": 0.95}

    def test_max_weight_wins(self):
        assert lexicon_toxicity_score("a nasty and vile remark", self.WEIGHTS) == 0.9

    def test_phrase_term(self):
        assert lexicon_toxicity_score("an utterly vile remark", self.WEIGHTS) == 0.95

    def test_clean_text_scores_zero(self):
        assert lexicon_toxicity_score("a kind remark", self.WEIGHTS) == 0.0

    def test_boundary_only(self):
        assert lexicon_toxicity_score("unnastyish", self.WEIGHTS) == 0.0

    def test_topic_majority_and_tie(self):
        categories = {"sport": ["match", "goal"], "news": ["report", "match"]}
        assert keyword_topic_label("the goal and the match", categories) == "sport"
        # one hit each: lexicographically first category wins
        assert keyword_topic_label("goal report", categories) == "news"

    def test_topic_default_other(self):
        assert keyword_topic_label("nothing relevant", {"sport": ["goal"]}) == "other"


class TestThreshold:
    def val(self, score: float) -> SignalValue:
        return SignalValue("r", "toxicity", "scalar01", score=score)

    def test_above(self):
        assert threshold_signal(self.val(0.7), 0.5) is True

    def test_inclusive_boundary(self):
        assert threshold_signal(self.val(0.5), 0.5) is True

    def test_below(self):
        assert threshold_signal(self.val(0.49), 0.5) is False

    def test_kind_mismatch(self):
        value = SignalValue("r", "topic", "categorical", label="x")
        with pytest.raises(SignalError):
            threshold_signal(value, 0.5)


class TestManifestProvider:
    def test_lookup_by_id_and_image(self, tmp_path):
        manifest = tmp_path / "m.json"
        manifest.write_text(json.dumps({
            "records": {"r1": {"sexual_image": 0.9}},
            "images": {"http://x/y.jpg": {"sexual_image": 0.2, "face_count": 1}},
        }), encoding="utf-8")
        provider = ManifestProvider(str(manifest), [
            SignalDescriptor("sexual_image", "scalar01"),
            SignalDescriptor("face_count", "count"),
        ])
        from daf.corpus import ImageRef
        batch = [
            Record(id="r1", text="a", image=ImageRef("http://x/y.jpg")),
            Record(id="r2", text="b", image=ImageRef("http://x/y.jpg")),
            Record(id="r3", text="c"),
        ]
        values, misses = provider.query(batch, ["sexual_image", "face_count"])
        by_key = {(v.record_id, v.signal): v for v in values}
        assert by_key[("r1", "sexual_image")].score == 0.9  # id beats image ref
        assert by_key[("r2", "sexual_image")].score == 0.2
        assert by_key[("r2", "face_count")].count == 1
        assert {(m.record_id, m.signal) for m in misses} == {
            ("r1", "face_count"), ("r3", "sexual_image"), ("r3", "face_count")}
        # values + misses partition the request set
        assert len(values) + len(misses) == len(batch) * 2


class TestSubprocessProvider:
    def descriptors(self):
        return [SignalDescriptor("toxicity", "scalar01"), SignalDescriptor("topic", "categorical")]

    def test_batch_round_trip(self):
        provider = SubprocessLinesProvider("stub", STUB, self.descriptors())
        try:
            batch = [rec("a", "12345"), rec("b", "1234567")]
            values, misses = query_provider(provider, batch, ["toxicity"])
            assert misses == []
            assert {v.record_id: v.score for v in values} == {"a": 0.5, "b": 0.7}
        finally:
            provider.close()

    def test_empty_batch(self):
        provider = SubprocessLinesProvider("stub", STUB, self.descriptors())
        try:
            assert query_provider(provider, [], ["toxicity"]) == ([], [])
        finally:
            provider.close()

    def test_per_record_error_counts_as_missing(self):
        provider = SubprocessLinesProvider("stub", STUB, self.descriptors())
        try:
            values, misses = provider.query([rec("ok"), rec("boom-1")], ["toxicity", "topic"])
            assert {v.record_id for v in values} == {"ok"}
            assert {(m.record_id, m.signal) for m in misses} == {("boom-1", "toxicity"), ("boom-1", "topic")}
        finally:
            provider.close()

    def test_unsupported_signal_rejected(self):
        provider = SubprocessLinesProvider("stub", STUB, self.descriptors())
        with pytest.raises(SignalError):
            provider.query([rec("a")], ["no_such_signal"])

    def test_timeout_marks_batch_missing(self):
        hang = [sys.executable, "-c", "import time; time.sleep(60)"]
        provider = SubprocessLinesProvider("hang", hang, self.descriptors(), timeout=0.2, retries=1)
        try:
            values, misses = provider.query([rec("a")], ["toxicity"])
            assert values == []
            assert len(misses) == 1
        finally:
            provider.close()


class TestProtocolDecoding:
    def descriptors(self):
        return {"toxicity": SignalDescriptor("toxicity", "scalar01")}

    def test_unknown_id_is_protocol_error(self):
        with pytest.raises(ProtocolError, match="unknown"):
            decode_response_lines(
                [json.dumps({"id": "ghost", "values": []})],
                [rec("a")], ["toxicity"], self.descriptors(),
            )

    def test_malformed_line_names_line(self):
        with pytest.raises(ProtocolError, match="not json"):
            decode_response_lines(["{not json"], [rec("a")], ["toxicity"], self.descriptors())

    def test_unrequested_signal_rejected(self):
        line = json.dumps({"id": "a", "values": [{"signal": "topic", "kind": "categorical", "label": "x"}]})
        with pytest.raises(ProtocolError, match="unrequested"):
            decode_response_lines([line], [rec("a")], ["toxicity"], self.descriptors())

    def test_unknown_json_fields_ignored(self):
        line = json.dumps({"id": "a", "values": [
            {"signal": "toxicity", "kind": "scalar01", "score": 0.4, "debug": "ignored"}], "extra": 1})
        values, misses = decode_response_lines([line], [rec("a")], ["toxicity"], self.descriptors())
        assert misses == []
        assert values[0].score == 0.4

    def test_missing_response_line_becomes_miss(self):
        values, misses = decode_response_lines([], [rec("a")], ["toxicity"], self.descriptors())
        assert values == []
        assert [(m.record_id, m.signal) for m in misses] == [("a", "toxicity")]


class _StubHttpHandler(http.server.BaseHTTPRequestHandler):
    def do_POST(self):
        from tests.stub_provider import HEADER, respond

        length = int(self.headers["Content-Length"])
        lines = self.rfile.read(length).decode("utf-8").strip().split("\n")
        assert json.loads(lines[0])["daf_protocol"] == 1
        body = "\n".join([HEADER] + [respond(line) for line in lines[1:]]) + "\n"
        payload = body.encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_http_server():
    server = http.server.HTTPServer(("127.0.0.1", 0), _StubHttpHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/"
    server.shutdown()


class TestHttpProvider:
    def test_round_trip(self, stub_http_server):
        provider = HttpProvider("stub-http", stub_http_server, [SignalDescriptor("toxicity", "scalar01")])
        values, misses = provider.query([rec("a", "123"), rec("b", "12345")], ["toxicity"])
        assert misses == []
        assert {v.record_id: v.score for v in values} == {"a": 0.3, "b": 0.5}

    def test_unreachable_marks_missing(self):
        provider = HttpProvider("dead", "http://127.0.0.1:9/", [SignalDescriptor("toxicity", "scalar01")],
                                timeout=0.2, retries=0)
        values, misses = provider.query([rec("a")], ["toxicity"])
        assert values == []
        assert len(misses) == 1


class TestBuiltinProvidersArePure:
    def test_pii_provider(self):
        from daf.corpus import ImageRef

        provider = PiiProvider()
        batch = [rec("a", "mail a@b.co"), Record(id="b", image=ImageRef("x.jpg"))]
        first = provider.query(batch, ["pii"])
        second = provider.query(batch, ["pii"])
        assert first == second
        values, misses = first
        assert values[0].spans and misses[0].record_id == "b"

    def test_toxicity_provider_from_file(self, tmp_path):
        path = tmp_path / "tox.json"
        path.write_text(json.dumps({"terms": {"vile": 0.9}}), encoding="utf-8")
        provider = LexiconToxicityProvider(str(path))
        values, _ = provider.query([rec("a", "a vile day"), rec("b", "fine")], ["toxicity"])
        assert {v.record_id: v.score for v in values} == {"a": 0.9, "b": 0.0}

    def test_topic_provider_from_file(self, tmp_path):
        path = tmp_path / "topics.json"
        path.write_text(json.dumps({"categories": {"sport": ["goal"]}}), encoding="utf-8")
        provider = KeywordTopicProvider(str(path))
        values, _ = provider.query([rec("a", "a goal!")], ["topic"])
        assert values[0].label == "sport"
