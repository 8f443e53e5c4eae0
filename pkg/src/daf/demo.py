"""Demo plan and fixture synthesis.

Builds two desk-scale demo audits with planted, generator-known
statistics: a web-text corpus probing age representation, and an
image-caption corpus probing queer representation.  Every planted
count is returned in a truth object so tests can assert the analyses
recover them exactly; the same builders write the demo/ directory
shipped with the repo.

    python3 -m daf.demo demo/
"""

from __future__ import annotations

import argparse
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

OLD_TERMS = ("elderly", "ageing", "old age")

FILLER = (
    "garden", "river", "stone", "window", "evening", "morning", "light",
    "quiet", "road", "letter", "coffee", "market", "bridge", "lamp",
    "paper", "walk", "visit", "talk", "plan", "house", "tree", "cloud",
    "rain", "field", "door", "basket", "corner", "shelf", "candle",
)

URLS = (
    "http://texts.example.com/page",
    "http://archive.example.co.uk/item",
    "http://news.example.de/artikel",
    "http://data.example.gh/entry",
    "http://misc.example.org/post",
)

YEARS = (2017, 2018, 2019, 2020, 2021, 2022)

TOPIC_KEYWORDS = {
    "medical_lit": ["clinic", "dementia", "alzheimer", "diagnosis"],
    "retirement": ["pension", "retirement"],
    "sport": ["football", "training", "match"],
    "news": ["election", "headline"],
    "skincare": ["collagen", "wrinkles"],
}

TOXICITY_WEIGHTS = {"vile": 0.9, "rotten": 0.7, "awful": 0.55}

AGE_LEXICON = {
    "axis": "age",
    "kind": "identity",
    "locale": "en",
    "groups": {"old_age": ["elderly", "ageing", "old age"], "young_age": ["young", "youthful"]},
}
GENDER_LEXICON = {
    "axis": "gender",
    "kind": "identity",
    "locale": "en",
    "groups": {"man": ["man", "men"], "woman": ["woman", "women"]},
}
PRONOUN_LEXICON = {
    "axis": "pronoun",
    "kind": "pronoun",
    "locale": "en",
    "groups": {
        "he/him": ["he", "him", "his"],
        "she/her": ["she", "her", "hers"],
        "they/them": ["they", "them", "theirs"],
        "neopronouns": ["xe", "xem", "ze", "zir"],
    },
}
# Demo stand-ins only: mild pejoratives, annotated with the group they target.
HATEFUL_LEXICON = {
    "axis": "hateful_demo",
    "kind": "hateful",
    "locale": "en",
    "groups": {"old_age": ["geezer", "old coot"], "newcomers": ["blow-in"]},
}
ORIENTATION_LEXICON = {
    "axis": "sexual_orientation",
    "kind": "identity",
    "locale": "en",
    "groups": {
        "lesbian": ["lesbian"],
        "gay": ["gay"],
        "bisexual": ["bisexual"],
        "transgender": ["transgender"],
        "queer": ["queer"],
        "heterosexual": ["heterosexual"],
    },
}


@dataclass
class AgeDemoTruth:
    records: int = 0
    pronouns: dict[str, int] = field(default_factory=dict)
    group_records: dict[str, int] = field(default_factory=dict)  # "axis/group" -> records
    term_occurrences: dict[str, int] = field(default_factory=dict)
    age_gender_intersection: int = 0
    hateful: dict[str, tuple[str, int]] = field(default_factory=dict)  # term -> (group, occ)
    topics: dict[str, int] = field(default_factory=dict)
    pii_records: int = 0
    duplicate_extras: int = 0
    flagged_pair: tuple[str, str] = ("age/old_age", "medical_lit")
    expected_lift: float = 0.0


def _write_json(path: Path, obj: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def _meta(i: int) -> dict[str, str]:
    return {
        "url": f"{URLS[i % len(URLS)]}/{i}",
        "timestamp": f"{YEARS[i % len(YEARS)]}-03-15",
    }


def build_age_demo(root: Path, seed: int = 20260810) -> AgeDemoTruth:
    """1,000 web-style text records with planted distributions.

    Doc classes are fixed-size, so every count below is exact by
    construction, not sampled.
    """
    rng = random.Random(seed)
    truth = AgeDemoTruth()
    docs: list[tuple[str, str]] = []  # (text, topic)

    def filler(n: int) -> str:
        return " ".join(rng.choice(FILLER) for _ in range(n))

    def add(template: str, topic: str) -> None:
        i = len(docs)
        docs.append((f"{template} {filler(2)} note{i}", topic))
        truth.topics[topic] = truth.topics.get(topic, 0) + 1

    def count_group(axis_group: str) -> None:
        truth.group_records[axis_group] = truth.group_records.get(axis_group, 0) + 1

    def count_term(term: str, n: int = 1) -> None:
        truth.term_occurrences[term] = truth.term_occurrences.get(term, 0) + n

    # 90 old-age medical docs (the planted association)
    for i in range(90):
        term = OLD_TERMS[i % 3]
        add(f"{term} care at the clinic with dementia concerns", "medical_lit")
        count_group("age/old_age")
        count_term(term)
    # 30 old-age retirement docs
    for i in range(30):
        term = OLD_TERMS[i % 3]
        add(f"{term} pension and retirement plans", "retirement")
        count_group("age/old_age")
        count_term(term)
    # 25 old-age x woman docs (the planted intersection)
    for i in range(25):
        term = OLD_TERMS[i % 3]
        add(f"the {term} woman read the election headline", "news")
        count_group("age/old_age")
        count_group("gender/woman")
        count_term(term)
        count_term("woman")
        truth.age_gender_intersection += 1
    # 60 young sport docs
    for _ in range(60):
        add("young players at football training for the match", "sport")
        count_group("age/young_age")
        count_term("young")
    # 60 man news docs
    for _ in range(60):
        add("a man wrote the election headline today", "news")
        count_group("gender/man")
        count_term("man")
    # 55 woman skincare docs
    for _ in range(55):
        add("a woman tried collagen cream for wrinkles", "skincare")
        count_group("gender/woman")
        count_term("woman")
    # pronoun docs: 50 she / 40 he / 30 they / 10 xe
    for _ in range(50):
        add("she carried the letter across the bridge", "other")
    for _ in range(40):
        add("he waited near the stone crossing", "other")
    for _ in range(30):
        add("they walked along the river path", "other")
    for _ in range(10):
        add("xe painted the fence by the gate", "other")
    truth.pronouns = {"she/her": 50, "he/him": 40, "they/them": 30, "neopronouns": 10}
    # hateful demo docs: 12 + 8 + 5
    for _ in range(12):
        add("that grumpy geezer shouted again", "other")
    for _ in range(8):
        add("the old coot from the market stall", "other")
    for _ in range(5):
        add("locals called the family blow-in again", "other")
    truth.hateful = {"geezer": ("old_age", 12), "old coot": ("old_age", 8), "blow-in": ("newcomers", 5)}
    # toxicity docs: 30 strong, 20 mild
    for _ in range(30):
        add("what a vile and rotten remark", "other")
    for _ in range(20):
        add("an awful afternoon at the dock", "other")
    # pii docs: 15 with emails
    for i in range(15):
        add(f"contact user{i}@example.org about the parcel", "other")
    truth.pii_records = 15
    # planted exact duplicates: 24 identical records
    duplicate_text = "the same duplicated notice appears here verbatim"
    for _ in range(24):
        i = len(docs)
        docs.append((duplicate_text, "other"))
        truth.topics["other"] = truth.topics.get("other", 0) + 1
    truth.duplicate_extras = 23
    # filler docs up to 1,000
    while len(docs) < 1000:
        add(filler(rng.randint(6, 12)), "other")
    truth.records = len(docs)

    # expected lift of the planted pair, from the construction itself
    grouped = 90 + 30 + 25 + 60 + 60 + 55
    truth.expected_lift = (90 / 145) / (90 / grouped)

    data_dir = root / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    with (data_dir / "age_text.jsonl").open("w", encoding="utf-8") as fh:
        for i, (text, _) in enumerate(docs):
            row = {"id": f"doc-{i:04d}", "text": text, "meta": _meta(i)}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    _write_json(root / "lexicons" / "age.json", AGE_LEXICON)
    _write_json(root / "lexicons" / "gender.json", GENDER_LEXICON)
    _write_json(root / "lexicons" / "pronouns.json", PRONOUN_LEXICON)
    _write_json(root / "lexicons" / "hateful-demo.json", HATEFUL_LEXICON)
    _write_json(root / "providers" / "topic_keywords.json", {"categories": TOPIC_KEYWORDS})
    _write_json(root / "providers" / "toxicity_weights.json", {"terms": TOXICITY_WEIGHTS})

    plan = {
        "dataset": {"path": "data/age_text.jsonl", "format": "jsonl", "label": "age-demo-text"},
        "lexicons": [
            "lexicons/age.json",
            "lexicons/gender.json",
            "lexicons/pronouns.json",
            "lexicons/hateful-demo.json",
        ],
        "providers": [
            {"id": "demo-topic", "builtin": "keyword-topic",
             "config": {"keywords": "providers/topic_keywords.json"}},
            {"id": "demo-toxicity", "builtin": "lexicon-toxicity",
             "config": {"lexicon": "providers/toxicity_weights.json"}},
        ],
        "analyses": [
            {"id": "pronouns"},
            {"id": "social_identity_terms", "params": {"intersections": [["age", "gender"]]}},
            {"id": "hateful_terms"},
            {"id": "pii"},
            {"id": "language"},
            {"id": "topics"},
            {"id": "offensive_speech"},
            {"id": "top_sources"},
            {"id": "source_geography"},
            {"id": "publication_time"},
            {"id": "data_duplication"},
            {"id": "hateful_symbols"},
            {"id": "sit_x_top_tokens", "params": {"k": 8}},
            {"id": "sit_x_topic"},
            {"id": "sit_x_offensive"},
        ],
        "context": {
            "goal": "DatasetDevelopment",
            "phase": "DataCollectionProcessing",
            "dataset_mutable": True,
            "release_planned": False,
        },
        "stopwords": "default",
        "audit_date": "2026-08-10",
        "output_dir": "out/age",
    }
    _write_json(root / "age-in-c4-style-text.json", plan)
    return truth


@dataclass
class CaptionDemoTruth:
    records: int = 0
    group_records: dict[str, int] = field(default_factory=dict)
    sexual_true: dict[str, int] = field(default_factory=dict)  # group -> flagged images
    flagged_pair: tuple[str, str] = ("sexual_orientation/lesbian", "true")
    expected_lift: float = 0.0
    faces_numerator: int = 0
    faces_denominator: int = 0
    overlap_matched: int = 0
    perceived_missing: int = 0


# flagged-image count per orientation group, out of 30 captions each
SEXUAL_TRUE = {
    "lesbian": 28,
    "gay": 26,
    "bisexual": 8,
    "transgender": 8,
    "queer": 8,
    "heterosexual": 4,
}

GENERIC_OBJECTS = (("dog", "tree"), ("car", "road"), ("boat", "lake"), ("cake", "table"))


def build_caption_demo(root: Path, seed: int = 20260811) -> CaptionDemoTruth:
    """600 caption/image pairs with a manifest-backed image classifier.

    Orientation groups get 30 captions each; the planted skew puts most
    flagged images under two groups so exactly those lift above 2.
    """
    rng = random.Random(seed)
    truth = CaptionDemoTruth()
    rows: list[tuple[str, str, str]] = []  # (id, caption, image url)
    manifest_images: dict[str, dict] = {}

    def image_entry(url: str, sexual: float, faces: int, perceived: str | None,
                    objects: tuple[str, ...]) -> None:
        entry: dict = {
            "sexual_image": sexual,
            "violent_image": round(rng.random() * 0.3, 3),
            "face_count": faces,
            "image_objects": [[0, 0, label] for label in objects],
        }
        if perceived is not None:
            entry["perceived_identity"] = perceived
        manifest_images[url] = entry
        truth.faces_denominator += 1
        if faces > 0:
            truth.faces_numerator += 1
        if perceived is None:
            truth.perceived_missing += 1

    def add(caption: str, sexual: float, faces: int, perceived: str | None,
            objects: tuple[str, ...]) -> str:
        i = len(rows)
        url = f"http://img.example.com/{i:04d}.jpg"
        rows.append((f"cap-{i:04d}", caption, url))
        image_entry(url, sexual, faces, perceived, objects)
        return caption

    grand_total = 0
    col_true = 0
    for group in sorted(SEXUAL_TRUE):
        flagged = SEXUAL_TRUE[group]
        truth.group_records[f"sexual_orientation/{group}"] = 30
        truth.sexual_true[group] = flagged
        grand_total += 30
        col_true += flagged
        for j in range(30):
            sexual = 0.9 if j < flagged else 0.1
            perceived = "woman" if j % 2 == 0 else "man"
            caption = f"a {group} couple at the {rng.choice(FILLER)} gathering photo {j}"
            add(caption, sexual, 2, perceived, ("person", "banner"))
    truth.expected_lift = (SEXUAL_TRUE["lesbian"] / 30) / (col_true / grand_total)

    # 60 generic flagged images, no identity terms in captions
    for j in range(60):
        add(f"late night studio photo shoot number {j}", 0.9, 1, "woman" if j % 3 == 0 else "man",
            ("person", "lamp"))
    # 360 generic clean images; a third lack the perceived-identity signal
    for j in range(360):
        perceived = None if j % 3 == 0 else ("woman" if j % 2 == 0 else "man")
        faces = 1 if j % 4 == 0 else 0
        caption = f"a {rng.choice(FILLER)} landscape with a {rng.choice(FILLER)} view {j}"
        add(caption, 0.05, faces, perceived, GENERIC_OBJECTS[j % len(GENERIC_OBJECTS)])
    truth.records = len(rows)

    data_dir = root / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    with (data_dir / "caption_pairs.tsv").open("w", encoding="utf-8") as fh:
        for rid, caption, url in rows:
            fh.write(f"{rid}\t{caption}\t{url}\n")

    # comparison dataset: verbatim copies of 10% of the captions
    copies = rows[:: len(rows) // 60][:60]
    truth.overlap_matched = len(copies)
    with (data_dir / "caption_benchmark.jsonl").open("w", encoding="utf-8") as fh:
        for k, (rid, caption, _) in enumerate(copies):
            fh.write(json.dumps({"id": f"bench-{k:03d}", "text": caption}) + "\n")
        for k in range(140):
            fh.write(json.dumps({"id": f"bench-x{k:03d}",
                                 "text": f"benchmark only sentence {k} with distinct words"}) + "\n")

    _write_json(root / "providers" / "image_manifest.json", {"images": manifest_images})
    _write_json(root / "lexicons" / "sexual-orientation.json", ORIENTATION_LEXICON)

    plan = {
        "dataset": {"path": "data/caption_pairs.tsv", "format": "tsv-pairs",
                    "label": "caption-demo"},
        "comparison_dataset": {"path": "data/caption_benchmark.jsonl", "format": "jsonl",
                               "label": "caption-benchmark"},
        "lexicons": ["lexicons/sexual-orientation.json"],
        "providers": [
            {"id": "demo-vision", "builtin": "manifest",
             "config": {"manifest": "providers/image_manifest.json"},
             "signals": [
                 {"name": "sexual_image", "kind": "scalar01"},
                 {"name": "violent_image", "kind": "scalar01"},
                 {"name": "face_count", "kind": "count"},
                 {"name": "perceived_identity", "kind": "categorical"},
                 {"name": "image_objects", "kind": "spans"},
             ]},
        ],
        "analyses": [
            {"id": "social_identity_terms"},
            {"id": "people_in_images"},
            {"id": "sexual_imagery"},
            {"id": "violent_imagery"},
            {"id": "perceived_identity_images"},
            {"id": "dataset_overlap"},
            {"id": "sit_x_top_tokens", "params": {"k": 8}},
            {"id": "sit_x_sexual"},
            {"id": "psi_x_sexual"},
            {"id": "psi_x_top_tokens", "params": {"k": 8}},
            {"id": "psi_x_image_features"},
            {"id": "psi_x_hateful_symbols"},
        ],
        "context": {
            "goal": "UseDecisions",
            "phase": "DataCollectionProcessing",
            "dataset_mutable": True,
            "release_planned": True,
        },
        "stopwords": "default",
        "audit_date": "2026-08-10",
        "output_dir": "out/captions",
    }
    _write_json(root / "queer-representation-in-caption-pairs.json", plan)
    return truth


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write the demo plans and fixtures.")
    parser.add_argument("root", help="directory to write the demo tree into (e.g. demo/)")
    args = parser.parse_args(argv)
    root = Path(args.root)
    age = build_age_demo(root)
    captions = build_caption_demo(root)
    print(f"wrote age demo ({age.records} records) and caption demo "
          f"({captions.records} pairs) under {root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
