from __future__ import annotations

import json
from pathlib import Path

import pytest

from daf.corpus import DatasetHandle
from daf.lexicon import IdentityLexicon


def write_lines(path: Path, lines: list[str]) -> Path:
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    return write_lines(path, [json.dumps(row, ensure_ascii=False) for row in rows])


def text_dataset(tmp_path: Path, texts: list[str], name: str = "corpus.jsonl") -> DatasetHandle:
    """jsonl dataset of bare text records with ids r1..rN."""
    rows = [{"id": f"r{i}", "text": text} for i, text in enumerate(texts, start=1)]
    path = write_jsonl(tmp_path / name, rows)
    return DatasetHandle(path=str(path), format="jsonl", label=name)


def make_lexicon(axis: str, groups: dict[str, list[str]], kind: str = "identity") -> IdentityLexicon:
    return IdentityLexicon(axis=axis, kind=kind, locale="en", groups=groups)


@pytest.fixture
def age_gender_lexicons() -> list[IdentityLexicon]:
    return [
        make_lexicon("age", {"old_age": ["elderly", "old age", "ageing"], "young_age": ["young", "teenager"]}),
        make_lexicon("gender", {"man": ["man", "men"], "woman": ["woman", "women"]}),
    ]
