"""Identity/pronoun/hateful term lists and multi-pattern term matching.

No canonical term lists ship as ground truth; lexicons are
user-supplied, localized data (the demo lists under demo/ are examples
only).  Matching is token-boundary based — "man" never matches inside
"mankind" — and, among matches starting at the same token, the longest
term wins, so "old age" subsumes "old".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import TokenizationPolicy, Token, tokenize

LEXICON_KINDS = ("identity", "pronoun", "hateful")


class LexiconError(Exception):
    pass


@dataclass(frozen=True)
class IdentityLexicon:
    """One identity axis: group name -> term list, all terms case-folded."""

    axis: str
    kind: str
    locale: str
    groups: dict[str, list[str]]

    def __post_init__(self) -> None:
        if self.kind not in LEXICON_KINDS:
            raise LexiconError(f"unknown lexicon kind: {self.kind!r}")
        if not self.axis:
            raise LexiconError("lexicon axis must be non-empty")
        if not self.groups:
            raise LexiconError(f"axis {self.axis!r} has no groups")
        seen: dict[str, str] = {}
        folded_groups: dict[str, list[str]] = {}
        for group, terms in self.groups.items():
            if not group:
                raise LexiconError(f"axis {self.axis!r} has an unnamed group")
            folded: list[str] = []
            for term in terms:
                if not term or not term.strip():
                    raise LexiconError(f"axis {self.axis!r} group {group!r} has an empty term")
                folded_term = term.casefold()
                if folded_term in folded:
                    continue  # duplicate within one group: deduplicate
                other = seen.get(folded_term)
                if other is not None and other != group:
                    raise LexiconError(
                        f"term {folded_term!r} appears in groups {other!r} and "
                        f"{group!r} of axis {self.axis!r}"
                    )
                seen[folded_term] = group
                folded.append(folded_term)
            if not folded:
                raise LexiconError(f"axis {self.axis!r} group {group!r} has no terms")
            folded_groups[group] = folded
        object.__setattr__(self, "groups", folded_groups)

    @property
    def term_count(self) -> int:
        return sum(len(terms) for terms in self.groups.values())


@dataclass(frozen=True)
class TermHit:
    """One matched term occurrence.

    start/end are a byte range in the source text; token_start/token_end
    index into the token sequence (half-open), for window-based
    co-occurrence rules.
    """

    term: str
    group: str
    axis: str
    kind: str
    start: int
    end: int
    token_start: int = 0
    token_end: int = 0


@dataclass
class _TrieNode:
    children: dict[str, "_TrieNode"] = field(default_factory=dict)
    # entries completing at this node: (term, group, axis, kind)
    entries: list[tuple[str, str, str, str]] = field(default_factory=list)


class TermMatcher:
    """Token-level trie over every term of the loaded lexicons.

    Immutable after compilation and safe to share across parallel
    scanners.  Matches respect token boundaries; at a given start
    token, only the longest matching term length is reported, but all
    lexicon entries of that length are (the same surface term may
    belong to several axes).
    """

    def __init__(self, lexicons: list[IdentityLexicon], policy: TokenizationPolicy):
        if not lexicons:
            raise LexiconError("at least one lexicon is required")
        self.policy = policy
        self._root = _TrieNode()
        self._vocabulary: set[str] = set()
        self._kinds: set[str] = set()
        self._axes: dict[str, str] = {}  # axis -> kind
        # axis/group -> the tokens of its own terms, for co-occurrence exclusion
        self._trigger_tokens: dict[tuple[str, str], set[str]] = {}
        for lexicon in lexicons:
            self._kinds.add(lexicon.kind)
            self._axes[lexicon.axis] = lexicon.kind
            for group, terms in lexicon.groups.items():
                triggers = self._trigger_tokens.setdefault((lexicon.axis, group), set())
                for term in terms:
                    term_tokens = [t.text for t in tokenize(term, policy)]
                    if not term_tokens:
                        raise LexiconError(f"term {term!r} has no tokens under the policy")
                    self._insert(term_tokens, (term, group, lexicon.axis, lexicon.kind))
                    self._vocabulary.add(term)
                    triggers.update(term_tokens)

    def _insert(self, term_tokens: list[str], entry: tuple[str, str, str, str]) -> None:
        node = self._root
        for token in term_tokens:
            node = node.children.setdefault(token, _TrieNode())
        node.entries.append(entry)

    @property
    def vocabulary_size(self) -> int:
        return len(self._vocabulary)

    @property
    def kinds(self) -> frozenset[str]:
        return frozenset(self._kinds)

    @property
    def axes(self) -> dict[str, str]:
        return dict(self._axes)

    def has_kind(self, kind: str) -> bool:
        return kind in self._kinds

    def trigger_tokens(self, axis: str, group: str) -> frozenset[str]:
        return frozenset(self._trigger_tokens.get((axis, group), frozenset()))

    def match_tokens(self, tokens: list[Token]) -> list[TermHit]:
        """Match against an already-tokenized text (spans come from it)."""
        hits: list[TermHit] = []
        n = len(tokens)
        for i in range(n):
            node = self._root
            deepest: _TrieNode | None = None
            deepest_len = 0
            for j in range(i, n):
                node = node.children.get(tokens[j].text)  # type: ignore[assignment]
                if node is None:
                    break
                if node.entries:
                    deepest = node
                    deepest_len = j - i + 1
            if deepest is None:
                continue
            start = tokens[i].start
            end = tokens[i + deepest_len - 1].end
            for term, group, axis, kind in sorted(deepest.entries, key=lambda e: (e[2], e[1], e[0])):
                hits.append(TermHit(term=term, group=group, axis=axis, kind=kind,
                                    start=start, end=end,
                                    token_start=i, token_end=i + deepest_len))
        return hits

    def match(self, text: str) -> list[TermHit]:
        return self.match_tokens(tokenize(text, self.policy))


def load_lexicon(path: str) -> IdentityLexicon:
    """Load one lexicon file (JSON: axis, kind, locale, groups)."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise LexiconError(f"{path}: lexicon file must contain a JSON object")
    for field_name in ("axis", "kind", "groups"):
        if field_name not in obj:
            raise LexiconError(f"{path}: missing required field {field_name!r}")
    groups = obj["groups"]
    if not isinstance(groups, dict) or not all(
        isinstance(g, str) and isinstance(terms, list) and all(isinstance(t, str) for t in terms)
        for g, terms in groups.items()
    ):
        raise LexiconError(f"{path}: 'groups' must map group names to arrays of term strings")
    try:
        return IdentityLexicon(
            axis=obj["axis"],
            kind=obj["kind"],
            locale=obj.get("locale", "und"),
            groups=groups,
        )
    except LexiconError as exc:
        raise LexiconError(f"{path}: {exc}") from exc


def compile_matcher(lexicons: list[IdentityLexicon], policy: TokenizationPolicy) -> TermMatcher:
    return TermMatcher(lexicons, policy)


def match_terms(matcher: TermMatcher, text: str) -> list[TermHit]:
    return matcher.match(text)
