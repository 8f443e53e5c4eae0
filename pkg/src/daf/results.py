"""Result types shared by the analysis modules and the report layer.

Every analysis finishes as one of these payloads; the report module
embeds them in analysis cards.  All types are plain frozen data with
deterministic ordering, so rendering them twice is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Distribution:
    """Ordered (label, count) categories; proportions derive from total."""

    payload_kind = "distribution"

    entries: tuple[tuple[str, int], ...]
    total: int = field(init=False)

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("distribution labels must be unique")
        if any(count < 0 for _, count in self.entries):
            raise ValueError("distribution counts must be >= 0")
        object.__setattr__(self, "total", sum(count for _, count in self.entries))

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "Distribution":
        ordered = tuple(sorted(counts.items(), key=lambda item: (-item[1], item[0])))
        return cls(entries=ordered)

    def proportions(self) -> list[tuple[str, float]]:
        if self.total == 0:
            return []
        return [(label, count / self.total) for label, count in self.entries]

    def count(self, label: str) -> int:
        for entry_label, count in self.entries:
            if entry_label == label:
                return count
        return 0


@dataclass(frozen=True)
class Histogram:
    """Counts over bins partitioning [first edge, last edge]."""

    payload_kind = "histogram"

    edges: tuple[float, ...]
    counts: tuple[int, ...]
    n_missing: int = 0

    def __post_init__(self) -> None:
        if len(self.edges) < 2 or len(self.counts) != len(self.edges) - 1:
            raise ValueError("histogram needs n+1 edges for n bins")
        if any(a >= b for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("histogram edges must be strictly ascending")

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class Proportion:
    """numerator/denominator with an explicit undefined state at 0/0."""

    payload_kind = "proportion"

    numerator: int
    denominator: int
    n_missing: int = 0

    @property
    def defined(self) -> bool:
        return self.denominator > 0

    @property
    def value(self) -> float | None:
        if not self.defined:
            return None
        return self.numerator / self.denominator


@dataclass(frozen=True)
class IntersectionCount:
    """Records carrying groups from >= 2 distinct axes at once."""

    groups: tuple[tuple[str, str], ...]  # sorted (axis, group) pairs
    count: int

    def __post_init__(self) -> None:
        axes = {axis for axis, _ in self.groups}
        if len(axes) < 2:
            raise ValueError("an intersection needs groups from >= 2 distinct axes")

    @property
    def label(self) -> str:
        return " x ".join(f"{axis}/{group}" for axis, group in self.groups)


@dataclass(frozen=True)
class GroupKey:
    """Fully-qualified human-factor key: where it came from, and what it is."""

    origin: str  # "terms" (lexicon axis/group) or "signal" (inferred label)
    name: str    # axis name or signal name
    value: str   # group name or signal label

    def __post_init__(self) -> None:
        if self.origin not in ("terms", "signal"):
            raise ValueError(f"unknown group key origin: {self.origin!r}")

    @property
    def label(self) -> str:
        sep = "/" if self.origin == "terms" else "="
        return f"{self.name}{sep}{self.value}"


@dataclass(frozen=True)
class DisaggregatedTable:
    """Group x content-category record counts with record-level marginals.

    row_totals[g]  = records carrying g and at least one content key
    col_totals[c]  = records carrying c and at least one group key
    grand_total    = records carrying both a group key and a content key
    For single-valued content, each row total equals the sum of its cells.
    """

    payload_kind = "disaggregated_table"

    rows: tuple[GroupKey, ...]
    columns: tuple[str, ...]
    cells: dict[tuple[GroupKey, str], int]
    row_totals: dict[GroupKey, int]
    col_totals: dict[str, int]
    grand_total: int
    n_missing_content: int = 0
    n_missing_human: int = 0

    def cell(self, row: GroupKey, column: str) -> int:
        return self.cells.get((row, column), 0)


@dataclass(frozen=True)
class AssociationFlag:
    """Lift of one (group, category) pair; flagged when it clears both
    the lift threshold and the support floor."""

    group: GroupKey
    category: str
    lift: float
    support: int
    flagged: bool


@dataclass(frozen=True)
class AssociationResult:
    """A disaggregated table plus its lift flags and the thresholds that
    produced them (always disclosed: the thresholds are ours, not given)."""

    payload_kind = "disaggregated_table"

    table: DisaggregatedTable
    flags: tuple[AssociationFlag, ...]
    lift_threshold: float
    support: int

    @property
    def flagged(self) -> tuple[AssociationFlag, ...]:
        return tuple(f for f in self.flags if f.flagged)


@dataclass(frozen=True)
class CooccurrenceEntry:
    token: str
    count: int
    pmi: float


@dataclass(frozen=True)
class GroupCooccurrences:
    group: GroupKey
    entries: tuple[CooccurrenceEntry, ...]


@dataclass(frozen=True)
class CooccurrenceResult:
    payload_kind = "ranked_list"

    groups: tuple[GroupCooccurrences, ...]
    ranking: str
    records_scanned: int


@dataclass(frozen=True)
class DomainStats:
    domain: str
    records: int
    tokens: int

    def __post_init__(self) -> None:
        if self.domain != self.domain.lower():
            raise ValueError("registrable domains are stored lower-cased")


@dataclass(frozen=True)
class TopSources:
    payload_kind = "ranked_list"

    domains: tuple[DomainStats, ...]
    n_missing: int
    attributed_tokens: int
    missing_tokens: int


@dataclass(frozen=True)
class DuplicateReport:
    payload_kind = "duplicate_report"

    mode: str  # "exact" or "near"
    clusters: tuple[tuple[str, ...], ...]
    records_scanned: int
    parameters: dict[str, object]
    short_records: int = 0  # near mode: records under one shingle long

    def __post_init__(self) -> None:
        if self.mode not in ("exact", "near"):
            raise ValueError(f"unknown duplication mode: {self.mode!r}")
        members: set[str] = set()
        for cluster in self.clusters:
            if len(cluster) < 2:
                raise ValueError("duplicate clusters have >= 2 members")
            for member in cluster:
                if member in members:
                    raise ValueError("duplicate clusters must be disjoint")
                members.add(member)

    @property
    def duplicate_proportion(self) -> float:
        if self.records_scanned == 0:
            return 0.0
        extras = sum(len(cluster) - 1 for cluster in self.clusters)
        return extras / self.records_scanned


@dataclass(frozen=True)
class OverlapReport:
    payload_kind = "overlap_report"

    dataset_a: str
    dataset_b: str
    mode: str  # "exact-text" or "ngram-containment"
    matched: int
    total_a: int
    ngram_width: int | None = None
    matched_sample: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in ("exact-text", "ngram-containment"):
            raise ValueError(f"unknown overlap mode: {self.mode!r}")

    @property
    def overlap_percent(self) -> float:
        if self.total_a == 0:
            return 0.0
        return 100.0 * self.matched / self.total_a


@dataclass(frozen=True)
class Unsupported:
    """Placeholder payload for analyses no automated method can run."""

    payload_kind = "unsupported"

    reason: str
