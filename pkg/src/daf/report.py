"""Analysis cards, action recommendations, report rendering, and
remove/tag mitigations.

Cards are the standardized result unit: Task, Analysis Object, Effort,
Dependencies, Output, Action, plus provenance.  Recommendations are
advisory, carry rationale text, and are only ever executed through an
explicit apply_mitigation call.  The structured report is canonical:
sorted keys, 9-significant-digit numbers, byte-deterministic.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__ as TOOL_VERSION
from .corpus import DatasetHandle, RecordParseError, parse_line
from .human_analyses import HatefulTermStats, IdentityStats, PiiStats
from .registry import AnalysisSpec
from .results import (
    AssociationResult,
    CooccurrenceResult,
    DisaggregatedTable,
    Distribution,
    DuplicateReport,
    GroupKey,
    Histogram,
    OverlapReport,
    Proportion,
    TopSources,
    Unsupported,
)

GOALS = ("DatasetDevelopment", "UseDecisions", "ModelUnderstanding", "Auditing")
PHASES = ("DataCollectionProcessing", "ModelEvaluation", "Documentation", "PackagingRelease")

# Legal actions per development phase; recommendations never leave this table.
PHASE_ACTIONS: dict[str, tuple[str, ...]] = {
    "DataCollectionProcessing": ("Addition", "Removal", "Augmentation", "Flagging", "NonUse"),
    "ModelEvaluation": ("AdditionalBenchmarking", "BenchmarkCreation"),
    "Documentation": ("Warning", "NonUse"),
    "PackagingRelease": ("Licensing", "Access"),
}

DEFAULT_PROPORTION_LIMIT = 0.5


class ReportError(Exception):
    pass


@dataclass(frozen=True)
class AuditPlanContext:
    goal: str
    phase: str
    dataset_mutable: bool
    release_planned: bool

    def __post_init__(self) -> None:
        if self.goal not in GOALS:
            raise ReportError(f"unknown goal {self.goal!r}; expected one of {GOALS}")
        if self.phase not in PHASES:
            raise ReportError(f"unknown phase {self.phase!r}; expected one of {PHASES}")


@dataclass(frozen=True)
class ActionRecommendation:
    phase: str
    action: str
    rationale: str

    def __post_init__(self) -> None:
        legal = PHASE_ACTIONS.get(self.phase)
        if legal is None:
            raise ReportError(f"unknown phase {self.phase!r}")
        if self.action not in legal:
            raise ReportError(f"action {self.action!r} is not legal in phase {self.phase!r}")


@dataclass(frozen=True)
class CardProvenance:
    dataset_label: str
    records_scanned: int
    n_missing: dict[str, int]
    config_digest: str
    tool_version: str
    timestamp: str
    providers: dict[str, str] = field(default_factory=dict)  # signal -> provider id


@dataclass(frozen=True)
class AnalysisCard:
    analysis_id: str
    title: str
    task: str
    analysis_object: tuple[str, ...]
    effort: str
    dependencies: tuple[str, ...]
    output: object
    action: tuple[ActionRecommendation, ...]
    provenance: CardProvenance
    section: str


def config_digest(obj: object) -> str:
    """Digest stable under key reordering: canonical JSON, sha256."""
    canonical = json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def make_card(
    analysis_id: str,
    payload: object,
    registry: dict[str, AnalysisSpec],
    provenance: CardProvenance,
) -> AnalysisCard:
    spec = registry.get(analysis_id)
    if spec is None:
        raise ReportError(f"analysis id {analysis_id!r} is not registered")
    if spec.output_kind == "unsupported" and payload is None:
        payload = Unsupported(reason=spec.unsupported_reason or "not supported")
    kind = getattr(payload, "payload_kind", None)
    if kind != spec.output_kind:
        raise ReportError(
            f"{analysis_id}: payload kind {kind!r} does not match registered "
            f"output kind {spec.output_kind!r}"
        )
    return AnalysisCard(
        analysis_id=analysis_id,
        title=spec.title,
        task=spec.task,
        analysis_object=spec.analysis_object,
        effort=spec.effort,
        dependencies=spec.dependency_names,
        output=payload,
        action=(),
        provenance=provenance,
        section=spec.section,
    )


# --------------------------------------------------------------------------
# Action recommendations

def _severity(card: AnalysisCard, proportion_limit: float) -> str:
    """"unsupported", "flagged", or "clean" — the three rule triggers."""
    payload = card.output
    if isinstance(payload, Unsupported):
        return "unsupported"
    if isinstance(payload, AssociationResult) and payload.flagged:
        return "flagged"
    proportion: Proportion | None = None
    if isinstance(payload, Proportion):
        proportion = payload
    elif isinstance(payload, PiiStats):
        proportion = payload.proportion
    if proportion is not None and proportion.defined and proportion.value >= proportion_limit:
        return "flagged"
    return "clean"


def _flag_summary(card: AnalysisCard) -> str:
    payload = card.output
    if isinstance(payload, AssociationResult):
        worst = payload.flagged[:3]
        pairs = "; ".join(f"{f.group.label} x {f.category} (lift {f.lift:.2f})" for f in worst)
        return f"disproportionate associations: {pairs}"
    if isinstance(payload, PiiStats):
        return f"{payload.proportion.numerator} of {payload.proportion.denominator} records carry PII"
    if isinstance(payload, Proportion):
        return f"proportion {payload.value:.3f} is at or above the configured limit"
    return "result flagged"


def recommend_actions(
    card: AnalysisCard,
    context: AuditPlanContext,
    proportion_limit: float = DEFAULT_PROPORTION_LIMIT,
    target_distribution: dict[str, float] | None = None,
) -> tuple[ActionRecommendation, ...]:
    """Deterministic rule table mapping card severity and plan context to
    phase-legal actions.  Every card gets Flagging (document the result);
    severe cards add mutation candidates when the dataset is mutable, a
    documentation warning when it is not, evaluation follow-ups in the
    evaluation phase, and licensing/access candidates when a release is
    planned.  Unsupported analyses recommend a documentation warning."""
    recommendations = [
        ActionRecommendation(
            phase="DataCollectionProcessing",
            action="Flagging",
            rationale=f"Record the {card.title} result for downstream evaluation and documentation.",
        )
    ]
    severity = _severity(card, proportion_limit)
    if severity == "unsupported":
        recommendations.append(
            ActionRecommendation(
                phase="Documentation",
                action="Warning",
                rationale=f"{card.title} cannot currently be audited by automated methods; "
                "document the gap so downstream users do not assume it was checked.",
            )
        )
    elif severity == "flagged":
        summary = _flag_summary(card)
        if context.dataset_mutable:
            recommendations.append(
                ActionRecommendation(
                    phase="DataCollectionProcessing",
                    action="Removal",
                    rationale=f"Candidate: filter the affected records ({summary}).",
                )
            )
            recommendations.append(
                ActionRecommendation(
                    phase="DataCollectionProcessing",
                    action="Augmentation",
                    rationale=f"Candidate: tag affected records instead of removing them ({summary}).",
                )
            )
            if target_distribution is not None:
                deficits = _distribution_deficits(card, target_distribution)
                if deficits:
                    recommendations.append(
                        ActionRecommendation(
                            phase="DataCollectionProcessing",
                            action="Addition",
                            rationale="Candidate: collect or synthesize additional records to close "
                            f"deficits vs the target distribution: {deficits}.",
                        )
                    )
        else:
            recommendations.append(
                ActionRecommendation(
                    phase="Documentation",
                    action="Warning",
                    rationale=f"Dataset is immutable; document the finding instead ({summary}).",
                )
            )
        if context.phase == "ModelEvaluation":
            recommendations.append(
                ActionRecommendation(
                    phase="ModelEvaluation",
                    action="AdditionalBenchmarking",
                    rationale=f"Select benchmarks sensitive to the flagged pattern ({summary}).",
                )
            )
            recommendations.append(
                ActionRecommendation(
                    phase="ModelEvaluation",
                    action="BenchmarkCreation",
                    rationale="No existing benchmark may cover this pattern; consider building one.",
                )
            )
        if context.release_planned:
            recommendations.append(
                ActionRecommendation(
                    phase="PackagingRelease",
                    action="Licensing",
                    rationale=f"Candidate: reflect the finding in terms of use ({summary}).",
                )
            )
            recommendations.append(
                ActionRecommendation(
                    phase="PackagingRelease",
                    action="Access",
                    rationale="Candidate: gate access until the finding is addressed or documented.",
                )
            )
    return tuple(recommendations)


def _distribution_deficits(card: AnalysisCard, target: dict[str, float]) -> str:
    payload = card.output
    dist: Distribution | None = None
    if isinstance(payload, Distribution):
        dist = payload
    elif isinstance(payload, IdentityStats):
        merged: dict[str, int] = {}
        for axis, axis_dist in payload.by_axis.items():
            for label, count in axis_dist.entries:
                merged[f"{axis}/{label}"] = count
        dist = Distribution.from_counts(merged)
    if dist is None or dist.total == 0:
        return ""
    deficits = []
    for label, want in sorted(target.items()):
        have = dist.count(label) / dist.total
        if have < want:
            missing = int((want - have) * dist.total + 0.5)
            deficits.append(f"{label}: about {missing} records short of {want:.0%}")
    return "; ".join(deficits)


def attach_actions(card: AnalysisCard, context: AuditPlanContext, **kwargs) -> AnalysisCard:
    return dataclasses.replace(card, action=recommend_actions(card, context, **kwargs))


# --------------------------------------------------------------------------
# Serialization

def canon_float(x: float) -> float:
    """9 significant digits; parsing the formatted value keeps repr stable."""
    return float(f"{x:.9g}")


def _jsonable(obj: object) -> object:
    if isinstance(obj, float):
        return canon_float(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if isinstance(obj, GroupKey):
        return obj.label
    if isinstance(obj, Distribution):
        return {
            "kind": "distribution",
            "entries": [[label, count] for label, count in obj.entries],
            "total": obj.total,
        }
    if isinstance(obj, Histogram):
        return {
            "kind": "histogram",
            "edges": [canon_float(e) for e in obj.edges],
            "counts": list(obj.counts),
            "n_missing": obj.n_missing,
        }
    if isinstance(obj, Proportion):
        return {
            "kind": "proportion",
            "numerator": obj.numerator,
            "denominator": obj.denominator,
            "value": canon_float(obj.value) if obj.defined else None,
            "defined": obj.defined,
            "n_missing": obj.n_missing,
        }
    if isinstance(obj, IdentityStats):
        return {
            "kind": "distribution",
            "by_axis": {axis: _jsonable(dist) for axis, dist in sorted(obj.by_axis.items())},
            "by_term": _jsonable(obj.by_term),
            "intersections": [
                {"groups": inter.label, "count": inter.count} for inter in obj.intersections
            ],
            "records_scanned": obj.records_scanned,
        }
    if isinstance(obj, HatefulTermStats):
        return {
            "kind": "distribution",
            "by_term": _jsonable(obj.by_term),
            "referenced_groups": dict(sorted(obj.referenced_groups.items())),
            "records_scanned": obj.records_scanned,
        }
    if isinstance(obj, PiiStats):
        return {
            "kind": "proportion",
            "proportion": _jsonable(obj.proportion),
            "label_counts": _jsonable(obj.label_counts),
            "flagged_ids": list(obj.flagged_ids),
            "flagged_total": obj.flagged_total,
        }
    if isinstance(obj, DisaggregatedTable):
        return {
            "kind": "disaggregated_table",
            "rows": [row.label for row in obj.rows],
            "columns": list(obj.columns),
            "cells": {
                row.label: {col: obj.cell(row, col) for col in obj.columns if obj.cell(row, col)}
                for row in obj.rows
            },
            "row_totals": {row.label: obj.row_totals[row] for row in obj.rows},
            "col_totals": {col: obj.col_totals[col] for col in obj.columns},
            "grand_total": obj.grand_total,
            "n_missing_content": obj.n_missing_content,
            "n_missing_human": obj.n_missing_human,
        }
    if isinstance(obj, AssociationResult):
        table = _jsonable(obj.table)
        table["flags"] = [
            {
                "group": flag.group.label,
                "category": flag.category,
                "lift": canon_float(flag.lift),
                "support": flag.support,
                "flagged": flag.flagged,
            }
            for flag in obj.flags
        ]
        table["lift_threshold"] = canon_float(obj.lift_threshold)
        table["support_floor"] = obj.support
        return table
    if isinstance(obj, CooccurrenceResult):
        return {
            "kind": "ranked_list",
            "ranking": obj.ranking,
            "records_scanned": obj.records_scanned,
            "groups": [
                {
                    "group": group.group.label,
                    "entries": [
                        {"token": e.token, "count": e.count, "pmi": canon_float(e.pmi)}
                        for e in group.entries
                    ],
                }
                for group in obj.groups
            ],
        }
    if isinstance(obj, TopSources):
        return {
            "kind": "ranked_list",
            "domains": [
                {"domain": d.domain, "records": d.records, "tokens": d.tokens} for d in obj.domains
            ],
            "n_missing": obj.n_missing,
            "attributed_tokens": obj.attributed_tokens,
            "missing_tokens": obj.missing_tokens,
        }
    if isinstance(obj, DuplicateReport):
        return {
            "kind": "duplicate_report",
            "mode": obj.mode,
            "duplicate_proportion": canon_float(obj.duplicate_proportion),
            "clusters": [list(cluster) for cluster in obj.clusters],
            "records_scanned": obj.records_scanned,
            "parameters": _jsonable(obj.parameters),
            "short_records": obj.short_records,
        }
    if isinstance(obj, OverlapReport):
        return {
            "kind": "overlap_report",
            "dataset_a": obj.dataset_a,
            "dataset_b": obj.dataset_b,
            "mode": obj.mode,
            "matched": obj.matched,
            "total_a": obj.total_a,
            "overlap_percent": canon_float(obj.overlap_percent),
            "ngram_width": obj.ngram_width,
            "matched_sample": list(obj.matched_sample),
        }
    if isinstance(obj, Unsupported):
        return {"kind": "unsupported", "reason": obj.reason}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    raise ReportError(f"cannot serialize {type(obj).__name__}")


def card_to_jsonable(card: AnalysisCard) -> dict:
    return {
        "analysis_id": card.analysis_id,
        "title": card.title,
        "task": card.task,
        "analysis_object": list(card.analysis_object),
        "effort": card.effort,
        "dependencies": list(card.dependencies),
        "output": _jsonable(card.output),
        "action": [
            {"phase": a.phase, "action": a.action, "rationale": a.rationale} for a in card.action
        ],
        "provenance": {
            "dataset_label": card.provenance.dataset_label,
            "records_scanned": card.provenance.records_scanned,
            "n_missing": dict(sorted(card.provenance.n_missing.items())),
            "config_digest": card.provenance.config_digest,
            "tool_version": card.provenance.tool_version,
            "timestamp": card.provenance.timestamp,
            "providers": dict(sorted(card.provenance.providers.items())),
        },
        "section": card.section,
    }


SECTION_HEADINGS = {
    "who": "Who is in the data",
    "what": "What is in the data",
    "associations": "Human x content associations",
}


def render_report(
    cards: list[AnalysisCard],
    fmt: str = "structured",
    context: AuditPlanContext | None = None,
    environment: dict | None = None,
) -> str:
    if not cards:
        raise ReportError("a report needs at least one card")
    if fmt == "structured":
        document = {
            "daf_report": 1,
            "context": None
            if context is None
            else {
                "goal": context.goal,
                "phase": context.phase,
                "dataset_mutable": context.dataset_mutable,
                "release_planned": context.release_planned,
            },
            "environment": _jsonable(environment or {"tool_version": TOOL_VERSION}),
            "cards": [card_to_jsonable(card) for card in sorted(cards, key=lambda c: c.analysis_id)],
        }
        return json.dumps(document, sort_keys=True, ensure_ascii=False, indent=1) + "\n"
    if fmt == "human-readable":
        return _render_text(cards, context)
    raise ReportError(f"unknown report format: {fmt!r}")


def _render_text(cards: list[AnalysisCard], context: AuditPlanContext | None) -> str:
    lines: list[str] = []
    label = cards[0].provenance.dataset_label
    lines.append(f"Dataset audit report: {label}")
    lines.append("=" * len(lines[0]))
    if context is not None:
        lines.append(
            f"Goal: {context.goal} | Phase: {context.phase} | "
            f"Mutable: {context.dataset_mutable} | Release planned: {context.release_planned}"
        )
    lines.append("")
    for section in ("who", "what", "associations"):
        section_cards = [c for c in cards if c.section == section]
        if not section_cards:
            continue
        heading = SECTION_HEADINGS[section]
        lines.append(heading)
        lines.append("-" * len(heading))
        for card in sorted(section_cards, key=lambda c: c.analysis_id):
            lines.append(f"[{card.analysis_id}] {card.title}")
            lines.append(f"  Task: {card.task}")
            lines.append(f"  Analysis object: {', '.join(card.analysis_object)}")
            lines.append(f"  Effort: {card.effort}")
            deps = ", ".join(card.dependencies) if card.dependencies else "none"
            lines.append(f"  Dependencies: {deps}")
            lines.append(f"  Output: {summarize_output(card.output)}")
            for action in card.action:
                lines.append(f"  Action [{action.phase}/{action.action}]: {action.rationale}")
            missing = card.provenance.n_missing
            if missing:
                summary = ", ".join(f"{k}={v}" for k, v in sorted(missing.items()))
                lines.append(f"  Missing: {summary}")
            lines.append("")
    return "\n".join(lines) + "\n"


def summarize_output(payload: object) -> str:
    if isinstance(payload, Unsupported):
        return f"unsupported ({payload.reason})"
    if isinstance(payload, Distribution):
        head = ", ".join(f"{label}:{count}" for label, count in payload.entries[:6])
        return f"distribution over {len(payload.entries)} labels ({head})"
    if isinstance(payload, IdentityStats):
        axes = ", ".join(
            f"{axis}[{', '.join(f'{g}:{c}' for g, c in dist.entries[:4])}]"
            for axis, dist in sorted(payload.by_axis.items())
        )
        inter = "; ".join(f"{i.label}:{i.count}" for i in payload.intersections[:4])
        return f"groups {axes}" + (f"; intersections {inter}" if inter else "")
    if isinstance(payload, HatefulTermStats):
        head = ", ".join(
            f"{term}:{count} (-> {payload.referenced_groups[term]})"
            for term, count in payload.by_term.entries[:4]
        )
        return f"{payload.by_term.total} occurrences ({head})" if head else "no hateful terms found"
    if isinstance(payload, PiiStats):
        p = payload.proportion
        shown = f"{p.value:.4f}" if p.defined else "undefined"
        return f"pii proportion {shown} ({p.numerator}/{p.denominator})"
    if isinstance(payload, Proportion):
        shown = f"{payload.value:.4f}" if payload.defined else "undefined"
        return f"proportion {shown} ({payload.numerator}/{payload.denominator})"
    if isinstance(payload, Histogram):
        return f"histogram over {len(payload.counts)} bins, {payload.total} scored, {payload.n_missing} missing"
    if isinstance(payload, AssociationResult):
        flagged = payload.flagged
        if flagged:
            worst = "; ".join(f"{f.group.label} x {f.category} lift {f.lift:.2f}" for f in flagged[:4])
            return (
                f"{len(flagged)} flagged association(s) at lift>={payload.lift_threshold:g}, "
                f"support>={payload.support}: {worst}"
            )
        return f"no associations flagged at lift>={payload.lift_threshold:g}, support>={payload.support}"
    if isinstance(payload, CooccurrenceResult):
        head = "; ".join(
            f"{g.group.label}: {', '.join(e.token for e in g.entries[:5])}" for g in payload.groups[:4]
        )
        return f"top co-occurrences by {payload.ranking} ({head})"
    if isinstance(payload, TopSources):
        head = ", ".join(f"{d.domain}({d.tokens} tokens)" for d in payload.domains[:5])
        return f"top sources: {head}" if head else "no attributable sources"
    if isinstance(payload, DuplicateReport):
        return (
            f"{payload.mode} duplicate proportion {payload.duplicate_proportion:.4f} "
            f"across {len(payload.clusters)} cluster(s)"
        )
    if isinstance(payload, OverlapReport):
        return (
            f"{payload.mode} overlap {payload.overlap_percent:.2f}% "
            f"({payload.matched}/{payload.total_a} records matched in {payload.dataset_b})"
        )
    return str(payload)


# --------------------------------------------------------------------------
# Mitigation

@dataclass(frozen=True)
class Selection:
    """A named set of record ids chosen by a prior analysis output."""

    name: str
    ids: frozenset[str]
    definition: dict


def apply_mitigation(
    handle: DatasetHandle,
    selections: list[Selection],
    mode: str,
    output_path: str,
    digest: str = "",
) -> dict:
    """Write a mitigated copy of the dataset plus a manifest.

    remove: drop selected records; every surviving line is byte-identical.
    tag:    keep every record; selected ones get a `daf_tags` meta field
            (jsonl only — the other formats have no metadata channel).
    Lines that fail to parse pass through unchanged in both modes: a
    mitigation must not silently destroy data it cannot read.
    """
    if mode not in ("remove", "tag"):
        raise ReportError(f"unknown mitigation mode: {mode!r}")
    if mode == "tag" and handle.format != "jsonl":
        raise ReportError("tag mode needs the jsonl format (no metadata channel in "
                          f"{handle.format!r})")
    tags_by_id: dict[str, list[str]] = {}
    for selection in selections:
        for record_id in selection.ids:
            tags_by_id.setdefault(record_id, []).append(selection.name)
    affected: list[str] = []
    counts = {"input_lines": 0, "written": 0, "removed": 0, "tagged": 0, "passthrough_unparsed": 0}
    in_path = Path(handle.path)
    out_path = Path(output_path)
    with in_path.open("rb") as src, out_path.open("wb") as dst:
        line_no = 0
        for raw in src:
            line_no += 1
            counts["input_lines"] += 1
            stripped = raw.rstrip(b"\n")
            try:
                record = parse_line(handle.format, stripped.decode("utf-8"), line_no)
            except (RecordParseError, UnicodeDecodeError):
                counts["passthrough_unparsed"] += 1
                counts["written"] += 1
                dst.write(raw)
                continue
            tags = tags_by_id.get(record.id)
            if tags is None:
                counts["written"] += 1
                dst.write(raw)
                continue
            affected.append(record.id)
            if mode == "remove":
                counts["removed"] += 1
                continue
            obj = json.loads(stripped.decode("utf-8"))
            meta = obj.get("meta")
            if not isinstance(meta, dict):
                meta = {}
                obj["meta"] = meta
            meta["daf_tags"] = ",".join(sorted(set(tags)))
            dst.write(json.dumps(obj, ensure_ascii=False).encode("utf-8") + b"\n")
            counts["tagged"] += 1
            counts["written"] += 1
    manifest = {
        "mode": mode,
        "input": str(in_path),
        "output": str(out_path),
        "selections": [
            {"name": s.name, "definition": _jsonable(s.definition), "matched": len(s.ids & set(affected))}
            for s in selections
        ],
        "affected_ids": sorted(affected),
        "counts": counts,
        "config_digest": digest,
    }
    return manifest


def duplicate_removal_selection(report: DuplicateReport) -> Selection:
    """Every cluster member except the lowest id: deterministic keep rule."""
    ids: set[str] = set()
    for cluster in report.clusters:
        ids.update(sorted(cluster)[1:])
    return Selection(
        name="duplicate",
        ids=frozenset(ids),
        definition={"analysis": "data_duplication", "mode": report.mode,
                    "keep": "lowest id per cluster", "parameters": report.parameters},
    )
