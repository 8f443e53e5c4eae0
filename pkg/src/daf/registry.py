"""Catalog of every analysis the toolkit can run.

One row per analysis card: identity, descriptive fields (task, analysis
object, effort), dependency declarations used for plan validation, the
payload kind its engine binding produces, and the Who/What/Associations
section it reports under.  Two rows are permanently unsupported and
always yield an "unsupported" payload.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ANALYSIS_OBJECTS = ("Text", "Image", "Metadata", "InferredTextSignals", "InferredImageSignals")
EFFORTS = ("Low", "Medium", "High", "NotYetPossible")
SECTIONS = ("who", "what", "associations")

# Requirement kinds checked during plan validation:
#   ("lexicon", <kind>)    a lexicon of that kind must be loaded
#   ("signal", <name>)     a provider must serve that signal
#   ("comparison", "")     the plan must name a comparison dataset
#   ("meta", <key>)        soft: records lacking it are counted missing
Requirement = tuple[str, str]


@dataclass(frozen=True)
class AnalysisSpec:
    analysis_id: str
    title: str
    task: str
    section: str
    analysis_object: tuple[str, ...]
    effort: str
    requires: tuple[Requirement, ...]
    output_kind: str
    unsupported_reason: str | None = None
    default_params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.section not in SECTIONS:
            raise ValueError(f"bad section {self.section!r}")
        if self.effort not in EFFORTS:
            raise ValueError(f"bad effort {self.effort!r}")
        for obj in self.analysis_object:
            if obj not in ANALYSIS_OBJECTS:
                raise ValueError(f"bad analysis object {obj!r}")

    @property
    def dependency_names(self) -> tuple[str, ...]:
        names = []
        for kind, value in self.requires:
            if kind == "lexicon":
                names.append(f"{value} lexicon")
            elif kind == "signal":
                names.append(f"signal:{value}")
            elif kind == "comparison":
                names.append("comparison dataset")
            elif kind == "meta":
                names.append(f"metadata:{value}")
        return tuple(names)


def _spec(*args, **kwargs) -> tuple[str, AnalysisSpec]:
    spec = AnalysisSpec(*args, **kwargs)
    return spec.analysis_id, spec


REGISTRY: dict[str, AnalysisSpec] = dict(
    [
        # ------------------------------------------------- who: presence
        _spec(
            "pii",
            "Personally Identifiable Information",
            "Find records containing emails, phone numbers, network or id numbers",
            "who",
            ("Text", "InferredTextSignals"),
            "Medium",
            (("signal", "pii"),),
            "proportion",
        ),
        _spec(
            "people_in_images",
            "People in Images",
            "Share of images that depict people, via detected face counts",
            "who",
            ("InferredImageSignals",),
            "Low",
            (("signal", "face_count"),),
            "proportion",
        ),
        # ------------------------------------------- who: social traits
        _spec(
            "social_identity_terms",
            "Social Identity Terms",
            "Record counts per identity group, unitary and intersectional, plus term frequencies",
            "who",
            ("Text",),
            "Low",
            (("lexicon", "identity"),),
            "distribution",
        ),
        _spec(
            "pronouns",
            "Pronoun Distribution",
            "Occurrence counts of pronouns by pronoun group",
            "who",
            ("Text",),
            "Low",
            (("lexicon", "pronoun"),),
            "distribution",
        ),
        _spec(
            "hateful_terms",
            "Hateful Terms in Text",
            "Occurrence counts of hateful terms and the groups they reference",
            "who",
            ("Text",),
            "Low",
            (("lexicon", "hateful"),),
            "distribution",
        ),
        _spec(
            "dialect",
            "Dialect",
            "Share of records per dialect label",
            "who",
            ("InferredTextSignals",),
            "High",
            (("signal", "dialect"),),
            "distribution",
        ),
        _spec(
            "perceived_identity_images",
            "Perceived Social Identity in Images",
            "Share of images per perceived identity label",
            "who",
            ("InferredImageSignals",),
            "Low",
            (("signal", "perceived_identity"),),
            "distribution",
        ),
        _spec(
            "hateful_symbols",
            "Hateful Symbols in Images",
            "Share of images depicting known hateful symbols",
            "who",
            ("InferredImageSignals",),
            "NotYetPossible",
            (),
            "unsupported",
            unsupported_reason="No reliable automated detector exists for hateful symbols; "
            "this card is registered so the gap is documented rather than silently skipped.",
        ),
        # ----------------------------------------------- what: content
        _spec(
            "offensive_speech",
            "Offensive Speech",
            "Histogram of toxicity scores across records (toxicity, as scored by the "
            "configured classifier, is a proxy for offensive speech, not the same construct)",
            "what",
            ("InferredTextSignals",),
            "Low",
            (("signal", "toxicity"),),
            "histogram",
            default_params={"bins": 10},
        ),
        _spec(
            "topics",
            "Topic Distribution",
            "Record counts per topic label",
            "what",
            ("InferredTextSignals",),
            "Low",
            (("signal", "topic"),),
            "distribution",
        ),
        _spec(
            "sexual_imagery",
            "Sexual Imagery",
            "Share of images scored as sexual content",
            "what",
            ("InferredImageSignals",),
            "Low",
            (("signal", "sexual_image"),),
            "proportion",
            default_params={"threshold": 0.5},
        ),
        _spec(
            "violent_imagery",
            "Violent Imagery",
            "Share of images scored as violent content",
            "what",
            ("InferredImageSignals",),
            "Low",
            (("signal", "violent_image"),),
            "proportion",
            default_params={"threshold": 0.5},
        ),
        # -------------------------------------------- what: provenance
        _spec(
            "top_sources",
            "Top Sources",
            "Source domains ranked by tokens collected",
            "what",
            ("Metadata",),
            "Low",
            (("meta", "url"),),
            "ranked_list",
            default_params={"k": 20},
        ),
        _spec(
            "source_geography",
            "Source Geographic Spread",
            "Record counts by country, from country-code TLDs of source domains",
            "what",
            ("Metadata",),
            "Low",
            (("meta", "url"),),
            "distribution",
        ),
        _spec(
            "publication_time",
            "Source Data Publication Time",
            "Record counts per year of the timestamp metadata (whatever date the "
            "source pipeline stored there: crawl or publication)",
            "what",
            ("Metadata",),
            "Low",
            (("meta", "timestamp"),),
            "distribution",
        ),
        _spec(
            "language",
            "Language",
            "Record counts per identified language",
            "what",
            ("Text", "InferredTextSignals"),
            "Low",
            (("signal", "language"),),
            "distribution",
        ),
        _spec(
            "data_duplication",
            "Data Duplication",
            "Share of records that duplicate another record, exactly or nearly",
            "what",
            ("Text", "Image"),
            "Low",
            (),
            "duplicate_report",
            default_params={"mode": "exact"},
        ),
        _spec(
            "dataset_overlap",
            "Dataset Overlap",
            "Share of this dataset's records found in a comparison dataset",
            "what",
            ("Text", "Image"),
            "Medium",
            (("comparison", ""),),
            "overlap_report",
            default_params={"mode": "exact-text", "ngram_width": 13},
        ),
        # ------------------------------------- associations: text
        _spec(
            "sit_x_top_tokens",
            "Identity Terms x Top Tokens",
            "Top co-occurring tokens for each identity group",
            "associations",
            ("Text",),
            "Low",
            (("lexicon", "identity"),),
            "ranked_list",
            default_params={"k": 10, "ranking": "count", "min_count": 1},
        ),
        _spec(
            "sit_x_topic",
            "Identity Terms x Topic",
            "Topic distribution disaggregated by identity group, with lift flags",
            "associations",
            ("Text", "InferredTextSignals"),
            "Low",
            (("lexicon", "identity"), ("signal", "topic")),
            "disaggregated_table",
        ),
        _spec(
            "sit_x_offensive",
            "Identity Terms x Offensive Speech",
            "Binned toxicity disaggregated by identity group, with lift flags",
            "associations",
            ("Text", "InferredTextSignals"),
            "Low",
            (("lexicon", "identity"), ("signal", "toxicity")),
            "disaggregated_table",
            default_params={"bins": 2},
        ),
        _spec(
            "sit_x_sexual",
            "Identity Terms x Sexual Imagery",
            "Sexual-image rate disaggregated by identity group, with lift flags",
            "associations",
            ("Text", "InferredImageSignals"),
            "Low",
            (("lexicon", "identity"), ("signal", "sexual_image")),
            "disaggregated_table",
            default_params={"threshold": 0.5},
        ),
        _spec(
            "sit_x_violent",
            "Identity Terms x Violent Imagery",
            "Violent-image rate disaggregated by identity group, with lift flags",
            "associations",
            ("Text", "InferredImageSignals"),
            "Low",
            (("lexicon", "identity"), ("signal", "violent_image")),
            "disaggregated_table",
            default_params={"threshold": 0.5},
        ),
        # ------------------------------------- associations: image
        _spec(
            "psi_x_image_features",
            "Perceived Identity x Top Image Features",
            "Detected image features disaggregated by perceived identity",
            "associations",
            ("InferredImageSignals",),
            "Low",
            (("signal", "perceived_identity"), ("signal", "image_objects")),
            "disaggregated_table",
        ),
        _spec(
            "psi_x_sexual",
            "Perceived Identity x Sexual Imagery",
            "Sexual-image rate disaggregated by perceived identity",
            "associations",
            ("InferredImageSignals",),
            "Low",
            (("signal", "perceived_identity"), ("signal", "sexual_image")),
            "disaggregated_table",
            default_params={"threshold": 0.5},
        ),
        _spec(
            "psi_x_violent",
            "Perceived Identity x Violent Imagery",
            "Violent-image rate disaggregated by perceived identity",
            "associations",
            ("InferredImageSignals",),
            "Low",
            (("signal", "perceived_identity"), ("signal", "violent_image")),
            "disaggregated_table",
            default_params={"threshold": 0.5},
        ),
        _spec(
            "psi_x_hateful_symbols",
            "Perceived Identity x Hateful Symbols",
            "Hateful-symbol rate disaggregated by perceived identity",
            "associations",
            ("InferredImageSignals",),
            "NotYetPossible",
            (),
            "unsupported",
            unsupported_reason="Depends on hateful-symbol detection, which has no reliable "
            "automated method; registered to document the gap.",
        ),
        # ------------------------------------- associations: text-image
        _spec(
            "psi_x_top_tokens",
            "Perceived Identity x Top Text Tokens",
            "Top co-occurring caption tokens for each perceived identity label",
            "associations",
            ("InferredImageSignals", "Text"),
            "Low",
            (("signal", "perceived_identity"),),
            "ranked_list",
            default_params={"k": 10, "ranking": "count", "min_count": 1},
        ),
        _spec(
            "psi_x_offensive",
            "Perceived Identity x Offensive Speech",
            "Binned caption toxicity disaggregated by perceived identity",
            "associations",
            ("InferredImageSignals", "InferredTextSignals"),
            "Low",
            (("signal", "perceived_identity"), ("signal", "toxicity")),
            "disaggregated_table",
            default_params={"bins": 2},
        ),
        _spec(
            "psi_x_topic",
            "Perceived Identity x Topic",
            "Caption topics disaggregated by perceived identity",
            "associations",
            ("InferredImageSignals", "InferredTextSignals"),
            "Low",
            (("signal", "perceived_identity"), ("signal", "topic")),
            "disaggregated_table",
        ),
    ]
)


def registry_rows() -> list[AnalysisSpec]:
    """All analyses in their stable catalog order."""
    return list(REGISTRY.values())
