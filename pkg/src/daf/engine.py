"""Plan execution: one fused pass over the corpus feeding every
requested analysis, then card assembly and report writing.

Sharding model: each worker shard owns a full set of aggregators;
record contexts are dealt round-robin; shards merge in index order at
the end.  Because every aggregator's merge is associative and
commutative, the shard count never changes any result — reports are
byte-identical across 1, 2, or 8 workers.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path

from .associations import (
    BinnedScalarContent,
    BooleanContent,
    CategoricalContent,
    CooccurrenceAggregator,
    DisaggregateAggregator,
    SignalLabelSource,
    SpanLabelContent,
    TermAxesSource,
    association_lift,
)
from .content_analyses import (
    BooleanProportionAggregator,
    CategoricalDistributionAggregator,
    ScalarHistogramAggregator,
    uniform_edges,
)
from .corpus import DatasetHandle, TokenizationPolicy, open_dataset, sample_records
from .human_analyses import (
    HatefulTermAggregator,
    IdentityTermAggregator,
    PiiAggregator,
    PronounAggregator,
)
from .lexicon import TermMatcher, load_lexicon
from .plan import AuditPlan, AnalysisRequest, ProviderSpec
from .provenance import (
    ExactDuplicateAggregator,
    GeographyAggregator,
    NearDuplicateAggregator,
    OverlapAggregator,
    OverlapIndex,
    PublicationAggregator,
    TopSourcesAggregator,
)
from .registry import REGISTRY, AnalysisSpec
from .report import (
    AnalysisCard,
    CardProvenance,
    Selection,
    attach_actions,
    config_digest,
    make_card,
    render_report,
    summarize_output,
)
from .results import AssociationResult, Unsupported
from .scan import Aggregator, ContextStream, RecordContext
from .signals import (
    HttpProvider,
    KeywordTopicProvider,
    LanguageProvider,
    LexiconToxicityProvider,
    ManifestProvider,
    PiiProvider,
    Provider,
    SignalDescriptor,
    SubprocessLinesProvider,
)
from . import __version__ as TOOL_VERSION


class RunError(Exception):
    pass


def build_provider(spec: ProviderSpec) -> Provider:
    if spec.transport == "builtin":
        if spec.builtin == "pii":
            return PiiProvider(spec.id)
        if spec.builtin == "language":
            return LanguageProvider(spec.id)
        if spec.builtin == "lexicon-toxicity":
            return LexiconToxicityProvider(spec.config["lexicon"], spec.id)
        if spec.builtin == "keyword-topic":
            return KeywordTopicProvider(spec.config["keywords"], spec.id)
        if spec.builtin == "manifest":
            descriptors = [SignalDescriptor(name, kind, spec.id) for name, kind in spec.signals]
            return ManifestProvider(spec.config["manifest"], descriptors, spec.id)
        raise RunError(f"unknown builtin provider {spec.builtin!r}")
    descriptors = [SignalDescriptor(name, kind, spec.id) for name, kind in spec.signals]
    if spec.transport == "subprocess-lines":
        return SubprocessLinesProvider(
            spec.id, list(spec.command), descriptors,
            batch_size=spec.batch_size, timeout=spec.timeout, retries=spec.retries,
        )
    if spec.transport == "http":
        url = provider_url_override(spec.id) or spec.url or ""
        return HttpProvider(
            spec.id, url, descriptors,
            batch_size=spec.batch_size, timeout=spec.timeout, retries=spec.retries,
        )
    raise RunError(f"unknown transport {spec.transport!r}")


def provider_url_override(provider_id: str) -> str | None:
    """DAF_PROVIDER_URL_<ID> (id uppercased, non-alphanumerics as _)
    overrides an http provider's plan-configured endpoint."""
    key = "DAF_PROVIDER_URL_" + "".join(
        c if c.isalnum() else "_" for c in provider_id.upper()
    )
    return os.environ.get(key)


def load_stopwords(source: str | None) -> frozenset[str]:
    if source is None:
        return frozenset()
    if source == "default":
        text = importlib_resources.files("daf").joinpath("resources/stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


class _SelectionCollector(Aggregator):
    """Full (uncapped) id sets powering later mitigation runs."""

    def __init__(self, want_pii: bool, want_hateful: bool):
        self.want_pii = want_pii
        self.want_hateful = want_hateful
        self.pii_ids: set[str] = set()
        self.hateful_ids: set[str] = set()

    def update(self, context: RecordContext) -> None:
        if self.want_pii:
            value = context.signals.get("pii")
            if value is not None and value.spans:
                self.pii_ids.add(context.record.id)
        if self.want_hateful and any(h.kind == "hateful" for h in context.hits):
            self.hateful_ids.add(context.record.id)

    def merge(self, other: "_SelectionCollector") -> None:
        self.pii_ids.update(other.pii_ids)
        self.hateful_ids.update(other.hateful_ids)

    def finalize(self) -> dict:
        out: dict = {}
        if self.want_pii:
            out["pii"] = sorted(self.pii_ids)
        if self.want_hateful:
            out["hateful_terms"] = sorted(self.hateful_ids)
        return out


@dataclass
class _Analysis:
    """One requested analysis bound to its aggregator factory."""

    request: AnalysisRequest
    spec: AnalysisSpec
    params: dict
    make: object  # () -> Aggregator | None
    finish: object  # (Aggregator | None) -> (payload, extra n_missing dict)

    @property
    def signals(self) -> tuple[str, ...]:
        return tuple(v for k, v in self.spec.requires if k == "signal")


class PlanRunner:
    def __init__(self, plan: AuditPlan):
        self.plan = plan
        self.policy = TokenizationPolicy()
        self.lexicons = [load_lexicon(p) for p in plan.lexicon_paths]
        self.matcher: TermMatcher | None = (
            TermMatcher(self.lexicons, self.policy) if self.lexicons else None
        )
        self.stopwords = load_stopwords(plan.stopwords)
        self.providers: dict[str, Provider] = {}
        self.signal_to_provider: dict[str, str] = plan.signal_map()
        self.plan_digest = config_digest(plan.plan_digest_source)

    # -- aggregator bindings ------------------------------------------------

    def _effective_params(self, request: AnalysisRequest) -> dict:
        spec = REGISTRY[request.id]
        params = dict(spec.default_params)
        params.update(request.params)
        return params

    def _bind(self, request: AnalysisRequest) -> _Analysis:
        spec = REGISTRY[request.id]
        params = self._effective_params(request)
        thresholds = self.plan.thresholds
        matcher = self.matcher
        stopwords = self.stopwords
        analysis_id = request.id

        def simple(make, finish=None):
            return _Analysis(
                request=request, spec=spec, params=params, make=make,
                finish=finish or (lambda agg: (agg.finalize(), {})),
            )

        def bool_threshold() -> float | None:
            if "threshold" in params:
                return params["threshold"]
            return thresholds.get("signal_threshold", 0.5)

        def lift_args() -> tuple[float, int]:
            lift = float(params.get("lift", thresholds["lift"]))
            support = int(params.get("support", thresholds["support"]))
            return lift, support

        def finish_association(agg: DisaggregateAggregator):
            table = agg.finalize()
            lift, support = lift_args()
            flags = tuple(association_lift(table, lift, support)) if table.grand_total else ()
            payload = AssociationResult(table=table, flags=flags, lift_threshold=lift, support=support)
            return payload, {}

        if spec.output_kind == "unsupported":
            return simple(lambda: None, lambda agg: (Unsupported(spec.unsupported_reason or ""), {}))

        if analysis_id == "pii":
            return simple(lambda: PiiAggregator(id_cap=int(params.get("id_cap", 100))))
        if analysis_id == "people_in_images":
            signal = params.get("signal", "face_count")
            return simple(lambda: BooleanProportionAggregator(signal))
        if analysis_id == "social_identity_terms":
            pairs = [tuple(p) for p in params.get("intersections", [])]
            window = params.get("intersection_window")
            return simple(lambda: IdentityTermAggregator(matcher, pairs, window))
        if analysis_id == "pronouns":
            return simple(lambda: PronounAggregator(matcher))
        if analysis_id == "hateful_terms":
            return simple(lambda: HatefulTermAggregator(matcher))
        if analysis_id in ("dialect", "perceived_identity_images", "topics", "language"):
            signal = {
                "dialect": "dialect",
                "perceived_identity_images": "perceived_identity",
                "topics": "topic",
                "language": "language",
            }[analysis_id]
            return simple(lambda: CategoricalDistributionAggregator(signal))
        if analysis_id == "offensive_speech":
            edges = uniform_edges(int(params.get("bins", thresholds["bins"])))
            return simple(lambda: ScalarHistogramAggregator("toxicity", edges))
        if analysis_id in ("sexual_imagery", "violent_imagery"):
            signal = "sexual_image" if analysis_id == "sexual_imagery" else "violent_image"
            threshold = bool_threshold()
            return simple(lambda: BooleanProportionAggregator(signal, threshold))
        if analysis_id == "top_sources":
            k = int(params.get("k", 20))
            return simple(
                TopSourcesAggregator,
                lambda agg: (agg.finalize_top(k), {"url": agg.missing_records}),
            )
        if analysis_id == "source_geography":
            return simple(
                GeographyAggregator,
                lambda agg: (agg.finalize(), {"url": agg.missing}),
            )
        if analysis_id == "publication_time":
            return simple(
                PublicationAggregator,
                lambda agg: (agg.finalize(), {"timestamp": agg.missing}),
            )
        if analysis_id == "data_duplication":
            mode = params.get("mode", "exact")
            if mode == "exact":
                return simple(ExactDuplicateAggregator)
            dedup = dict(thresholds["dedup"])
            dedup.update({k: v for k, v in params.items() if k != "mode"})
            return simple(
                lambda: NearDuplicateAggregator(
                    shingle_width=int(dedup["shingle_width"]),
                    permutations=int(dedup["permutations"]),
                    jaccard_threshold=float(dedup["jaccard_threshold"]),
                    seed=int(dedup["seed"]),
                    candidates=dedup.get("candidates", "minhash"),
                )
            )
        if analysis_id == "dataset_overlap":
            index = self._overlap_index(params)
            labels = (self.plan.dataset.label, self.plan.comparison.label)
            return simple(lambda: OverlapAggregator(index, *labels))
        if analysis_id in ("sit_x_top_tokens", "psi_x_top_tokens"):
            if analysis_id == "sit_x_top_tokens":
                source = TermAxesSource(tuple(params["axes"]) if "axes" in params else None)
            else:
                source = SignalLabelSource("perceived_identity")
            k = int(params.get("k", 10))
            ranking = params.get("ranking", "count")
            min_count = int(params.get("min_count", 1))
            window = params.get("window")
            return simple(
                lambda: CooccurrenceAggregator(source, stopwords=stopwords,
                                               min_count=min_count, matcher=matcher,
                                               window=window),
                lambda agg: (agg.finalize_ranked(k, ranking), {}),
            )
        human_sources = {
            "sit_x_topic": TermAxesSource(),
            "sit_x_offensive": TermAxesSource(),
            "sit_x_sexual": TermAxesSource(),
            "sit_x_violent": TermAxesSource(),
            "psi_x_image_features": SignalLabelSource("perceived_identity"),
            "psi_x_sexual": SignalLabelSource("perceived_identity"),
            "psi_x_violent": SignalLabelSource("perceived_identity"),
            "psi_x_offensive": SignalLabelSource("perceived_identity"),
            "psi_x_topic": SignalLabelSource("perceived_identity"),
        }
        content_sources = {
            "sit_x_topic": lambda: CategoricalContent("topic"),
            "psi_x_topic": lambda: CategoricalContent("topic"),
            "sit_x_offensive": lambda: BinnedScalarContent(
                "toxicity", uniform_edges(int(params.get("bins", 2)))),
            "psi_x_offensive": lambda: BinnedScalarContent(
                "toxicity", uniform_edges(int(params.get("bins", 2)))),
            "sit_x_sexual": lambda: BooleanContent("sexual_image", bool_threshold()),
            "psi_x_sexual": lambda: BooleanContent("sexual_image", bool_threshold()),
            "sit_x_violent": lambda: BooleanContent("violent_image", bool_threshold()),
            "psi_x_violent": lambda: BooleanContent("violent_image", bool_threshold()),
            "psi_x_image_features": lambda: SpanLabelContent("image_objects"),
        }
        if analysis_id in human_sources:
            human = human_sources[analysis_id]
            content = content_sources[analysis_id]()
            return simple(lambda: DisaggregateAggregator(human, content), finish_association)
        raise RunError(f"no engine binding for analysis {analysis_id!r}")

    def _overlap_index(self, params: dict) -> OverlapIndex:
        if self.plan.comparison is None:
            raise RunError("dataset_overlap requires a comparison dataset")
        mode = params.get("mode", "exact-text")
        index = OverlapIndex(mode, int(params.get("ngram_width", 13)))
        handle = DatasetHandle(
            path=self.plan.comparison.path,
            format=self.plan.comparison.format,
            label=self.plan.comparison.label,
        )
        stream = ContextStream(open_dataset(handle), policy=self.policy)
        for context in stream:
            index.add(context)
        return index

    # -- the scan ------------------------------------------------------------

    def _needed_signals(self, analyses: list[_Analysis]) -> list[str]:
        needed: set[str] = set()
        for analysis in analyses:
            needed.update(analysis.signals)
        return sorted(needed)

    def _provider_assignments(self, needed: list[str]) -> list[tuple[Provider, list[str]]]:
        by_provider: dict[str, list[str]] = {}
        for signal in needed:
            provider_id = self.signal_to_provider.get(signal)
            if provider_id is None:
                raise RunError(f"no provider supplies signal {signal!r}")
            by_provider.setdefault(provider_id, []).append(signal)
        assignments = []
        for spec in self.plan.providers:
            if spec.id in by_provider:
                provider = self.providers.get(spec.id) or build_provider(spec)
                self.providers[spec.id] = provider
                assignments.append((provider, sorted(by_provider.pop(spec.id))))
        for provider_id, signals in sorted(by_provider.items()):
            # remaining: the auto builtins (pii / language)
            if provider_id == "builtin-pii":
                provider = self.providers.setdefault("builtin-pii", PiiProvider())
            elif provider_id == "builtin-language":
                provider = self.providers.setdefault("builtin-language", LanguageProvider())
            else:
                raise RunError(f"provider {provider_id!r} is not configured")
            assignments.append((provider, sorted(signals)))
        return assignments

    def run(self, out_dir: str, threads: int | None = None, verbose: bool = False,
            log=print) -> dict:
        plan = self.plan
        shards = threads if threads is not None else plan.threads
        analyses = [self._bind(request) for request in plan.analyses]
        wanted_ids = {a.request.id for a in analyses}
        collector_proto = (
            "pii" in wanted_ids or "hateful_terms" in wanted_ids
        )

        handle = DatasetHandle(path=plan.dataset.path, format=plan.dataset.format,
                               label=plan.dataset.label)
        stream = open_dataset(handle)
        records = iter(stream)
        if plan.sample_n is not None:
            records = iter(sample_records(records, plan.sample_n, plan.sample_seed))

        assignments = self._provider_assignments(self._needed_signals(analyses))
        contexts = ContextStream(records, matcher=self.matcher, assignments=assignments,
                                 policy=self.policy)

        shard_aggs: list[dict[str, Aggregator | None]] = [
            {a.request.id: a.make() for a in analyses} for _ in range(shards)
        ]
        shard_collectors = [
            _SelectionCollector("pii" in wanted_ids, "hateful_terms" in wanted_ids)
            for _ in range(shards)
        ]

        def feed(shard: int, batch: list[RecordContext]) -> None:
            aggs = shard_aggs[shard]
            collector = shard_collectors[shard]
            for context in batch:
                for agg in aggs.values():
                    if agg is not None:
                        agg.update(context)
                if collector_proto:
                    collector.update(context)

        ordinal = 0
        chunk: list[RecordContext] = []
        executor = ThreadPoolExecutor(max_workers=shards) if shards > 1 else None
        try:
            def flush(batch: list[RecordContext], base: int) -> None:
                per_shard: list[list[RecordContext]] = [[] for _ in range(shards)]
                for i, context in enumerate(batch):
                    per_shard[(base + i) % shards].append(context)
                if executor is None:
                    feed(0, per_shard[0])
                else:
                    list(executor.map(feed, range(shards), per_shard))

            for context in contexts:
                chunk.append(context)
                if len(chunk) >= 256:
                    flush(chunk, ordinal)
                    ordinal += len(chunk)
                    chunk = []
            if chunk:
                flush(chunk, ordinal)
                ordinal += len(chunk)
        finally:
            if executor is not None:
                executor.shutdown()
            for provider in self.providers.values():
                provider.close()

        records_scanned = ordinal

        merged: dict[str, Aggregator | None] = shard_aggs[0]
        for shard in shard_aggs[1:]:
            for analysis_id, agg in shard.items():
                if agg is not None:
                    merged[analysis_id].merge(agg)  # type: ignore[union-attr]
        collector = shard_collectors[0]
        for other in shard_collectors[1:]:
            collector.merge(other)

        cards: list[AnalysisCard] = []
        for analysis in analyses:
            payload, extra_missing = analysis.finish(merged[analysis.request.id])
            n_missing = {
                signal: contexts.miss_counts.get(signal, 0) for signal in analysis.signals
            }
            n_missing.update(extra_missing)
            providers_used = {
                signal: self.signal_to_provider[signal] for signal in analysis.signals
            }
            provenance = CardProvenance(
                dataset_label=plan.dataset.label,
                records_scanned=records_scanned,
                n_missing={k: v for k, v in n_missing.items() if v},
                config_digest=config_digest(
                    {"analysis": analysis.request.id, "params": analysis.params,
                     "thresholds": plan.thresholds, "plan": self.plan_digest}
                ),
                tool_version=TOOL_VERSION,
                timestamp=plan.audit_date,
                providers=providers_used,
            )
            card = make_card(analysis.request.id, payload, REGISTRY, provenance)
            card = attach_actions(
                card, plan.context,
                proportion_limit=float(plan.thresholds["proportion_limit"]),
                target_distribution=analysis.params.get("target_distribution"),
            )
            cards.append(card)
            log(f"done {analysis.request.id}: {summarize_output(card.output)}")

        environment = {
            "tool_version": TOOL_VERSION,
            "plan_digest": self.plan_digest,
            "dataset": {
                "label": plan.dataset.label,
                "format": plan.dataset.format,
                "records_scanned": records_scanned,
                "lines_total": stream.report.total_lines,
                "lines_skipped": stream.report.skipped,
                "skip_details": [[line, reason] for line, reason in stream.report.details],
                "sampled": plan.sample_n is not None,
                "sample_seed": plan.sample_seed if plan.sample_n is not None else None,
            },
        }

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        structured = render_report(cards, "structured", context=plan.context, environment=environment)
        readable = render_report(cards, "human-readable", context=plan.context)
        (out / "report.json").write_text(structured, encoding="utf-8")
        (out / "report.txt").write_text(readable, encoding="utf-8")

        selections = collector.finalize()
        duplication = merged.get("data_duplication")
        if duplication is not None:
            selections["data_duplication"] = {
                "clusters": [list(c) for c in duplication.finalize().clusters]
            }
        (out / "selections.json").write_text(
            json.dumps(selections, indent=1, sort_keys=True) + "\n", encoding="utf-8"
        )
        if verbose:
            log(f"wrote {out / 'report.json'}, report.txt, selections.json")
        return {
            "cards": cards,
            "report_json": str(out / "report.json"),
            "report_txt": str(out / "report.txt"),
            "selections": str(out / "selections.json"),
            "records_scanned": records_scanned,
        }


def build_selection(spec_text: str, plan: AuditPlan, selections_path: str | None) -> Selection:
    """Parse a mitigation selection spec into a concrete id set.

    Grammar: "pii" | "hateful" | "duplicates" | "signal:<name><op><value>"
    with op in {>=, >, <=, <} | "ids:<path>" (one id per line).
    Analysis-backed specs need the selections.json from a prior run.
    """
    if spec_text.startswith("ids:"):
        path = spec_text[4:]
        ids = frozenset(
            line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()
        )
        return Selection(name="ids", ids=ids, definition={"source": "id file", "path": path})
    if spec_text.startswith("signal:"):
        return _signal_selection(spec_text, plan)
    key = {"pii": "pii", "hateful": "hateful_terms", "duplicates": "data_duplication"}.get(spec_text)
    if key is None:
        raise RunError(
            f"unknown selection {spec_text!r}; expected pii | hateful | duplicates | "
            "signal:<name><op><value> | ids:<path>"
        )
    if selections_path is None or not Path(selections_path).is_file():
        raise RunError(
            f"selection {spec_text!r} needs selections.json from a prior run "
            f"(looked at {selections_path})"
        )
    stored = json.loads(Path(selections_path).read_text(encoding="utf-8"))
    if key not in stored:
        raise RunError(f"selection references analysis {key!r}, which was not run")
    if key == "data_duplication":
        ids: set[str] = set()
        for cluster in stored[key]["clusters"]:
            ids.update(sorted(cluster)[1:])  # keep the lowest id of each cluster
        return Selection(name="duplicate", ids=frozenset(ids),
                         definition={"analysis": key, "keep": "lowest id per cluster"})
    return Selection(name=spec_text, ids=frozenset(stored[key]),
                     definition={"analysis": key})


def _signal_selection(spec_text: str, plan: AuditPlan) -> Selection:
    body = spec_text[len("signal:"):]
    for op in (">=", "<=", ">", "<"):
        if op in body:
            name, _, raw_value = body.partition(op)
            threshold = float(raw_value)
            break
    else:
        raise RunError(f"signal selection needs an operator: {spec_text!r}")
    name = name.strip()
    runner = PlanRunner(plan)
    provider_id = runner.signal_to_provider.get(name)
    if provider_id is None:
        raise RunError(f"no provider in the plan supplies signal {name!r}")
    assignments = runner._provider_assignments([name])
    handle = DatasetHandle(path=plan.dataset.path, format=plan.dataset.format,
                           label=plan.dataset.label)
    stream = ContextStream(open_dataset(handle), assignments=assignments, policy=runner.policy)
    compare = {
        ">=": lambda a, b: a >= b,
        ">": lambda a, b: a > b,
        "<=": lambda a, b: a <= b,
        "<": lambda a, b: a < b,
    }[op]
    ids = set()
    try:
        for context in stream:
            value = context.signals.get(name)
            if value is None or value.score is None:
                continue
            if compare(value.score, threshold):
                ids.add(context.record.id)
    finally:
        for provider in runner.providers.values():
            provider.close()
    return Selection(
        name=f"{name}{op}{raw_value}",
        ids=frozenset(ids),
        definition={"signal": name, "op": op, "value": threshold, "provider": provider_id},
    )
