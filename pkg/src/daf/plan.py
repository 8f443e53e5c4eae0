"""Audit plans: the single configuration artifact driving a run.

A plan is a JSON document naming the dataset(s), lexicons, providers,
analyses with parameters, the decision context, and every threshold the
run will use.  Validation is exhaustive — all problems are reported at
once, before any scanning starts — and checks that each requested
analysis's dependencies (lexicons, signals, comparison dataset) are
actually satisfiable by the plan.

Relative paths resolve against the plan file's directory, so plans are
portable artifacts.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .corpus import FORMATS, parse_timestamp
from .lexicon import LexiconError, load_lexicon
from .registry import REGISTRY
from .report import GOALS, PHASES, AuditPlanContext
from .signals import SIGNAL_KINDS

BUILTIN_PROVIDERS = ("pii", "language", "lexicon-toxicity", "keyword-topic", "manifest")

# Signals the always-available builtins serve when no plan provider claims them.
AUTO_SIGNALS = {"pii": "builtin-pii", "language": "builtin-language"}

DEFAULT_THRESHOLDS = {
    "lift": 2.0,
    "support": 5,
    "proportion_limit": 0.5,
    "bins": 10,
    "signal_threshold": 0.5,
    "dedup": {
        "shingle_width": 13,
        "permutations": 128,
        "jaccard_threshold": 0.8,
        "seed": 1,
    },
}


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    format: str
    label: str


@dataclass(frozen=True)
class ProviderSpec:
    id: str
    transport: str  # "builtin", "subprocess-lines", "http"
    builtin: str | None = None
    command: tuple[str, ...] = ()
    url: str | None = None
    config: dict = field(default_factory=dict)
    signals: tuple[tuple[str, str], ...] = ()  # (name, kind)
    batch_size: int = 32
    timeout: float = 10.0
    retries: int = 2
    required: bool = False


@dataclass(frozen=True)
class AnalysisRequest:
    id: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AuditPlan:
    dataset: DatasetSpec
    comparison: DatasetSpec | None
    lexicon_paths: tuple[str, ...]
    providers: tuple[ProviderSpec, ...]
    analyses: tuple[AnalysisRequest, ...]
    context: AuditPlanContext
    thresholds: dict
    sample_n: int | None
    sample_seed: int
    output_dir: str | None
    stopwords: str | None  # path, or "default" for the bundled list
    audit_date: str
    threads: int
    plan_digest_source: dict

    def signal_map(self) -> dict[str, str]:
        """signal name -> provider id, including the auto builtins."""
        mapping: dict[str, str] = {}
        for provider in self.providers:
            for name, _ in provider.signals:
                mapping[name] = provider.id
        for signal, provider_id in AUTO_SIGNALS.items():
            mapping.setdefault(signal, provider_id)
        return mapping


class PlanError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


_BUILTIN_SIGNALS = {
    "pii": (("pii", "spans"),),
    "language": (("language", "categorical"),),
    "lexicon-toxicity": (("toxicity", "scalar01"),),
    "keyword-topic": (("topic", "categorical"),),
}

_BUILTIN_CONFIG_KEYS = {
    "pii": (),
    "language": (),
    "lexicon-toxicity": ("lexicon",),
    "keyword-topic": ("keywords",),
    "manifest": ("manifest",),
}


def _parse_dataset(obj: object, base: Path, errors: list[str], role: str) -> DatasetSpec | None:
    # Path readability is deliberately a runtime concern (exit 1), not a
    # plan-validity one: plans are portable artifacts and may be written
    # before their data lands.
    if not isinstance(obj, dict):
        errors.append(f"{role}: expected an object")
        return None
    path = obj.get("path")
    fmt = obj.get("format")
    if not isinstance(path, str) or not path:
        errors.append(f"{role}: missing 'path'")
        return None
    resolved = str((base / path).resolve()) if not Path(path).is_absolute() else path
    if fmt not in FORMATS:
        errors.append(f"{role}: format must be one of {FORMATS}, got {fmt!r}")
        fmt = "jsonl"
    label = obj.get("label") or Path(path).name
    return DatasetSpec(path=resolved, format=fmt, label=label)


def _parse_provider(obj: dict, base: Path, errors: list[str]) -> ProviderSpec | None:
    provider_id = obj.get("id")
    if not isinstance(provider_id, str) or not provider_id:
        errors.append("provider: missing 'id'")
        return None
    where = f"provider {provider_id!r}"
    builtin = obj.get("builtin")
    config = obj.get("config", {})
    if not isinstance(config, dict):
        errors.append(f"{where}: 'config' must be an object")
        config = {}
    config = dict(config)
    signals: list[tuple[str, str]] = []
    raw_signals = obj.get("signals", [])
    if not isinstance(raw_signals, list):
        errors.append(f"{where}: 'signals' must be a list")
        raw_signals = []
    for raw in raw_signals:
        if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
            errors.append(f"{where}: each signal needs a 'name'")
            continue
        kind = raw.get("kind")
        if kind not in SIGNAL_KINDS:
            errors.append(f"{where}: signal {raw['name']!r} has bad kind {kind!r}")
            continue
        signals.append((raw["name"], kind))

    if builtin is not None:
        if builtin not in BUILTIN_PROVIDERS:
            errors.append(f"{where}: unknown builtin {builtin!r}; expected one of {BUILTIN_PROVIDERS}")
            return None
        for key in _BUILTIN_CONFIG_KEYS[builtin]:
            value = config.get(key)
            if not isinstance(value, str):
                errors.append(f"{where}: builtin {builtin!r} needs config[{key!r}]")
                continue
            resolved = str((base / value).resolve()) if not Path(value).is_absolute() else value
            if not Path(resolved).is_file():
                errors.append(f"{where}: config[{key!r}] file not found: {resolved}")
            config[key] = resolved
        if builtin == "manifest":
            if not signals:
                errors.append(f"{where}: manifest providers must declare their 'signals'")
        else:
            signals = list(_BUILTIN_SIGNALS[builtin])
        return ProviderSpec(id=provider_id, transport="builtin", builtin=builtin,
                            config=config, signals=tuple(signals),
                            required=bool(obj.get("required", False)))

    transport = obj.get("transport")
    if transport not in ("subprocess-lines", "http"):
        errors.append(f"{where}: transport must be 'subprocess-lines' or 'http' "
                      "(or set 'builtin')")
        return None
    if not signals:
        errors.append(f"{where}: external providers must declare their 'signals'")
    command: tuple[str, ...] = ()
    url = None
    if transport == "subprocess-lines":
        raw_command = obj.get("command")
        if not isinstance(raw_command, list) or not all(isinstance(c, str) for c in raw_command) or not raw_command:
            errors.append(f"{where}: subprocess transport needs a 'command' list")
        else:
            command = tuple(raw_command)
    else:
        url = obj.get("url")
        if not isinstance(url, str) or not url:
            errors.append(f"{where}: http transport needs a 'url'")
    return ProviderSpec(
        id=provider_id,
        transport=transport,
        command=command,
        url=url,
        config=config,
        signals=tuple(signals),
        batch_size=int(obj.get("batch_size", 32)),
        timeout=float(obj.get("timeout", 10.0)),
        retries=int(obj.get("retries", 2)),
        required=bool(obj.get("required", False)),
    )


def _merge_thresholds(raw: object, errors: list[str]) -> dict:
    thresholds = json.loads(json.dumps(DEFAULT_THRESHOLDS))  # deep copy
    if raw is None:
        return thresholds
    if not isinstance(raw, dict):
        errors.append("thresholds: expected an object")
        return thresholds
    for key, value in raw.items():
        if key == "dedup":
            if not isinstance(value, dict):
                errors.append("thresholds.dedup: expected an object")
                continue
            thresholds["dedup"].update(value)
        else:
            thresholds[key] = value
    if not 0.0 < float(thresholds["dedup"]["jaccard_threshold"]) <= 1.0:
        errors.append("thresholds.dedup.jaccard_threshold must be in (0, 1]")
    if float(thresholds["lift"]) <= 0:
        errors.append("thresholds.lift must be positive")
    if int(thresholds["support"]) < 1:
        errors.append("thresholds.support must be >= 1")
    if not 0.0 <= float(thresholds["proportion_limit"]) <= 1.0:
        errors.append("thresholds.proportion_limit must be in [0, 1]")
    if int(thresholds["bins"]) < 1:
        errors.append("thresholds.bins must be >= 1")
    return thresholds


def validate_plan(path: str) -> AuditPlan:
    """Parse and validate a plan file; raises PlanError listing every
    problem found (not just the first)."""
    errors: list[str] = []
    plan_path = Path(path)
    try:
        raw = plan_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanError([f"cannot read plan file: {exc}"]) from exc
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise PlanError([f"plan is not valid JSON (line {exc.lineno}): {exc.msg}"]) from exc
    if not isinstance(obj, dict):
        raise PlanError(["plan must be a JSON object"])

    base = plan_path.resolve().parent

    dataset = _parse_dataset(obj.get("dataset"), base, errors, "dataset")
    comparison = None
    if obj.get("comparison_dataset") is not None:
        comparison = _parse_dataset(obj["comparison_dataset"], base, errors, "comparison_dataset")

    # lexicons: load eagerly so kinds are known for dependency checks
    lexicon_paths: list[str] = []
    lexicon_kinds: set[str] = set()
    lexicon_axes: set[str] = set()
    raw_lexicons = obj.get("lexicons", [])
    if not isinstance(raw_lexicons, list):
        errors.append("'lexicons' must be a list of paths")
        raw_lexicons = []
    for raw_path in raw_lexicons:
        if not isinstance(raw_path, str):
            errors.append(f"lexicon path must be a string, got {raw_path!r}")
            continue
        resolved = str((base / raw_path).resolve()) if not Path(raw_path).is_absolute() else raw_path
        lexicon_paths.append(resolved)
        try:
            lexicon = load_lexicon(resolved)
        except (OSError, LexiconError) as exc:
            errors.append(f"lexicon {raw_path}: {exc}")
            continue
        lexicon_kinds.add(lexicon.kind)
        lexicon_axes.add(lexicon.axis)

    providers: list[ProviderSpec] = []
    raw_providers = obj.get("providers", [])
    if not isinstance(raw_providers, list):
        errors.append("'providers' must be a list")
        raw_providers = []
    for raw_provider in raw_providers:
        if not isinstance(raw_provider, dict):
            errors.append("each provider must be an object")
            continue
        spec = _parse_provider(raw_provider, base, errors)
        if spec is not None:
            providers.append(spec)
    seen_ids: set[str] = set()
    claimed: dict[str, str] = {}
    for provider in providers:
        if provider.id in seen_ids:
            errors.append(f"duplicate provider id {provider.id!r}")
        seen_ids.add(provider.id)
        for name, _ in provider.signals:
            if name in claimed:
                errors.append(
                    f"signal {name!r} claimed by both {claimed[name]!r} and {provider.id!r}"
                )
            claimed[name] = provider.id
    available_signals = set(claimed) | set(AUTO_SIGNALS)

    analyses: list[AnalysisRequest] = []
    raw_analyses = obj.get("analyses", [])
    if not isinstance(raw_analyses, list) or not raw_analyses:
        errors.append("'analyses' must be a non-empty list")
        raw_analyses = []
    for raw_analysis in raw_analyses:
        if isinstance(raw_analysis, str):
            raw_analysis = {"id": raw_analysis}
        if not isinstance(raw_analysis, dict) or not isinstance(raw_analysis.get("id"), str):
            errors.append("each analysis needs an 'id'")
            continue
        analysis_id = raw_analysis["id"]
        params = raw_analysis.get("params", {})
        if not isinstance(params, dict):
            errors.append(f"{analysis_id}: 'params' must be an object")
            params = {}
        spec = REGISTRY.get(analysis_id)
        if spec is None:
            near = difflib.get_close_matches(analysis_id, REGISTRY.keys(), n=3)
            hint = f" (did you mean: {', '.join(near)})" if near else ""
            errors.append(f"unknown analysis id {analysis_id!r}{hint}")
            continue
        for kind, value in spec.requires:
            if kind == "lexicon" and value not in lexicon_kinds:
                errors.append(f"{analysis_id} requires a {value} lexicon; none is loaded")
            elif kind == "signal" and value not in available_signals:
                errors.append(f"{analysis_id} requires signal {value}; no provider supplies it")
            elif kind == "comparison" and comparison is None:
                errors.append(f"{analysis_id} requires a comparison_dataset")
        for axis_pair in params.get("intersections", []):
            if (
                not isinstance(axis_pair, list)
                or len(axis_pair) != 2
                or not all(isinstance(a, str) for a in axis_pair)
            ):
                errors.append(f"{analysis_id}: intersections must be [axis, axis] pairs")
            else:
                for axis in axis_pair:
                    if axis not in lexicon_axes:
                        errors.append(f"{analysis_id}: unknown intersection axis {axis!r}")
        analyses.append(AnalysisRequest(id=analysis_id, params=params))
    duplicate_ids = {a.id for a in analyses if sum(1 for b in analyses if b.id == a.id) > 1}
    for analysis_id in sorted(duplicate_ids):
        errors.append(f"analysis {analysis_id!r} is requested more than once")

    raw_context = obj.get("context", {})
    if not isinstance(raw_context, dict):
        errors.append("'context' must be an object")
        raw_context = {}
    goal = raw_context.get("goal", "Auditing")
    phase = raw_context.get("phase", "DataCollectionProcessing")
    if goal not in GOALS:
        errors.append(f"context.goal must be one of {GOALS}, got {goal!r}")
        goal = "Auditing"
    if phase not in PHASES:
        errors.append(f"context.phase must be one of {PHASES}, got {phase!r}")
        phase = "DataCollectionProcessing"
    context = AuditPlanContext(
        goal=goal,
        phase=phase,
        dataset_mutable=bool(raw_context.get("dataset_mutable", True)),
        release_planned=bool(raw_context.get("release_planned", False)),
    )

    thresholds = _merge_thresholds(obj.get("thresholds"), errors)

    sample_n: int | None = None
    sample_seed = 0
    raw_sample = obj.get("sample")
    if raw_sample is not None:
        if not isinstance(raw_sample, dict) or not isinstance(raw_sample.get("n"), int):
            errors.append("'sample' needs an integer 'n'")
        else:
            sample_n = raw_sample["n"]
            if sample_n < 0:
                errors.append("sample.n must be >= 0")
            sample_seed = int(raw_sample.get("seed", 0))

    stopwords = obj.get("stopwords")
    if stopwords is not None and not isinstance(stopwords, str):
        errors.append("'stopwords' must be a path or \"default\"")
        stopwords = None
    if isinstance(stopwords, str) and stopwords != "default":
        resolved = str((base / stopwords).resolve()) if not Path(stopwords).is_absolute() else stopwords
        if not Path(resolved).is_file():
            errors.append(f"stopwords file not found: {resolved}")
        stopwords = resolved

    audit_date = obj.get("audit_date", date.today().isoformat())
    if not isinstance(audit_date, str) or parse_timestamp(audit_date) is None:
        errors.append(f"audit_date must be an ISO date, got {audit_date!r}")
        audit_date = date.today().isoformat()

    threads = obj.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        errors.append("threads must be an integer >= 1")
        threads = 1

    output_dir = obj.get("output_dir")
    if output_dir is not None:
        if not isinstance(output_dir, str):
            errors.append("'output_dir' must be a string")
            output_dir = None
        elif not Path(output_dir).is_absolute():
            output_dir = str((base / output_dir).resolve())

    if errors:
        raise PlanError(errors)
    assert dataset is not None
    return AuditPlan(
        dataset=dataset,
        comparison=comparison,
        lexicon_paths=tuple(lexicon_paths),
        providers=tuple(providers),
        analyses=tuple(analyses),
        context=context,
        thresholds=thresholds,
        sample_n=sample_n,
        sample_seed=sample_seed,
        output_dir=output_dir,
        stopwords=stopwords,
        audit_date=audit_date,
        threads=threads,
        plan_digest_source=obj,
    )
