"""Command surface: run / validate / list-analyses / mitigate.

All configuration lives in the plan file so audits are reproducible,
diffable artifacts; flags only pick the plan, the output directory,
worker count, and verbosity.

Exit codes: 0 success, 2 invalid plan or arguments, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .engine import PlanRunner, RunError, build_selection
from .corpus import DatasetHandle
from .plan import PlanError, validate_plan
from .registry import registry_rows
from .report import ReportError, apply_mitigation


def _load_plan_or_exit(path: str):
    try:
        return validate_plan(path)
    except PlanError as exc:
        print(f"plan {path} is invalid ({len(exc.errors)} problem(s)):", file=sys.stderr)
        for error in exc.errors:
            print(f"  - {error}", file=sys.stderr)
        raise SystemExit(2)


def cmd_validate(args: argparse.Namespace) -> int:
    plan = _load_plan_or_exit(args.plan)
    print(f"plan ok: {len(plan.analyses)} analyses over {plan.dataset.label}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    plan = _load_plan_or_exit(args.plan)
    out_dir = args.out or plan.output_dir or "daf-out"
    log = print if not args.quiet else (lambda *a, **k: None)
    try:
        runner = PlanRunner(plan)
        result = runner.run(out_dir, threads=args.threads, verbose=args.verbose, log=log)
    except Exception as exc:  # runtime failure: no partial report left behind
        for name in ("report.json", "report.txt", "selections.json"):
            try:
                (Path(out_dir) / name).unlink()
            except OSError:
                pass
        print(f"run failed: {exc}", file=sys.stderr)
        if args.verbose:
            raise
        return 1
    log(f"scanned {result['records_scanned']} records; report at {result['report_json']}")
    return 0


def cmd_list_analyses(args: argparse.Namespace) -> int:
    rows = registry_rows()
    width = max(len(spec.analysis_id) for spec in rows)
    for spec in rows:
        deps = ", ".join(spec.dependency_names) or "none"
        objects = "+".join(spec.analysis_object)
        print(f"{spec.analysis_id:<{width}}  {spec.effort:<14} {objects:<42} deps: {deps}")
        if args.verbose:
            print(f"{'':<{width}}  {spec.title}: {spec.task}")
    return 0


def cmd_mitigate(args: argparse.Namespace) -> int:
    plan = _load_plan_or_exit(args.plan)
    out_dir = Path(args.out or plan.output_dir or "daf-out")
    selections_path = str(out_dir / "selections.json")
    try:
        selection = build_selection(args.selection, plan, selections_path)
        out_dir.mkdir(parents=True, exist_ok=True)
        suffix = Path(plan.dataset.path).suffix or ".out"
        out_data = out_dir / f"mitigated-{args.mode}{suffix}"
        handle = DatasetHandle(path=plan.dataset.path, format=plan.dataset.format,
                               label=plan.dataset.label)
        manifest = apply_mitigation(handle, [selection], args.mode, str(out_data),
                                    digest=selection.name)
        manifest_path = out_dir / "mitigation_manifest.json"
        import json

        manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                 encoding="utf-8")
    except (RunError, ReportError, OSError, ValueError) as exc:
        print(f"mitigation failed: {exc}", file=sys.stderr)
        return 1
    counts = manifest["counts"]
    print(
        f"{args.mode}: {len(manifest['affected_ids'])} records affected "
        f"({counts['written']} written to {out_data})"
    )
    print(f"manifest at {manifest_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daf",
        description="Corpus auditing: representation analyses, analysis cards, mitigations.",
    )
    parser.add_argument("--version", action="version", version=f"daf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an audit plan and write reports")
    run.add_argument("plan", help="path to the plan file (JSON)")
    run.add_argument("--out", help="output directory (default: plan output_dir or ./daf-out)")
    run.add_argument("--threads", type=int, default=None, help="worker shard count")
    run.add_argument("--verbose", action="store_true")
    run.add_argument("--quiet", action="store_true", help="suppress per-analysis progress lines")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="check a plan file without running it")
    validate.add_argument("plan")
    validate.set_defaults(func=cmd_validate)

    listing = sub.add_parser("list-analyses", help="print the analysis registry")
    listing.add_argument("--verbose", action="store_true")
    listing.set_defaults(func=cmd_list_analyses)

    mitigate = sub.add_parser("mitigate", help="apply a remove/tag mitigation")
    mitigate.add_argument("plan")
    mitigate.add_argument("--selection", required=True,
                          help="pii | hateful | duplicates | signal:<name><op><value> | ids:<path>")
    mitigate.add_argument("--mode", required=True, choices=("remove", "tag"))
    mitigate.add_argument("--out", help="directory holding selections.json and outputs")
    mitigate.set_defaults(func=cmd_mitigate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
