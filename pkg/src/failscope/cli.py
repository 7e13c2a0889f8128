"""Command-line entry point.

Subcommands: validate, synth, analyze, whatif, compare, render, serve.
Every subcommand is file-in/file-out (except serve) and fully determined
by its flags; all randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import dtree, render, synth, views
from .clustering import ClusteringError
from .dataset import DatasetError, load_dataset, save_dataset, validate
from .stats import StatsError

_STAGE_ERRORS = (
    DatasetError, ClusteringError, StatsError,
    dtree.TreeError, views.ViewError, synth.SynthError,
    OSError, json.JSONDecodeError,
)


def _add_view_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--view", choices=["content", "component"], default="content")
    parser.add_argument("--source", choices=["crowd", "system"], default="crowd")
    parser.add_argument("--cluster-source", choices=["crowd", "system"], default="crowd")
    parser.add_argument("--k", type=int, default=30)
    parser.add_argument("--max-depth", type=int, default=dtree.DEFAULT_MAX_DEPTH)
    parser.add_argument("--min-leaf", type=int, default=dtree.DEFAULT_MIN_SAMPLES_LEAF)
    parser.add_argument("--exclude", action="append", default=[],
                        metavar="FEATURE", help="leave a feature out of the trees (repeatable)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--good-threshold", type=float, default=views.DEFAULT_GOOD_THRESHOLD)
    parser.add_argument("--bad-threshold", type=float, default=views.DEFAULT_BAD_THRESHOLD)


def _spec_from_args(args: argparse.Namespace) -> views.ViewSpec:
    params = dtree.TreeParams(
        max_depth=args.max_depth,
        min_samples_leaf=args.min_leaf,
        excluded_features=frozenset(args.exclude),
        seed=args.seed,
    )
    return views.ViewSpec(
        view_kind=args.view,
        data_source=args.source,
        clustering_source=args.cluster_source,
        k=args.k,
        tree=params,
        good_threshold=args.good_threshold,
        bad_threshold=args.bad_threshold,
    )


def _load_input(args: argparse.Namespace):
    return load_dataset(args.input, format=args.format, catalog_path=args.catalog)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="failscope",
        description="Characterize when and how a component-based ML system fails.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset file for violations")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["records", "table"], default="records")
    p.add_argument("--catalog", default=None, help="sidecar catalog for table format")

    p = sub.add_parser("synth", help="generate a synthetic dataset plus manifest")
    p.add_argument("--config", required=True, help="generator config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True, help="dataset output path")
    p.add_argument("--manifest", required=True, help="manifest output path")

    p = sub.add_parser("analyze", help="build a performance view report")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["records", "table"], default="records")
    p.add_argument("--catalog", default=None)
    _add_view_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("whatif", help="re-run a report under a delta")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["records", "table"], default="records")
    p.add_argument("--catalog", default=None)
    p.add_argument("--report", required=True, help="base report file")
    p.add_argument("--exclude", action="append", default=[], metavar="FEATURE")
    p.add_argument("--merge", action="append", default=[], metavar="ID,ID[,..]",
                   help="merge the listed cluster ids (repeatable)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="align two reports cluster by cluster")
    p.add_argument("--a", required=True, dest="report_a")
    p.add_argument("--b", required=True, dest="report_b")
    p.add_argument("--out", required=True)

    p = sub.add_parser("render", help="render a report to a static HTML page")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="serve a report with what-if exploration")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["records", "table"], default="records")
    p.add_argument("--catalog", default=None)
    _add_view_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--bind", default="127.0.0.1:8350")
    return parser


def _cmd_validate(args) -> int:
    dataset = _load_input(args)
    report = validate(dataset)
    print(report)
    return 0 if report.is_clean else 1


def _cmd_synth(args) -> int:
    cfg = synth.load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    dataset, manifest = synth.generate(cfg)
    save_dataset(dataset, args.out)
    synth.save_manifest(manifest, args.manifest)
    print(f"wrote {len(dataset)} instances to {args.out}")
    print(f"wrote manifest to {args.manifest}")
    return 0


def _cmd_analyze(args) -> int:
    dataset = _load_input(args)
    spec = _spec_from_args(args)
    report = views.build_view(dataset, spec, jobs=args.jobs)
    views.save_report(report, args.out)
    print(f"report {report.config_hash} -> {args.out}")
    return 0


def _cmd_whatif(args) -> int:
    dataset = _load_input(args)
    base = views.load_report(args.report)
    merges = []
    for group in args.merge:
        try:
            merges.append(tuple(int(x) for x in group.split(",") if x != ""))
        except ValueError:
            raise views.ViewError(f"bad merge group {group!r}, expected ids like 1,2")
    delta = views.WhatIfDelta(
        excluded_features=frozenset(args.exclude),
        merges=tuple(merges),
        k=args.k,
    )
    report = views.what_if(base, dataset, delta, jobs=args.jobs)
    views.save_report(report, args.out)
    print(f"report {report.config_hash} -> {args.out}")
    return 0


def _cmd_compare(args) -> int:
    a = views.load_report(args.report_a)
    b = views.load_report(args.report_b)
    table = views.compare_views(a, b)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(views.comparison_to_dict(table), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
    print(f"compared {len(table.rows)} cluster pairs -> {args.out}")
    return 0


def _cmd_render(args) -> int:
    report = views.load_report(args.report)
    page = render.render_html(report)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(page)
    print(f"rendered {args.report} -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    dataset = _load_input(args)
    spec = _spec_from_args(args)
    app = create_app(dataset, spec, jobs=args.jobs)
    host, _, port = args.bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "synth": _cmd_synth,
    "analyze": _cmd_analyze,
    "whatif": _cmd_whatif,
    "compare": _cmd_compare,
    "render": _cmd_render,
    "serve": _cmd_serve,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _STAGE_ERRORS as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
