"""Command-line interface.

Subcommands:
  run             execute a configured experiment
  index build     validate a KB dump and build a pickled index
  enrich preview  show a document before and after enrichment
  report          build an improvement table from saved metrics files
"""

from __future__ import annotations

import argparse
import logging
import pickle
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .enrich import Strategy, enrich_e1, enrich_e2, enrich_e3
from .experiment import (
    StageError,
    improvement_table_from_files,
    load_corpus,
    load_resources,
    prepare_documents,
    run_experiment,
)
from .kbindex import KbIndex, load_kb_dump

logger = logging.getLogger(__name__)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.preset:
        cfg = replace(cfg, preset=args.preset)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out:
        cfg = replace(cfg, out_dir=str(Path(args.out).resolve()))
    result = run_experiment(cfg)
    print(f"run {result.name}: micro_f={result.micro_f:.4f} "
          f"macro_f={result.macro_f:.4f} "
          f"({cfg.resolved_eval_mode()} evaluation, seed {cfg.seed})")
    if result.out_dir:
        print(f"artifacts written to {result.out_dir}")
    return 0


def _cmd_index_build(args: argparse.Namespace) -> int:
    records = load_kb_dump(args.dump)
    index = KbIndex(records)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "index.pkl", "wb") as fh:
        pickle.dump(index, fh)
    stats = [f"records\t{len(index)}"]
    with open(out / "index_stats.tsv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(stats) + "\n")
    print(f"indexed {len(index)} records into {out}")
    return 0


def _cmd_enrich_preview(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    resources = load_resources(cfg)
    docs, categories = load_corpus(cfg)
    doc = next((d for d in docs if d.id == args.doc_id), None)
    if doc is None:
        print(f"document {args.doc_id!r} not found", file=sys.stderr)
        return 1
    preset = cfg.resolve_preset()
    index = KbIndex(load_kb_dump(cfg.kb_dump)) if preset.strategies else None
    prepared = prepare_documents([doc], cfg, index, resources)[doc.id]

    print(f"document {doc.id} labels={sorted(doc.labels)}")
    original = [t.surface for t, _ in prepared.tokens if not t.injected]
    injected = [t.surface for t, _ in prepared.tokens if t.injected]
    print(f"representation {preset.representation.value}: {' '.join(original)}")
    if index is not None:
        for strategy in (Strategy.E1, Strategy.E2, Strategy.E3):
            if strategy not in preset.strategies:
                continue
            if strategy is Strategy.E1:
                out = enrich_e1(prepared, index, preset.k)
            elif strategy is Strategy.E2:
                out = enrich_e2(prepared, index, preset.k,
                                preset.title_term, preset.min_rank)
            else:
                out = enrich_e3(prepared, index, preset.k,
                                preset.title_term, preset.min_rank)
            print(f"{strategy.value} titles: {out.titles}")
            print(f"{strategy.value} categories: {out.categories}")
            print(f"{strategy.value} linked concepts: {out.linked_concepts}")
    print(f"appended tokens: {' '.join(injected) if injected else '(none)'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    run_paths = []
    for item in args.runs:
        name, _, path = item.partition("=")
        if not path:
            print(f"--runs entries look like NAME=PATH, got {item!r}", file=sys.stderr)
            return 1
        run_paths.append((name, Path(path)))
    table = improvement_table_from_files(
        Path(args.baseline), run_paths, with_t_test=args.t_test
    )
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        print(f"improvement table written to {args.out}")
    else:
        print(table, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbcat",
        description="Knowledge-base-enriched text categorization toolkit",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--preset",
                     choices=["baseline", "A1", "A2", "A3", "A4", "A5", "custom"])
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.set_defaults(func=_cmd_run)

    index = sub.add_parser("index", help="knowledge-base index commands")
    index_sub = index.add_subparsers(dest="index_command", required=True)
    build = index_sub.add_parser("build", help="build an index from a KB dump")
    build.add_argument("--dump", required=True)
    build.add_argument("--out", required=True)
    build.set_defaults(func=_cmd_index_build)

    enrich = sub.add_parser("enrich", help="enrichment commands")
    enrich_sub = enrich.add_subparsers(dest="enrich_command", required=True)
    preview = enrich_sub.add_parser(
        "preview", help="print a document before and after enrichment")
    preview.add_argument("--config", required=True)
    preview.add_argument("--doc-id", required=True)
    preview.set_defaults(func=_cmd_enrich_preview)

    report = sub.add_parser("report", help="emit an improvement table")
    report.add_argument("--baseline", required=True,
                        help="baseline metrics.tsv path")
    report.add_argument("--runs", nargs="+", required=True, metavar="NAME=PATH")
    report.add_argument("--out")
    report.add_argument("--t-test", action="store_true",
                        help="add paired t-test columns over fold rows")
    report.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigError, StageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
