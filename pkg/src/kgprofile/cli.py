"""``kgprofile`` command line.

Exit codes: 0 success, 1 input/parse/report error, 2 invalid flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .graph_core import EmptyDatasetError, build_store
from .ingest import DatasetManifest, ManifestError, ParseError, load_dataset, read_manifest, write_tsv
from .leakage import DeleakStrategy, MissingSplitError, audit_splits, deleak
from .metapaths import MetapathConfig
from .relations import MiningConfig
from .report import (
    ReportError,
    build_report,
    comparison_table,
    dumps,
    load_report,
    rational,
    write_comparison,
    write_plot_csvs,
)

log = logging.getLogger("kgprofile")


class CommandError(Exception):
    """Failure that maps to exit code 1."""


def _lengths(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("lengths must be positive integers")
    return values


def _add_mining_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--confidence", type=float, default=0.95, help="rule confidence threshold (default 0.95)")
    p.add_argument("--min-support", type=int, default=1, help="minimum rule-body instances (default 1)")
    p.add_argument("--join-cap", type=int, default=10_000_000,
                   help="paths per relation pair above which composite joins are sampled")
    p.add_argument("--seed", type=int, default=42, help="seed for every random draw (default 42)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it")


def _add_split_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train", type=Path)
    p.add_argument("--valid", type=Path)
    p.add_argument("--test", type=Path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgprofile", description="Structural profiler for triple-based knowledge graphs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="profile one dataset and write a JSON report")
    p.add_argument("--input", type=Path, help="dataset manifest (.ini)")
    _add_split_inputs(p)
    p.add_argument("--unsplit", type=Path, action="append", default=[], help="triple file without split tag")
    p.add_argument("--name", help="dataset name when not given by a manifest")
    _add_mining_flags(p)
    p.add_argument("--metapath-samples", type=int, default=3)
    p.add_argument("--metapath-lengths", type=_lengths, default=(2, 3, 4))
    p.add_argument("--only-split", choices=("train", "valid", "test", "unsplit"),
                   help="profile only the triples of one split (default: all splits merged)")
    p.add_argument("--out", type=Path, help="report path (default: stdout)")
    p.add_argument("--csv-dir", type=Path, help="also write plot-data CSVs here")

    p = sub.add_parser("compare", help="tabulate several reports as CSV")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    p = sub.add_parser("leakage", help="audit train/test leakage through symmetric and inverse relations")
    p.add_argument("--input", type=Path, help="dataset manifest (.ini)")
    _add_split_inputs(p)
    _add_mining_flags(p)
    p.add_argument("--strategy", choices=[s.value for s in DeleakStrategy])
    p.add_argument("--out", type=Path, help="leakage report JSON path")
    p.add_argument("--repair-dir", type=Path, help="where repaired splits go (default: <out dir>/deleaked)")

    p = sub.add_parser("export-plots", help="write per-figure CSVs from reports")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("--csv-dir", type=Path, required=True)
    p.add_argument("--exclude-dataset", action="append", default=[], metavar="NAME")
    p.add_argument("--exclude-top-entity", action="store_true",
                   help="drop each dataset's highest-degree entity from the degree distribution")
    return parser


def _configs(args, parser) -> MiningConfig:
    try:
        mining = MiningConfig(args.confidence, args.min_support, args.join_cap, args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    return mining


def _manifest_from_args(args, parser, name: str | None) -> DatasetManifest:
    if args.input is not None:
        if args.train or args.valid or args.test or getattr(args, "unsplit", None):
            parser.error("--input cannot be combined with per-split paths")
        return read_manifest(args.input)
    files = [(path, split) for split in ("train", "valid", "test") if (path := getattr(args, split))]
    files += [(path, "unsplit") for path in getattr(args, "unsplit", [])]
    if not files:
        parser.error("give --input or at least one triple file")
    return DatasetManifest(name or "dataset", files)


def cmd_analyze(args, parser) -> int:
    mining = _configs(args, parser)
    try:
        metapath = MetapathConfig(args.metapath_lengths, args.metapath_samples, args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    manifest = _manifest_from_args(args, parser, args.name)
    store = load_dataset(manifest)
    if args.only_split:
        if args.only_split not in store.splits:
            raise CommandError(f"dataset has no {args.only_split} split")
        store = build_store(store.labeled_triples(args.only_split), args.only_split)
    report = build_report(store, manifest.name, mining, metapath, threads=args.threads, only_split=args.only_split)
    text = dumps(report)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.csv_dir:
        write_plot_csvs([report], args.csv_dir)
    s = report["summary"]
    log.info("%s: %d entities, %d relations, %d triples", manifest.name, s["entities"], s["relations"], s["triples"])
    return 0


def cmd_compare(args, parser) -> int:
    rows = comparison_table(load_report(p) for p in args.reports)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_comparison(rows, fh)
    else:
        write_comparison(rows, sys.stdout)
    return 0


def _leak_entry(leak, vocab) -> dict:
    return {
        "split": leak.split,
        "triple": list(vocab.decode(leak.triple)),
        "cause": leak.cause,
        "partner": None if leak.partner is None else vocab.relation_labels[leak.partner],
        "witness": list(vocab.decode(leak.witness)),
    }


def cmd_leakage(args, parser) -> int:
    mining = _configs(args, parser)
    manifest = _manifest_from_args(args, parser, "dataset")
    store = load_dataset(manifest)
    report = audit_splits(store, mining)
    vocab = store.vocabulary
    labels = vocab.relation_labels
    doc = {
        "dataset": manifest.name,
        "config": {"confidence": mining.confidence_threshold, "min_support": mining.min_support},
        "test": {
            "size": report.test_size,
            "leaked": len(report.test_leaks),
            "leakage_rate": rational(report.leakage_rate),
            "leaks": [_leak_entry(leak, vocab) for leak in report.test_leaks],
        },
        "valid": {
            "size": report.valid_size,
            "leaked": len(report.valid_leaks),
            "leakage_rate": rational(report.valid_leakage_rate),
            "leaks": [_leak_entry(leak, vocab) for leak in report.valid_leaks],
        },
        "symmetric_relations": [labels[r] for r in report.symmetric_relations],
        "inverse_pairs_used": [
            {"relation": labels[r], "inverse": labels[rp], "confidence": rational(c)}
            for r, rp, c in report.inverse_pairs_used
        ],
    }
    print(f"test leakage: {len(report.test_leaks)}/{report.test_size} "
          f"(rate {float(report.leakage_rate):.4f})")
    if report.valid_size:
        print(f"valid leakage: {len(report.valid_leaks)}/{report.valid_size} "
              f"(rate {float(report.valid_leakage_rate):.4f})")
    if args.strategy:
        result = deleak(store, args.strategy, mining, report=report)
        repair = args.repair_dir or ((args.out.parent if args.out else Path(".")) / "deleaked")
        repair.mkdir(parents=True, exist_ok=True)
        for split, rows in result.splits.items():
            with open(repair / f"{split}.txt", "w", encoding="utf-8", newline="") as fh:
                write_tsv(rows, fh)
        with open(repair / "removed.tsv", "w", encoding="utf-8", newline="") as fh:
            fh.write("kind\tsplit\thead\trelation\ttail\tcause\n")
            for rm in result.removals:
                h, r, t = rm.item if rm.kind == "triple" else ("-", rm.item[0], "-")
                fh.write(f"{rm.kind}\t{rm.split}\t{h}\t{r}\t{t}\t{rm.cause}\n")
        doc["repair"] = {"strategy": args.strategy, "directory": str(repair), "removed": len(result.removals)}
        print(f"repaired splits written to {repair} ({len(result.removals)} removals)")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return 0


def cmd_export_plots(args, parser) -> int:
    reports = [load_report(p) for p in args.reports]
    written = write_plot_csvs(reports, args.csv_dir, exclude_datasets=args.exclude_dataset,
                              exclude_top_entity=args.exclude_top_entity)
    for path in written:
        print(path)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "leakage": cmd_leakage,
    "export-plots": cmd_export_plots,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, parser)
    except (ParseError, ManifestError, ReportError, MissingSplitError, EmptyDatasetError, CommandError) as exc:
        print(f"kgprofile: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"kgprofile: error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
