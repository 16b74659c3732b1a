"""Profile reports, comparison tables and plot-ready CSV export.

Reports are plain JSON with a fixed key order.  Exact ratios are written as
``{"num": .., "den": .., "value": ..}`` where ``value`` is the ratio rounded
half away from zero to six decimals; sampled estimates only carry
``value``.  Everything except the ``runtime`` section is a pure function of
the input triples and the echoed config.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, fields
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

import jsonschema

from . import __version__
from .graph_core import TripleStore
from .metapaths import MetapathConfig, estimate_metapaths
from .metrics import degree_histogram, entity_degrees, relation_load, round_half_away, summarize
from .relations import FLAGS, CardinalityClass, MiningConfig, classify_cardinality, mine_patterns, pattern_distribution

CARDINALITY_ORDER = tuple(c.value for c in CardinalityClass)


class ReportError(ValueError):
    pass


def rational(x: Fraction | float) -> dict[str, Any]:
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator, "value": float(round_half_away(x, 6))}
    return {"value": float(round_half_away(x, 6))}


def to_fraction(obj: dict[str, Any]) -> Fraction | float:
    if "num" in obj:
        return Fraction(obj["num"], obj["den"])
    return obj["value"]


def build_report(store: TripleStore, name: str, mining: MiningConfig = MiningConfig(),
                 metapath: MetapathConfig = MetapathConfig(), threads: int = 1,
                 only_split: str | None = None) -> dict[str, Any]:
    vocab = store.vocabulary
    rel_label = vocab.relation_labels
    timings: dict[str, float] = {}

    def timed(stage, fn, *args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        timings[stage] = round(time.perf_counter() - t0, 6)
        return out

    summary = timed("summary", summarize, store)
    hist = timed("degrees", degree_histogram, store)
    degrees = entity_degrees(store)
    top = int(degrees.argmax())
    load = timed("relation_load", relation_load, store)
    card = timed("cardinality", classify_cardinality, store, mining)
    patterns = timed("patterns", mine_patterns, store, mining, threads=threads)
    dist = pattern_distribution(store, mining, reports=patterns)
    walks = timed("metapaths", estimate_metapaths, store, metapath, threads=threads)

    totals = {c: 0 for c in CARDINALITY_ORDER}
    for res in card.values():
        totals[res.cls.value] += 1

    return {
        "tool": {"name": "kgprofile", "version": __version__},
        "dataset": name,
        "config": {
            "seed": mining.sample_seed,
            "confidence": mining.confidence_threshold,
            "min_support": mining.min_support,
            "join_cap": mining.composite_join_cap,
            "metapath_samples": metapath.num_samples,
            "metapath_lengths": list(metapath.lengths),
            "only_split": only_split,
        },
        "summary": {
            "entities": summary.num_entities,
            "relations": summary.num_relations,
            "triples": summary.num_triples_raw,
            "triples_distinct": summary.num_triples_distinct,
            "avg_degree_total": rational(summary.avg_degree_total),
            "avg_degree_table": rational(summary.avg_degree_table),
            "density": rational(summary.density),
            "neg_log10_density": summary.neg_log10_density,
        },
        "degrees": {
            "histogram": [[d, c] for d, c in sorted(hist.bins.items())],
            "max_degree_entity": {"entity": vocab.entity_labels[top], "degree": int(degrees[top])},
        },
        "relation_load": [{"relation": rel_label[r], "triples": n} for r, n in load.entries],
        "cardinality": {
            "totals": totals,
            "relations": [
                {
                    "relation": rel_label[r],
                    "class": res.cls.value,
                    "forward_confidence": rational(res.forward_confidence),
                    "backward_confidence": rational(res.backward_confidence),
                }
                for r, res in card.items()
            ],
        },
        "patterns": {
            "distribution": {
                flag: {
                    "relations": share.relations,
                    "triples": share.triples,
                    "triple_share": rational(share.triple_share),
                }
                for flag, share in dist.items()
            },
            "relations": [
                {
                    "relation": rel_label[p.relation],
                    "triples": p.support,
                    "symmetric_confidence": rational(p.sym_conf),
                    "antisymmetric_confidence": rational(p.antisym_conf),
                    "inverse_partners": [
                        {"relation": rel_label[rp], "confidence": rational(c)} for rp, c in p.inverse_partners
                    ],
                    "composite_witnesses": [
                        {
                            "body": [rel_label[w.body[0]], rel_label[w.body[1]]],
                            "confidence": rational(w.confidence),
                            "support": w.support,
                            "sampled": w.sampled,
                        }
                        for w in p.composite_witnesses
                    ],
                    "flags": [f for f in FLAGS if f in p.flags],
                }
                for p in patterns
            ],
        },
        "metapaths": {
            "lengths": list(walks.lengths),
            "sampled_entities": [vocab.entity_labels[e] for e in walks.sampled_entities],
            "counts": {str(ell): list(c) for ell, c in walks.counts.items()},
            "means": {str(ell): rational(m) for ell, m in walks.means.items()},
        },
        "runtime": {"threads": threads, "timings_s": timings},
    }


def dumps(report: dict[str, Any]) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def without_runtime(report: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in report.items() if k != "runtime"}


def report_schema() -> dict[str, Any]:
    text = resources.files("kgprofile").joinpath("report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(report: Any) -> None:
    try:
        jsonschema.validate(report, report_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ReportError(f"invalid report at {where}: {exc.message}") from None


def load_report(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            report = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: not JSON ({exc})") from None
    try:
        validate_report(report)
    except ReportError as exc:
        raise ReportError(f"{path}: {exc}") from None
    return report


# -- comparison table --------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    dataset: str
    entities: int
    relations: int
    triples: int
    avg_degree: int
    neg_log10_density: str
    dominant_cardinality: str
    dominant_pattern: str
    triples_distinct: int
    avg_degree_exact: Fraction

    @classmethod
    def from_report(cls, report: dict[str, Any]) -> "ComparisonRow":
        s = report["summary"]
        avg = to_fraction(s["avg_degree_table"])
        totals = report["cardinality"]["totals"]
        # ties resolve to the earlier class in 1-1, 1-M, M-1, M-M order
        card = max(CARDINALITY_ORDER, key=lambda c: (totals[c], -CARDINALITY_ORDER.index(c)))
        dist = report["patterns"]["distribution"]
        best = max(FLAGS, key=lambda f: (dist[f]["triples"], -FLAGS.index(f)))
        pattern = best if dist[best]["relations"] else "none"
        return cls(
            dataset=report["dataset"],
            entities=s["entities"],
            relations=s["relations"],
            triples=s["triples"],
            avg_degree=int(round_half_away(avg)),
            neg_log10_density=str(round_half_away(s["neg_log10_density"], 2)),
            dominant_cardinality=card,
            dominant_pattern=pattern,
            triples_distinct=s["triples_distinct"],
            avg_degree_exact=avg,
        )

    @classmethod
    def from_csv(cls, row: dict[str, str]) -> "ComparisonRow":
        kwargs: dict[str, Any] = {}
        for f in fields(cls):
            raw = row[f.name]
            if f.type == "int":
                kwargs[f.name] = int(raw)
            elif f.type == "Fraction":
                kwargs[f.name] = Fraction(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)

    def to_csv(self) -> dict[str, str]:
        return {f.name: str(getattr(self, f.name)) for f in fields(self)}


COMPARISON_COLUMNS = tuple(f.name for f in fields(ComparisonRow))


def comparison_table(reports: Iterable[dict[str, Any]]) -> list[ComparisonRow]:
    return sorted((ComparisonRow.from_report(r) for r in reports), key=lambda row: row.dataset)


def write_comparison(rows: list[ComparisonRow], stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=COMPARISON_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.to_csv())


def read_comparison(stream) -> list[ComparisonRow]:
    return [ComparisonRow.from_csv(row) for row in csv.DictReader(stream)]


# -- plot data ---------------------------------------------------------------

PLOT_COLUMNS = {
    "scatter": ("dataset", "entities", "relations", "triples"),
    "degree_distribution": ("dataset", "degree", "entities"),
    "relation_load": ("dataset", "rank", "relation", "triples"),
    "cardinality": ("dataset", "class", "relations"),
    "patterns": ("dataset", "flag", "relations", "triple_percent"),
    "metapaths": ("dataset", "length", "mean_walks"),
}


def plot_rows(reports: Iterable[dict[str, Any]], exclude_datasets: Iterable[str] = (),
              exclude_top_entity: bool = False) -> dict[str, list[tuple]]:
    """Per-figure rows for every report not excluded by name.

    With ``exclude_top_entity`` the single highest-degree entity of each
    dataset is dropped from its degree distribution.
    """
    skip = set(exclude_datasets)
    out: dict[str, list[tuple]] = {name: [] for name in PLOT_COLUMNS}
    for rep in sorted(reports, key=lambda r: r["dataset"]):
        name = rep["dataset"]
        if name in skip:
            continue
        s = rep["summary"]
        out["scatter"].append((name, s["entities"], s["relations"], s["triples"]))
        bins = {d: c for d, c in rep["degrees"]["histogram"]}
        if exclude_top_entity:
            top = rep["degrees"]["max_degree_entity"]["degree"]
            bins[top] -= 1
            if not bins[top]:
                del bins[top]
        out["degree_distribution"].extend((name, d, c) for d, c in sorted(bins.items()))
        out["relation_load"].extend(
            (name, rank, e["relation"], e["triples"]) for rank, e in enumerate(rep["relation_load"], 1)
        )
        out["cardinality"].extend((name, c, n) for c, n in rep["cardinality"]["totals"].items())
        for flag, share in rep["patterns"]["distribution"].items():
            pct = round_half_away(to_fraction(share["triple_share"]) * 100, 4)
            out["patterns"].append((name, flag, share["relations"], str(pct)))
        out["metapaths"].extend(
            (name, int(ell), str(round_half_away(to_fraction(m), 4))) for ell, m in rep["metapaths"]["means"].items()
        )
    return out


def write_plot_csvs(reports: Iterable[dict[str, Any]], directory: str | Path, **exclusions) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for figure, rows in plot_rows(reports, **exclusions).items():
        path = directory / f"{figure}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PLOT_COLUMNS[figure])
            writer.writerows(rows)
        written.append(path)
    return written
