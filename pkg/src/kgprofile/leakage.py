"""Train/test leakage through symmetric and inverse relations.

Patterns are mined on the training split alone.  An evaluation triple
``(h, r, t)`` leaks when its reversal is recoverable from training data:
``(t, r, h)`` is in train and ``r`` is flagged symmetric, or ``(t, r', h)``
is in train for a mined inverse partner ``r'`` of ``r``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .graph_core import SPLITS, LabeledTriple, TripleStore, Triple, build_store
from .relations import MiningConfig, _symmetric_counts, detect_inverse


class MissingSplitError(ValueError):
    pass


class DeleakStrategy(enum.Enum):
    DROP_TEST_TRIPLES = "drop-test-triples"
    DROP_INVERSE_RELATIONS = "drop-inverse-relations"


@dataclass(frozen=True)
class Leak:
    split: str
    triple: Triple
    cause: str  # "symmetric_self" or "inverse_partner"
    partner: int | None
    witness: Triple


@dataclass
class LeakageReport:
    test_leaks: list[Leak]
    test_size: int
    valid_leaks: list[Leak] = field(default_factory=list)
    valid_size: int = 0
    inverse_pairs_used: list[tuple[int, int, Fraction]] = field(default_factory=list)
    symmetric_relations: list[int] = field(default_factory=list)

    @property
    def leaked_test_triples(self) -> list[Leak]:
        return self.test_leaks

    @property
    def leakage_rate(self) -> Fraction:
        return Fraction(len(self.test_leaks), self.test_size) if self.test_size else Fraction(0)

    @property
    def valid_leakage_rate(self) -> Fraction:
        return Fraction(len(self.valid_leaks), self.valid_size) if self.valid_size else Fraction(0)


def _require(store: TripleStore, *splits: str) -> None:
    present = set(store.splits)
    missing = [s for s in splits if s not in present]
    if missing:
        raise MissingSplitError(f"store has no {', '.join(missing)} split")


def _distinct(store: TripleStore, split: str) -> list[Triple]:
    seen: dict[tuple[int, int, int], None] = {}
    code = SPLITS.index(split)
    for row, s in zip(store.raw_triples.tolist(), store.raw_splits.tolist()):
        if s == code:
            seen.setdefault(tuple(row), None)
    return [Triple(*row) for row in seen]


def audit_splits(store: TripleStore, cfg: MiningConfig = MiningConfig()) -> LeakageReport:
    _require(store, "train", "test")
    train = store.subset("train")
    theta = cfg.confidence_threshold
    # only symmetry and inverses matter here; skip the composite join
    sizes = train.relation_counts()
    sym_hits = _symmetric_counts(train)
    symmetric = [
        rel for rel in range(train.num_relations)
        if sizes[rel] and sizes[rel] >= cfg.min_support
        and Fraction(int(sym_hits[rel]), int(sizes[rel])) >= theta
    ]
    partners = detect_inverse(train, cfg)
    pairs = [(rel, rp, conf) for rel in sorted(partners) for rp, conf in partners[rel]]
    sym_set = set(symmetric)

    def check(split: str) -> tuple[list[Leak], int]:
        leaks = []
        triples = _distinct(store, split)
        for tr in triples:
            hh, rr, tt = tr
            if rr in sym_set and train.contains((tt, rr, hh)):
                leaks.append(Leak(split, tr, "symmetric_self", None, Triple(tt, rr, hh)))
                continue
            for rp, _ in partners.get(rr, ()):
                if train.contains((tt, rp, hh)):
                    leaks.append(Leak(split, tr, "inverse_partner", rp, Triple(tt, rp, hh)))
                    break
        return leaks, len(triples)

    test_leaks, test_size = check("test")
    valid_leaks, valid_size = check("valid") if "valid" in store.splits else ([], 0)
    return LeakageReport(test_leaks, test_size, valid_leaks, valid_size, pairs, symmetric)


@dataclass(frozen=True)
class Removal:
    kind: str  # "triple" or "relation"
    split: str  # "*" for relations
    item: tuple[str, ...]
    cause: str


@dataclass
class DeleakResult:
    splits: dict[str, list[LabeledTriple]]
    removals: list[Removal]

    def to_store(self) -> TripleStore:
        return build_store((h, r, t, s) for s, rows in self.splits.items() for h, r, t in rows)


def deleak(store: TripleStore, strategy: DeleakStrategy | str, cfg: MiningConfig = MiningConfig(),
           report: LeakageReport | None = None) -> DeleakResult:
    """Rewrite the splits so the chosen leakage cause disappears.

    Split contents keep their input order and multiplicity; only removed
    triples are missing.
    """
    strategy = DeleakStrategy(strategy)
    if report is None:
        report = audit_splits(store, cfg)
    vocab = store.vocabulary
    splits = {s: store.labeled_triples(s) for s in store.splits}
    removals: list[Removal] = []

    if strategy is DeleakStrategy.DROP_TEST_TRIPLES:
        for leak in report.test_leaks + report.valid_leaks:
            label = vocab.decode(leak.triple)
            cause = leak.cause
            if leak.partner is not None:
                cause += f":{vocab.relation_labels[leak.partner]}"
            removals.append(Removal("triple", leak.split, label, cause))
        drop: dict[str, set[LabeledTriple]] = {}
        for rm in removals:
            drop.setdefault(rm.split, set()).add(rm.item)
        for s, doomed in drop.items():
            splits[s] = [tr for tr in splits[s] if tr not in doomed]
    else:
        labels = vocab.relation_labels
        dropped: dict[str, str] = {}
        for rel, rp, _ in report.inverse_pairs_used:
            keep, later = sorted((labels[rel], labels[rp]))
            dropped.setdefault(later, keep)
        for rel_label in sorted(dropped):
            removals.append(Removal("relation", "*", (rel_label,), f"inverse_of:{dropped[rel_label]}"))
        for s in splits:
            kept = []
            for tr in splits[s]:
                if tr[1] in dropped:
                    removals.append(Removal("triple", s, tr, f"inverse_of:{dropped[tr[1]]}"))
                else:
                    kept.append(tr)
            splits[s] = kept
    return DeleakResult(splits, removals)
