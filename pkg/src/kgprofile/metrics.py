"""Counts, degrees, density and per-relation load."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import numpy as np

from .graph_core import TripleStore


def round_half_away(value: Fraction | float | int, ndigits: int = 0) -> Decimal:
    """Round half away from zero (``round()`` rounds half to even)."""
    if isinstance(value, Fraction):
        dec = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        dec = Decimal(str(value)) if isinstance(value, float) else Decimal(value)
    return dec.quantize(Decimal(1).scaleb(-ndigits), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class GraphSummary:
    num_entities: int
    num_relations: int
    num_triples_raw: int
    num_triples_distinct: int
    avg_degree_total: Fraction
    avg_degree_table: Fraction
    neg_log10_density: float

    @property
    def density(self) -> Fraction:
        return Fraction(self.num_triples_raw, self.num_entities**2)


@dataclass(frozen=True)
class DegreeHistogram:
    bins: dict[int, int]

    @property
    def num_entities(self) -> int:
        return sum(self.bins.values())

    @property
    def degree_mass(self) -> int:
        return sum(d * c for d, c in self.bins.items())


@dataclass(frozen=True)
class RelationLoad:
    # (relation id, distinct triple count), largest first
    entries: tuple[tuple[int, int], ...]

    @property
    def total(self) -> int:
        return sum(c for _, c in self.entries)


def summarize(store: TripleStore) -> GraphSummary:
    n_e = store.num_entities
    n_t = store.raw_triple_count
    return GraphSummary(
        num_entities=n_e,
        num_relations=store.num_relations,
        num_triples_raw=n_t,
        num_triples_distinct=len(store),
        avg_degree_total=Fraction(2 * n_t, n_e),
        avg_degree_table=Fraction(n_t, n_e),
        # log10(E^2) - log10(T) avoids a float ratio underflowing on huge graphs
        neg_log10_density=2 * math.log10(n_e) - math.log10(n_t),
    )


def entity_degrees(store: TripleStore) -> np.ndarray:
    """In-degree plus out-degree per entity, over distinct triples."""
    n = store.num_entities
    return (np.bincount(store.triples[:, 0], minlength=n)
            + np.bincount(store.triples[:, 2], minlength=n))


def degree_histogram(store: TripleStore) -> DegreeHistogram:
    degrees, counts = np.unique(entity_degrees(store), return_counts=True)
    return DegreeHistogram({int(d): int(c) for d, c in zip(degrees, counts)})


def relation_load(store: TripleStore) -> RelationLoad:
    counts = store.relation_counts()
    # stable sort on -count keeps ascending relation id among ties
    order = np.argsort(-counts, kind="stable")
    return RelationLoad(tuple((int(r), int(counts[r])) for r in order))
