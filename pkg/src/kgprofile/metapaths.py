"""Counting directed relation-labeled walks from sampled start entities.

A walk may revisit entities and edges; parallel edges under different
relations are distinct steps.  Counts come from propagating a frontier of
per-entity walk multiplicities along out-edges, one step per length.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .graph_core import TripleStore

MAX_RECOMMENDED_LENGTH = 4
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class MetapathConfig:
    lengths: tuple[int, ...] = (2, 3, 4)
    num_samples: int = 3
    seed: int = 42

    def __post_init__(self):
        lengths = tuple(sorted(set(self.lengths)))
        object.__setattr__(self, "lengths", lengths)
        if not lengths or lengths[0] < 1:
            raise ValueError("metapath lengths must be positive integers")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if lengths[-1] > MAX_RECOMMENDED_LENGTH:
            warnings.warn(f"metapath length {lengths[-1]} > {MAX_RECOMMENDED_LENGTH} "
                          "is unusually long and may be slow to count", stacklevel=3)


@dataclass(frozen=True)
class MetapathEstimate:
    lengths: tuple[int, ...]
    sampled_entities: tuple[int, ...]
    counts: dict[int, tuple[int, ...]]  # length -> per-sample walk counts

    @property
    def means(self) -> dict[int, Fraction]:
        return {ell: Fraction(sum(c), len(c)) for ell, c in self.counts.items()}


class WalkCounter:
    """Reusable walk counter over one store.

    Steps run on a sparse multiplicity matrix in int64 while the running
    total provably fits, and fall back to Python integers otherwise.
    """

    def __init__(self, store: TripleStore):
        self.store = store
        n = store.num_entities
        h, _, t = store.triples.T
        # transpose of the edge-multiplicity matrix: frontier_next = mt @ frontier
        self._mt = sp.csr_matrix((np.ones(len(h), dtype=np.int64), (t, h)), shape=(n, n))
        self._mt.sum_duplicates()
        self._max_out = int(np.diff(store.out_offsets).max(initial=0))

    def walk_totals(self, start: int, max_length: int) -> list[int]:
        """Walk counts for lengths ``0..max_length`` from ``start``."""
        self.store._check_entity(start)
        frontier = np.zeros(self.store.num_entities, dtype=np.int64)
        frontier[start] = 1
        totals = [1]
        for step in range(max_length):
            if totals[-1] * max(self._max_out, 1) >= _INT64_SAFE:
                return totals + self._walk_totals_bigint(frontier, max_length - step)
            frontier = self._mt @ frontier
            totals.append(int(frontier.sum()))
        return totals

    def _walk_totals_bigint(self, frontier: np.ndarray, steps: int) -> list[int]:
        offsets, tails = self.store.out_offsets, self.store.triples[:, 2]
        mult = {int(e): int(c) for e, c in zip(np.nonzero(frontier)[0], frontier[frontier != 0])}
        totals = []
        for _ in range(steps):
            nxt: dict[int, int] = defaultdict(int)
            for e, c in mult.items():
                for t in tails[offsets[e]:offsets[e + 1]].tolist():
                    nxt[t] += c
            mult = nxt
            totals.append(sum(mult.values()))
        return totals


def count_walks_exact(store: TripleStore, start: int, length: int) -> int:
    if length < 1:
        raise ValueError("walk length must be >= 1")
    return WalkCounter(store).walk_totals(start, length)[length]


def estimate_metapaths(store: TripleStore, cfg: MetapathConfig = MetapathConfig(), threads: int = 1) -> MetapathEstimate:
    """Walk counts from ``cfg.num_samples`` entities drawn uniformly with replacement."""
    rng = np.random.default_rng(cfg.seed)
    sample = tuple(int(e) for e in rng.integers(0, store.num_entities, size=cfg.num_samples))
    counter = WalkCounter(store)
    top = cfg.lengths[-1]

    def one(e: int) -> list[int]:
        return counter.walk_totals(e, top)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_sample = list(pool.map(one, sample))
    else:
        per_sample = [one(e) for e in sample]
    counts = {ell: tuple(totals[ell] for totals in per_sample) for ell in cfg.lengths}
    return MetapathEstimate(cfg.lengths, sample, counts)
