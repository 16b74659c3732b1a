"""Relation cardinality and relational-pattern mining.

Every pattern is scored as a rule with a body and a head; confidence is the
fraction of body instances for which the head holds, support the number of
body instances.

* symmetric:     (h, r, t)  =>  (t, r, h)          body = triples of r
* antisymmetric: (h, r, t)  =>  not (t, r, h)      body = triples of r
* inverse:       (h, r, t)  =>  (t, r', h), r' != r
* composite:     (x, r1, y) and (y, r2, z)  =>  (x, r, z)
                 body = distinct (x, z) pairs joined through some y

Counts are exact integers and confidences exact fractions, except for
composite pairs whose join is too large to enumerate; those are estimated
from a seeded sample and carry ``sampled=True``.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .graph_core import TripleStore, expand_ranges

log = logging.getLogger(__name__)

FLAGS = ("symmetric", "antisymmetric", "inverse", "composite")

# sampled paths per vectorized batch
_SAMPLE_BATCH = 1 << 20
# upper bound on join paths materialized by one sparse product
_JOIN_BATCH = 1 << 24


@dataclass(frozen=True)
class MiningConfig:
    confidence_threshold: float = 0.95
    min_support: int = 1
    composite_join_cap: int = 10_000_000
    sample_seed: int = 42

    def __post_init__(self):
        if not 0 < self.confidence_threshold <= 1:
            raise ValueError(f"confidence_threshold must be in (0, 1], got {self.confidence_threshold}")
        if self.min_support < 1:
            raise ValueError(f"min_support must be >= 1, got {self.min_support}")
        if self.composite_join_cap < 1:
            raise ValueError(f"composite_join_cap must be >= 1, got {self.composite_join_cap}")
        if not 0 <= self.sample_seed < 2**64:
            raise ValueError("sample_seed must be an unsigned 64-bit integer")


class CardinalityClass(enum.Enum):
    ONE_TO_ONE = "1-1"
    ONE_TO_MANY = "1-M"
    MANY_TO_ONE = "M-1"
    MANY_TO_MANY = "M-M"


@dataclass(frozen=True)
class CardinalityResult:
    cls: CardinalityClass
    forward_confidence: Fraction  # heads with exactly one tail / heads
    backward_confidence: Fraction  # tails with exactly one head / tails


@dataclass(frozen=True)
class CompositeWitness:
    body: tuple[int, int]
    confidence: Fraction | float
    support: int
    sampled: bool = False


@dataclass
class PatternReport:
    relation: int
    support: int
    sym_conf: Fraction
    antisym_conf: Fraction
    inverse_partners: list[tuple[int, Fraction]] = field(default_factory=list)
    composite_witnesses: list[CompositeWitness] = field(default_factory=list)
    flags: frozenset[str] = frozenset()


# -- cardinality -------------------------------------------------------------

def cardinality_confidences(store: TripleStore) -> list[tuple[Fraction, Fraction]]:
    n_e, n_r = store.num_entities, store.num_relations
    h, r, t = store.triples.T

    def single_fraction(side: np.ndarray) -> list[Fraction]:
        keys, counts = np.unique(r * n_e + side, return_counts=True)
        rel = keys // n_e
        total = np.bincount(rel, minlength=n_r)
        single = np.bincount(rel[counts == 1], minlength=n_r)
        return [Fraction(int(s), int(n)) if n else Fraction(0) for s, n in zip(single, total)]

    return list(zip(single_fraction(h), single_fraction(t)))


def classify_cardinality(store: TripleStore, cfg: MiningConfig = MiningConfig()) -> dict[int, CardinalityResult]:
    theta = cfg.confidence_threshold
    out = {}
    for rel, (fwd, bwd) in enumerate(cardinality_confidences(store)):
        if fwd >= theta and bwd >= theta:
            cls = CardinalityClass.ONE_TO_ONE
        elif fwd >= theta:
            cls = CardinalityClass.MANY_TO_ONE
        elif bwd >= theta:
            cls = CardinalityClass.ONE_TO_MANY
        else:
            cls = CardinalityClass.MANY_TO_MANY
        out[rel] = CardinalityResult(cls, fwd, bwd)
    return out


# -- symmetry ----------------------------------------------------------------

def _symmetric_counts(store: TripleStore) -> np.ndarray:
    h, r, t = store.triples.T
    hit = store.contains_many(t, r, h)
    return np.bincount(r[hit], minlength=store.num_relations)


def detect_symmetry(store: TripleStore, r: int) -> tuple[Fraction, Fraction]:
    """``(sym_conf, antisym_conf)`` for one relation."""
    rows = store.relation_triples(r)
    if len(rows) == 0:
        raise ValueError(f"relation {r} has no triples")
    hits = int(store.contains_many(rows[:, 2], rows[:, 1], rows[:, 0]).sum())
    sym = Fraction(hits, len(rows))
    return sym, 1 - sym


# -- inverse -----------------------------------------------------------------

def inverse_confidences(store: TripleStore) -> dict[int, dict[int, Fraction]]:
    """For every r, confidence of each candidate r' != r with at least one hit."""
    n_r = store.num_relations
    h, r, t = store.triples.T
    lo, hi = store.pair_relation_ranges(t, h)
    owner, pos = expand_ranges(lo, hi)
    body = r[owner]
    partner = store.pair_relations[pos]
    keep = body != partner
    tally = np.bincount(body[keep] * n_r + partner[keep], minlength=n_r * n_r).reshape(n_r, n_r)
    sizes = store.relation_counts()
    out: dict[int, dict[int, Fraction]] = {rel: {} for rel in range(n_r)}
    for rel, rp in zip(*np.nonzero(tally)):
        out[int(rel)][int(rp)] = Fraction(int(tally[rel, rp]), int(sizes[rel]))
    return out


def detect_inverse(store: TripleStore, cfg: MiningConfig = MiningConfig()) -> dict[int, list[tuple[int, Fraction]]]:
    theta = cfg.confidence_threshold
    sizes = store.relation_counts()
    out = {}
    for rel, cands in inverse_confidences(store).items():
        if sizes[rel] < cfg.min_support:
            out[rel] = []
            continue
        partners = [(rp, c) for rp, c in cands.items() if c >= theta]
        partners.sort(key=lambda item: (-item[1], item[0]))
        out[rel] = partners
    return out


# -- composite ---------------------------------------------------------------

class _CompositeMiner:
    """Per-(r1, r2) join over sparse relation adjacency matrices."""

    def __init__(self, store: TripleStore, cfg: MiningConfig):
        self.store = store
        self.cfg = cfg
        n_e, n_r = store.num_entities, store.num_relations
        self.n_e, self.n_r = n_e, n_r
        self.adj = []
        for rel in range(n_r):
            rows = store.relation_triples(rel)
            ones = np.ones(len(rows), dtype=np.int64)
            m = sp.csr_matrix((ones, (rows[:, 0], rows[:, 2])), shape=(n_e, n_e))
            m.sort_indices()
            self.adj.append(m)
        h, r, t = store.triples.T
        # paths through y for (r1, r2): sum_y indeg_r1(y) * outdeg_r2(y)
        indeg = sp.csr_matrix((np.ones(len(t), dtype=np.int64), (r, t)), shape=(n_r, n_e))
        outdeg = sp.csr_matrix((np.ones(len(h), dtype=np.int64), (h, r)), shape=(n_e, n_r))
        self.paths = np.asarray((indeg @ outdeg).todense(), dtype=np.int64)

    def mine_row(self, r1: int) -> list[tuple[int, int, int, Fraction | float, int, bool]]:
        """All (r, r1, r2, confidence, support, sampled) witnesses for body relation r1."""
        cap = self.cfg.composite_join_cap
        row = self.paths[r1]
        out = []
        run: list[int] = []
        load = 0
        for r2 in np.nonzero(row)[0].tolist():
            n_paths = int(row[r2])
            if n_paths > cap:
                out.extend(self._exact(r1, run))
                run, load = [], 0
                if n_paths >= self.cfg.min_support:
                    out.extend(self._sampled(r1, r2, n_paths))
                continue
            if run and load + n_paths > _JOIN_BATCH:
                out.extend(self._exact(r1, run))
                run, load = [], 0
            run.append(r2)
            load += n_paths
        out.extend(self._exact(r1, run))
        out.sort(key=lambda w: (w[2], w[0]))
        return out

    def _covering(self, x: np.ndarray, z: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
        lo, hi = self.store.pair_relation_ranges(x, z)
        owner, pos = expand_ranges(lo, hi)
        rels = self.store.pair_relations[pos]
        w = None if weights is None else weights[owner]
        return np.bincount(rels, weights=w, minlength=self.n_r)

    def _exact(self, r1: int, run: list[int]):
        """Exact joins of r1 with every r2 in ``run`` through one sparse product.

        The r2 adjacencies are laid side by side, so column ``b * n_e + z``
        of the product is the pair (x, z) joined through ``run[b]``.
        """
        if not run:
            return []
        n_e, n_r, k = self.n_e, self.n_r, len(run)
        right = sp.hstack([self.adj[r2] for r2 in run], format="csr")
        join = (self.adj[r1] @ right).tocoo()
        block, z = np.divmod(join.col.astype(np.int64), n_e)
        sizes = np.bincount(block, minlength=k)
        lo_i, hi_i = self.store.pair_relation_ranges(join.row.astype(np.int64), z)
        owner, pos = expand_ranges(lo_i, hi_i)
        hits = np.bincount(block[owner] * n_r + self.store.pair_relations[pos],
                           minlength=k * n_r).reshape(k, n_r)
        theta = self.cfg.confidence_threshold
        out = []
        for b, rel in zip(*np.nonzero(hits)):
            size = int(sizes[b])
            if size < self.cfg.min_support:
                continue
            conf = Fraction(int(hits[b, rel]), size)
            if conf >= theta:
                out.append((int(rel), r1, run[b], conf, size, False))
        return out

    def _sampled(self, r1: int, r2: int, n_paths: int):
        """Estimate over distinct join pairs from uniformly sampled paths.

        A path x -r1-> y -r2-> z is drawn uniformly and weighted by
        1 / m(x, z), m being the number of intermediates joining x and z.
        Weighted means are then unbiased for uniform distinct pairs, and
        n_paths * mean(1/m) estimates |J|.
        """
        a1, a2 = self.adj[r1], self.adj[r2]
        a1c = a1.tocsc()
        a1c.sort_indices()
        indeg = np.diff(a1c.indptr)
        outdeg = np.diff(a2.indptr)
        weight = indeg * outdeg
        cum = np.cumsum(weight)
        starts = cum - weight
        rng = np.random.default_rng([self.cfg.sample_seed, r1, r2])
        n = self.cfg.composite_join_cap
        hits = np.zeros(self.n_r)
        wsum = 0.0
        done = 0
        while done < n:
            k = min(_SAMPLE_BATCH, n - done)
            u = rng.integers(0, n_paths, size=k)
            y = np.searchsorted(cum, u, side="right")
            off = u - starts[y]
            hi, ti = np.divmod(off, outdeg[y])
            x = a1c.indices[a1c.indptr[y] + hi].astype(np.int64)
            z = a2.indices[a2.indptr[y] + ti].astype(np.int64)
            # m(x, z) = #{y' : (x, r1, y') and (y', r2, z)}
            owner, pos = expand_ranges(a1.indptr[x].astype(np.int64), a1.indptr[x + 1].astype(np.int64))
            ys = a1.indices[pos]
            ok = self.store.contains_many(ys, np.full(len(ys), r2), z[owner])
            mult = np.bincount(owner[ok], minlength=k)
            w = 1.0 / mult
            hits += self._covering(x, z, w)
            wsum += float(w.sum())
            done += k
        est_size = int(round(n_paths * wsum / n))
        if est_size < self.cfg.min_support:
            return []
        theta = self.cfg.confidence_threshold
        out = []
        for rel in np.nonzero(hits)[0].tolist():
            conf = float(hits[rel] / wsum)
            if conf >= theta:
                out.append((rel, r1, r2, conf, est_size, True))
        return out


def detect_composite(store: TripleStore, cfg: MiningConfig = MiningConfig(), threads: int = 1) -> dict[int, list[CompositeWitness]]:
    miner = _CompositeMiner(store, cfg)
    rows = range(store.num_relations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(miner.mine_row, rows))
    else:
        results = [miner.mine_row(r1) for r1 in rows]
    out: dict[int, list[CompositeWitness]] = {rel: [] for rel in rows}
    # results arrive in r1 order, r2 ascending within each row
    for row in results:
        for rel, r1, r2, conf, support, sampled in row:
            out[rel].append(CompositeWitness((r1, r2), conf, support, sampled))
    for witnesses in out.values():
        witnesses.sort(key=lambda w: (-w.confidence, w.body))
    return out


# -- aggregate ---------------------------------------------------------------

def mine_patterns(store: TripleStore, cfg: MiningConfig = MiningConfig(), threads: int = 1) -> list[PatternReport]:
    theta = cfg.confidence_threshold
    sizes = store.relation_counts()
    sym_hits = _symmetric_counts(store)
    inverse = detect_inverse(store, cfg)
    composite = detect_composite(store, cfg, threads=threads)
    reports = []
    for rel in range(store.num_relations):
        n = int(sizes[rel])
        if n == 0:
            sym = Fraction(0)
        else:
            sym = Fraction(int(sym_hits[rel]), n)
        anti = 1 - sym
        flags = set()
        if n >= cfg.min_support and n:
            if sym >= theta:
                flags.add("symmetric")
            if anti >= theta:
                flags.add("antisymmetric")
        if inverse[rel]:
            flags.add("inverse")
        if composite[rel]:
            flags.add("composite")
        reports.append(PatternReport(rel, n, sym, anti, inverse[rel], composite[rel], frozenset(flags)))
    return reports


@dataclass(frozen=True)
class FlagShare:
    relations: int
    triples: int
    triple_share: Fraction  # of distinct triples


def pattern_distribution(store: TripleStore, cfg: MiningConfig = MiningConfig(),
                         reports: list[PatternReport] | None = None) -> dict[str, FlagShare]:
    if reports is None:
        reports = mine_patterns(store, cfg)
    total = len(store)
    out = {}
    for flag in FLAGS:
        carrying = [rep for rep in reports if flag in rep.flags]
        n = sum(rep.support for rep in carrying)
        out[flag] = FlagShare(len(carrying), n, Fraction(n, total))
    return out
