"""Dictionary-encoded, immutable triple store.

Labels are mapped to dense integer ids in first-appearance order.  The
distinct triples live in one ``(n, 3)`` int64 array sorted by
``(head, relation, tail)``; every other index is a permutation of, or a key
array derived from, that array so that all lookups are ``searchsorted`` calls
and can be vectorized over many probes at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

SPLITS = ("train", "valid", "test", "unsplit")
# (head, tail) membership bitset is used below this many entity pairs (256 MiB)
_PAIR_BITSET_MAX_BITS = 2**31
_SPLIT_CODE = {name: code for code, name in enumerate(SPLITS)}

LabeledTriple = tuple[str, str, str]


class EmptyDatasetError(ValueError):
    """Raised when a store would be built from zero triples."""


class InvalidIdError(IndexError):
    """Raised for an entity or relation id outside the vocabulary."""


@dataclass(frozen=True)
class Triple:
    head: int
    relation: int
    tail: int

    def __iter__(self) -> Iterator[int]:
        return iter((self.head, self.relation, self.tail))


@dataclass(frozen=True)
class Vocabulary:
    """Bidirectional label <-> id maps for entities and relations."""

    entity_labels: tuple[str, ...]
    relation_labels: tuple[str, ...]
    entity_ids: dict[str, int] = field(repr=False, compare=False)
    relation_ids: dict[str, int] = field(repr=False, compare=False)

    @classmethod
    def from_labels(cls, entities: Sequence[str], relations: Sequence[str]) -> "Vocabulary":
        return cls(
            tuple(entities),
            tuple(relations),
            {label: i for i, label in enumerate(entities)},
            {label: i for i, label in enumerate(relations)},
        )

    @property
    def num_entities(self) -> int:
        return len(self.entity_labels)

    @property
    def num_relations(self) -> int:
        return len(self.relation_labels)

    def entity(self, label: str) -> int:
        return self.entity_ids[label]

    def relation(self, label: str) -> int:
        return self.relation_ids[label]

    def encode(self, triple: LabeledTriple) -> Triple:
        h, r, t = triple
        return Triple(self.entity_ids[h], self.relation_ids[r], self.entity_ids[t])

    def decode(self, triple: Iterable[int]) -> LabeledTriple:
        h, r, t = (int(x) for x in triple)
        return (self.entity_labels[h], self.relation_labels[r], self.entity_labels[t])


def expand_ranges(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flatten half-open ranges ``[lo[i], hi[i])``.

    Returns ``(owner, position)`` where ``owner[k]`` is the range a flattened
    element came from and ``position[k]`` its index in the underlying array.
    """
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    owner = np.repeat(np.arange(len(lo), dtype=np.int64), counts)
    starts = np.cumsum(counts) - counts
    position = np.arange(total, dtype=np.int64) - np.repeat(starts, counts) + lo[owner]
    return owner, position


class TripleStore:
    """Immutable encoded KG with the indexes downstream analyses read from.

    ``triples`` holds the distinct triples sorted by (head, relation, tail).
    ``raw_triples``/``raw_splits`` keep the input multiset in input order,
    which is what raw counts and split-aware tooling use.
    """

    def __init__(self, vocabulary: Vocabulary, raw_triples: np.ndarray, raw_splits: np.ndarray):
        if len(raw_triples) == 0:
            raise EmptyDatasetError("cannot build a triple store from zero triples")
        self.vocabulary = vocabulary
        n_ent, n_rel = vocabulary.num_entities, vocabulary.num_relations
        if n_ent * n_ent * n_rel >= 2**63:
            raise OverflowError("entity/relation vocabulary too large for 64-bit triple codes")
        raw_triples = np.ascontiguousarray(raw_triples, dtype=np.int64)
        self.raw_triples = raw_triples
        self.raw_splits = np.asarray(raw_splits, dtype=np.uint8)
        self.raw_triples.setflags(write=False)
        self.raw_splits.setflags(write=False)

        codes = np.unique(self._encode(raw_triples[:, 0], raw_triples[:, 1], raw_triples[:, 2]))
        self._codes = codes
        h, rest = np.divmod(codes, n_rel * n_ent)
        r, t = np.divmod(rest, n_ent)
        self.triples = np.stack([h, r, t], axis=1)

        # out-adjacency: triples are already head-major
        self._out_ptr = np.searchsorted(h, np.arange(n_ent + 1))

        # relation-major views
        self._fwd = np.lexsort((t, h, r))
        self._bwd = np.lexsort((h, t, r))
        self._rel_ptr = np.searchsorted(r[self._fwd], np.arange(n_rel + 1))
        self._fwd_keys = (r * n_ent + h)[self._fwd]
        self._bwd_keys = (r * n_ent + t)[self._bwd]

        # (head, tail) pair -> relations
        pair = h * n_ent + t
        order = np.lexsort((r, pair))
        self._pair_keys = pair[order]
        self._pair_rels = r[order]
        self._pair_bitset: np.ndarray | None = None  # built on first bulk pair probe

        for arr in (self.triples, self._codes, self._out_ptr, self._fwd, self._bwd, self._rel_ptr,
                    self._fwd_keys, self._bwd_keys, self._pair_keys, self._pair_rels):
            arr.setflags(write=False)

    def _encode(self, h, r, t):
        n_ent, n_rel = self.vocabulary.num_entities, self.vocabulary.num_relations
        return (np.asarray(h, dtype=np.int64) * n_rel + r) * n_ent + t

    # -- sizes -------------------------------------------------------------

    @property
    def num_entities(self) -> int:
        return self.vocabulary.num_entities

    @property
    def num_relations(self) -> int:
        return self.vocabulary.num_relations

    @property
    def raw_triple_count(self) -> int:
        return len(self.raw_triples)

    def __len__(self) -> int:
        return len(self.triples)

    @property
    def splits(self) -> tuple[str, ...]:
        present = set(np.unique(self.raw_splits).tolist())
        return tuple(name for name in SPLITS if _SPLIT_CODE[name] in present)

    # -- validation --------------------------------------------------------

    def _check_entity(self, e: int) -> None:
        if not 0 <= e < self.num_entities:
            raise InvalidIdError(f"entity id {e} out of range [0, {self.num_entities})")

    def _check_relation(self, r: int) -> None:
        if not 0 <= r < self.num_relations:
            raise InvalidIdError(f"relation id {r} out of range [0, {self.num_relations})")

    # -- point queries -----------------------------------------------------

    def contains(self, triple: Triple | Sequence[int]) -> bool:
        h, r, t = (int(x) for x in triple)
        self._check_entity(h)
        self._check_relation(r)
        self._check_entity(t)
        code = self._encode(h, r, t)
        i = np.searchsorted(self._codes, code)
        return bool(i < len(self._codes) and self._codes[i] == code)

    def relations_on_reversed_pair(self, h: int, t: int) -> set[int]:
        """Relations ``r'`` with ``(t, r', h)`` in the store."""
        self._check_entity(h)
        self._check_entity(t)
        key = t * self.num_entities + h
        lo, hi = np.searchsorted(self._pair_keys, [key, key + 1])
        return set(self._pair_rels[lo:hi].tolist())

    def out_neighbors(self, e: int) -> list[tuple[int, int]]:
        self._check_entity(e)
        rows = self.triples[self._out_ptr[e]:self._out_ptr[e + 1]]
        return [(int(r), int(t)) for _, r, t in rows]

    def out_degree(self, e: int) -> int:
        self._check_entity(e)
        return int(self._out_ptr[e + 1] - self._out_ptr[e])

    def tails(self, r: int, h: int) -> np.ndarray:
        """Sorted tails of ``(h, r, ?)``."""
        self._check_relation(r)
        self._check_entity(h)
        key = r * self.num_entities + h
        lo, hi = np.searchsorted(self._fwd_keys, [key, key + 1])
        return self.triples[self._fwd[lo:hi], 2]

    def heads(self, r: int, t: int) -> np.ndarray:
        """Sorted heads of ``(?, r, t)``."""
        self._check_relation(r)
        self._check_entity(t)
        key = r * self.num_entities + t
        lo, hi = np.searchsorted(self._bwd_keys, [key, key + 1])
        return self.triples[self._bwd[lo:hi], 0]

    def relation_triples(self, r: int) -> np.ndarray:
        """Triples of relation ``r`` sorted by (head, tail)."""
        self._check_relation(r)
        return self.triples[self._fwd[self._rel_ptr[r]:self._rel_ptr[r + 1]]]

    def relation_counts(self) -> np.ndarray:
        return np.diff(self._rel_ptr)

    # -- vectorized queries ------------------------------------------------

    def contains_many(self, h, r, t) -> np.ndarray:
        codes = self._encode(h, r, t)
        i = np.searchsorted(self._codes, codes)
        found = i < len(self._codes)
        found[found] = self._codes[i[found]] == codes[found]
        return found

    def pair_relation_ranges(self, h, t) -> tuple[np.ndarray, np.ndarray]:
        """Index ranges into ``pair_relations`` holding the relations of each ``(h, t)``."""
        keys = np.asarray(h, dtype=np.int64) * self.num_entities + t
        bits = self._pair_bits()
        if bits is None:
            return (np.searchsorted(self._pair_keys, keys, "left"),
                    np.searchsorted(self._pair_keys, keys, "right"))
        # most probes miss; test the bitset first and binary-search only hits
        hit = (bits[keys >> 3] >> (keys & 7).astype(np.uint8)) & 1 == 1
        lo = np.zeros(len(keys), dtype=np.int64)
        hi = np.zeros(len(keys), dtype=np.int64)
        found = keys[hit]
        lo[hit] = np.searchsorted(self._pair_keys, found, "left")
        hi[hit] = np.searchsorted(self._pair_keys, found, "right")
        return lo, hi

    def _pair_bits(self) -> np.ndarray | None:
        if self._pair_bitset is None:
            n = self.num_entities
            if n * n > _PAIR_BITSET_MAX_BITS:
                return None
            bits = np.zeros((n * n + 7) // 8, dtype=np.uint8)
            np.bitwise_or.at(bits, self._pair_keys >> 3, (1 << (self._pair_keys & 7)).astype(np.uint8))
            bits.setflags(write=False)
            self._pair_bitset = bits
        return self._pair_bitset

    @property
    def pair_relations(self) -> np.ndarray:
        return self._pair_rels

    @property
    def out_offsets(self) -> np.ndarray:
        """CSR offsets of ``triples`` by head entity."""
        return self._out_ptr

    # -- derived stores ----------------------------------------------------

    def subset(self, *splits: str) -> "TripleStore":
        """Store over the triples tagged with ``splits``, sharing this vocabulary."""
        unknown = set(splits) - set(SPLITS)
        if unknown:
            raise ValueError(f"unknown split tags: {sorted(unknown)}")
        mask = np.isin(self.raw_splits, [_SPLIT_CODE[s] for s in splits])
        return TripleStore(self.vocabulary, self.raw_triples[mask], self.raw_splits[mask])

    def labeled_triples(self, split: str | None = None) -> list[LabeledTriple]:
        """Raw triples (input order, duplicates kept) decoded to labels."""
        rows = self.raw_triples
        if split is not None:
            rows = rows[self.raw_splits == _SPLIT_CODE[split]]
        ents, rels = self.vocabulary.entity_labels, self.vocabulary.relation_labels
        return [(ents[h], rels[r], ents[t]) for h, r, t in rows.tolist()]

    def split_tags(self) -> list[set[str]]:
        """Per distinct triple, the set of splits it was read from."""
        codes = self._encode(self.raw_triples[:, 0], self.raw_triples[:, 1], self.raw_triples[:, 2])
        idx = np.searchsorted(self._codes, codes)
        tags: list[set[str]] = [set() for _ in range(len(self._codes))]
        for i, s in zip(idx.tolist(), self.raw_splits.tolist()):
            tags[i].add(SPLITS[s])
        return tags

    def __repr__(self) -> str:
        return (f"TripleStore(entities={self.num_entities}, relations={self.num_relations}, "
                f"triples={len(self)}, raw={self.raw_triple_count})")


def build_store(triples: Iterable[Sequence[str]], splits: Iterable[str] | str | None = None) -> TripleStore:
    """Encode labeled triples into a :class:`TripleStore`.

    ``triples`` yields ``(head, relation, tail)`` or ``(head, relation, tail,
    split)``.  ``splits`` may instead give one tag for all triples or a
    parallel iterable of tags; untagged triples are ``"unsplit"``.
    """
    ent: dict[str, int] = {}
    rel: dict[str, int] = {}
    heads: list[int] = []
    rels: list[int] = []
    tails: list[int] = []
    tags: list[int] = []
    split_iter = None
    if isinstance(splits, str):
        default = _SPLIT_CODE[splits]
    else:
        default = _SPLIT_CODE["unsplit"]
        if splits is not None:
            split_iter = iter(splits)

    for row in triples:
        if len(row) == 4:
            h, r, t, s = row
            code = _SPLIT_CODE[s]
        else:
            h, r, t = row
            code = _SPLIT_CODE[next(split_iter)] if split_iter is not None else default
        hi = ent.get(h)
        if hi is None:
            hi = ent[h] = len(ent)
        ri = rel.get(r)
        if ri is None:
            ri = rel[r] = len(rel)
        ti = ent.get(t)
        if ti is None:
            ti = ent[t] = len(ent)
        heads.append(hi)
        rels.append(ri)
        tails.append(ti)
        tags.append(code)

    if not heads:
        raise EmptyDatasetError("cannot build a triple store from zero triples")
    vocab = Vocabulary(tuple(ent), tuple(rel), ent, rel)
    raw = np.empty((len(heads), 3), dtype=np.int64)
    raw[:, 0] = heads
    raw[:, 1] = rels
    raw[:, 2] = tails
    return TripleStore(vocab, raw, np.asarray(tags, dtype=np.uint8))


def contains(store: TripleStore, triple: Triple | Sequence[int]) -> bool:
    return store.contains(triple)


def relations_on_reversed_pair(store: TripleStore, h: int, t: int) -> set[int]:
    return store.relations_on_reversed_pair(h, t)


def out_neighbors(store: TripleStore, e: int) -> list[tuple[int, int]]:
    return store.out_neighbors(e)
