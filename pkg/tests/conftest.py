import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kgprofile import build_store

ROOT = Path(__file__).resolve().parents[1]

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def data_root() -> Path:
    return Path(os.environ.get("KGPROFILE_DATA", ROOT / "data"))


def manifest_path(key: str) -> Path:
    return data_root() / key / "manifest.ini"


@pytest.fixture
def dataset():
    """Manifest path for a named benchmark, failing loudly when absent."""

    def locate(key: str) -> Path:
        path = manifest_path(key)
        if not path.exists():
            pytest.fail(
                f"dataset {key!r} not found at {path}; run scripts/fetch_datasets.py "
                "or point KGPROFILE_DATA at a directory holding it"
            )
        return path

    return locate


def store_of(*triples, split=None):
    return build_store(list(triples), split)


def ids(store, *labels):
    """Entity or relation ids for labels, entities first."""
    vocab = store.vocabulary
    out = []
    for label in labels:
        if label in vocab.entity_ids:
            out.append(vocab.entity(label))
        else:
            out.append(vocab.relation(label))
    return out[0] if len(out) == 1 else out


@st.composite
def random_triples(draw, max_triples=500, max_entities=12, max_relations=5):
    """Small labeled KGs with enough collisions to exercise every pattern."""
    n_e = draw(st.integers(1, max_entities))
    n_r = draw(st.integers(1, max_relations))
    triple = st.tuples(
        st.integers(0, n_e - 1).map(lambda i: f"e{i}"),
        st.integers(0, n_r - 1).map(lambda i: f"r{i}"),
        st.integers(0, n_e - 1).map(lambda i: f"e{i}"),
    )
    return draw(st.lists(triple, min_size=1, max_size=max_triples))
