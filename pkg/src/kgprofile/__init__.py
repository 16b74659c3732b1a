"""Structural profiling of triple-based knowledge graphs."""

__version__ = "0.1.0"

from .graph_core import (  # noqa: E402
    EmptyDatasetError,
    InvalidIdError,
    Triple,
    TripleStore,
    Vocabulary,
    build_store,
)
from .ingest import DatasetManifest, ParseError, load_dataset, parse_tsv, read_manifest  # noqa: E402

__all__ = [
    "DatasetManifest",
    "EmptyDatasetError",
    "InvalidIdError",
    "ParseError",
    "Triple",
    "TripleStore",
    "Vocabulary",
    "build_store",
    "load_dataset",
    "parse_tsv",
    "read_manifest",
]
