"""Reading triple files and dataset manifests.

A triple file is UTF-8 text with one ``head<TAB>relation<TAB>tail`` per
line, LF or CRLF terminated.  Blank lines are skipped; there is no comment
syntax.  Files ending in ``.gz`` are decompressed transparently.

A manifest is an INI file with a single ``[dataset]`` section::

    [dataset]
    name = Nations
    format = tsv
    train = train.txt
    valid = valid.txt
    test = test.txt

Split keys are ``train``, ``valid``, ``test`` and ``unsplit``; a key may list
several files, one per line.  Relative paths resolve against the manifest's
directory.
"""

from __future__ import annotations

import configparser
import gzip
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, TextIO

from .graph_core import SPLITS, LabeledTriple, TripleStore, build_store

FORMATS = ("tsv",)


class ParseError(ValueError):
    """A malformed line in a triple file."""

    def __init__(self, path: str, line_number: int, kind: str, detail: str = ""):
        self.path = path
        self.line_number = line_number
        self.kind = kind
        msg = f"{path}:{line_number}: {kind}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class ManifestError(ValueError):
    pass


@dataclass
class DatasetManifest:
    name: str
    files: list[tuple[Path, str]] = field(default_factory=list)
    format: str = "tsv"

    def __post_init__(self):
        if not self.files:
            raise ManifestError(f"manifest {self.name!r} lists no files")
        if self.format not in FORMATS:
            raise ManifestError(f"unsupported format {self.format!r}")
        for path, split in self.files:
            if split not in SPLITS:
                raise ManifestError(f"unknown split tag {split!r} for {path}")


def parse_tsv(stream: BinaryIO | Iterable[bytes], split: str = "unsplit", path: str = "<stream>") -> list[LabeledTriple]:
    """Parse a byte stream of tab-separated triples.

    The first malformed line raises :class:`ParseError` with its 1-based
    line number.  ``split`` is accepted for symmetry with :func:`load_dataset`
    and validated, but the returned triples carry no tag.
    """
    if split not in SPLITS:
        raise ValueError(f"unknown split tag {split!r}")
    out: list[LabeledTriple] = []
    append = out.append
    for lineno, raw in enumerate(stream, 1):
        if raw.endswith(b"\n"):
            raw = raw[:-1]
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        if not raw:
            continue
        try:
            line = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(path, lineno, "encoding", str(exc)) from None
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(path, lineno, "wrong_arity", f"expected 3 fields, got {len(fields)}")
        if not (fields[0] and fields[1] and fields[2]):
            raise ParseError(path, lineno, "empty_field")
        append((fields[0], fields[1], fields[2]))
    return out


def _open(path: Path) -> BinaryIO:
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_triples(path: str | Path, split: str = "unsplit") -> list[LabeledTriple]:
    path = Path(path)
    with _open(path) as fh:
        return parse_tsv(fh, split, str(path))


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from None
    if not parser.has_section("dataset"):
        raise ManifestError(f"{path}: missing [dataset] section")
    sec = parser["dataset"]
    unknown = set(sec) - {"name", "format", *SPLITS}
    if unknown:
        raise ManifestError(f"{path}: unknown keys {sorted(unknown)}")
    files = []
    for split in SPLITS:
        for entry in sec.get(split, "").splitlines():
            entry = entry.strip()
            if entry:
                files.append(((path.parent / entry), split))
    return DatasetManifest(
        name=sec.get("name", path.parent.name),
        files=files,
        format=sec.get("format", "tsv"),
    )


def load_dataset(manifest: DatasetManifest | str | Path) -> TripleStore:
    """Read every file of a manifest, in manifest order, into one store."""
    if not isinstance(manifest, DatasetManifest):
        manifest = read_manifest(manifest)

    def rows():
        for path, split in manifest.files:
            for h, r, t in read_triples(path, split):
                yield h, r, t, split

    return build_store(rows())


def write_tsv(triples: Iterable[LabeledTriple], stream: TextIO) -> None:
    for h, r, t in triples:
        stream.write(f"{h}\t{r}\t{t}\n")
