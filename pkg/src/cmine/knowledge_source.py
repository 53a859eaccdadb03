"""Concept dictionaries in a generic tab-separated format.

A knowledge source is a UTF-8 file with one concept surface per line::

    concept_id <TAB> term <TAB> semantic_type [<TAB> source_vocabulary]

Lines starting with ``#`` and blank lines are ignored. A bucket file maps
semantic types onto coarse reporting groups (``Diagnosis``, ``Procedures``,
``Medicines`` ...)::

    semantic_type <TAB> bucket
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .errors import ParseError

DEFAULT_SOURCE = "UNKNOWN"
DEFAULT_BUCKET = "Other"


@dataclass(frozen=True)
class ConceptRecord:
    concept_id: str
    term: str
    semantic_type: str
    source_vocabulary: str = DEFAULT_SOURCE

    def __post_init__(self) -> None:
        if not self.concept_id or any(c in self.concept_id for c in "\t\r\n"):
            raise ValueError(f"invalid concept_id {self.concept_id!r}")
        if not self.term.strip():
            raise ValueError(f"empty term for {self.concept_id}")


@dataclass(frozen=True)
class SemanticTypeBuckets:
    """Total mapping from semantic type to bucket name."""

    bucket_of: Mapping[str, str] = field(default_factory=dict)
    default: str = DEFAULT_BUCKET

    def __post_init__(self) -> None:
        object.__setattr__(self, "bucket_of", MappingProxyType(dict(self.bucket_of)))

    def __getitem__(self, semantic_type: str) -> str:
        return self.bucket_of.get(semantic_type, self.default)

    def bucket(self, semantic_type: str) -> str:
        return self[semantic_type]

    def bucket_for_types(self, semantic_types: Iterable[str]) -> str:
        """Bucket of the first (sorted) type that is explicitly mapped."""
        for st in sorted(semantic_types):
            if st in self.bucket_of:
                return self.bucket_of[st]
        return self.default


def _data_lines(path: str | os.PathLike) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def parse_record(line: str, lineno: int | None = None, path: str | None = None) -> ConceptRecord:
    fields = [f.strip() for f in line.split("\t")]
    if len(fields) not in (3, 4):
        raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(fields)}", path, lineno)
    concept_id, term, semantic_type = fields[:3]
    source = fields[3] if len(fields) == 4 and fields[3] else DEFAULT_SOURCE
    if not concept_id:
        raise ParseError("empty concept_id", path, lineno)
    if not term:
        raise ParseError("empty term", path, lineno)
    if not semantic_type:
        raise ParseError("empty semantic_type", path, lineno)
    return ConceptRecord(concept_id, term, semantic_type, source)


def filter_records(records: Iterable[ConceptRecord],
                   semantic_whitelist: Iterable[str] | None) -> list[ConceptRecord]:
    if semantic_whitelist is None:
        return list(records)
    allowed = frozenset(semantic_whitelist)
    return [r for r in records if r.semantic_type in allowed]


def dedupe_records(records: Iterable[ConceptRecord]) -> list[ConceptRecord]:
    """Drop repeated (concept_id, casefolded term) pairs, keeping the first."""
    seen: set[tuple[str, str]] = set()
    out = []
    for r in records:
        key = (r.concept_id, r.term.lower())
        if key in seen:
            continue
        seen.add(key)
        out.append(r)
    return out


def load_knowledge_source(path: str | os.PathLike,
                          semantic_whitelist: Iterable[str] | None = None) -> list[ConceptRecord]:
    """Read a knowledge-source TSV, optionally keeping only whitelisted types.

    Raises ``FileNotFoundError`` for a missing file and :class:`ParseError`
    (with the offending line number) for a malformed line.
    """
    spath = os.fspath(path)
    records = [parse_record(line, lineno, spath) for lineno, line in _data_lines(spath)]
    return filter_records(dedupe_records(records), semantic_whitelist)


def load_buckets(path: str | os.PathLike) -> SemanticTypeBuckets:
    spath = os.fspath(path)
    mapping: dict[str, str] = {}
    for lineno, line in _data_lines(spath):
        fields = [f.strip() for f in line.split("\t")]
        if len(fields) != 2 or not all(fields):
            raise ParseError("expected 2 non-empty tab-separated fields", spath, lineno)
        mapping[fields[0]] = fields[1]
    return SemanticTypeBuckets(mapping)


def write_knowledge_source(records: Iterable[ConceptRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(f"{r.concept_id}\t{r.term}\t{r.semantic_type}\t{r.source_vocabulary}\n")


def bundled_path(name: str) -> str:
    """Filesystem path of a data file shipped inside the package."""
    return str(resources.files("cmine").joinpath("data", name))


def mini_thesaurus_path() -> str:
    return bundled_path("mini_thesaurus.tsv")


def default_buckets_path() -> str:
    return bundled_path("buckets.tsv")
