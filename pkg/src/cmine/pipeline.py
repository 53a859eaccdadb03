"""End-to-end concept annotation: preprocess, index, search, post-process."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Sequence

from .concept_cluster import MaskingTable, apply_mask, build_masking_table
from .config import PipelineConfig
from .errors import CmineError, ConfigurationMismatchError
from .knowledge_source import (ConceptRecord, SemanticTypeBuckets, default_buckets_path,
                               load_buckets, load_knowledge_source)
from .matcher import Automaton, Payload, build, dumps_index, load_index, loads_index, save_index, search
from .negation import TriggerSet, default_triggers, flag_negated
from .normalize import (NormalizedText, apply_stem, apply_stopwords, config_fingerprint,
                        default_stoplist, normalize, tokenize)
from .spell import VocabularyModel, correct_tokens


@dataclass(frozen=True)
class Match:
    start_char: int
    end_char: int
    surface: str
    concept_id: str
    matched_term: str
    semantic_types: tuple[str, ...]
    bucket: str
    negated: bool = False

    def to_dict(self) -> dict:
        return {
            "start": self.start_char,
            "end": self.end_char,
            "surface": self.surface,
            "concept_id": self.concept_id,
            "matched_term": self.matched_term,
            "semantic_types": list(self.semantic_types),
            "bucket": self.bucket,
            "negated": self.negated,
        }


@dataclass(frozen=True)
class AnnotationResult:
    document_id: str
    matches: tuple[Match, ...]
    by_bucket: dict[str, list[str]]
    timing_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "document_id": self.document_id,
            "matches": [m.to_dict() for m in self.matches],
            "by_bucket": self.by_bucket,
            "timing_ms": round(self.timing_ms, 3),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


@dataclass(frozen=True)
class AnnotationFailure:
    """Inline error record for a document that could not be annotated."""

    document_id: str
    error: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def superset_filter(matches: Sequence[Match]) -> list[Match]:
    """Drop matches whose span lies strictly inside another match's span.

    Matches sharing an identical span are all kept.
    """
    spans = sorted({(m.start_char, m.end_char) for m in matches}, key=lambda s: (s[0], -s[1]))
    contained = set()
    max_end = -1
    for start, end in spans:
        # earlier spans start no later; equal starts come longest-first
        if max_end >= end:
            contained.add((start, end))
        max_end = max(max_end, end)
    return [m for m in matches if (m.start_char, m.end_char) not in contained]


def group_by_bucket(matches: Iterable[Match]) -> dict[str, list[str]]:
    """Distinct non-negated matched terms per bucket, first occurrence first."""
    groups: dict[str, list[str]] = {}
    seen: set[tuple[str, str]] = set()
    for m in matches:
        if m.negated:
            continue
        key = (m.bucket, m.matched_term.lower())
        if key in seen:
            continue
        seen.add(key)
        groups.setdefault(m.bucket, []).append(m.matched_term)
    return groups


def index_patterns(records: Iterable[ConceptRecord], config: PipelineConfig,
                   stoplist: frozenset[str]) -> list[tuple[tuple[str, ...], Payload]]:
    """Normalize each (concept, term) once; its semantic types merge into one payload.

    Terms that normalize to nothing (e.g. made only of stopwords) are skipped.
    """
    types: dict[tuple[str, str], set[str]] = {}
    for r in records:
        types.setdefault((r.concept_id, r.term), set()).add(r.semantic_type)
    patterns = []
    for (cid, term), sts in types.items():
        tokens = normalize(term, config, stoplist).tokens
        if tokens:
            patterns.append((tokens, Payload(cid, term, tuple(sts))))
    return patterns


def _payload_terms(automaton: Automaton) -> Iterator[str]:
    for pat in automaton.patterns:
        for p in pat.payloads:
            yield p.original_term


@dataclass(frozen=True, eq=False)
class Pipeline:
    config: PipelineConfig
    automaton: Automaton
    buckets: SemanticTypeBuckets = field(default_factory=SemanticTypeBuckets)
    stoplist: frozenset[str] = field(default_factory=default_stoplist)
    triggers: TriggerSet = field(default_factory=default_triggers)
    masking_table: MaskingTable | None = None
    vocabulary: VocabularyModel | None = None

    def __post_init__(self) -> None:
        expected = config_fingerprint(self.config, self.stoplist)
        if expected != self.automaton.fingerprint:
            raise ConfigurationMismatchError(
                "index was built with different normalization settings than the current configuration "
                f"(index {self.automaton.fingerprint.hex()[:12]}, config {expected.hex()[:12]})")
        if self.config.spell_correct and self.vocabulary is None:
            # counted over the indexed surfaces so a reloaded index yields the same model
            object.__setattr__(self, "vocabulary", VocabularyModel.from_terms(_payload_terms(self.automaton)))

    # pickling ships the compact index bytes instead of the object graph
    def __reduce__(self):
        return (_restore_pipeline, (self.config, dumps_index(self.automaton), dict(self.buckets.bucket_of),
                                    self.buckets.default, self.stoplist, self.triggers))

    @classmethod
    def from_records(cls, records: Sequence[ConceptRecord], config: PipelineConfig | None = None, *,
                     buckets: SemanticTypeBuckets | None = None, stoplist: frozenset[str] | None = None,
                     triggers: TriggerSet | None = None) -> "Pipeline":
        config = config or PipelineConfig()
        stoplist = default_stoplist() if stoplist is None else frozenset(stoplist)
        records = list(records)
        if config.semantic_whitelist is not None:
            records = [r for r in records if r.semantic_type in config.semantic_whitelist]
        table = None
        if config.cluster_config.enabled:
            table = build_masking_table(records, config.cluster_config, stoplist)
            records = apply_mask(records, table)
        patterns = index_patterns(records, config, stoplist)
        if not patterns:
            raise CmineError("knowledge source has no indexable terms under this configuration")
        automaton = build(patterns, config_fingerprint(config, stoplist))
        return cls(config, automaton, buckets or SemanticTypeBuckets(), stoplist,
                   triggers or default_triggers(), table)

    @classmethod
    def from_index(cls, path: str | os.PathLike, config: PipelineConfig | None = None, *,
                   buckets: SemanticTypeBuckets | None = None, stoplist: frozenset[str] | None = None,
                   triggers: TriggerSet | None = None) -> "Pipeline":
        stoplist = default_stoplist() if stoplist is None else frozenset(stoplist)
        return cls(config or PipelineConfig(), load_index(path), buckets or SemanticTypeBuckets(),
                   stoplist, triggers or default_triggers())

    def save_index(self, path: str | os.PathLike) -> None:
        save_index(self.automaton, path)

    def preprocess(self, text: str) -> tuple[NormalizedText, NormalizedText]:
        """Return (unfiltered raw tokens, search-ready tokens) for ``text``."""
        raw = tokenize(text)
        nt = raw
        if self.config.spell_correct:
            nt = correct_tokens(nt, self.vocabulary, skip=self.stoplist)
        if self.config.remove_stopwords:
            nt = apply_stopwords(nt, self.stoplist)
        return raw, apply_stem(nt, self.config.stem_mode)

    def find_matches(self, text: str) -> list[Match]:
        raw, nt = self.preprocess(text)
        cfg = self.config
        matches = []
        for hit in search(self.automaton, nt):
            start = nt.spans[hit.start_token][0]
            end = nt.spans[hit.end_token - 1][1]
            surface = text[start:end]
            for p in hit.payloads:
                matches.append(Match(start, end, surface, p.concept_id, p.original_term, p.semantic_types,
                                     self.buckets.bucket_for_types(p.semantic_types)))
        matches.sort(key=lambda m: (m.start_char, m.end_char, m.concept_id, m.matched_term))
        if cfg.superset_only:
            matches = superset_filter(matches)
        if cfg.detect_negation and matches:
            matches = flag_negated(matches, raw, self.triggers, cfg.negation_window)
        if cfg.drop_negated:
            matches = [m for m in matches if not m.negated]
        return matches

    def annotate(self, document: str, document_id: str = "") -> AnnotationResult:
        t0 = time.perf_counter()
        matches = self.find_matches(document)
        grouped = group_by_bucket(matches)
        elapsed = (time.perf_counter() - t0) * 1000.0
        return AnnotationResult(document_id, tuple(matches), grouped, elapsed)

    def annotate_batch(self, documents: Iterable[tuple[str, str | bytes]], jobs: int = 1
                       ) -> Iterator[AnnotationResult | AnnotationFailure]:
        """Annotate (id, text) pairs, yielding results in input order.

        ``bytes`` documents are decoded as UTF-8; a document that fails (bad
        encoding or anything else) yields an :class:`AnnotationFailure` and the
        stream continues. An exception passed in place of the text (e.g. from an
        unparseable input record) is reported the same way.
        """
        if jobs <= 1:
            for doc_id, text in documents:
                yield _annotate_one(self, doc_id, text)
            return
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(self,)) as ex:
            yield from ex.map(_worker_annotate, documents, chunksize=16)


def _annotate_one(pipeline: Pipeline, doc_id, text) -> AnnotationResult | AnnotationFailure:
    doc_id = str(doc_id)
    if isinstance(text, BaseException):
        return AnnotationFailure(doc_id, f"{type(text).__name__}: {text}")
    try:
        if isinstance(text, (bytes, bytearray)):
            text = bytes(text).decode("utf-8")
        if not isinstance(text, str):
            raise TypeError(f"document text must be a string, got {type(text).__name__}")
        return pipeline.annotate(text, doc_id)
    except Exception as e:  # reported inline, the batch carries on
        return AnnotationFailure(doc_id, f"{type(e).__name__}: {e}")


_WORKER_PIPELINE: Pipeline | None = None


def _init_worker(pipeline: Pipeline) -> None:
    global _WORKER_PIPELINE
    _WORKER_PIPELINE = pipeline


def _worker_annotate(item):
    doc_id, text = item
    return _annotate_one(_WORKER_PIPELINE, doc_id, text)


def _restore_pipeline(config, index_bytes, bucket_map, default_bucket, stoplist, triggers) -> Pipeline:
    return Pipeline(config, loads_index(index_bytes), SemanticTypeBuckets(bucket_map, default_bucket),
                    stoplist, triggers)


def build_pipeline(kb_path: str | os.PathLike, buckets_path: str | os.PathLike | None = None,
                   config: PipelineConfig | None = None, *, stoplist: frozenset[str] | None = None,
                   triggers: TriggerSet | None = None) -> Pipeline:
    """Load a knowledge source and compile it into a ready pipeline.

    With no ``buckets_path`` the bundled Diagnosis/Procedures/Medicines map is used.
    """
    config = config or PipelineConfig()
    records = load_knowledge_source(kb_path, config.semantic_whitelist)
    buckets = load_buckets(buckets_path if buckets_path is not None else default_buckets_path())
    return Pipeline.from_records(records, config, buckets=buckets, stoplist=stoplist, triggers=triggers)
