"""Merging concept ids whose terms are (near-)identical.

Vocabularies bag the same surface under several ids; ``diabetes`` alone can
sit under three. Ids are linked whenever a term of one is similar enough to
a term of the other, links are closed transitively with union-find, and each
cluster is represented by its lexicographically smallest id.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from types import MappingProxyType
from typing import Iterable, Mapping

from .config import ClusterConfig
from .knowledge_source import ConceptRecord
from .normalize import default_stoplist, tokenize
from .stemmer import stem as porter_stem

__all__ = [
    "ClusterConfig", "MaskingTable", "UnionFind", "apply_mask", "build_masking_table",
    "cluster_key", "levenshtein", "term_similarity",
]


class UnionFind:
    """Disjoint sets over hashable items; the root is always the minimum member."""

    def __init__(self, items: Iterable = ()) -> None:
        self.parent: dict = {}
        for x in items:
            self.parent.setdefault(x, x)

    def find(self, x):
        parent = self.parent
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance: insertions, deletions, substitutions."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _term_tokens(term: str, config: ClusterConfig, stoplist: frozenset[str]) -> list[str]:
    tokens = list(tokenize(term).tokens)
    if config.remove_stopwords:
        kept = [t for t in tokens if t not in stoplist]
        # a term made only of stopwords keeps them rather than collapsing to ""
        tokens = kept or tokens
    if config.use_stemming:
        tokens = [porter_stem(t) for t in tokens]
    if not config.respect_word_order:
        tokens.sort()
    return tokens


def cluster_key(term: str, config: ClusterConfig, stoplist: frozenset[str] | None = None) -> str:
    """The normalized string two terms are compared on."""
    return " ".join(_term_tokens(term, config, default_stoplist() if stoplist is None else stoplist))


def _similarity(a: str, b: str) -> float:
    if a == b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


def term_similarity(a: str, b: str, config: ClusterConfig,
                    stoplist: frozenset[str] | None = None) -> float:
    return _similarity(cluster_key(a, config, stoplist), cluster_key(b, config, stoplist))


@dataclass(frozen=True)
class MaskingTable:
    mask: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mask", MappingProxyType(dict(self.mask)))

    def __getitem__(self, concept_id: str) -> str:
        return self.mask.get(concept_id, concept_id)

    def __len__(self) -> int:
        return len(self.mask)

    def clusters(self) -> dict[str, list[str]]:
        groups: dict[str, list[str]] = defaultdict(list)
        for cid, canon in self.mask.items():
            groups[canon].append(cid)
        return {k: sorted(v) for k, v in sorted(groups.items())}

    def items(self):
        return sorted(self.mask.items())


def build_masking_table(records: Iterable[ConceptRecord], config: ClusterConfig,
                        stoplist: frozenset[str] | None = None) -> MaskingTable:
    """Cluster concept ids by term similarity and map each to its cluster's minimum id.

    Unless ``config.exhaustive`` is set, only term pairs sharing at least one
    normalized token are compared. At the default threshold of 1.0 this loses
    nothing; below it, single-token near-misses such as ``diabetes``/``diabetis``
    are only found in exhaustive mode.
    """
    records = list(records)
    ids = sorted({r.concept_id for r in records})
    if not config.enabled:
        return MaskingTable({cid: cid for cid in ids})
    stoplist = default_stoplist() if stoplist is None else stoplist

    # identical normalized strings are linked without any distance computation
    ids_by_key: dict[str, set[str]] = defaultdict(set)
    for r in records:
        ids_by_key[cluster_key(r.term, config, stoplist)].add(r.concept_id)

    uf = UnionFind(ids)
    for group in ids_by_key.values():
        first, *rest = sorted(group)
        for other in rest:
            uf.union(first, other)

    if config.edit_threshold < 1.0:
        keys = sorted(ids_by_key)
        for a, b in _candidate_pairs(keys, config.exhaustive):
            if _similarity(a, b) >= config.edit_threshold:
                uf.union(min(ids_by_key[a]), min(ids_by_key[b]))

    return MaskingTable({cid: uf.find(cid) for cid in ids})


def _candidate_pairs(keys: list[str], exhaustive: bool):
    if exhaustive:
        yield from combinations(keys, 2)
        return
    by_token: dict[str, list[int]] = defaultdict(list)
    for i, key in enumerate(keys):
        for tok in set(key.split(" ")):
            by_token[tok].append(i)
    seen: set[tuple[int, int]] = set()
    for members in by_token.values():
        for i, j in combinations(members, 2):
            if (i, j) not in seen:
                seen.add((i, j))
                yield keys[i], keys[j]


def apply_mask(records: Iterable[ConceptRecord], table: MaskingTable) -> list[ConceptRecord]:
    """Rewrite concept ids through ``table`` and drop rows that become duplicates."""
    seen: set[tuple[str, str, str]] = set()
    out = []
    for r in records:
        cid = table[r.concept_id]
        key = (cid, r.term, r.semantic_type)
        if key in seen:
            continue
        seen.add(key)
        out.append(ConceptRecord(cid, r.term, r.semantic_type, r.source_vocabulary))
    return out
