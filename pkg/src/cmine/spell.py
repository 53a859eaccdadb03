"""Dictionary-driven spelling correction.

The correction for an unknown word is the most probable vocabulary word
among those at the smallest edit distance (1, else 2). Edits are deletion,
insertion, substitution and adjacent transposition, i.e. Damerau-Levenshtein
distance. The prior P(c) is the token's relative frequency across the
knowledge-source terms, so inside a distance tier the argmax reduces to the
highest count; ties go to the lexicographically smallest word.

Candidates are found through a symmetric-delete index: any word within
distance ``k`` of ``w`` shares a string obtainable by at most ``k`` deletions
from each side. Hits from the index are then verified with the exact
distance, so no vocabulary scan is ever needed.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .normalize import NormalizedText, tokenize

MAX_EDIT = 2
MIN_CORRECTABLE_LENGTH = 4
# tokens shorter than this get at most one edit when corrected in running text
TWO_EDIT_MIN_LENGTH = 6


def damerau_levenshtein(a: str, b: str) -> int:
    """Unrestricted Damerau-Levenshtein distance (Lowrance-Wagner)."""
    la, lb = len(a), len(b)
    if not la or not lb:
        return la + lb
    inf = la + lb
    last_row: dict[str, int] = {}
    d = [[inf] * (lb + 2) for _ in range(la + 2)]
    for i in range(la + 1):
        d[i + 1][0] = inf
        d[i + 1][1] = i
    for j in range(lb + 1):
        d[0][j + 1] = inf
        d[1][j + 1] = j
    for i in range(1, la + 1):
        last_match_col = 0
        for j in range(1, lb + 1):
            i1 = last_row.get(b[j - 1], 0)
            j1 = last_match_col
            cost = 1
            if a[i - 1] == b[j - 1]:
                cost = 0
                last_match_col = j
            d[i + 1][j + 1] = min(
                d[i][j] + cost,
                d[i + 1][j] + 1,
                d[i][j + 1] + 1,
                d[i1][j1] + (i - i1 - 1) + 1 + (j - j1 - 1),
            )
        last_row[a[i - 1]] = i
    return d[la + 1][lb + 1]


def deletes(word: str, depth: int) -> set[str]:
    """Every string reachable from ``word`` by at most ``depth`` deletions."""
    found = {word}
    frontier = {word}
    for _ in range(depth):
        frontier = {w[:i] + w[i + 1:] for w in frontier for i in range(len(w))} - found
        found |= frontier
    return found


@dataclass(frozen=True)
class VocabularyModel:
    freq: Mapping[str, int]
    max_edit: int = MAX_EDIT
    total: int = field(init=False)
    _index: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if any(c <= 0 for c in self.freq.values()):
            raise ValueError("token counts must be positive")
        object.__setattr__(self, "freq", MappingProxyType(dict(self.freq)))
        object.__setattr__(self, "total", sum(self.freq.values()))
        index: dict[str, list[str]] = defaultdict(list)
        for word in self.freq:
            for d in deletes(word, self.max_edit):
                index[d].append(word)
        object.__setattr__(self, "_index", MappingProxyType({k: tuple(v) for k, v in index.items()}))

    @classmethod
    def from_terms(cls, terms: Iterable[str], max_edit: int = MAX_EDIT) -> "VocabularyModel":
        counts: Counter[str] = Counter()
        for term in terms:
            counts.update(tokenize(term).tokens)
        return cls(dict(counts), max_edit)

    @property
    def vocab(self):
        return self.freq.keys()

    def __contains__(self, token: str) -> bool:
        return token in self.freq

    def prior(self, token: str) -> float:
        return self.freq.get(token, 0) / self.total if self.total else 0.0


def candidates(w: str, model: VocabularyModel, max_edit: int = 1) -> set[tuple[str, int]]:
    """Vocabulary words within ``max_edit`` Damerau-Levenshtein edits of ``w``."""
    if max_edit > model.max_edit:
        raise ValueError(f"model was indexed for at most {model.max_edit} edits")
    seen: set[str] = set()
    out = set()
    for d in deletes(w, max_edit):
        for word in model._index.get(d, ()):
            if word in seen:
                continue
            seen.add(word)
            if abs(len(word) - len(w)) > max_edit:
                continue
            dist = damerau_levenshtein(w, word)
            if dist <= max_edit:
                out.add((word, dist))
    return out


def correct(w: str, model: VocabularyModel, max_edit: int = MAX_EDIT) -> str:
    if w in model.freq:
        return w
    found = candidates(w, model, max_edit)
    for tier in range(1, max_edit + 1):
        best = [c for c, d in found if d == tier]
        if best:
            return min(best, key=lambda c: (-model.freq[c], c))
    return w


def edit_budget(token: str, max_edit: int = MAX_EDIT) -> int:
    """Edits allowed when correcting ``token`` in running text (1 for 4-5 chars, else 2)."""
    if len(token) < MIN_CORRECTABLE_LENGTH:
        return 0
    return min(max_edit, 1 if len(token) < TWO_EDIT_MIN_LENGTH else 2)


def correct_tokens(nt: NormalizedText, model: VocabularyModel, *,
                   max_edit: int = MAX_EDIT,
                   skip: frozenset[str] = frozenset()) -> NormalizedText:
    """Correct each eligible token of ``nt``; spans are unchanged.

    Short tokens (clinical shorthand such as ``f/u``), tokens containing digits
    (dosages, lab codes) and tokens in ``skip`` are left alone. Two edits are
    only spent on tokens of six or more characters; a two-edit rewrite of a
    four-letter word is almost always another word altogether.
    """
    out = []
    for tok in nt.tokens:
        budget = edit_budget(tok, max_edit)
        if not budget or tok in skip or any(ch.isdigit() for ch in tok):
            out.append(tok)
        else:
            out.append(correct(tok, model, budget))
    return nt.with_tokens(out)
