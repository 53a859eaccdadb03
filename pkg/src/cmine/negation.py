"""NegEx-style negation scoping.

Triggers are token sequences in four classes:

* ``PRE``: precede a negated concept ("no", "denies", "does not have")
* ``POST``: follow one ("ruled out", "was negative")
* ``PSEUDO``: look like triggers but negate nothing ("not ruled out",
  "gram negative"); their tokens cannot anchor any trigger
* ``TERM``: close a negation scope ("but", "however")

Scopes never cross sentence boundaries and extend at most ``window`` tokens
from the trigger. Matching runs on the unfiltered token stream, since most
triggers are stopwords.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .errors import ParseError
from .knowledge_source import bundled_path
from .normalize import NormalizedText, tokenize

DEFAULT_WINDOW = 5
_SENTENCE_END = frozenset(".!?")
_KINDS = {"PRE": "pre_negation", "POST": "post_negation", "PSEUDO": "pseudo", "TERM": "terminators"}

Phrase = tuple[str, ...]


@dataclass(frozen=True)
class TriggerSet:
    pre_negation: tuple[Phrase, ...] = ()
    post_negation: tuple[Phrase, ...] = ()
    pseudo: tuple[Phrase, ...] = ()
    terminators: tuple[Phrase, ...] = ()

    def __post_init__(self) -> None:
        groups = {}
        for name in _KINDS.values():
            phrases = tuple(_as_phrase(p) for p in getattr(self, name))
            object.__setattr__(self, name, phrases)
            groups[name] = set(phrases)
        names = list(groups)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                both = groups[a] & groups[b]
                if both:
                    shared = ", ".join(" ".join(p) for p in sorted(both))
                    raise ValueError(f"trigger lists {a} and {b} overlap: {shared}")

    @classmethod
    def from_strings(cls, pre: Iterable[str] = (), post: Iterable[str] = (),
                     pseudo: Iterable[str] = (), terminators: Iterable[str] = ()) -> "TriggerSet":
        return cls(tuple(pre), tuple(post), tuple(pseudo), tuple(terminators))


def _as_phrase(p) -> Phrase:
    tokens = tokenize(p).tokens if isinstance(p, str) else tuple(p)
    if not tokens:
        raise ValueError(f"empty trigger phrase {p!r}")
    return tuple(tokens)


def load_triggers(path: str | os.PathLike) -> TriggerSet:
    """Read ``PRE:``/``POST:``/``PSEUDO:``/``TERM:`` prefixed lines."""
    spath = os.fspath(path)
    lists: dict[str, list[str]] = {k: [] for k in _KINDS}
    with open(spath, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            kind, sep, phrase = line.partition(":")
            kind = kind.strip().upper()
            if not sep or kind not in lists or not phrase.strip():
                raise ParseError("expected PRE:, POST:, PSEUDO: or TERM: followed by a phrase", spath, lineno)
            lists[kind].append(phrase.strip())
    try:
        return TriggerSet.from_strings(lists["PRE"], lists["POST"], lists["PSEUDO"], lists["TERM"])
    except ValueError as e:
        raise ParseError(str(e), spath) from None


_DEFAULT: TriggerSet | None = None


def default_triggers() -> TriggerSet:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_triggers(bundled_path("triggers.txt"))
    return _DEFAULT


def split_sentences(nt: NormalizedText, original: str | None = None) -> list[range]:
    """Partition token indices at '.', '!' or '?' found between tokens.

    The gap must also hold whitespace, so "2.5" or "q.i.d" stay in one sentence.
    """
    text = nt.original if original is None else original
    if not nt.tokens:
        return []
    ranges = []
    start = 0
    for i in range(len(nt.spans) - 1):
        gap = text[nt.spans[i][1]:nt.spans[i + 1][0]]
        if any(ch in _SENTENCE_END for ch in gap) and any(ch.isspace() for ch in gap):
            ranges.append(range(start, i + 1))
            start = i + 1
    ranges.append(range(start, len(nt.spans)))
    return ranges


def _occurrences(tokens: Sequence[str], lo: int, hi: int, phrases: Iterable[Phrase]):
    for phrase in phrases:
        n = len(phrase)
        for i in range(lo, hi - n + 1):
            if tuple(tokens[i:i + n]) == phrase:
                yield i, i + n


def negated_token_spans(spans: Sequence[tuple[int, int]], nt: NormalizedText,
                        triggers: TriggerSet, window: int = DEFAULT_WINDOW) -> list[bool]:
    """Negation flag for each (start_token, end_token) span over ``nt``'s tokens."""
    if window < 1:
        raise ValueError("window must be >= 1")
    tokens = nt.tokens
    sentences = split_sentences(nt)
    starts = [s.start for s in sentences]
    flags = [False] * len(spans)
    if not sentences:
        return flags
    by_sentence: dict[int, list[int]] = {}
    for k, (a, _) in enumerate(spans):
        by_sentence.setdefault(bisect_left(starts, a + 1) - 1, []).append(k)

    for si, members in by_sentence.items():
        lo, hi = sentences[si].start, sentences[si].stop
        masked = set()
        for a, b in _occurrences(tokens, lo, hi, triggers.pseudo):
            masked.update(range(a, b))

        def live(occ):
            return [(a, b) for a, b in occ if masked.isdisjoint(range(a, b))]

        pre = live(_occurrences(tokens, lo, hi, triggers.pre_negation))
        post = live(_occurrences(tokens, lo, hi, triggers.post_negation))
        terms = {i for a, b in live(_occurrences(tokens, lo, hi, triggers.terminators)) for i in range(a, b)}

        for k in members:
            start, end = spans[k]
            for _, te in pre:
                if te <= start and start - te < window and not any(te <= t < start for t in terms):
                    flags[k] = True
                    break
            if flags[k]:
                continue
            for ts, _ in post:
                if ts >= end and ts - end < window and not any(end <= t < ts for t in terms):
                    flags[k] = True
                    break
    return flags


def flag_negated(matches: Sequence, nt: NormalizedText, triggers: TriggerSet,
                 window: int = DEFAULT_WINDOW) -> list:
    """Return copies of ``matches`` with ``negated`` set.

    ``nt`` must be the unfiltered token stream of the matched document; each
    match's character span is mapped back onto its token range.
    """
    token_starts = [s for s, _ in nt.spans]
    token_ends = [e for _, e in nt.spans]
    spans = []
    for m in matches:
        a = bisect_left(token_starts, m.start_char)
        b = bisect_left(token_ends, m.end_char) + 1
        spans.append((a, b))
    flags = negated_token_spans(spans, nt, triggers, window)
    return [replace(m, negated=f) for m, f in zip(matches, flags)]
