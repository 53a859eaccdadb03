"""Text normalization shared by indexing and search.

Both phases must produce identical token streams for the same surface, so
every :class:`NormalizedText` records the settings it was produced under and
exposes their fingerprint. The matcher refuses to search text whose
fingerprint differs from the one its automaton was built with.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from .config import PipelineConfig
from .errors import UnsupportedConfigError
from .knowledge_source import bundled_path
from .stemmer import stem as porter_stem

# Alphanumeric runs: \w minus underscore is exactly str.isalnum().
_TOKEN_RE = re.compile(r"[^\W_]+")


def stoplist_digest(stoplist: Iterable[str]) -> str:
    joined = "\n".join(sorted(set(stoplist)))
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class NormalizationSettings:
    """The subset of configuration that changes the token stream."""

    remove_stopwords: bool = False
    stoplist_digest: str | None = None
    stem_mode: str = "none"

    def canonical(self) -> str:
        items = {
            "remove_stopwords": "true" if self.remove_stopwords else "false",
            "stem_mode": self.stem_mode,
        }
        if self.remove_stopwords:
            items["stoplist"] = self.stoplist_digest or ""
        return "\n".join(f"{k}={v}" for k, v in sorted(items.items()))

    @property
    def fingerprint(self) -> bytes:
        return hashlib.sha256(self.canonical().encode("utf-8")).digest()


def config_settings(config: PipelineConfig, stoplist: Iterable[str]) -> NormalizationSettings:
    return NormalizationSettings(
        remove_stopwords=config.remove_stopwords,
        stoplist_digest=stoplist_digest(stoplist) if config.remove_stopwords else None,
        stem_mode=config.stem_mode,
    )


def config_fingerprint(config: PipelineConfig, stoplist: Iterable[str]) -> bytes:
    return config_settings(config, stoplist).fingerprint


@dataclass(frozen=True)
class NormalizedText:
    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]
    original: str
    settings: NormalizationSettings = field(default_factory=NormalizationSettings)

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.spans):
            raise ValueError("tokens and spans differ in length")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def fingerprint(self) -> bytes:
        return self.settings.fingerprint

    def with_tokens(self, tokens: Iterable[str]) -> "NormalizedText":
        return replace(self, tokens=tuple(tokens))


def tokenize(text: str) -> NormalizedText:
    """Split into lowercase alphanumeric runs with their original offsets."""
    tokens = []
    spans = []
    for m in _TOKEN_RE.finditer(text):
        word = m.group().lower()
        if not word.isalnum():
            # lowercasing can add combining marks ("İ" -> "i" + U+0307)
            word = "".join(ch for ch in word if ch.isalnum())
        tokens.append(word)
        spans.append(m.span())
    return NormalizedText(tuple(tokens), tuple(spans), text)


def apply_stopwords(nt: NormalizedText, stoplist: Iterable[str]) -> NormalizedText:
    stops = stoplist if isinstance(stoplist, (set, frozenset)) else frozenset(stoplist)
    keep = [i for i, tok in enumerate(nt.tokens) if tok not in stops]
    return NormalizedText(
        tuple(nt.tokens[i] for i in keep),
        tuple(nt.spans[i] for i in keep),
        nt.original,
        replace(nt.settings, remove_stopwords=True, stoplist_digest=stoplist_digest(stops)),
    )


def apply_stem(nt: NormalizedText, mode: str) -> NormalizedText:
    if mode == "none":
        return nt
    if mode == "lemma":
        raise UnsupportedConfigError("stem mode 'lemma' is unsupported (lemmatization is not implemented)")
    if mode != "stem":
        raise ValueError(f"unknown stem mode {mode!r}")
    return NormalizedText(
        tuple(porter_stem(t) for t in nt.tokens),
        nt.spans,
        nt.original,
        replace(nt.settings, stem_mode="stem"),
    )


def normalize(text: str, config: PipelineConfig, stoplist: Iterable[str] | None = None) -> NormalizedText:
    """tokenize -> stopword removal (if enabled) -> stemming."""
    nt = tokenize(text)
    if config.remove_stopwords:
        nt = apply_stopwords(nt, default_stoplist() if stoplist is None else stoplist)
    return apply_stem(nt, config.stem_mode)


def load_stoplist(path: str | os.PathLike) -> frozenset[str]:
    """One lowercase token per line; ``#`` starts a comment line."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
    return frozenset(words)


_DEFAULT_STOPLIST: frozenset[str] | None = None


def default_stoplist() -> frozenset[str]:
    global _DEFAULT_STOPLIST
    if _DEFAULT_STOPLIST is None:
        _DEFAULT_STOPLIST = load_stoplist(bundled_path("stopwords.txt"))
    return _DEFAULT_STOPLIST
