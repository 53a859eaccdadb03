"""Pipeline and clustering configuration, plus the flat key=value config file."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from .errors import ConfigError, ParseError, UnsupportedConfigError

STEM_MODES = ("none", "stem", "lemma")

# Keys accepted in a config file; CLI flags mirror these.
CONFIG_KEYS = (
    "remove_stopwords", "stem_mode", "spell_correct", "superset_only",
    "detect_negation", "semantic_types", "drop_negated", "negation_window",
    "cluster", "cluster_threshold", "cluster_exhaustive",
)


@dataclass(frozen=True)
class ClusterConfig:
    enabled: bool = False
    use_stemming: bool = False
    remove_stopwords: bool = False
    respect_word_order: bool = True
    edit_threshold: float = 1.0
    # compare every pair of terms instead of only pairs that share a token
    exhaustive: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.edit_threshold <= 1.0:
            raise ConfigError(f"cluster threshold must lie in [0, 1], got {self.edit_threshold}")


@dataclass(frozen=True)
class PipelineConfig:
    remove_stopwords: bool = True
    stem_mode: str = "stem"
    spell_correct: bool = True
    superset_only: bool = False
    detect_negation: bool = True
    semantic_whitelist: frozenset[str] | None = None
    cluster_config: ClusterConfig = field(default_factory=ClusterConfig)
    drop_negated: bool = False
    negation_window: int = 5

    def __post_init__(self) -> None:
        if self.stem_mode not in STEM_MODES:
            raise ConfigError(f"unknown stem mode {self.stem_mode!r}; expected one of {STEM_MODES}")
        if self.stem_mode == "lemma":
            raise UnsupportedConfigError("stem mode 'lemma' is unsupported (lemmatization is not implemented)")
        if self.negation_window < 1:
            raise ConfigError("negation window must be >= 1")
        if self.semantic_whitelist is not None and not isinstance(self.semantic_whitelist, frozenset):
            object.__setattr__(self, "semantic_whitelist", frozenset(self.semantic_whitelist))

    def with_overrides(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)


def parse_bool(value: str, key: str = "value") -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def parse_type_list(value: str) -> frozenset[str]:
    return frozenset(t.strip() for t in value.split(",") if t.strip())


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Parse a flat ``key=value`` file (``#`` comments allowed) into raw strings."""
    spath = os.fspath(path)
    values: dict[str, str] = {}
    with open(spath, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", spath, lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{spath}:{lineno}: unknown config key {key!r}")
            values[key] = value
    return values


def config_from_mapping(values: dict[str, str], base: PipelineConfig | None = None) -> PipelineConfig:
    """Apply raw string values (from a config file) on top of ``base``."""
    base = base or PipelineConfig()
    changes: dict = {}
    cluster_changes: dict = {}
    for key, value in values.items():
        if key in ("remove_stopwords", "spell_correct", "superset_only", "detect_negation", "drop_negated"):
            changes[key] = parse_bool(value, key)
        elif key == "stem_mode":
            changes[key] = value.strip()
        elif key == "semantic_types":
            changes["semantic_whitelist"] = parse_type_list(value) if value.strip() != "*" else None
        elif key == "negation_window":
            try:
                changes[key] = int(value)
            except ValueError:
                raise ConfigError(f"negation_window: expected an integer, got {value!r}") from None
        elif key == "cluster":
            cluster_changes["enabled"] = parse_bool(value, key)
        elif key == "cluster_exhaustive":
            cluster_changes["exhaustive"] = parse_bool(value, key)
        elif key == "cluster_threshold":
            try:
                cluster_changes["edit_threshold"] = float(value)
            except ValueError:
                raise ConfigError(f"cluster_threshold: expected a number, got {value!r}") from None
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if cluster_changes:
        changes["cluster_config"] = replace(base.cluster_config, **cluster_changes)
    return replace(base, **changes)
