"""Dictionary-driven concept mining over free text with an Aho-Corasick automaton."""

from .config import ClusterConfig, PipelineConfig
from .errors import (CmineError, ConfigError, ConfigurationMismatchError, IndexFormatError,
                     ParseError, UnsupportedConfigError)
from .knowledge_source import ConceptRecord, SemanticTypeBuckets, load_buckets, load_knowledge_source
from .pipeline import AnnotationFailure, AnnotationResult, Match, Pipeline, build_pipeline, superset_filter

__version__ = "0.1.0"

__all__ = [
    "AnnotationFailure", "AnnotationResult", "ClusterConfig", "CmineError", "ConceptRecord",
    "ConfigError", "ConfigurationMismatchError", "IndexFormatError", "Match", "ParseError",
    "Pipeline", "PipelineConfig", "SemanticTypeBuckets", "UnsupportedConfigError",
    "build_pipeline", "load_buckets", "load_knowledge_source", "superset_filter",
]
