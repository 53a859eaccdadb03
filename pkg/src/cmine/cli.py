"""Command-line interface: ``cmine {index,annotate,cluster,stats}``.

Machine-readable output goes to stdout; everything meant for people goes to
stderr. Exit status is 0 on success, 1 for configuration errors and 2 for
I/O or data-file errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from typing import Iterator, Sequence

from .concept_cluster import apply_mask, build_masking_table
from .config import PipelineConfig, config_from_mapping, read_config_file
from .errors import CmineError, ConfigError, IndexFormatError, ParseError
from .knowledge_source import (default_buckets_path, load_buckets, load_knowledge_source,
                               write_knowledge_source)
from .matcher import load_index
from .negation import default_triggers, load_triggers
from .normalize import default_stoplist, load_stoplist
from .pipeline import AnnotationFailure, Pipeline

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", help="key=value config file; explicit flags override it")
    g.add_argument("--semantic-types", help="comma-separated semantic types to index (whitelist)")
    g.add_argument("--stopwords", help="stoplist file (default: bundled 127-word English list)")
    g.add_argument("--stem", dest="stem_mode", choices=("none", "stem", "lemma"))
    sw = g.add_mutually_exclusive_group()
    sw.add_argument("--no-stopwords", dest="remove_stopwords", action="store_false", default=None)
    sw.add_argument("--remove-stopwords", dest="remove_stopwords", action="store_true", default=None)
    sp = g.add_mutually_exclusive_group()
    sp.add_argument("--spell-correct", dest="spell_correct", action="store_true", default=None)
    sp.add_argument("--no-spell-correct", dest="spell_correct", action="store_false", default=None)
    ss = g.add_mutually_exclusive_group()
    ss.add_argument("--superset-only", dest="superset_only", action="store_true", default=None)
    ss.add_argument("--all-matches", dest="superset_only", action="store_false", default=None)
    ng = g.add_mutually_exclusive_group()
    ng.add_argument("--no-negation", dest="detect_negation", action="store_false", default=None)
    ng.add_argument("--negation", dest="detect_negation", action="store_true", default=None)
    g.add_argument("--drop-negated", dest="drop_negated", action="store_true", default=None)
    g.add_argument("--triggers", help="negation trigger file (PRE:/POST:/PSEUDO:/TERM: lines)")
    g.add_argument("--negation-window", type=int)
    g.add_argument("--cluster", dest="cluster", action="store_true", default=None,
                   help="merge concept ids with matching terms before indexing")
    g.add_argument("--cluster-threshold", type=float)
    g.add_argument("--cluster-exhaustive", dest="cluster_exhaustive", action="store_true", default=None,
                   help="compare all term pairs instead of pairs sharing a token")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmine", description="Dictionary-based concept mining.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="compile a knowledge source into an index file")
    p.add_argument("--kb", required=True)
    p.add_argument("--buckets")
    p.add_argument("-o", "--output", required=True, help="index file to write")
    _add_config_flags(p)

    p = sub.add_parser("annotate", help="annotate documents, one JSON line per document")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--kb")
    src.add_argument("--index")
    p.add_argument("--buckets")
    p.add_argument("inputs", nargs="*", help="document files (default: stdin)")
    p.add_argument("--jsonl", action="store_true", help='inputs hold one {"id":..., "text":...} per line')
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--time", action="store_true", help="print per-document timing to stderr")
    _add_config_flags(p)

    p = sub.add_parser("cluster", help="write a concept-id masking table and the masked knowledge source")
    p.add_argument("--kb", required=True)
    p.add_argument("-o", "--output", required=True, help="masking table TSV (original_id, canonical_id)")
    p.add_argument("--masked-kb", help="masked knowledge source TSV (default: <output>.kb.tsv)")
    _add_config_flags(p)

    p = sub.add_parser("stats", help="knowledge-source and index statistics as JSON")
    p.add_argument("--kb")
    p.add_argument("--index")
    _add_config_flags(p)
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        config = config_from_mapping(read_config_file(args.config), config)
    raw: dict[str, str] = {}
    for key in ("remove_stopwords", "stem_mode", "spell_correct", "superset_only", "detect_negation",
                "drop_negated", "negation_window", "cluster", "cluster_threshold", "cluster_exhaustive"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = str(value)
    if args.semantic_types is not None:
        raw["semantic_types"] = args.semantic_types
    return config_from_mapping(raw, config)


def _stoplist(args) -> frozenset[str]:
    return load_stoplist(args.stopwords) if args.stopwords else default_stoplist()


def _triggers(args):
    return load_triggers(args.triggers) if args.triggers else default_triggers()


def _buckets(args):
    return load_buckets(args.buckets or default_buckets_path())


def _pipeline(args, config: PipelineConfig) -> Pipeline:
    stoplist = _stoplist(args)
    if getattr(args, "index", None):
        return Pipeline.from_index(args.index, config, buckets=_buckets(args), stoplist=stoplist,
                                   triggers=_triggers(args))
    records = load_knowledge_source(args.kb, config.semantic_whitelist)
    return Pipeline.from_records(records, config, buckets=_buckets(args), stoplist=stoplist,
                                 triggers=_triggers(args))


def run_index(args) -> int:
    config = config_from_args(args)
    t0 = time.perf_counter()
    pipeline = _pipeline(args, config)
    pipeline.save_index(args.output)
    elapsed = (time.perf_counter() - t0) * 1000
    auto = pipeline.automaton
    print(f"nodes: {auto.node_count}  patterns: {auto.pattern_count}  build: {elapsed:.1f} ms  "
          f"-> {args.output}", file=sys.stderr)
    return EXIT_OK


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _read_documents(args) -> Iterator[tuple[str, str | bytes | Exception]]:
    if args.inputs:
        sources = [(path, _read_bytes(path)) for path in args.inputs]
    else:
        stdin = getattr(sys.stdin, "buffer", None)
        sources = [("stdin", stdin.read() if stdin is not None else sys.stdin.read().encode("utf-8"))]
    for name, data in sources:
        if not args.jsonl:
            yield name, data
            continue
        for lineno, line in enumerate(data.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                yield str(obj["id"]), obj["text"]
            except (ValueError, KeyError, TypeError) as e:
                yield f"{name}:{lineno}", e


def run_annotate(args) -> int:
    config = config_from_args(args)
    pipeline = _pipeline(args, config)
    docs = n_matches = n_errors = 0
    total_ms = 0.0
    out = sys.stdout
    for result in pipeline.annotate_batch(_read_documents(args), jobs=args.jobs):
        docs += 1
        if isinstance(result, AnnotationFailure):
            n_errors += 1
            print(f"error: {result.document_id}: {result.error}", file=sys.stderr)
        else:
            n_matches += len(result.matches)
            total_ms += result.timing_ms
            if args.time:
                print(f"{result.document_id}\t{result.timing_ms:.2f} ms", file=sys.stderr)
        out.write(result.to_json() + "\n")
    out.flush()
    print(f"documents: {docs}  matches: {n_matches}  errors: {n_errors}  total: {total_ms:.1f} ms",
          file=sys.stderr)
    return EXIT_OK


def run_cluster(args) -> int:
    config = config_from_args(args)
    records = load_knowledge_source(args.kb, config.semantic_whitelist)
    cc = config.cluster_config
    if not cc.enabled:
        cc = replace(cc, enabled=True)
    table = build_masking_table(records, cc, _stoplist(args))
    with open(args.output, "w", encoding="utf-8") as fh:
        for original, canonical in table.items():
            fh.write(f"{original}\t{canonical}\n")
    masked_path = args.masked_kb or f"{args.output}.kb.tsv"
    write_knowledge_source(apply_mask(records, table), masked_path)
    merged = sum(1 for a, b in table.items() if a != b)
    print(f"ids: {len(table)}  clusters: {len(table.clusters())}  remapped: {merged}  "
          f"-> {args.output}, {masked_path}", file=sys.stderr)
    return EXIT_OK


def run_stats(args) -> int:
    if not args.kb and not args.index:
        raise ConfigError("stats needs --kb and/or --index")
    config = config_from_args(args)
    report: dict = {}
    if args.kb:
        records = load_knowledge_source(args.kb, config.semantic_whitelist)
        report.update(
            records=len(records),
            concepts=len({r.concept_id for r in records}),
            terms=len({r.term.lower() for r in records}),
            semantic_types=len({r.semantic_type for r in records}),
        )
    if args.index:
        auto = load_index(args.index)
        report.update(node_count=auto.node_count, patterns=auto.pattern_count,
                      index_bytes=os.path.getsize(args.index), fingerprint=auto.fingerprint.hex())
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


COMMANDS = {"index": run_index, "annotate": run_annotate, "cluster": run_cluster, "stats": run_stats}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"cmine: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError, IndexFormatError) as e:
        print(f"cmine: {e}", file=sys.stderr)
        return EXIT_IO
    except CmineError as e:
        print(f"cmine: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
