"""Command-line driver: minimize, graph, query, stats, serve.

The CLI adds no semantics of its own; every answer it prints is
reproducible from library calls.  Exit codes: 0 success, 1 fatal
error, 2 partial failure (some items errored but the run completed).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .corpus import CorpusError, ItemId, corpus_stats, load_corpus, KINDS
from .depgraph import GraphError, build_graph, load_graph
from .minimizer import (
    ORDER_ASCENDING,
    ORDER_DESCENDING,
    STRATEGIES,
    Strategy,
    load_results,
    minimize_corpus,
)
from .oracle import (
    BuiltinOracle,
    CachedOracle,
    ExternalCommandOracle,
    OracleConfigError,
    VerificationCache,
)
from .service import EntryPointError, compute_fingerprint, create_app, load_entry_points

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2

_ORDER_FLAGS = {"desc": ORDER_DESCENDING, "asc": ORDER_ASCENDING}


class FatalError(Exception):
    """Unrecoverable CLI failure; message goes to stderr, exit status 1."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finedeps",
        description="Minimal fine-grained dependency computation and DAG queries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_min = sub.add_parser("minimize", help="refine candidate sets to minimal dependency sets")
    p_min.add_argument("--corpus", required=True, help="itemized-corpus file")
    p_min.add_argument("--out", required=True, help="results file to write")
    p_min.add_argument("--oracle", choices=("builtin", "external"), default="builtin")
    p_min.add_argument("--command", help="external verifier command (with --oracle external)")
    p_min.add_argument("--timeout", type=float, default=60.0, help="external verifier timeout in seconds")
    p_min.add_argument("--strategy", choices=STRATEGIES, default="linear")
    p_min.add_argument("--order", choices=tuple(_ORDER_FLAGS), default="desc")
    p_min.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel minimizations")
    p_min.add_argument("--cache", metavar="PATH", help="persistent verification cache file")
    p_min.set_defaults(func=cmd_minimize)

    p_graph = sub.add_parser("graph", help="build the dependency graph from minimization results")
    p_graph.add_argument("results", help="minimization results file")
    p_graph.add_argument("--corpus", required=True, help="itemized-corpus file")
    p_graph.add_argument("--format", choices=("edge-tsv", "dot", "structured"), default="structured")
    p_graph.add_argument("--out", required=True, help="export file to write")
    p_graph.set_defaults(func=cmd_graph)

    p_query = sub.add_parser("query", help="answer one query against a structured graph file")
    p_query.add_argument("graph", help="structured graph file")
    p_query.add_argument(
        "kind", choices=("path", "via", "avoiding", "deps", "rdeps"), help="query kind"
    )
    p_query.add_argument("ids", nargs="+", help="item ids (avoiding: third argument is a comma-separated blocked list)")
    p_query.set_defaults(func=cmd_query)

    p_stats = sub.add_parser("stats", help="print corpus summary counts")
    p_stats.add_argument("--corpus", required=True, help="itemized-corpus file")
    p_stats.set_defaults(func=cmd_stats)

    p_serve = sub.add_parser("serve", help="serve the graph over HTTP")
    p_serve.add_argument("graph", help="structured graph file")
    p_serve.add_argument("--corpus", help="itemized-corpus file (refreshes the stats summary)")
    p_serve.add_argument("--entry-points", metavar="PATH", help="curated entry-points file (itemId<TAB>label)")
    p_serve.add_argument("--bind", default="127.0.0.1:8000", metavar="HOST:PORT")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _load_corpus(path: str):
    try:
        return load_corpus(path)
    except OSError as exc:
        raise FatalError(f"cannot read corpus {path}: {exc}") from None
    except CorpusError as exc:
        raise FatalError(f"corpus {path}: {exc}") from None


def cmd_minimize(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise FatalError("--jobs must be a positive integer")
    corpus = _load_corpus(args.corpus)
    if args.oracle == "external":
        if not args.command:
            raise FatalError("--oracle external requires --command")
        if args.timeout <= 0:
            raise FatalError("--timeout must be positive")
        oracle = ExternalCommandOracle(corpus, args.command, args.timeout)
    else:
        oracle = BuiltinOracle(corpus)
    cache = None
    if args.cache:
        cache = VerificationCache(args.cache)
        oracle = CachedOracle(oracle, cache)
    strategy = Strategy(name=args.strategy, order=_ORDER_FLAGS[args.order])
    outcome = minimize_corpus(corpus, oracle, strategy, parallelism=args.jobs)
    outcome.write(args.out)
    for item_id, reason in sorted(outcome.failures.items(), key=lambda kv: str(kv[0])):
        print(f"item {item_id}: {reason}", file=sys.stderr)
    print(f"items: {len(corpus)} ({len(outcome.results)} minimized, {len(outcome.failures)} failed)")
    print(f"oracle calls: {outcome.total_oracle_calls}")
    if cache is not None:
        print(f"cache hit rate: {cache.hit_rate:.1%} ({cache.hits} hits, {cache.misses} misses)")
    else:
        print("cache hit rate: n/a (no cache configured)")
    return EXIT_PARTIAL if outcome.failures else EXIT_OK


def cmd_graph(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    try:
        outcome = load_results(args.results, corpus)
    except OSError as exc:
        raise FatalError(f"cannot read results {args.results}: {exc}") from None
    except (ValueError, CorpusError) as exc:
        raise FatalError(f"results {args.results}: {exc}") from None
    for item_id, reason in sorted(outcome.failures.items(), key=lambda kv: str(kv[0])):
        print(f"warning: excluding {item_id}: {reason}", file=sys.stderr)
    graph = build_graph(outcome, corpus)
    graph.write(args.out, format=args.format)
    return EXIT_PARTIAL if outcome.failures else EXIT_OK


def _parse_query_id(text: str) -> ItemId:
    try:
        return ItemId.parse(text)
    except ValueError as exc:
        raise FatalError(str(exc)) from None


def cmd_query(args: argparse.Namespace) -> int:
    try:
        graph = load_graph(args.graph)
    except OSError as exc:
        raise FatalError(f"cannot read graph {args.graph}: {exc}") from None
    except GraphError as exc:
        raise FatalError(f"graph {args.graph}: {exc}") from None

    kind = args.kind
    ids = args.ids
    arity = {"path": 2, "via": 3, "avoiding": 3, "deps": 1, "rdeps": 1}[kind]
    if len(ids) != arity:
        raise FatalError(f"query {kind} takes exactly {arity} argument(s), got {len(ids)}")

    if kind == "path":
        a, b = (_parse_query_id(t) for t in ids)
        exists, witness = graph.exists_path_avoiding(a, b, ())
        print("yes" if exists else "no")
        if witness is not None:
            print(" -> ".join(str(node) for node in witness))
    elif kind == "via":
        a, b, z = (_parse_query_id(t) for t in ids)
        print("yes" if graph.all_paths_through(a, b, z) else "no")
    elif kind == "avoiding":
        a = _parse_query_id(ids[0])
        b = _parse_query_id(ids[1])
        blocked = [_parse_query_id(part) for part in ids[2].split(",") if part]
        exists, witness = graph.exists_path_avoiding(a, b, blocked)
        print("yes" if exists else "no")
        if witness is not None:
            print(" -> ".join(str(node) for node in witness))
    else:
        node = _parse_query_id(ids[0])
        listing = graph.deps(node) if kind == "deps" else graph.rdeps(node)
        for entry in listing:
            print(entry)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.corpus)
    stats = corpus_stats(corpus)
    print(f"items: {stats.items}")
    for kind in KINDS:
        print(f"  {kind}: {stats.kinds[kind]}")
    print(f"symbols: {stats.symbols}")
    return EXIT_OK


def _parse_bind(text: str) -> tuple[str, int]:
    host, sep, port_text = text.rpartition(":")
    if not sep or not host:
        raise FatalError(f"--bind expects HOST:PORT, got {text!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise FatalError(f"--bind expects a numeric port, got {port_text!r}") from None
    if not 0 < port < 65536:
        raise FatalError(f"--bind port out of range: {port}")
    return host, port


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    host, port = _parse_bind(args.bind)
    try:
        graph = load_graph(args.graph)
        fingerprint = compute_fingerprint(args.graph)
    except OSError as exc:
        raise FatalError(f"cannot read graph {args.graph}: {exc}") from None
    except GraphError as exc:
        raise FatalError(f"graph {args.graph}: {exc}") from None
    if args.corpus:
        graph.summary = corpus_stats(_load_corpus(args.corpus))
    entry_points = load_entry_points(args.entry_points, graph)
    app = create_app(graph, entry_points, fingerprint)
    uvicorn.run(app, host=host, port=port)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; in this tool 2 means partial
        # success, so usage problems are remapped to the fatal status.
        return EXIT_OK if exc.code == 0 else EXIT_FATAL
    try:
        return args.func(args)
    except FatalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (CorpusError, GraphError, EntryPointError, OracleConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
