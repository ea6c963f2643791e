"""Minimal fine-grained dependency computation for itemized formal libraries.

The package refines an over-approximated candidate set for every item of
a corpus down to a minimal dependency set, checked against a pluggable
verification oracle, then assembles the results into a dependency DAG
that answers path, waypoint, and avoidance queries locally or over HTTP.
"""

from .corpus import (
    CandidateSet,
    Corpus,
    CorpusError,
    CorpusParseError,
    CorpusStats,
    CorpusValidationError,
    Item,
    ItemId,
    KINDS,
    UnknownItemError,
    corpus_stats,
    default_candidates,
    load_corpus,
    parse_corpus,
    write_corpus,
)
from .oracle import (
    BuiltinOracle,
    CachedOracle,
    ExternalCommandOracle,
    OracleConfigError,
    OracleDescriptor,
    VerificationCache,
    VerificationOracle,
    VerificationOutcome,
    VERIFIABLE,
    NOT_VERIFIABLE,
    verify_builtin,
    verify_external,
)
from .minimizer import (
    CorpusMinimization,
    MinimalDepSet,
    MinimizationError,
    ORDER_ASCENDING,
    ORDER_DESCENDING,
    Strategy,
    certify_minimal,
    load_results,
    minimize_corpus,
    minimize_ddmin,
    minimize_linear,
)
from .depgraph import (
    BlockedEndpointError,
    DependencyGraph,
    GraphBuildError,
    GraphError,
    UnknownNodeError,
    build_graph,
    from_edge_tsv,
    from_edges,
    from_structured,
    load_graph,
)

__version__ = "0.1.0"

__all__ = [
    "BlockedEndpointError",
    "BuiltinOracle",
    "CachedOracle",
    "CandidateSet",
    "Corpus",
    "CorpusError",
    "CorpusMinimization",
    "CorpusParseError",
    "CorpusStats",
    "CorpusValidationError",
    "DependencyGraph",
    "ExternalCommandOracle",
    "GraphBuildError",
    "GraphError",
    "Item",
    "ItemId",
    "KINDS",
    "MinimalDepSet",
    "MinimizationError",
    "NOT_VERIFIABLE",
    "ORDER_ASCENDING",
    "ORDER_DESCENDING",
    "OracleConfigError",
    "OracleDescriptor",
    "Strategy",
    "UnknownItemError",
    "UnknownNodeError",
    "VERIFIABLE",
    "VerificationCache",
    "VerificationOracle",
    "VerificationOutcome",
    "build_graph",
    "certify_minimal",
    "corpus_stats",
    "default_candidates",
    "from_edge_tsv",
    "from_edges",
    "from_structured",
    "load_corpus",
    "load_graph",
    "load_results",
    "minimize_corpus",
    "minimize_ddmin",
    "minimize_linear",
    "parse_corpus",
    "verify_builtin",
    "verify_external",
    "write_corpus",
]
