"""pathmine: grounded multi-hop concept path mining over knowledge graphs."""

from .grounding import (
    ConceptMentionSet,
    GroundedPair,
    TokenizedText,
    extract_concepts,
    ground_pair,
    load_stopwords,
    term_frequency,
    tokenize,
)
from .kg import (
    Concept,
    Edge,
    IndexChecksumError,
    IndexFormatError,
    IndexTruncatedError,
    IndexVersionError,
    IngestError,
    IngestReport,
    KnowledgeGraph,
    PathmineError,
    Relation,
    WalkStats,
    graph_from_triples,
    ingest_csv,
    load_index,
    save_index,
)
from .pipeline import Config, ExtractionRequest, ExtractionResult, Extractor, run_batch
from .scoring import (
    SCORE_SENTINEL,
    ScoredTree,
    cumulative_score,
    npmi,
    raw_score,
    score_tree,
    sibling_softmax,
)
from .selector import (
    MAX_FULL_PATHS,
    PathSelection,
    SelectedPath,
    expand_subpaths,
    realize_selection,
    realize_tokens,
    select_paths,
)
from .tree import BuildConfig, PathTree, TreeNode, build_tree, enumerate_levels

__version__ = "0.1.0"

__all__ = [
    "BuildConfig",
    "Concept",
    "ConceptMentionSet",
    "Config",
    "Edge",
    "ExtractionRequest",
    "ExtractionResult",
    "Extractor",
    "GroundedPair",
    "IndexChecksumError",
    "IndexFormatError",
    "IndexTruncatedError",
    "IndexVersionError",
    "IngestError",
    "IngestReport",
    "KnowledgeGraph",
    "MAX_FULL_PATHS",
    "PathSelection",
    "PathTree",
    "PathmineError",
    "Relation",
    "SCORE_SENTINEL",
    "ScoredTree",
    "SelectedPath",
    "TokenizedText",
    "TreeNode",
    "WalkStats",
    "build_tree",
    "cumulative_score",
    "enumerate_levels",
    "expand_subpaths",
    "extract_concepts",
    "graph_from_triples",
    "ground_pair",
    "ingest_csv",
    "load_index",
    "load_stopwords",
    "npmi",
    "raw_score",
    "realize_selection",
    "realize_tokens",
    "run_batch",
    "save_index",
    "score_tree",
    "select_paths",
    "sibling_softmax",
    "term_frequency",
    "tokenize",
]
