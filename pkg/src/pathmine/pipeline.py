"""Batch extraction pipeline: requests in, realized path sequences out.

Requests are processed by a bounded thread pool over the shared immutable
graph; results are emitted in input order no matter how many workers run.
Every per-path random draw comes from a generator seeded by
(config seed, request index, tree index), so output bytes are identical
for any worker count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .grounding import (
    extract_concepts,
    load_stopwords,
    tokenize,
)
from .grounding import GroundedPair
from .kg import KnowledgeGraph, WalkStats
from .scoring import ScoredTree, score_tree
from .selector import PathSelection, realize_selection
from .tree import BuildConfig, PathTree, build_tree


@dataclass(frozen=True)
class Config:
    lang: str = "en"
    max_ngram: int = 4
    max_children_per_node: int = 100
    max_total_paths: int | None = None
    seed: int = 0
    stopword_path: str | None = None

    def __post_init__(self):
        if self.max_ngram < 1:
            raise ValueError("max_ngram must be >= 1")
        if self.max_children_per_node < 2:
            raise ValueError("max_children_per_node must be >= 2")
        if self.max_total_paths is not None and self.max_total_paths < 0:
            raise ValueError("max_total_paths must be >= 0")

    @classmethod
    def from_file(cls, path: str, **overrides) -> "Config":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def build_config(self) -> BuildConfig:
        return BuildConfig(
            max_children_per_node=self.max_children_per_node,
            max_ngram=self.max_ngram,
            rng_seed=self.seed,
        )


@dataclass(frozen=True)
class ExtractionRequest:
    context: str
    query: str
    id: str | None = None

    def __post_init__(self):
        if not self.context.strip() or not self.query.strip():
            raise ValueError("context and query must be non-empty")


@dataclass
class TreeAnalysis:
    """One query concept's tree with scores and selection; explain/debug view."""

    root_concept: int
    tree: PathTree
    scored: ScoredTree
    selection: PathSelection


@dataclass
class ExtractionResult:
    id: str | None
    paths: list[list[str]]
    error: str | None = None
    stats: dict = field(default_factory=dict)
    elapsed: float = 0.0  # kept out of serialized output; wall time varies

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "paths": self.paths, "stats": self.stats, "error": self.error},
            ensure_ascii=False,
            separators=(",", ":"),
        )


class Extractor:
    """Reusable extraction engine bound to one graph and configuration."""

    def __init__(self, graph: KnowledgeGraph, stats: WalkStats, config: Config | None = None):
        self.graph = graph
        self.stats = stats
        self.config = config or Config()
        self.stopwords = load_stopwords(self.config.stopword_path)
        self._build_cfg = self.config.build_config()

    def ground(self, context: str, query: str) -> GroundedPair:
        ctx = extract_concepts(
            tokenize(context), self.graph, self.config.max_ngram, self.stopwords
        )
        query_mentions = extract_concepts(
            tokenize(query), self.graph, self.config.max_ngram, self.stopwords
        )
        return GroundedPair(context_mentions=ctx, query_concepts=list(query_mentions.mentions))

    def analyze(self, context: str, query: str, request_index: int = 0) -> list[TreeAnalysis]:
        """Build, score, and select paths for every grounded query concept."""
        pair = self.ground(context, query)
        analyses: list[TreeAnalysis] = []
        if pair.context_mentions.source_len == 0:
            return analyses
        for tree_index, c1 in enumerate(pair.query_concepts):
            tree = build_tree(c1, pair, self.graph, self._build_cfg)
            scored = score_tree(tree, pair, self.graph, self.stats)
            rng = np.random.default_rng([self.config.seed, request_index, tree_index])
            selection = realize_selection(scored, self.graph, rng)
            analyses.append(
                TreeAnalysis(root_concept=c1, tree=tree, scored=scored, selection=selection)
            )
        return analyses

    def extract(self, request: ExtractionRequest, request_index: int = 0) -> ExtractionResult:
        started = time.perf_counter()
        try:
            analyses = self.analyze(request.context, request.query, request_index)
        except Exception as exc:  # per-request failures never abort a batch
            return ExtractionResult(
                id=request.id,
                paths=[],
                error=f"{type(exc).__name__}: {exc}",
                elapsed=time.perf_counter() - started,
            )
        paths: list[list[str]] = []
        for analysis in analyses:
            paths.extend(analysis.selection.realized)
        if self.config.max_total_paths is not None:
            paths = paths[: self.config.max_total_paths]
        stats = {
            "trees": len(analyses),
            "tree_nodes": sum(a.tree.node_count for a in analyses),
            "full_paths": sum(len(a.selection.full_paths) for a in analyses),
            "truncations": sum(len(a.selection.truncations) for a in analyses),
        }
        return ExtractionResult(
            id=request.id,
            paths=paths,
            stats=stats,
            elapsed=time.perf_counter() - started,
        )


def parse_request_line(line: str) -> ExtractionRequest:
    data = json.loads(line)
    if not isinstance(data, dict):
        raise ValueError("request line must be a JSON object")
    if "context" not in data or "query" not in data:
        raise ValueError("request needs 'context' and 'query' fields")
    return ExtractionRequest(
        context=str(data["context"]), query=str(data["query"]), id=data.get("id")
    )


def run_batch(
    extractor: Extractor, lines: Iterable[str], workers: int = 1
) -> Iterator[ExtractionResult]:
    """Process JSON-lines requests, preserving input order across workers."""

    def process(item: tuple[int, str]) -> ExtractionResult:
        index, line = item
        try:
            request = parse_request_line(line)
        except (ValueError, json.JSONDecodeError) as exc:
            return ExtractionResult(id=None, paths=[], error=f"bad request: {exc}")
        return extractor.extract(request, request_index=index)

    items = list(enumerate(lines))
    if workers <= 1:
        for item in items:
            yield process(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(process, items)
