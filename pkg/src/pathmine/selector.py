"""Path selection: top-2 descent, prefix expansion, and token realization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kg import KnowledgeGraph
from .scoring import ScoredTree

TOP_CHILDREN = 2
MAX_FULL_PATHS = TOP_CHILDREN**4  # four branching levels below the root


@dataclass(frozen=True)
class SelectedPath:
    """Alternating concept/relation path; relations hold the canonical
    (lowest-id) label per hop, realization may redraw among parallel ones."""

    concepts: tuple[int, ...]
    relations: tuple[int, ...]
    is_truncation: bool = False

    def __post_init__(self):
        if len(self.relations) != len(self.concepts) - 1:
            raise ValueError("relation count must be concept count - 1")


@dataclass
class PathSelection:
    full_paths: list[SelectedPath]
    truncations: list[SelectedPath]
    realized: list[list[str]]


def select_paths(st: ScoredTree) -> list[SelectedPath]:
    """Root-to-leaf paths of the kept subtree.

    Descending from the root, each node keeps at most its two children with
    the highest cumulative scores (ties to the lower concept id), bounding
    the result at 16 full paths per tree.
    """
    assert st.c_score is not None, "cumulative scores required"
    tree = st.tree
    c_score = st.c_score
    paths: list[SelectedPath] = []

    def kept_children(idx: int) -> list[int]:
        lo, hi = int(tree.child_start[idx]), int(tree.child_end[idx])
        children = list(range(lo, hi))
        children.sort(key=lambda i: (-c_score[i], tree.concepts[i]))
        return children[:TOP_CHILDREN]

    def descend(idx: int, concepts: list[int], relations: list[int]) -> None:
        kept = kept_children(idx)
        if not kept:
            if len(concepts) >= 2:
                paths.append(SelectedPath(tuple(concepts), tuple(relations)))
            return
        for child in kept:
            descend(
                child,
                concepts + [int(tree.concepts[child])],
                relations + [int(tree.rels[child])],
            )

    descend(0, [int(tree.concepts[0])], [])
    return paths


def expand_subpaths(paths: list[SelectedPath]) -> list[SelectedPath]:
    """Proper prefixes (>= 2 concepts) of the full paths, deduplicated."""
    seen: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    out: list[SelectedPath] = []
    for path in paths:
        for length in range(2, len(path.concepts)):
            key = (path.concepts[:length], path.relations[: length - 1])
            if key in seen:
                continue
            seen.add(key)
            out.append(SelectedPath(key[0], key[1], is_truncation=True))
    return out


def realize_tokens(
    path: SelectedPath, g: KnowledgeGraph, rng: np.random.Generator
) -> list[str]:
    """Token sequence for a path: concept words interleaved with relation names.

    Multiword concepts split on underscores; when several relations can make
    a hop one is drawn uniformly (the generator is never consulted for
    single-relation hops).
    """
    tokens = list(g.surfaces[path.concepts[0]].split("_"))
    for a, b in zip(path.concepts, path.concepts[1:]):
        rels = g.edges_between(a, b)
        if not rels:
            raise ValueError(
                f"path hop {g.surfaces[a]!r} -> {g.surfaces[b]!r} has no edge"
            )
        rel = rels[0] if len(rels) == 1 else rels[int(rng.integers(len(rels)))]
        tokens.append(g.relation_names[rel])
        tokens.extend(g.surfaces[b].split("_"))
    return tokens


def _token_prefix_length(g: KnowledgeGraph, concepts: tuple[int, ...]) -> int:
    words = sum(len(g.surfaces[c].split("_")) for c in concepts)
    return words + len(concepts) - 1


def realize_selection(
    st: ScoredTree, g: KnowledgeGraph, rng: np.random.Generator
) -> PathSelection:
    """Select, expand, and realize one tree's paths.

    Truncations inherit the relation draw of the first full path they
    prefix, so every realized truncation is literally a prefix of a
    realized full path.
    """
    full = select_paths(st)
    truncations = expand_subpaths(full)
    realized_full = [realize_tokens(p, g, rng) for p in full]

    realized: list[list[str]] = list(realized_full)
    for trunc in truncations:
        for parent, parent_tokens in zip(full, realized_full):
            n = len(trunc.concepts)
            if (
                parent.concepts[:n] == trunc.concepts
                and parent.relations[: n - 1] == trunc.relations
            ):
                realized.append(parent_tokens[: _token_prefix_length(g, trunc.concepts)])
                break
        else:  # pragma: no cover - expand_subpaths only emits prefixes of full
            realized.append(realize_tokens(trunc, g, rng))
    return PathSelection(full_paths=full, truncations=truncations, realized=realized)
