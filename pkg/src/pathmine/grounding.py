"""Text-to-graph grounding: tokenization, concept mentions, term frequency."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .kg import KnowledgeGraph

# word runs plus apostrophe clitics ("dedlock's" -> "dedlock", "'s");
# standalone punctuation never matches and is dropped
_TOKEN_RE = re.compile(r"\w+|'\w+")

DEFAULT_MAX_NGRAM = 4


@dataclass(frozen=True)
class TokenizedText:
    tokens: tuple[str, ...]

    @property
    def token_count(self) -> int:
        return len(self.tokens)


@dataclass
class ConceptMentionSet:
    """Concept id -> occurrence count over one source text."""

    mentions: dict[int, int]
    source_len: int
    _dense: dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    def count(self, cid: int) -> int:
        return self.mentions.get(cid, 0)

    def dense_counts(self, node_count: int) -> np.ndarray:
        """Counts as an int64 array over all concept ids (cached)."""
        arr = self._dense.get(node_count)
        if arr is None:
            arr = np.zeros(node_count, dtype=np.int64)
            for cid, c in self.mentions.items():
                arr[cid] = c
            self._dense[node_count] = arr
        return arr


@dataclass
class GroundedPair:
    """Context mentions plus the grounded query concepts, in query order."""

    context_mentions: ConceptMentionSet
    query_concepts: list[int]


def tokenize(text: str) -> TokenizedText:
    """Lowercased word tokens; punctuation dropped, apostrophe clitics split."""
    return TokenizedText(tuple(_TOKEN_RE.findall(text.lower())))


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """One token per line, UTF-8; blank lines and '#' comments ignored."""
    if path is None:
        text = resources.files("pathmine").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        token = line.strip().lower()
        if token and not token.startswith("#"):
            words.add(token)
    return frozenset(words)


def extract_concepts(
    text: TokenizedText,
    g: KnowledgeGraph,
    max_ngram: int = DEFAULT_MAX_NGRAM,
    stopwords: frozenset[str] = frozenset(),
) -> ConceptMentionSet:
    """Greedy longest-match grounding of the token stream into graph concepts.

    At each position the longest n-gram (joined with underscores) that names
    a concept wins and the scan advances past it; single tokens that are
    stopwords never match alone.  Matches therefore never overlap.
    """
    if max_ngram < 1:
        raise ValueError("max_ngram must be >= 1")
    tokens = text.tokens
    mentions: dict[int, int] = {}
    i = 0
    n_tokens = len(tokens)
    while i < n_tokens:
        matched = False
        for n in range(min(max_ngram, n_tokens - i), 0, -1):
            if n == 1 and tokens[i] in stopwords:
                break
            cid = g.surface_to_id.get("_".join(tokens[i : i + n]))
            if cid is not None:
                mentions[cid] = mentions.get(cid, 0) + 1
                i += n
                matched = True
                break
        if not matched:
            i += 1
    return ConceptMentionSet(mentions=mentions, source_len=n_tokens)


def term_frequency(cid: int, m: ConceptMentionSet) -> float:
    """Mention count over source token count; 0 for unmentioned concepts."""
    if m.source_len <= 0:
        raise ValueError("term frequency undefined for empty source text")
    return m.count(cid) / m.source_len


def ground_pair(
    context: str,
    query: str,
    g: KnowledgeGraph,
    max_ngram: int = DEFAULT_MAX_NGRAM,
    stopwords: frozenset[str] | None = None,
) -> GroundedPair:
    """Ground a context/query pair; query concepts keep first-occurrence order."""
    if stopwords is None:
        stopwords = load_stopwords()
    ctx = extract_concepts(tokenize(context), g, max_ngram, stopwords)
    query_mentions = extract_concepts(tokenize(query), g, max_ngram, stopwords)
    # dict preserves first-mention order; counts are irrelevant for the query
    return GroundedPair(context_mentions=ctx, query_concepts=list(query_mentions.mentions))


def total_mentions(m: ConceptMentionSet) -> int:
    return sum(m.mentions.values())
