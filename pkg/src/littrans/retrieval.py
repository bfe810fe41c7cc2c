"""Style-exemplar retrieval over translated sentence pairs.

Candidates are scored by a blend of two lexical signals: cosine similarity
between tf-idf term vectors and Jaccard overlap between keyword sets,
combined as ``alpha * cosine + (1 - alpha) * jaccard``. Pools are small
(one document prefix or one exemplar file), so search is exact.

ExemplarIndex is immutable once built and safe for concurrent queries.
Incremental decoding grows a per-document DocumentOverlay instead of
mutating a shared index.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .tokenization import terms

DEFAULT_ALPHA = 0.5
DEFAULT_KEYWORD_COUNT = 5

ExcludeFn = Callable[[str, int], bool]


@dataclass(frozen=True)
class Exemplar:
    exemplar_id: str
    doc_id: str
    seg_index: int
    source: str
    target: str
    keywords: frozenset[str]
    term_weights: dict[str, float]


@dataclass(frozen=True)
class SimilarityScore:
    combined: float
    lexical: float
    keyword: float


class ExemplarIndex:
    """Searchable pool of exemplars with corpus-level term statistics."""

    def __init__(
        self,
        exemplars: tuple[Exemplar, ...],
        doc_freq: dict[str, int],
        keyword_count: int = DEFAULT_KEYWORD_COUNT,
        total_docs: int | None = None,
    ):
        self.exemplars = exemplars
        self.doc_freq = doc_freq
        self.total_docs = len(exemplars) if total_docs is None else total_docs
        self.keyword_count = keyword_count

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term, 0)
        return math.log((1 + self.total_docs) / (1 + df)) + 1.0

    def weights(self, text: str) -> dict[str, float]:
        """tf-idf vector of arbitrary text under this index's statistics."""
        counts = Counter(terms(text))
        return {t: c * self.idf(t) for t, c in counts.items()}


def extract_keywords(sentence: str, index: ExemplarIndex, m: int) -> list[str]:
    """Up to m distinct terms with highest tf-idf weight, ties broken by
    first occurrence in the sentence."""
    if m < 1:
        raise ValueError("m must be >= 1")
    toks = terms(sentence)
    if not toks:
        return []
    first_pos: dict[str, int] = {}
    for i, t in enumerate(toks):
        first_pos.setdefault(t, i)
    weights = index.weights(sentence)
    ranked = sorted(weights, key=lambda t: (-weights[t], first_pos[t]))
    return ranked[:m]


def build_index(
    pool: Iterable[tuple[str, str, str, int]],
    keyword_count: int = DEFAULT_KEYWORD_COUNT,
) -> ExemplarIndex:
    """Build an index from (source, target, doc_id, seg_index) tuples.

    Term weights are tf-idf with idf = ln((1 + N) / (1 + df)) + 1; keywords
    are extracted against the finished frequency table.
    """
    entries = list(pool)
    doc_freq: Counter[str] = Counter()
    term_lists: list[list[str]] = []
    for source, _target, _doc_id, _seg in entries:
        if not source.strip():
            raise ValueError("exemplar sources must be non-empty")
        toks = terms(source)
        term_lists.append(toks)
        doc_freq.update(set(toks))

    # stats must be complete before keywords/weights are materialized
    index = ExemplarIndex((), dict(doc_freq), keyword_count, total_docs=len(entries))

    exemplars = []
    for i, (source, target, doc_id, seg_index) in enumerate(entries):
        exemplars.append(
            Exemplar(
                exemplar_id=f"{doc_id}:{seg_index}",
                doc_id=doc_id,
                seg_index=seg_index,
                source=source,
                target=target,
                keywords=frozenset(extract_keywords(source, index, keyword_count)),
                term_weights=index.weights(source),
            )
        )
    index.exemplars = tuple(exemplars)
    return index


def _cosine(u: dict[str, float], v: dict[str, float]) -> float:
    if not u or not v:
        return 0.0
    norm_u = math.sqrt(sum(w * w for w in u.values()))
    norm_v = math.sqrt(sum(w * w for w in v.values()))
    if norm_u == 0.0 or norm_v == 0.0:
        return 0.0
    if len(u) > len(v):
        u, v = v, u
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    return dot / (norm_u * norm_v)


def _jaccard(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    if not a and not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union


def similarity(
    query: str,
    ex: Exemplar,
    index: ExemplarIndex,
    alpha: float = DEFAULT_ALPHA,
) -> SimilarityScore:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    lexical = _cosine(index.weights(query), ex.term_weights)
    query_kw = frozenset(extract_keywords(query, index, index.keyword_count)) if query.strip() else frozenset()
    keyword = _jaccard(query_kw, ex.keywords)
    return SimilarityScore(
        combined=alpha * lexical + (1.0 - alpha) * keyword,
        lexical=lexical,
        keyword=keyword,
    )


def top_k(
    query: str,
    index: ExemplarIndex,
    k: int,
    exclude: ExcludeFn | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> list[Exemplar]:
    """The k best-scoring non-excluded exemplars, descending by combined
    score, ties broken by (doc_id, seg_index). Zero-score candidates are
    never returned, so fewer than k may come back."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return []
    scored = []
    for ex in index.exemplars:
        if exclude is not None and exclude(ex.doc_id, ex.seg_index):
            continue
        score = similarity(query, ex, index, alpha).combined
        if score > 0.0:
            scored.append((score, ex))
    scored.sort(key=lambda item: (-item[0], item[1].doc_id, item[1].seg_index))
    return [ex for _score, ex in scored[:k]]


@dataclass
class DocumentOverlay:
    """Growing per-document exemplar pool for incremental decoding.

    Appends accumulate the already-translated prefix; the index is rebuilt
    lazily on demand (pools are a single document, so rebuilds are cheap)
    and the shared corpus-level index is never touched.
    """

    keyword_count: int = DEFAULT_KEYWORD_COUNT
    _pool: list[tuple[str, str, str, int]] = field(default_factory=list)
    _index: ExemplarIndex | None = None

    def append(self, source: str, target: str, doc_id: str, seg_index: int) -> None:
        self._pool.append((source, target, doc_id, seg_index))
        self._index = None

    @property
    def index(self) -> ExemplarIndex:
        if self._index is None:
            self._index = build_index(self._pool, self.keyword_count)
        return self._index


def pool_from_pairs(
    pairs: Iterable,
) -> list[tuple[str, str, str, int]]:
    """Adapt corpus SentencePairs (with targets) to build_index input."""
    pool = []
    for p in pairs:
        if p.target is None:
            raise ValueError(f"pair {p.doc_id}#{p.seg_index} has no target")
        pool.append((p.source, p.target, p.doc_id, p.seg_index))
    return pool
