"""Cosine scoring and exact top-k retrieval over a gallery.

Scores are plain dot products of unit vectors, accumulated in float64.
Top-k selection is exact: per query the k largest scores in non-increasing
order, ties broken by ascending gallery index, matching a full stable sort.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DimensionMismatch, EmbedderFailure
from .gallery import Gallery


@dataclasses.dataclass(frozen=True)
class ScoreMatrix:
    """Dense query-by-gallery similarity matrix with id bookkeeping."""

    values: np.ndarray
    query_ids: tuple[str, ...]
    gallery_ids: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(self.query_ids), len(self.gallery_ids)):
            raise DimensionMismatch(
                f"score matrix shape {self.values.shape} does not match "
                f"{len(self.query_ids)} queries x {len(self.gallery_ids)} gallery ids"
            )


@dataclasses.dataclass(frozen=True)
class Hit:
    gallery_id: str
    score: float
    index: int


@dataclasses.dataclass(frozen=True)
class QueryResult:
    text: str
    hits: tuple[Hit, ...]


@dataclasses.dataclass(frozen=True)
class RetrievalResult:
    queries: tuple[QueryResult, ...]

    def __len__(self) -> int:
        return len(self.queries)


def score_matrix(query_embs, gallery: Gallery, query_ids=None) -> ScoreMatrix:
    """Exact dense similarity scores for a stack of query embeddings."""
    q = np.asarray(query_embs, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != gallery.dim:
        raise DimensionMismatch(
            f"query embeddings have shape {q.shape}, gallery dim is {gallery.dim}"
        )
    values = q @ gallery.embedding_matrix_f64.T
    values.setflags(write=False)
    if query_ids is None:
        query_ids = tuple(str(i) for i in range(q.shape[0]))
    return ScoreMatrix(
        values=values,
        query_ids=tuple(query_ids),
        gallery_ids=tuple(r.id for r in gallery.records),
    )


def _top_indices(row: np.ndarray, eta: int) -> np.ndarray:
    """Indices of the eta largest entries, ordered by (-score, index)."""
    n = row.size
    if eta >= n:
        return np.argsort(-row, kind="stable")
    # Exact bounded selection: elements strictly above the eta-th largest all
    # qualify; remaining slots are filled with boundary ties by ascending index.
    bound = np.partition(row, n - eta)[n - eta]
    above = np.flatnonzero(row > bound)
    ties = np.flatnonzero(row == bound)[: eta - above.size]
    chosen = np.sort(np.concatenate([above, ties]))
    return chosen[np.argsort(-row[chosen], kind="stable")]


def top_k(scores: ScoreMatrix, eta: int, query_texts=None) -> RetrievalResult:
    """Per query, the eta best gallery entries (all of them when eta > n)."""
    if eta < 1:
        raise ValueError(f"eta must be >= 1, got {eta}")
    if query_texts is None:
        query_texts = scores.query_ids
    results = []
    for i, row in enumerate(scores.values):
        order = _top_indices(np.asarray(row, dtype=np.float64), eta)
        hits = tuple(
            Hit(gallery_id=scores.gallery_ids[j], score=float(row[j]), index=int(j))
            for j in order
        )
        results.append(QueryResult(text=str(query_texts[i]), hits=hits))
    return RetrievalResult(queries=tuple(results))


QUERY_BLOCK = 256  # queries scored per block; bounds memory at O(block * n)


def retrieve(query_texts, embedder, gallery: Gallery, eta: int = 1) -> RetrievalResult:
    """Embed, score, and rank: equivalent to top_k over score_matrix.

    ``embedder`` maps one text to a unit vector of the gallery dimension.
    Any embedder exception surfaces as :class:`EmbedderFailure` carrying the
    failing query text.  Queries are scored in fixed-size blocks.
    """
    texts = list(query_texts)
    vectors = []
    for text in texts:
        try:
            vec = np.asarray(embedder(text), dtype=np.float64)
        except Exception as exc:
            raise EmbedderFailure(text, str(exc)) from exc
        if vec.shape != (gallery.dim,):
            raise DimensionMismatch(
                f"embedder returned shape {vec.shape} for {text!r}, expected ({gallery.dim},)"
            )
        vectors.append(vec)
    if not vectors:
        return RetrievalResult(queries=())
    results = []
    for start in range(0, len(vectors), QUERY_BLOCK):
        block = slice(start, start + QUERY_BLOCK)
        scores = score_matrix(np.stack(vectors[block]), gallery)
        results.extend(top_k(scores, eta, query_texts=texts[block]).queries)
    return RetrievalResult(queries=tuple(results))
