"""Quality-controllable text-to-image retrieval over precomputed embeddings."""

from .completer import (
    CompletionCandidate,
    CorpusCompleter,
    EndpointConfig,
    ExternalCompleter,
    IdentityCompleter,
    MockEmbedder,
    QualityCondition,
    RandomCompleter,
    build_instruction,
    mock_embed,
)
from .evalharness import (
    EvalConfig,
    EvalReport,
    default_queries,
    grid_conditions,
    monotonicity_check,
    rerank_baseline,
    run_grid,
)
from .gallery import Gallery, GalleryRecord, compute_relevance, ingest, load, save
from .quantile import LevelScheme, assign_levels, fit_scheme, level_of, perc
from .search import RetrievalResult, ScoreMatrix, retrieve, score_matrix, top_k
from .synth import make_synthetic_gallery, synthetic_prefixes

__version__ = "0.1.0"

__all__ = [
    "CompletionCandidate",
    "CorpusCompleter",
    "EndpointConfig",
    "EvalConfig",
    "EvalReport",
    "ExternalCompleter",
    "Gallery",
    "GalleryRecord",
    "IdentityCompleter",
    "LevelScheme",
    "MockEmbedder",
    "QualityCondition",
    "RandomCompleter",
    "RetrievalResult",
    "ScoreMatrix",
    "assign_levels",
    "build_instruction",
    "compute_relevance",
    "default_queries",
    "fit_scheme",
    "grid_conditions",
    "ingest",
    "level_of",
    "load",
    "make_synthetic_gallery",
    "mock_embed",
    "monotonicity_check",
    "perc",
    "rerank_baseline",
    "retrieve",
    "run_grid",
    "save",
    "score_matrix",
    "synthetic_prefixes",
    "top_k",
]
