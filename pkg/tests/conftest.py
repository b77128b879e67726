import numpy as np
import pytest

from qcqc.completer import MockEmbedder
from qcqc.gallery import Gallery, GalleryRecord
from qcqc.quantile import assign_levels, default_names, fit_scheme
from qcqc.synth import make_synthetic_gallery


def unit(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64)
    return (v / np.linalg.norm(v)).astype(np.float32)


def level_gallery(gallery: Gallery, levels: int = 3) -> Gallery:
    """Fit default percentile schemes on both axes and assign levels."""
    percentiles = (33.0, 66.0) if levels == 3 else (20.0, 40.0, 60.0, 80.0)
    scored = gallery.scored_records()
    names = default_names(levels)
    scheme_rel = fit_scheme([r.rel_score for r in scored], names, percentiles)
    scheme_aes = fit_scheme([r.aes_score for r in scored], names, percentiles)
    return assign_levels(gallery, scheme_rel, scheme_aes)


@pytest.fixture
def tiny_gallery() -> Gallery:
    """Four records on orthogonal embeddings with hand-picked scores."""
    records = (
        GalleryRecord("img-0", "a cat sitting on a mat", unit([1, 0, 0, 0]),
                      aes_score=3.0, rel_score=0.2),
        GalleryRecord("img-1", "a cat chasing a ball", unit([0, 1, 0, 0]),
                      aes_score=5.0, rel_score=0.5),
        GalleryRecord("img-2", "a dog running on grass", unit([0, 0, 1, 0]),
                      aes_score=7.0, rel_score=0.8),
        GalleryRecord("img-3", "an apple on a table", unit([0, 0, 0, 1]),
                      aes_score=4.0, rel_score=-0.1),
    )
    return Gallery(records=records, dim=4)


@pytest.fixture(scope="session")
def small_synth() -> Gallery:
    """Leveled 300-record synthetic gallery shared by service-level tests."""
    return level_gallery(make_synthetic_gallery(n_records=300, dim=64, seed=3))


@pytest.fixture(scope="session")
def small_embedder() -> MockEmbedder:
    return MockEmbedder(64, seed=0)
