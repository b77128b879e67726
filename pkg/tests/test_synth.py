import collections

import numpy as np
import pytest

from qcqc.synth import (
    article_for,
    curate_vocab,
    gallery_prefixes,
    make_synthetic_gallery,
    synthetic_prefixes,
)

from conftest import level_gallery


def test_articles():
    assert article_for("apple") == "an"
    assert article_for("dog") == "a"
    assert synthetic_prefixes(("dog", "apple")) == ("a dog", "an apple")


def test_curated_vocab_is_collision_free():
    from qcqc.completer import _token_slot

    nouns, fillers = curate_vocab(64, embed_seed=0)
    assert len(nouns) == 30 and len(fillers) == 28
    slots = [_token_slot(t, 64, 0) for t in nouns]
    slots += [_token_slot(t, 64, 0) for t in ("a", "an", "\x00token-count")]
    assert len(set(slots)) == len(slots)
    for f in fillers:
        assert _token_slot(f, 64, 0) not in slots


def test_dim_too_small_rejected():
    with pytest.raises(ValueError):
        curate_vocab(16, embed_seed=0)


def test_sizes_and_uniqueness():
    g = make_synthetic_gallery(n_records=301, seed=0)
    assert len(g) == 301
    assert len({r.caption for r in g.records}) == 301
    assert len({r.id for r in g.records}) == 301


def test_gallery_prefixes_cover_nouns():
    g = make_synthetic_gallery(n_records=300, seed=0)
    prefixes = gallery_prefixes(g)
    assert len(prefixes) == 30
    assert all(p.split()[0] in ("a", "an") for p in prefixes)


def test_score_ranges():
    g = make_synthetic_gallery(n_records=300, seed=1)
    for rec in g.records:
        assert -1.0 <= rec.rel_score <= 1.0
        assert 1.0 <= rec.aes_score <= 9.0


def test_embeddings_unit_norm():
    g = make_synthetic_gallery(n_records=300, seed=2)
    norms = np.linalg.norm(g.embedding_matrix.astype(np.float64), axis=1)
    assert np.all(np.abs(norms - 1.0) <= 1e-6)


def test_deterministic_given_seeds():
    a = make_synthetic_gallery(n_records=300, seed=4, embed_seed=1)
    b = make_synthetic_gallery(n_records=300, seed=4, embed_seed=1)
    assert a == b


def test_seed_changes_gallery():
    a = make_synthetic_gallery(n_records=300, seed=4)
    b = make_synthetic_gallery(n_records=300, seed=5)
    assert a != b


def test_joint_condition_cells_populated_per_noun():
    g = level_gallery(make_synthetic_gallery(n_records=3000, seed=6))
    cells = collections.Counter()
    nouns = set()
    for rec in g.records:
        noun = rec.caption.split()[1]
        nouns.add(noun)
        cells[(noun, rec.rel_level, rec.aes_level)] += 1
    for noun in nouns:
        for rl in range(3):
            for al in range(3):
                assert cells[(noun, rl, al)] >= 1, (noun, rl, al)


def test_levels_recover_bands():
    g = level_gallery(make_synthetic_gallery(n_records=3000, seed=7))
    counts = collections.Counter(r.rel_level for r in g.records)
    assert all(abs(counts[lvl] - 1000) <= 40 for lvl in range(3))


def test_five_level_variant():
    g = level_gallery(make_synthetic_gallery(n_records=3000, seed=8, levels=5), levels=5)
    counts = collections.Counter(r.rel_level for r in g.records)
    assert set(counts) == {0, 1, 2, 3, 4}


def test_too_few_records_per_noun_rejected():
    with pytest.raises(ValueError):
        make_synthetic_gallery(n_records=100, levels=5)


def test_relevance_decreases_along_retrieval_order():
    # Relevance must strictly shrink with pool depth for the noun's own query.
    from qcqc.completer import MockEmbedder
    from qcqc.search import retrieve

    g = make_synthetic_gallery(n_records=300, seed=9, embed_seed=0)
    embedder = MockEmbedder(g.dim, seed=0)
    for prefix in gallery_prefixes(g)[:8]:
        noun = prefix.split()[1]
        result = retrieve([prefix], embedder, g, eta=10)
        hits = result.queries[0].hits
        assert all(g.records[h.index].caption.split()[1] == noun for h in hits)
        rels = [g.records[h.index].rel_score for h in hits]
        assert all(a > b for a, b in zip(rels, rels[1:]))
