"""Seeded synthetic galleries with a controllable quality structure.

Records are grouped by a head noun ("a dog ...", "an apple ...").  Captions
are article + noun + three filler words, and the vocabulary is curated
against the mock embedder's hash table so that no noun or filler token
lands in another noun's (bin, sign) slot, nor in an article or length
slot.  That guarantees every caption's cosine to a foreign noun's bare
query stays strictly below the noun's own cluster, so relevance-ranked
candidate pools never mix nouns.

Within each noun the relevance score decreases strictly along the exact
order in which retrieval for the bare noun query ranks the records
(cosine descending, ties by ascending gallery index), quantized into L
well-separated bands with a strictly rank-monotone offset inside each
band; the aesthetic score is an independent draw from L well-separated
bands balanced within every relevance block.  That gives a gallery where:

* quantile-assigned levels recover the relevance bands up to a handful of
  boundary records, so conditioned completion followed by retrieval
  surfaces records from the requested level (quality steering is
  genuinely testable, with structural gaps between level averages), and
* any deeper pick in a relevance-ranked candidate pool carries strictly
  lower relevance, so post-retrieval reranking by aesthetics trades
  relevance for aesthetics as the pool grows.

Scores keep their native units: relevance in [-1, 1], aesthetics in the
2-and-change to 7-and-change range an external predictor would emit.
"""
from __future__ import annotations

import numpy as np

from .completer import MockEmbedder, _token_slot
from .gallery import Gallery, GalleryRecord

NOUN_CANDIDATES = (
    "dog", "cat", "train", "boat", "chair", "clock", "horse", "apple",
    "bird", "truck", "bench", "kite", "bowl", "vase", "sheep", "bear",
    "umbrella", "orange", "bottle", "couch", "zebra", "laptop", "spoon",
    "pizza", "sink", "book", "giraffe", "toilet", "oven", "backpack",
    "lamp", "guitar", "mirror", "wallet", "helmet", "ladder", "bridge",
    "statue", "camera", "barrel", "basket", "candle", "carpet", "curtain",
    "engine", "hammer", "island", "jacket", "kettle", "mango", "napkin",
    "anchor", "pillow", "rocket", "teapot",
)

FILLER_CANDIDATES = (
    "resting", "standing", "waiting", "leaning", "drifting", "posed",
    "near", "beside", "under", "behind", "past", "against", "along",
    "some", "old", "quiet", "narrow", "wide", "painted", "wooden",
    "fence", "window", "river", "market", "hill", "garden", "corner",
    "wall", "field", "harbor", "shade", "gravel", "meadow", "alley",
    "dusk", "noon", "fog", "frost", "reeds", "stones", "shore", "pier",
    "slope", "ridge", "porch", "lane", "yard", "brook", "cliff", "dune",
    "mist", "glow", "dawn", "rain", "snow", "wind", "moss", "bark",
    "clay", "sand", "path", "gate", "roof", "step", "arch", "beam",
    "pond", "creek", "trail", "hedge", "stump", "log", "rock", "leaf",
    "branch", "root", "vine", "fern", "grass", "weed", "twig", "bud",
    "glade", "knoll", "bluff", "cove", "marsh", "heath", "moor", "vale",
)

AES_BASES = {
    3: (3.0, 4.75, 6.5),
    5: (2.5, 3.5, 4.5, 5.5, 6.5),
}
REL_BASES = {
    3: (-0.8, -0.05, 0.7),
    5: (-0.85, -0.47, -0.09, 0.29, 0.67),
}
REL_BAND_WIDTH = 0.1
AES_NOISE = 0.08

DEFAULT_NOUN_COUNT = 30
DEFAULT_FILLER_COUNT = 28
DEFAULT_DIM = 64


def article_for(noun: str) -> str:
    return "an" if noun[0] in "aeiou" else "a"


def synthetic_prefixes(nouns) -> tuple[str, ...]:
    return tuple(f"{article_for(n)} {n}" for n in nouns)


def gallery_prefixes(gallery: Gallery) -> tuple[str, ...]:
    """The bare noun queries of a synthetic gallery, in first-seen order."""
    seen = dict.fromkeys(
        " ".join(rec.caption.split()[:2]) for rec in gallery.records
    )
    return tuple(seen)


def curate_vocab(dim: int, embed_seed: int,
                 noun_count: int = DEFAULT_NOUN_COUNT,
                 filler_count: int = DEFAULT_FILLER_COUNT,
                 nouns=None) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Pick nouns and fillers whose hash slots cannot leak across queries.

    Nouns get pairwise-distinct (bin, sign) slots, and fillers may not touch
    a noun, article, or token-count *bin* at all (an opposite-sign hit would
    cancel a caption's own noun mass and knock it out of its cluster): a
    caption then shares mass with a bare "article noun" query only through
    the article, the length component, and its own noun.  Explicit
    ``nouns`` are validated rather than chosen.
    """
    taken = {
        _token_slot("a", dim, embed_seed),
        _token_slot("an", dim, embed_seed),
        _token_slot("\x00token-count", dim, embed_seed),
    }
    if nouns is not None:
        nouns = tuple(nouns)
        for noun in nouns:
            slot = _token_slot(noun, dim, embed_seed)
            if slot in taken:
                raise ValueError(
                    f"noun {noun!r} shares a hash slot with another query token "
                    f"at dim {dim}, embed seed {embed_seed}"
                )
            taken.add(slot)
    else:
        chosen = []
        for noun in NOUN_CANDIDATES:
            slot = _token_slot(noun, dim, embed_seed)
            if slot not in taken:
                taken.add(slot)
                chosen.append(noun)
            if len(chosen) == noun_count:
                break
        if len(chosen) < noun_count:
            raise ValueError(
                f"dim {dim} is too small to host {noun_count} separated nouns; "
                f"found only {len(chosen)}"
            )
        nouns = tuple(chosen)
    reserved_bins = {bin_ for bin_, _ in taken}
    fillers = []
    for word in FILLER_CANDIDATES:
        if _token_slot(word, dim, embed_seed)[0] not in reserved_bins:
            fillers.append(word)
        if len(fillers) == filler_count:
            break
    if len(fillers) < filler_count:
        raise ValueError(
            f"dim {dim} leaves only {len(fillers)} usable filler words, "
            f"need {filler_count}"
        )
    return nouns, tuple(fillers)


def make_synthetic_gallery(
    n_records: int = 3000,
    levels: int = 3,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    embed_seed: int = 0,
    nouns=None,
) -> Gallery:
    """Generate a scored (but not yet leveled) gallery of ``n_records``."""
    if levels not in AES_BASES:
        raise ValueError(f"levels must be one of {sorted(AES_BASES)}, got {levels}")
    nouns, fillers = curate_vocab(dim, embed_seed, nouns=nouns)
    per_noun = n_records // len(nouns)
    sizes = [per_noun + (1 if i < n_records % len(nouns) else 0) for i in range(len(nouns))]
    if min(sizes) < levels * levels:
        raise ValueError(
            f"{n_records} records over {len(nouns)} nouns leaves fewer than "
            f"{levels * levels} per noun; joint condition cells would be empty"
        )
    n_combos = len(fillers) * (len(fillers) - 1) * (len(fillers) - 2) // 6
    if max(sizes) > n_combos:
        raise ValueError(f"at most {n_combos} distinct captions per noun available")

    rng = np.random.default_rng(seed)
    embedder = MockEmbedder(dim, embed_seed)
    aes_bases = AES_BASES[levels]
    rel_bases = REL_BASES[levels]

    records = []
    idx = 0
    for noun, size in zip(nouns, sizes):
        prefix = f"{article_for(noun)} {noun}"
        prefix_vec = embedder(prefix).astype(np.float64)
        combos = set()
        captions = []
        while len(captions) < size:
            triple = tuple(sorted(rng.choice(len(fillers), size=3, replace=False)))
            if triple in combos:
                continue
            combos.add(triple)
            shown = list(triple)
            rng.shuffle(shown)
            captions.append(f"{prefix} " + " ".join(fillers[j] for j in shown))
        vectors = [embedder(c).astype(np.float64) for c in captions]
        cosines = np.array([float(prefix_vec @ v) for v in vectors])
        # Ascending (cosine, -index): the exact reverse of retrieval order,
        # whose tie rule is descending cosine then ascending index.
        order = np.lexsort((-np.arange(size), cosines))

        # Relevance: banded but still strictly increasing along the rank
        # order, so any deeper pool pick has strictly lower relevance.
        bounds = [block * size // levels for block in range(levels + 1)]
        rel_scores = np.empty(size)
        aes_scores = np.empty(size)
        for block in range(levels):
            members = order[bounds[block]:bounds[block + 1]]
            width = len(members)
            for pos, i in enumerate(members):
                rel_scores[i] = rel_bases[block] + REL_BAND_WIDTH * (pos + 0.5) / width
            # Aesthetic band balanced within every relevance block, shuffled
            # so the two axes stay independent.
            slots = np.array([j % levels for j in range(width)])
            rng.shuffle(slots)
            for i, slot in zip(members, slots):
                aes_scores[i] = aes_bases[slot] + rng.normal(0.0, AES_NOISE)

        for i in range(size):
            records.append(
                GalleryRecord(
                    id=f"synth-{idx:05d}",
                    caption=captions[i],
                    embedding=embedder(captions[i]),
                    aes_score=float(np.clip(aes_scores[i], 1.0, 9.0)),
                    rel_score=float(rel_scores[i]),
                )
            )
            idx += 1

    return Gallery(records=tuple(records), dim=dim)
