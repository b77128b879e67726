"""Quality-conditioned query completion.

Four interchangeable completers share one interface
(``complete(prefix, condition, k) -> list[CompletionCandidate]``):

* corpus    -- conditioned caption lookup over a leveled gallery; the
               offline stand-in for a trained completion model.
* identity  -- returns the prefix unchanged (the no-completion baseline).
* random    -- appends the suffix of a uniformly random caption, ignoring
               the condition by construction (the condition-blind control).
* external  -- HTTP client for a real completion endpoint.

Also hosts the deterministic hashed bag-of-words text embedder used in
place of a real text encoder for offline runs.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
import random

import numpy as np
import requests

from .errors import (
    EmptyGallery,
    EmptyPrefix,
    EmptyText,
    EndpointTimeout,
    HttpError,
    LevelsNotAssigned,
    MalformedResponse,
    UnknownLevelLabel,
)
from .gallery import Gallery

_ARTICLES = ("a", "an")


@dataclasses.dataclass(frozen=True)
class QualityCondition:
    """A (relevance level, aesthetic level) pair steering completion."""

    rel_level: str
    aes_level: str

    def validate(self, names) -> None:
        for label in (self.rel_level, self.aes_level):
            if label not in names:
                raise UnknownLevelLabel(f"label {label!r} not in scheme names {tuple(names)}")

    def to_dict(self) -> dict:
        return {"rel": self.rel_level, "aes": self.aes_level}

    @classmethod
    def from_dict(cls, d: dict) -> "QualityCondition":
        return cls(rel_level=str(d["rel"]), aes_level=str(d["aes"]))


@dataclasses.dataclass(frozen=True)
class CompletionCandidate:
    """One completed query plus provenance for display and auditing."""

    text: str
    suffix: str
    source: str  # corpus | identity | random | external
    condition: QualityCondition
    matched_record_id: str | None = None
    exact_condition_match: bool = True

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "suffix": self.suffix,
            "source": self.source,
            "condition": self.condition.to_dict(),
            "matched_record_id": self.matched_record_id,
            "exact_condition_match": self.exact_condition_match,
        }


def build_instruction(condition: QualityCondition, prefix: str, names=None) -> str:
    """Render the completion instruction, byte-exact.

    ``Relevance: <rel>, Aesthetic: <aes>, Query: <prefix>``
    """
    if not prefix:
        raise EmptyPrefix("prefix must be non-empty")
    if names is not None:
        condition.validate(names)
    return f"Relevance: {condition.rel_level}, Aesthetic: {condition.aes_level}, Query: {prefix}"


def _tokens(text: str) -> list[str]:
    return text.lower().split()


def _strip_article(tokens: list[str]) -> list[str]:
    if tokens and tokens[0] in _ARTICLES:
        return tokens[1:]
    return tokens


def _caption_parts(caption: str) -> tuple[list[str], list[str]]:
    """(normalized match tokens, original-case tokens after the article)."""
    original = caption.split()
    lowered = [t.lower() for t in original]
    if lowered and lowered[0] in _ARTICLES:
        original = original[1:]
        lowered = lowered[1:]
    return lowered, original


# --- corpus completer ---------------------------------------------------


class CorpusCompleter:
    """Conditioned caption lookup over a gallery with assigned levels.

    Captions whose article-stripped, case-folded form begins with the
    normalized prefix are candidates; they are filtered to the requested
    condition, or to the nearest populated condition (L1 distance over
    level indices) when the exact one has no match.
    """

    source = "corpus"

    def __init__(self, gallery: Gallery):
        if not gallery.has_levels():
            raise LevelsNotAssigned("gallery has no level schemes; run level assignment first")
        self.gallery = gallery
        self.scheme_rel = gallery.level_scheme_rel
        self.scheme_aes = gallery.level_scheme_aes
        # Bucket records by their first match token so a prefix scan only
        # touches captions that can possibly match.
        self._by_head: dict[str, list[int]] = {}
        self._match_tokens: list[list[str]] = []
        self._plain_tokens: list[list[str]] = []
        for i, rec in enumerate(gallery.records):
            lowered, original = _caption_parts(rec.caption)
            self._match_tokens.append(lowered)
            self._plain_tokens.append(original)
            head = lowered[0] if lowered else ""
            self._by_head.setdefault(head, []).append(i)

    def _candidate_indices(self, prefix_tokens: list[str]) -> list[int]:
        if not prefix_tokens:
            return list(range(len(self.gallery.records)))
        pool = self._by_head.get(prefix_tokens[0], [])
        want = len(prefix_tokens)
        return [i for i in pool if self._match_tokens[i][:want] == prefix_tokens]

    def complete(self, prefix: str, condition: QualityCondition, k: int = 5) -> list[CompletionCandidate]:
        if not prefix or not prefix.strip():
            raise EmptyPrefix("prefix must be non-empty")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        condition.validate(self.scheme_rel.names)
        target_rel = self.scheme_rel.index_of(condition.rel_level)
        target_aes = self.scheme_aes.index_of(condition.aes_level)

        prefix_tokens = _strip_article(_tokens(prefix))
        matches = self._candidate_indices(prefix_tokens)
        if not matches:
            return []

        # Group prefix matches by their assigned condition cell.
        by_cell: dict[tuple[int, int], list[int]] = {}
        for i in matches:
            rec = self.gallery.records[i]
            if not rec.has_levels():
                raise LevelsNotAssigned(f"record {rec.id!r} has no assigned levels")
            by_cell.setdefault((rec.rel_level, rec.aes_level), []).append(i)

        exact = (target_rel, target_aes) in by_cell
        if exact:
            cell = (target_rel, target_aes)
        else:
            # Nearest condition by L1 level distance; ties prefer the higher
            # relevance level, then the higher aesthetic level.
            cell = min(
                by_cell,
                key=lambda c: (abs(c[0] - target_rel) + abs(c[1] - target_aes), -c[0], -c[1]),
            )

        chosen = sorted(
            by_cell[cell],
            key=lambda i: (-self.gallery.records[i].rel_score, self.gallery.records[i].id),
        )[:k]
        out = []
        for i in chosen:
            rec = self.gallery.records[i]
            suffix_tokens = self._plain_tokens[i][len(prefix_tokens):]
            suffix = " " + " ".join(suffix_tokens) if suffix_tokens else ""
            out.append(
                CompletionCandidate(
                    text=prefix + suffix,
                    suffix=suffix,
                    source=self.source,
                    condition=condition,
                    matched_record_id=rec.id,
                    exact_condition_match=exact,
                )
            )
        return out


def complete_corpus(gallery: Gallery, prefix: str, condition: QualityCondition, k: int = 5):
    return CorpusCompleter(gallery).complete(prefix, condition, k)


# --- identity completer -------------------------------------------------


class IdentityCompleter:
    """Passes the prefix through untouched; condition-blind by definition."""

    source = "identity"

    def complete(self, prefix: str, condition: QualityCondition, k: int = 1) -> list[CompletionCandidate]:
        return [complete_identity(prefix, condition)]


def complete_identity(prefix: str, condition: QualityCondition) -> CompletionCandidate:
    if not prefix or not prefix.strip():
        raise EmptyPrefix("prefix must be non-empty")
    return CompletionCandidate(
        text=prefix, suffix="", source="identity", condition=condition,
    )


# --- random completer ---------------------------------------------------


def _caption_suffix(caption: str) -> list[str]:
    """Tokens after the article and head noun of a caption."""
    _, original = _caption_parts(caption)
    return original[1:]


def derive_seed(seed: int, *parts: str) -> int:
    """Stable sub-seed for (seed, parts); identical across runs and platforms."""
    digest = hashlib.sha256(repr((seed,) + parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def complete_random(gallery: Gallery, prefix: str, condition: QualityCondition, seed: int) -> CompletionCandidate:
    """Append the suffix of a uniformly random caption; the condition is ignored."""
    if not prefix or not prefix.strip():
        raise EmptyPrefix("prefix must be non-empty")
    if len(gallery) == 0:
        raise EmptyGallery("cannot draw a caption from an empty gallery")
    rng = random.Random(seed)
    rec = gallery.records[rng.randrange(len(gallery))]
    suffix_tokens = _caption_suffix(rec.caption)
    suffix = " " + " ".join(suffix_tokens) if suffix_tokens else ""
    return CompletionCandidate(
        text=prefix + suffix,
        suffix=suffix,
        source="random",
        condition=condition,
        matched_record_id=rec.id,
        exact_condition_match=False,
    )


class RandomCompleter:
    """Seeded random-suffix completer.

    The draw is keyed on (seed, prefix) only, so the same prefix yields the
    same completion under every condition -- a deliberately condition-blind
    ablation baseline.
    """

    source = "random"

    def __init__(self, gallery: Gallery, seed: int = 0):
        self.gallery = gallery
        self.seed = seed

    def complete(self, prefix: str, condition: QualityCondition, k: int = 1) -> list[CompletionCandidate]:
        return [complete_random(self.gallery, prefix, condition, derive_seed(self.seed, prefix))]


# --- external endpoint completer -----------------------------------------


@dataclasses.dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach an external completion endpoint."""

    url: str
    api_key: str | None = None
    api_key_header: str = "X-Api-Key"
    timeout: float = 30.0


class ExternalCompleter:
    """Client for a completion endpoint speaking the JSON contract:

    request  {"instruction": str, "prefix": str, "rel": str, "aes": str, "n": int}
    response {"completions": [str, ...]}
    """

    source = "external"

    def __init__(self, config: EndpointConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    def complete(self, prefix: str, condition: QualityCondition, k: int = 5) -> list[CompletionCandidate]:
        instruction = build_instruction(condition, prefix)
        payload = {
            "instruction": instruction,
            "prefix": prefix,
            "rel": condition.rel_level,
            "aes": condition.aes_level,
            "n": k,
        }
        headers = {}
        if self.config.api_key:
            headers[self.config.api_key_header] = self.config.api_key
        try:
            resp = self.session.post(
                self.config.url, json=payload, headers=headers, timeout=self.config.timeout
            )
        except requests.Timeout as exc:
            raise EndpointTimeout(f"endpoint {self.config.url} timed out") from exc
        except requests.RequestException as exc:
            raise HttpError(None, f"endpoint {self.config.url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise HttpError(resp.status_code)
        try:
            body = resp.json()
        except ValueError as exc:
            raise MalformedResponse("endpoint response is not JSON") from exc
        completions = body.get("completions") if isinstance(body, dict) else None
        if not isinstance(completions, list) or not all(isinstance(c, str) for c in completions):
            raise MalformedResponse("expected {'completions': [str, ...]}")
        out = []
        for raw in completions[:k]:
            text = _ensure_prefix(prefix, raw)
            out.append(
                CompletionCandidate(
                    text=text,
                    suffix=text[len(prefix):],
                    source=self.source,
                    condition=condition,
                )
            )
        return out


def _ensure_prefix(prefix: str, raw: str) -> str:
    """Prepend the prefix when the endpoint returned only a suffix."""
    if raw.startswith(prefix):
        return raw
    if raw.startswith((" ", ",")):
        return prefix + raw
    if not raw.strip():
        return prefix
    return prefix + " " + raw.lstrip()


# --- deterministic mock embedder ------------------------------------------


def _token_slot(token: str, d: int, seed: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        token.encode("utf-8"), key=str(seed).encode(), digest_size=16
    ).digest()
    idx = int.from_bytes(digest[:8], "little") % d
    sign = 1.0 if digest[8] % 2 == 0 else -1.0
    return idx, sign


def mock_embed(text: str, d: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit vector for a text: seeded hashed bag of words.

    Tokens are lowercased whitespace splits; each token adds +/-1 in a hashed
    bin, plus a small token-count component in its own reserved bin, then the
    sum is L2-normalized.  Identical text always yields the identical vector.
    This makes no claim to approximate any real encoder's geometry.
    """
    if d < 2:
        raise ValueError(f"embedding dimension must be >= 2, got {d}")
    tokens = text.lower().split() if text else []
    if not tokens:
        raise EmptyText("cannot embed empty text")
    v = np.zeros(d, dtype=np.float64)
    for tok in tokens:
        idx, sign = _token_slot(tok, d, seed)
        v[idx] += sign
    len_idx, len_sign = _token_slot("\x00token-count", d, seed)
    v[len_idx] += len_sign * 0.5 * math.log1p(len(tokens))
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        # Pathological full cancellation: fall back to a deterministic basis vector.
        idx, _ = _token_slot("\x00fallback:" + " ".join(tokens), d, seed)
        v[:] = 0.0
        v[idx] = 1.0
        norm = 1.0
    return (v / norm).astype(np.float32)


class MockEmbedder:
    """Callable mock text encoder with a per-token hash cache."""

    def __init__(self, dim: int, seed: int = 0):
        if dim < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {dim}")
        self.dim = dim
        self.seed = seed
        self._slots: dict[str, tuple[int, float]] = {}
        self._len_slot = _token_slot("\x00token-count", dim, seed)

    def _slot(self, token: str) -> tuple[int, float]:
        slot = self._slots.get(token)
        if slot is None:
            slot = _token_slot(token, self.dim, self.seed)
            self._slots[token] = slot
        return slot

    def __call__(self, text: str) -> np.ndarray:
        tokens = text.lower().split() if text else []
        if not tokens:
            raise EmptyText("cannot embed empty text")
        v = np.zeros(self.dim, dtype=np.float64)
        for tok in tokens:
            idx, sign = self._slot(tok)
            v[idx] += sign
        len_idx, len_sign = self._len_slot
        v[len_idx] += len_sign * 0.5 * math.log1p(len(tokens))
        norm = float(np.linalg.norm(v))
        if norm < 1e-12:
            idx, _ = _token_slot("\x00fallback:" + " ".join(tokens), self.dim, self.seed)
            v[:] = 0.0
            v[idx] = 1.0
            norm = 1.0
        return (v / norm).astype(np.float32)


class ExternalEmbedder:
    """Client for an external text-embedding endpoint.

    Contract: POST {"texts": [str]} -> {"embeddings": [[float, ...]]} with
    unit-norm rows of the expected dimension.
    """

    def __init__(self, url: str, dim: int, timeout: float = 30.0,
                 api_key: str | None = None, api_key_header: str = "X-Api-Key",
                 session: requests.Session | None = None):
        self.url = url
        self.dim = dim
        self.timeout = timeout
        self.api_key = api_key
        self.api_key_header = api_key_header
        self.session = session or requests.Session()

    def __call__(self, text: str) -> np.ndarray:
        headers = {}
        if self.api_key:
            headers[self.api_key_header] = self.api_key
        try:
            resp = self.session.post(
                self.url, json={"texts": [text]}, headers=headers, timeout=self.timeout
            )
        except requests.Timeout as exc:
            raise EndpointTimeout(f"embedding endpoint {self.url} timed out") from exc
        except requests.RequestException as exc:
            raise HttpError(None, f"embedding endpoint {self.url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise HttpError(resp.status_code)
        try:
            rows = resp.json()["embeddings"]
            vec = np.asarray(rows[0], dtype=np.float32)
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse("expected {'embeddings': [[float, ...]]}") from exc
        return vec
