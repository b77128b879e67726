"""Gallery data model, ingestion, validation, and persistence.

A gallery is an immutable ordered collection of image records.  Each record
carries a precomputed unit-norm float32 embedding plus a caption and two
quality scores (aesthetic, relevance).  Galleries persist as a directory of
a JSONL manifest, a binary embedding file, and an optional scheme sidecar.

Embedding file layout (all little-endian, bit-exact across platforms):

    magic   4 bytes  b"QCQC"
    version u32      1
    n       u64      row count
    d       u32      embedding dimension
    data    n*d float32, row-major, row order = manifest line order
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateId,
    FormatError,
    MalformedLine,
    NormError,
    UnsupportedVersion,
    ZeroVector,
)
from .quantile import LevelScheme

MAGIC = b"QCQC"
VERSION = 1
HEADER = struct.Struct("<4sIQI")

ZERO_NORM = 1e-12        # below this the vector is rejected outright
RENORM_TOLERANCE = 1e-3  # deviations up to this are silently renormalized
UNIT_TOLERANCE = 1e-6    # post-ingest invariant on every stored embedding

MANIFEST_NAME = "manifest.jsonl"
EMBEDDINGS_NAME = "embeddings.bin"
SCHEMES_NAME = "schemes.json"


@dataclasses.dataclass(frozen=True, eq=False)
class GalleryRecord:
    id: str
    caption: str
    embedding: np.ndarray
    aes_score: float | None = None
    rel_score: float | None = None
    rel_level: int | None = None
    aes_level: int | None = None

    def has_scores(self) -> bool:
        return self.aes_score is not None and self.rel_score is not None

    def has_levels(self) -> bool:
        return self.rel_level is not None and self.aes_level is not None

    def __eq__(self, other):
        if not isinstance(other, GalleryRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.caption == other.caption
            and self.aes_score == other.aes_score
            and self.rel_score == other.rel_score
            and self.rel_level == other.rel_level
            and self.aes_level == other.aes_level
            and self.embedding.dtype == other.embedding.dtype
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclasses.dataclass(frozen=True, eq=False)
class Gallery:
    """Immutable after construction; safe to share read-only across threads."""

    records: tuple[GalleryRecord, ...]
    dim: int
    level_scheme_rel: LevelScheme | None = None
    level_scheme_aes: LevelScheme | None = None

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DuplicateId(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            if rec.embedding.shape != (self.dim,):
                raise DimensionMismatch(
                    f"record {rec.id!r} has embedding shape {rec.embedding.shape}, "
                    f"gallery dim is {self.dim}"
                )
            norm = float(np.linalg.norm(rec.embedding.astype(np.float64)))
            if abs(norm - 1.0) > UNIT_TOLERANCE:
                raise NormError(f"record {rec.id!r} embedding norm {norm} is not unit")

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, Gallery):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.level_scheme_rel == other.level_scheme_rel
            and self.level_scheme_aes == other.level_scheme_aes
            and len(self.records) == len(other.records)
            and all(a == b for a, b in zip(self.records, other.records))
        )

    @cached_property
    def embedding_matrix(self) -> np.ndarray:
        """(n, d) float32 matrix of all embeddings, rows in record order."""
        if not self.records:
            return np.zeros((0, self.dim), dtype=np.float32)
        m = np.stack([r.embedding for r in self.records]).astype(np.float32)
        m.setflags(write=False)
        return m

    @cached_property
    def embedding_matrix_f64(self) -> np.ndarray:
        m = self.embedding_matrix.astype(np.float64)
        m.setflags(write=False)
        return m

    @cached_property
    def id_index(self) -> dict[str, int]:
        return {rec.id: i for i, rec in enumerate(self.records)}

    def record(self, record_id: str) -> GalleryRecord:
        return self.records[self.id_index[record_id]]

    def has_levels(self) -> bool:
        return self.level_scheme_rel is not None and self.level_scheme_aes is not None

    def scored_records(self) -> tuple[GalleryRecord, ...]:
        return tuple(r for r in self.records if r.has_scores())

    def content_hash(self) -> str:
        """Stable digest of ids, captions, scores, and embedding bytes."""
        h = hashlib.sha256()
        for rec in self.records:
            h.update(rec.id.encode())
            h.update(b"\x00")
            h.update(rec.caption.encode())
            h.update(repr((rec.aes_score, rec.rel_score)).encode())
            h.update(np.ascontiguousarray(rec.embedding, dtype="<f4").tobytes())
        return h.hexdigest()[:16]


def normalize_embedding(vec, context: str = "embedding") -> np.ndarray:
    """Validate and renormalize one raw embedding row to unit float32.

    Deviations up to RENORM_TOLERANCE are corrected silently (float export
    noise); anything larger is a data error and rejected.
    """
    v = np.asarray(vec, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{context}: expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NormError(f"{context}: contains NaN or infinity")
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM:
        raise ZeroVector(f"{context}: norm {norm} is numerically zero")
    if abs(norm - 1.0) > RENORM_TOLERANCE:
        raise NormError(
            f"{context}: norm {norm} deviates from 1 by more than {RENORM_TOLERANCE}"
        )
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        v = v / norm
    out = v.astype(np.float32)
    out.setflags(write=False)
    return out


def compute_relevance(embedding_img, embedding_txt) -> float:
    """Cosine similarity of two unit vectors (a plain dot product).

    Accumulates in float64; exactly symmetric in its arguments.
    """
    a = np.asarray(embedding_img, dtype=np.float64)
    b = np.asarray(embedding_txt, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


def _read_embedding_file(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FormatError(f"{path}: file shorter than header")
    magic, version, n, d = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: unsupported version {version}")
    expected = HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {n}x{d} rows, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER.size)
    return data.reshape(n, d)


def _write_embedding_file(path, matrix: np.ndarray) -> None:
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, n, d))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def _parse_manifest_line(line: str, line_no: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "record is not a JSON object")
    rid = obj.get("id")
    caption = obj.get("caption")
    if not isinstance(rid, str) or not rid:
        raise MalformedLine(line_no, "missing or non-string 'id'")
    if not isinstance(caption, str):
        raise MalformedLine(line_no, "missing or non-string 'caption'")
    out = {"id": rid, "caption": caption, "aes": None, "rel": None}
    for key in ("aes", "rel"):
        val = obj.get(key)
        if val is None:
            continue
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise MalformedLine(line_no, f"{key!r} is not a number")
        val = float(val)
        if not np.isfinite(val):
            raise MalformedLine(line_no, f"{key!r} is not finite")
        if key == "rel" and not -1.0 <= val <= 1.0:
            raise MalformedLine(line_no, f"'rel' {val} outside [-1, 1]")
        out[key] = val
    for key in ("rel_level", "aes_level"):
        val = obj.get(key)
        if val is not None:
            if isinstance(val, bool) or not isinstance(val, int):
                raise MalformedLine(line_no, f"{key!r} is not an integer")
            out[key] = val
    return out


def ingest(manifest_path, embeddings_path) -> Gallery:
    """Build a validated gallery from a JSONL manifest and an embedding file."""
    matrix = _read_embedding_file(embeddings_path)
    lines = Path(manifest_path).read_text(encoding="utf-8").split("\n")
    rows = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if len(rows) != matrix.shape[0]:
        raise DimensionMismatch(
            f"manifest has {len(rows)} records but embedding file has {matrix.shape[0]} rows"
        )
    records = []
    for (line_no, line), raw_vec in zip(rows, matrix):
        parsed = _parse_manifest_line(line, line_no)
        emb = normalize_embedding(raw_vec, context=f"record {parsed['id']!r}")
        records.append(
            GalleryRecord(
                id=parsed["id"],
                caption=parsed["caption"],
                embedding=emb,
                aes_score=parsed["aes"],
                rel_score=parsed["rel"],
            )
        )
    return Gallery(records=tuple(records), dim=matrix.shape[1] if records else matrix.shape[1])


def save(gallery: Gallery, dir_path) -> None:
    """Persist a gallery; ``load(save(g))`` is bit-identical to ``g``."""
    out = Path(dir_path)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        for rec in gallery.records:
            row = {"id": rec.id, "caption": rec.caption}
            if rec.aes_score is not None:
                row["aes"] = rec.aes_score
            if rec.rel_score is not None:
                row["rel"] = rec.rel_score
            if rec.rel_level is not None:
                row["rel_level"] = rec.rel_level
            if rec.aes_level is not None:
                row["aes_level"] = rec.aes_level
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    _write_embedding_file(out / EMBEDDINGS_NAME, gallery.embedding_matrix)
    schemes = {}
    if gallery.level_scheme_rel is not None:
        schemes["rel"] = gallery.level_scheme_rel.to_dict()
    if gallery.level_scheme_aes is not None:
        schemes["aes"] = gallery.level_scheme_aes.to_dict()
    scheme_path = out / SCHEMES_NAME
    if schemes:
        scheme_path.write_text(json.dumps(schemes, indent=2) + "\n", encoding="utf-8")
    elif scheme_path.exists():
        scheme_path.unlink()


def load(dir_path) -> Gallery:
    """Read back a gallery saved by :func:`save` without mutating any values."""
    src = Path(dir_path)
    matrix = _read_embedding_file(src / EMBEDDINGS_NAME)
    lines = (src / MANIFEST_NAME).read_text(encoding="utf-8").split("\n")
    rows = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if len(rows) != matrix.shape[0]:
        raise DimensionMismatch(
            f"manifest has {len(rows)} records but embedding file has {matrix.shape[0]} rows"
        )
    records = []
    for (line_no, line), raw_vec in zip(rows, matrix):
        parsed = _parse_manifest_line(line, line_no)
        emb = raw_vec.copy()
        emb.setflags(write=False)
        records.append(
            GalleryRecord(
                id=parsed["id"],
                caption=parsed["caption"],
                embedding=emb,
                aes_score=parsed["aes"],
                rel_score=parsed["rel"],
                rel_level=parsed.get("rel_level"),
                aes_level=parsed.get("aes_level"),
            )
        )
    scheme_rel = scheme_aes = None
    scheme_path = src / SCHEMES_NAME
    if scheme_path.exists():
        schemes = json.loads(scheme_path.read_text(encoding="utf-8"))
        if "rel" in schemes:
            scheme_rel = LevelScheme.from_dict(schemes["rel"])
        if "aes" in schemes:
            scheme_aes = LevelScheme.from_dict(schemes["aes"])
    return Gallery(
        records=tuple(records),
        dim=matrix.shape[1],
        level_scheme_rel=scheme_rel,
        level_scheme_aes=scheme_aes,
    )
