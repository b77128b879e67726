"""Evaluation protocol: condition grids, baselines, and report emission.

For every (condition, prefix) pair the harness completes the prefix, embeds
the completed text, retrieves the top eta records, and accumulates those
records' stored aesthetic and relevance scores.  Cell averages pool all
retrieved items across prefixes (recorded in the report metadata); skipped
queries are counted, never imputed.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from importlib import resources

import numpy as np

from .completer import CompletionCandidate, QualityCondition
from .errors import CompleterError, EmbedderFailure, IncompleteGrid, QcqcError
from .gallery import Gallery
from .search import retrieve

POOLING = "items"  # all retrieved items pooled before averaging


@dataclasses.dataclass(frozen=True)
class EvalConfig:
    prefixes: tuple[str, ...]
    conditions: tuple[QualityCondition, ...]
    eta: int = 1
    method: str = "corpus"
    seed: int = 0

    def __post_init__(self):
        if not self.prefixes:
            raise ValueError("prefixes must be non-empty")
        if not self.conditions:
            raise ValueError("conditions must be non-empty")
        if self.eta < 1:
            raise ValueError(f"eta must be >= 1, got {self.eta}")


@dataclasses.dataclass(frozen=True)
class PrefixOutcome:
    prefix: str
    completed_text: str | None
    hit_ids: tuple[str, ...]
    aes_values: tuple[float, ...]
    rel_values: tuple[float, ...]
    fallback: bool = False
    skipped: str | None = None


@dataclasses.dataclass(frozen=True)
class CellResult:
    ave_aes: float
    ave_rel: float
    n_items: int
    n_skipped: int
    condition: QualityCondition | None = None
    k: int | None = None
    prefixes: tuple[PrefixOutcome, ...] = ()


@dataclasses.dataclass(frozen=True)
class EvalReport:
    method: str
    cells: tuple[CellResult, ...]
    rel_names: tuple[str, ...]
    aes_names: tuple[str, ...]
    metadata: dict

    def cell(self, condition: QualityCondition) -> CellResult:
        for c in self.cells:
            if c.condition == condition:
                return c
        raise KeyError(f"no cell for condition {condition}")

    def cell_for_k(self, k: int) -> CellResult:
        for c in self.cells:
            if c.k == k:
                return c
        raise KeyError(f"no cell for k={k}")


def default_queries() -> tuple[str, ...]:
    """The stock 80 object-class query prefixes, article included."""
    text = resources.files("qcqc.data").joinpath("coco_queries.txt").read_text("utf-8")
    return tuple(line.strip() for line in text.splitlines() if line.strip())


def grid_conditions(rel_names, aes_names) -> tuple[QualityCondition, ...]:
    """Full condition grid, aesthetic-major to match the reporting layout."""
    return tuple(
        QualityCondition(rel_level=r, aes_level=a) for a in aes_names for r in rel_names
    )


def _mean(values) -> float:
    return math.fsum(values) / len(values) if values else float("nan")


def _pull_scores(gallery: Gallery, hits):
    ids, aes_vals, rel_vals = [], [], []
    for hit in hits:
        rec = gallery.records[hit.index]
        ids.append(rec.id)
        if rec.has_scores():
            aes_vals.append(rec.aes_score)
            rel_vals.append(rec.rel_score)
    return tuple(ids), tuple(aes_vals), tuple(rel_vals)


def _run_prefix(gallery, completer, embedder, prefix, condition, eta) -> PrefixOutcome:
    try:
        candidates: list[CompletionCandidate] = completer.complete(prefix, condition, k=1)
    except (CompleterError, QcqcError) as exc:
        return PrefixOutcome(prefix, None, (), (), (), skipped=f"completer: {exc}")
    fallback = not candidates
    text = prefix if fallback else candidates[0].text
    try:
        result = retrieve([text], embedder, gallery, eta=eta)
    except (EmbedderFailure, QcqcError) as exc:
        return PrefixOutcome(prefix, text, (), (), (), fallback=fallback, skipped=f"embedder: {exc}")
    ids, aes_vals, rel_vals = _pull_scores(gallery, result.queries[0].hits)
    return PrefixOutcome(prefix, text, ids, aes_vals, rel_vals, fallback=fallback)


def run_grid(config: EvalConfig, gallery: Gallery, completer, embedder) -> EvalReport:
    """Sweep the condition grid; failures skip a cell entry, never the grid."""
    cells = []
    for condition in config.conditions:
        outcomes = [
            _run_prefix(gallery, completer, embedder, prefix, condition, config.eta)
            for prefix in config.prefixes
        ]
        aes_pool = [v for o in outcomes for v in o.aes_values]
        rel_pool = [v for o in outcomes for v in o.rel_values]
        cells.append(
            CellResult(
                ave_aes=_mean(aes_pool),
                ave_rel=_mean(rel_pool),
                n_items=len(aes_pool),
                n_skipped=sum(1 for o in outcomes if o.skipped),
                condition=condition,
                prefixes=tuple(outcomes),
            )
        )
    rel_names = tuple(dict.fromkeys(c.rel_level for c in config.conditions))
    aes_names = tuple(dict.fromkeys(c.aes_level for c in config.conditions))
    if gallery.level_scheme_rel is not None:
        rel_names = gallery.level_scheme_rel.names
    if gallery.level_scheme_aes is not None:
        aes_names = gallery.level_scheme_aes.names
    return EvalReport(
        method=config.method,
        cells=tuple(cells),
        rel_names=rel_names,
        aes_names=aes_names,
        metadata={
            "gallery_hash": gallery.content_hash(),
            "gallery_n": len(gallery),
            "eta": config.eta,
            "seed": config.seed,
            "pooling": POOLING,
            "n_prefixes": len(config.prefixes),
            "scheme": {
                "rel": gallery.level_scheme_rel.to_dict() if gallery.level_scheme_rel else None,
                "aes": gallery.level_scheme_aes.to_dict() if gallery.level_scheme_aes else None,
            },
            "fallbacks": sum(
                1 for c in cells for o in c.prefixes if o.fallback and not o.skipped
            ),
        },
    )


def rerank_baseline(gallery: Gallery, prefixes, embedder, k: int) -> EvalReport:
    """Relevance-first retrieval with an aesthetic re-rank.

    Per prefix: take the top-k records by cosine similarity to the raw
    prefix, then keep the single highest-aesthetic one.  k=1 degenerates to
    the plain prefix baseline.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    prefixes = tuple(prefixes)
    outcomes = []
    for prefix in prefixes:
        try:
            result = retrieve([prefix], embedder, gallery, eta=k)
        except (EmbedderFailure, QcqcError) as exc:
            outcomes.append(PrefixOutcome(prefix, prefix, (), (), (), skipped=f"embedder: {exc}"))
            continue
        pool = [gallery.records[h.index] for h in result.queries[0].hits if
                gallery.records[h.index].has_scores()]
        if not pool:
            outcomes.append(PrefixOutcome(prefix, prefix, (), (), (), skipped="no scored hits"))
            continue
        best = max(pool, key=lambda r: r.aes_score)  # first max in cosine order on ties
        outcomes.append(
            PrefixOutcome(prefix, prefix, (best.id,), (best.aes_score,), (best.rel_score,))
        )
    aes_pool = [v for o in outcomes for v in o.aes_values]
    rel_pool = [v for o in outcomes for v in o.rel_values]
    cell = CellResult(
        ave_aes=_mean(aes_pool),
        ave_rel=_mean(rel_pool),
        n_items=len(aes_pool),
        n_skipped=sum(1 for o in outcomes if o.skipped),
        k=k,
        prefixes=tuple(outcomes),
    )
    rel_names = gallery.level_scheme_rel.names if gallery.level_scheme_rel else ()
    aes_names = gallery.level_scheme_aes.names if gallery.level_scheme_aes else ()
    return EvalReport(
        method="rerank",
        cells=(cell,),
        rel_names=rel_names,
        aes_names=aes_names,
        metadata={
            "gallery_hash": gallery.content_hash(),
            "gallery_n": len(gallery),
            "k": k,
            "pooling": POOLING,
            "n_prefixes": len(prefixes),
        },
    )


# --- monotonicity verdicts -------------------------------------------------


@dataclasses.dataclass(frozen=True)
class AxisVerdict:
    axis: str  # "rel" or "aes"
    passed: bool
    min_margin: float
    violations: tuple[tuple[QualityCondition, QualityCondition, float], ...]


@dataclasses.dataclass(frozen=True)
class MonotonicityReport:
    rel_axis: AxisVerdict
    aes_axis: AxisVerdict

    @property
    def passed(self) -> bool:
        return self.rel_axis.passed and self.aes_axis.passed


def _axis_verdict(report: EvalReport, axis: str) -> AxisVerdict:
    violations = []
    margins = []
    outer = report.aes_names if axis == "rel" else report.rel_names
    inner = report.rel_names if axis == "rel" else report.aes_names
    for fixed in outer:
        sequence = []
        for label in inner:
            cond = (
                QualityCondition(rel_level=label, aes_level=fixed)
                if axis == "rel"
                else QualityCondition(rel_level=fixed, aes_level=label)
            )
            try:
                cell = report.cell(cond)
            except KeyError:
                raise IncompleteGrid(f"missing grid cell for {cond}") from None
            sequence.append((cond, cell.ave_rel if axis == "rel" else cell.ave_aes))
        for (c_lo, v_lo), (c_hi, v_hi) in zip(sequence, sequence[1:]):
            margin = v_hi - v_lo
            margins.append(margin)
            if margin < 0:
                violations.append((c_lo, c_hi, margin))
    return AxisVerdict(
        axis=axis,
        passed=not violations,
        min_margin=min(margins) if margins else float("nan"),
        violations=tuple(violations),
    )


def monotonicity_check(report: EvalReport) -> MonotonicityReport:
    """Non-decreasing averages along each condition axis, the other held fixed.

    Requires a complete grid over the report's level names; margins are the
    adjacent-cell differences, so a constant report passes with zero margin.
    """
    if not report.rel_names or not report.aes_names:
        raise IncompleteGrid("report carries no level names")
    return MonotonicityReport(
        rel_axis=_axis_verdict(report, "rel"),
        aes_axis=_axis_verdict(report, "aes"),
    )


# --- serialization -----------------------------------------------------------


def _outcome_to_dict(o: PrefixOutcome) -> dict:
    return {
        "prefix": o.prefix,
        "completed_text": o.completed_text,
        "hit_ids": list(o.hit_ids),
        "aes_values": list(o.aes_values),
        "rel_values": list(o.rel_values),
        "fallback": o.fallback,
        "skipped": o.skipped,
    }


def _cell_to_dict(c: CellResult) -> dict:
    return {
        "condition": c.condition.to_dict() if c.condition else None,
        "k": c.k,
        "ave_aes": c.ave_aes,
        "ave_rel": c.ave_rel,
        "n_items": c.n_items,
        "n_skipped": c.n_skipped,
        "prefixes": [_outcome_to_dict(o) for o in c.prefixes],
    }


def report_to_dict(report: EvalReport) -> dict:
    return {
        "method": report.method,
        "rel_names": list(report.rel_names),
        "aes_names": list(report.aes_names),
        "metadata": report.metadata,
        "cells": [_cell_to_dict(c) for c in report.cells],
    }


def report_from_dict(d: dict) -> EvalReport:
    cells = []
    for c in d["cells"]:
        outcomes = tuple(
            PrefixOutcome(
                prefix=o["prefix"],
                completed_text=o["completed_text"],
                hit_ids=tuple(o["hit_ids"]),
                aes_values=tuple(o["aes_values"]),
                rel_values=tuple(o["rel_values"]),
                fallback=o["fallback"],
                skipped=o["skipped"],
            )
            for o in c["prefixes"]
        )
        cells.append(
            CellResult(
                ave_aes=c["ave_aes"],
                ave_rel=c["ave_rel"],
                n_items=c["n_items"],
                n_skipped=c["n_skipped"],
                condition=QualityCondition.from_dict(c["condition"]) if c["condition"] else None,
                k=c["k"],
                prefixes=outcomes,
            )
        )
    return EvalReport(
        method=d["method"],
        cells=tuple(cells),
        rel_names=tuple(d["rel_names"]),
        aes_names=tuple(d["aes_names"]),
        metadata=d["metadata"],
    )


def render_report(report: EvalReport, fmt: str) -> str:
    """Deterministic serialization: json, csv, or a markdown table."""
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["method", "rel_cond", "aes_cond", "k", "ave_aes", "ave_rel",
                         "n_items", "n_skipped"])
        for c in report.cells:
            writer.writerow([
                report.method,
                c.condition.rel_level if c.condition else "",
                c.condition.aes_level if c.condition else "",
                "" if c.k is None else c.k,
                repr(c.ave_aes),
                repr(c.ave_rel),
                c.n_items,
                c.n_skipped,
            ])
        return buf.getvalue()
    if fmt in ("md", "markdown"):
        lines = [
            "| method | rel cond | aes cond | k | ave aes | ave rel | items | skipped |",
            "|---|---|---|---|---|---|---|---|",
        ]
        for c in report.cells:
            lines.append(
                "| {m} | {r} | {a} | {k} | {aes:.4f} | {rel:.4f} | {n} | {s} |".format(
                    m=report.method,
                    r=c.condition.rel_level if c.condition else "-",
                    a=c.condition.aes_level if c.condition else "-",
                    k="-" if c.k is None else c.k,
                    aes=c.ave_aes,
                    rel=c.ave_rel,
                    n=c.n_items,
                    s=c.n_skipped,
                )
            )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: EvalReport, path, fmt: str = "json") -> None:
    from pathlib import Path

    Path(path).write_text(render_report(report, fmt), encoding="utf-8")


# --- gallery score histograms ------------------------------------------------


def score_histograms(gallery: Gallery, bins: int = 30) -> dict:
    """Fixed-bin histograms of the stored aesthetic and relevance scores."""
    out = {}
    for axis in ("aes", "rel"):
        values = np.array(
            [getattr(r, f"{axis}_score") for r in gallery.records if r.has_scores()],
            dtype=np.float64,
        )
        if values.size == 0:
            out[axis] = {"edges": [], "counts": [], "min": None, "max": None}
            continue
        counts, edges = np.histogram(values, bins=bins)
        out[axis] = {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
            "min": float(values.min()),
            "max": float(values.max()),
        }
    return out


def render_histograms_csv(gallery: Gallery, bins: int = 30) -> str:
    hists = score_histograms(gallery, bins=bins)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["axis", "bin_lo", "bin_hi", "count"])
    for axis, h in hists.items():
        for lo, hi, count in zip(h["edges"], h["edges"][1:], h["counts"]):
            writer.writerow([axis, repr(lo), repr(hi), count])
    return buf.getvalue()
