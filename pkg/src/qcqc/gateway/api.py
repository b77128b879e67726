"""HTTP JSON API over a loaded gallery snapshot.

All state is read-only per request; every handler grabs one snapshot up
front so a concurrent reload can never show a request two galleries.
Module errors map onto {code, message} bodies: 400 for validation problems,
502 when an external endpoint misbehaves, 404 for unknown routes.
"""
from __future__ import annotations

import re
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..completer import QualityCondition
from ..errors import EndpointError, QcqcError
from ..evalharness import (
    EvalConfig,
    default_queries,
    grid_conditions,
    report_to_dict,
    run_grid,
    score_histograms,
)
from ..search import retrieve
from .state import ServiceState, Snapshot


def _error_code(exc: Exception) -> str:
    name = type(exc).__name__
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


class ConditionModel(BaseModel):
    rel: str
    aes: str


class CompleteRequest(BaseModel):
    prefix: str
    rel: str
    aes: str
    method: str = "corpus"
    k: int = Field(default=5, ge=1)


class RetrieveRequest(BaseModel):
    query_text: str
    eta: int = Field(default=1, ge=1)


class PipelineRequest(BaseModel):
    prefix: str
    rel: str
    aes: str
    method: str = "corpus"
    k: int = Field(default=3, ge=1)
    eta: int = Field(default=1, ge=1)


class GridRequest(BaseModel):
    prefixes: list[str] | None = None
    conditions: list[ConditionModel] | None = None
    eta: int = Field(default=1, ge=1)
    method: str = "prefix"
    seed: int = 0


class ReloadRequest(BaseModel):
    dir: str


def _hit_payload(snapshot: Snapshot, hit) -> dict:
    rec = snapshot.gallery.records[hit.index]
    rel_names, aes_names = snapshot.level_names()
    return {
        "id": rec.id,
        "score": hit.score,
        "caption": rec.caption,
        "aes": rec.aes_score,
        "rel": rec.rel_score,
        "rel_level": rel_names[rec.rel_level] if rec.rel_level is not None and rel_names else None,
        "aes_level": aes_names[rec.aes_level] if rec.aes_level is not None and aes_names else None,
    }


def _retrieve_hits(snapshot: Snapshot, text: str, eta: int) -> list[dict]:
    result = retrieve([text], snapshot.embedder, snapshot.gallery, eta=eta)
    return [_hit_payload(snapshot, h) for h in result.queries[0].hits]


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="qcqc", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.exception_handler(QcqcError)
    async def _qcqc_error(request: Request, exc: QcqcError):
        status = 502 if isinstance(exc, EndpointError) else 400
        return JSONResponse(
            status_code=status,
            content={"code": _error_code(exc), "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "validation_error", "message": str(exc.errors())},
        )

    @app.exception_handler(404)
    async def _not_found(request: Request, exc):
        return JSONResponse(
            status_code=404,
            content={"code": "not_found", "message": f"no route {request.url.path}"},
        )

    @app.get("/api/health")
    def health():
        snapshot = state.snapshot
        rel_names, aes_names = snapshot.level_names()
        return {
            "status": "ok",
            "gallery_n": len(snapshot.gallery),
            "dim": snapshot.gallery.dim,
            "levels": {"rel": list(rel_names), "aes": list(aes_names)},
        }

    @app.get("/api/scheme")
    def scheme():
        snapshot = state.snapshot
        gallery = snapshot.gallery
        return {
            "rel": gallery.level_scheme_rel.to_dict() if gallery.level_scheme_rel else None,
            "aes": gallery.level_scheme_aes.to_dict() if gallery.level_scheme_aes else None,
        }

    @app.post("/api/complete")
    def complete(req: CompleteRequest):
        snapshot = state.snapshot
        completer = snapshot.completer_for(req.method)
        condition = QualityCondition(rel_level=req.rel, aes_level=req.aes)
        candidates = completer.complete(req.prefix, condition, k=req.k)
        return {"candidates": [c.to_dict() for c in candidates]}

    @app.post("/api/retrieve")
    def retrieve_route(req: RetrieveRequest):
        snapshot = state.snapshot
        return {"hits": _retrieve_hits(snapshot, req.query_text, req.eta)}

    @app.post("/api/pipeline")
    def pipeline(req: PipelineRequest):
        snapshot = state.snapshot
        completer = snapshot.completer_for(req.method)
        condition = QualityCondition(rel_level=req.rel, aes_level=req.aes)
        candidates = completer.complete(req.prefix, condition, k=req.k)
        if not candidates:
            fallback = QualityCondition(rel_level=req.rel, aes_level=req.aes)
            return {
                "candidates": [],
                "hits_per_candidate": [],
                "fallback_hits": _retrieve_hits(snapshot, req.prefix, req.eta),
                "condition": fallback.to_dict(),
            }
        return {
            "candidates": [c.to_dict() for c in candidates],
            "hits_per_candidate": [
                _retrieve_hits(snapshot, c.text, req.eta) for c in candidates
            ],
            "fallback_hits": None,
            "condition": condition.to_dict(),
        }

    @app.post("/api/eval/grid")
    def eval_grid(req: GridRequest):
        snapshot = state.snapshot
        rel_names, aes_names = snapshot.level_names()
        if req.conditions:
            conditions = tuple(
                QualityCondition(rel_level=c.rel, aes_level=c.aes) for c in req.conditions
            )
        elif rel_names and aes_names:
            conditions = grid_conditions(rel_names, aes_names)
        else:
            raise QcqcError("no level schemes loaded; pass explicit conditions")
        prefixes = tuple(req.prefixes) if req.prefixes else default_queries()
        config = EvalConfig(
            prefixes=prefixes,
            conditions=conditions,
            eta=req.eta,
            method=req.method,
            seed=req.seed,
        )
        completer = snapshot.completer_for(req.method)
        report = run_grid(config, snapshot.gallery, completer, snapshot.embedder)
        return report_to_dict(report)

    @app.get("/api/gallery/stats")
    def gallery_stats(bins: int = 30):
        snapshot = state.snapshot
        return {
            "gallery_n": len(snapshot.gallery),
            "histograms": score_histograms(snapshot.gallery, bins=bins),
        }

    if state.config.allow_reload:
        @app.post("/api/admin/reload")
        def admin_reload(req: ReloadRequest):
            snapshot = state.reload_from(req.dir)
            return {"status": "ok", "gallery_n": len(snapshot.gallery)}

    static_dir = state.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
