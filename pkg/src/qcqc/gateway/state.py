"""Shared service state: an immutable gallery snapshot plus helpers.

A snapshot bundles everything a request needs (gallery, completer registry,
embedder).  Handlers read ``state.snapshot`` exactly once, so concurrent
requests each see one consistent snapshot even across an admin reload; the
swap itself is a single attribute assignment.
"""
from __future__ import annotations

import dataclasses

from ..completer import (
    CorpusCompleter,
    EndpointConfig,
    ExternalCompleter,
    IdentityCompleter,
    RandomCompleter,
    MockEmbedder,
)
from ..errors import LevelsNotAssigned, QcqcError
from ..gallery import Gallery, load
from .config import ServiceConfig

METHODS = ("prefix", "random", "corpus", "external")


class UnknownMethod(QcqcError):
    pass


@dataclasses.dataclass(frozen=True)
class Snapshot:
    gallery: Gallery
    embedder: MockEmbedder
    config: ServiceConfig
    _completers: dict

    def completer_for(self, method: str):
        if method not in METHODS:
            raise UnknownMethod(f"method must be one of {METHODS}, got {method!r}")
        completer = self._completers.get(method)
        if completer is None:
            if method == "corpus":
                raise LevelsNotAssigned(
                    "corpus completion needs a gallery with assigned levels"
                )
            raise QcqcError("external completion endpoint is not configured")
        return completer

    def level_names(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        rel = self.gallery.level_scheme_rel.names if self.gallery.level_scheme_rel else ()
        aes = self.gallery.level_scheme_aes.names if self.gallery.level_scheme_aes else ()
        return rel, aes


def build_snapshot(gallery: Gallery, config: ServiceConfig) -> Snapshot:
    completers = {
        "prefix": IdentityCompleter(),
        "random": RandomCompleter(gallery, seed=config.random_seed),
    }
    if gallery.has_levels():
        completers["corpus"] = CorpusCompleter(gallery)
    if config.endpoint_url:
        completers["external"] = ExternalCompleter(
            EndpointConfig(
                url=config.endpoint_url,
                api_key=config.api_key,
                api_key_header=config.api_key_header,
                timeout=config.endpoint_timeout,
            )
        )
    return Snapshot(
        gallery=gallery,
        embedder=MockEmbedder(gallery.dim, seed=config.embed_seed),
        config=config,
        _completers=completers,
    )


class ServiceState:
    """Holds the current snapshot; reload swaps it atomically."""

    def __init__(self, gallery: Gallery, config: ServiceConfig):
        self.config = config
        self._snapshot = build_snapshot(gallery, config)

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def reload_from(self, gallery_dir) -> Snapshot:
        snapshot = build_snapshot(load(gallery_dir), self.config)
        self._snapshot = snapshot
        return snapshot
