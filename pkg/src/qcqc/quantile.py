"""Percentile computation and score-to-level discretization.

Continuous quality scores are mapped to a small ordered set of named levels
(e.g. Low / Medium / High) by cutting the empirical score distribution at
fixed percentiles.  The percentile function interpolates linearly between
order statistics: for a sorted vector ``s`` of length ``n`` and percentile
``p``, the cut sits at fractional index ``xi = p / 100 * (n - 1)``.
"""
from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from .errors import (
    EmptyVector,
    MissingScore,
    NonFiniteScore,
    NonMonotonePercentiles,
)

DEFAULT_NAMES_3 = ("Low", "Medium", "High")
DEFAULT_NAMES_5 = ("VL", "L", "M", "H", "VH")
DEFAULT_PERCENTILES_3 = (33.0, 66.0)
DEFAULT_PERCENTILES_5 = (20.0, 40.0, 60.0, 80.0)


def perc(scores, p: float) -> float:
    """Return the p% percentile of ``scores`` with linear interpolation.

    ``perc(r, 0)`` is exactly ``min(r)`` and ``perc(r, 100)`` exactly
    ``max(r)``; integral interpolation indices never read past the end of
    the sorted vector.
    """
    r = np.asarray(scores, dtype=np.float64)
    if r.ndim != 1:
        raise EmptyVector(f"expected a 1-d score vector, got shape {r.shape}")
    if r.size == 0:
        raise EmptyVector("cannot take a percentile of an empty vector")
    if not np.all(np.isfinite(r)):
        raise NonFiniteScore("score vector contains NaN or infinity")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"percentile must be in [0, 100], got {p}")
    ordered = np.sort(r)
    xi = (p / 100.0) * (r.size - 1)
    lo = math.floor(xi)
    frac = xi - lo
    if frac == 0.0:
        return float(ordered[lo])
    return float(ordered[lo] + frac * (ordered[lo + 1] - ordered[lo]))


@dataclasses.dataclass(frozen=True)
class LevelScheme:
    """Ordered level names plus the percentile cut points that define them.

    ``names`` has one more entry than ``percentiles``; ``cuts`` holds the
    score values at those percentiles for the fitted distribution.  A value
    ``x`` belongs to the smallest level ``j`` with ``x <= cuts[j]``, or to
    the top level when it exceeds every cut.
    """

    names: tuple[str, ...]
    percentiles: tuple[float, ...]
    cuts: tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.percentiles) + 1:
            raise ValueError(
                f"{len(self.names)} names require {len(self.names) - 1} percentiles, "
                f"got {len(self.percentiles)}"
            )
        if len(self.cuts) != len(self.percentiles):
            raise ValueError("one cut per percentile required")
        for p in self.percentiles:
            if not 0.0 < p < 100.0:
                raise NonMonotonePercentiles(f"percentile {p} outside (0, 100)")
        if any(a >= b for a, b in zip(self.percentiles, self.percentiles[1:])):
            raise NonMonotonePercentiles(f"percentiles not strictly increasing: {self.percentiles}")
        if any(a > b for a, b in zip(self.cuts, self.cuts[1:])):
            raise ValueError(f"cuts must be non-decreasing: {self.cuts}")

    @property
    def n_levels(self) -> int:
        return len(self.names)

    def level_of(self, x: float) -> int:
        """Index of the level holding ``x``: ties at a cut go to the lower level."""
        if not math.isfinite(x):
            raise NonFiniteScore(f"cannot discretize non-finite value {x!r}")
        for j, c in enumerate(self.cuts):
            if x <= c:
                return j
        return len(self.names) - 1

    def level_name_of(self, x: float) -> str:
        return self.names[self.level_of(x)]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown level label {name!r}; scheme has {self.names}") from None

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "percentiles": list(self.percentiles),
            "cuts": list(self.cuts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LevelScheme":
        return cls(
            names=tuple(str(n) for n in d["names"]),
            percentiles=tuple(float(p) for p in d["percentiles"]),
            cuts=tuple(float(c) for c in d["cuts"]),
        )


def level_of(scheme: LevelScheme, x: float) -> int:
    return scheme.level_of(x)


def fit_scheme(scores, names, percentiles) -> LevelScheme:
    """Fit cut points at the given percentiles of ``scores``."""
    names = tuple(names)
    percentiles = tuple(float(p) for p in percentiles)
    if any(a >= b for a, b in zip(percentiles, percentiles[1:])):
        raise NonMonotonePercentiles(f"percentiles not strictly increasing: {percentiles}")
    cuts = tuple(perc(scores, p) for p in percentiles)
    return LevelScheme(names=names, percentiles=percentiles, cuts=cuts)


def default_names(n_levels: int) -> tuple[str, ...]:
    if n_levels == 3:
        return DEFAULT_NAMES_3
    if n_levels == 5:
        return DEFAULT_NAMES_5
    return tuple(f"L{i + 1}" for i in range(n_levels))


def assign_levels(gallery, scheme_rel: LevelScheme, scheme_aes: LevelScheme):
    """Return a copy of ``gallery`` with every record's level indices set.

    Requires both scores on every record; raises :class:`MissingScore` naming
    the first offender.  Warns when a level ends up empty on either axis
    (degenerate score distributions collapse onto the lowest level).
    """
    from .gallery import Gallery  # runtime import; gallery depends on this module

    new_records = []
    rel_counts = [0] * scheme_rel.n_levels
    aes_counts = [0] * scheme_aes.n_levels
    for rec in gallery.records:
        if rec.rel_score is None or rec.aes_score is None:
            raise MissingScore(f"record {rec.id!r} lacks a relevance or aesthetic score")
        rl = scheme_rel.level_of(rec.rel_score)
        al = scheme_aes.level_of(rec.aes_score)
        rel_counts[rl] += 1
        aes_counts[al] += 1
        new_records.append(dataclasses.replace(rec, rel_level=rl, aes_level=al))
    for axis, scheme, counts in (("rel", scheme_rel, rel_counts), ("aes", scheme_aes, aes_counts)):
        for name, count in zip(scheme.names, counts):
            if count == 0:
                warnings.warn(f"{axis} level {name!r} holds no records", stacklevel=2)
    return Gallery(
        records=tuple(new_records),
        dim=gallery.dim,
        level_scheme_rel=scheme_rel,
        level_scheme_aes=scheme_aes,
    )
