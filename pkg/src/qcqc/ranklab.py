"""Numerical rank analysis of structured query perturbations.

Given original query embeddings (rows of ``original``), their perturbed
counterparts ``original + delta`` (e.g. embeddings of completed queries),
and gallery embeddings ``targets``, the score matrices are

    scores_original  = original  @ targets.T
    scores_perturbed = (original + delta) @ targets.T

Splitting coordinate space along the row space of ``original`` (an SVD
right-basis split into ``row_basis`` and ``null_basis``) decomposes the
perturbed scores into a part carried by the preserved row space and a novel
part contributed by out-of-span perturbation directions:

    scores_perturbed = base_part + novel_part
    base_part  = (original_in + delta_in) @ targets_in.T
    novel_part = delta_out @ targets_out.T

Under four checkable assumptions -- the perturbation is spectrally smaller
than the smallest nonzero singular value; some r gallery columns of
base_part form a basis of its column space; adding the projected novel part
to those columns is a contraction; and at least one disjoint column carries
a genuinely new direction -- the perturbed score matrix has strictly larger
rank.  This module verifies all of that numerically on given or generated
instances.
"""
from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from .errors import BadIndexSet, NonFinite, ZeroMatrix

ORTH_TOL = 1e-10
SPAN_TOL = 1e-10
_EPS = float(np.finfo(np.float64).eps)


def _as_matrix(value, name: str) -> np.ndarray:
    m = np.asarray(value, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{name} contains NaN or infinity")
    return m


def spectral_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def rank_tolerance(m: np.ndarray, scale: float | None = None) -> float:
    """Dimension-scaled machine-epsilon rank threshold."""
    if m.size == 0:
        return 0.0
    top = spectral_norm(m)
    if scale is not None:
        top = max(top, scale)
    return max(m.shape) * _EPS * top


def rank_of(m, tol: float | None = None, scale: float | None = None) -> int:
    """Numerical rank: singular values above ``tol``.

    ``scale`` floors the default tolerance at the magnitude of the data the
    matrix was derived from, so cancellation residue never counts as rank.
    """
    m = _as_matrix(m, "matrix")
    if m.size == 0:
        return 0
    svals = np.linalg.svd(m, compute_uv=False)
    if tol is None:
        tol = max(m.shape) * _EPS * max(float(svals[0]), scale or 0.0)
    return int(np.sum(svals > tol))


def orthonormal_range(m: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the column space, SVD-truncated at the rank tol."""
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, svals, _ = np.linalg.svd(m, full_matrices=False)
    tol = max(m.shape) * _EPS * max(float(svals[0]) if svals.size else 0.0, scale or 0.0)
    return u[:, svals > tol]


def projector(m: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Orthogonal projector onto the column space of ``m``."""
    q = orthonormal_range(m, scale=scale)
    if q.shape[1] == 0:
        return np.zeros((m.shape[0], m.shape[0]))
    return q @ q.T


def pinv_truncated(m: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Pseudo-inverse via SVD with singular values below the rank tol dropped."""
    if m.size == 0:
        return np.zeros((m.shape[1], m.shape[0]))
    u, svals, vt = np.linalg.svd(m, full_matrices=False)
    tol = max(m.shape) * _EPS * max(float(svals[0]) if svals.size else 0.0, scale or 0.0)
    keep = svals > tol
    inv = np.zeros_like(svals)
    inv[keep] = 1.0 / svals[keep]
    return vt.T @ (inv[:, None] * u.T)


@dataclasses.dataclass(frozen=True)
class PerturbationInstance:
    original: np.ndarray   # (m, d) query embeddings
    delta: np.ndarray      # (m, d) perturbation
    targets: np.ndarray    # (n, d) gallery embeddings
    perturbed: np.ndarray  # original + delta
    rank: int              # numerical rank r of original
    sigma_min_nonzero: float
    row_basis: np.ndarray   # (d, r) orthonormal, spans row space of original
    null_basis: np.ndarray  # (d, d-r) orthonormal complement


@dataclasses.dataclass(frozen=True)
class BlockDecomposition:
    original_in: np.ndarray   # original @ row_basis      (m, r)
    delta_in: np.ndarray      # delta @ row_basis         (m, r)
    delta_out: np.ndarray     # delta @ null_basis        (m, d-r)
    targets_in: np.ndarray    # targets @ row_basis       (n, r)
    targets_out: np.ndarray   # targets @ null_basis      (n, d-r)
    base_part: np.ndarray     # (original_in + delta_in) @ targets_in.T  (m, n)
    novel_part: np.ndarray    # delta_out @ targets_out.T                (m, n)
    base_projector: np.ndarray  # onto col(base_part)                    (m, m)
    novel_residual: np.ndarray  # (I - base_projector) @ novel_part      (m, n)
    scores_original: np.ndarray   # original @ targets.T
    scores_perturbed: np.ndarray  # perturbed @ targets.T

    @property
    def data_scale(self) -> float:
        """Magnitude floor for rank decisions on derived blocks."""
        return spectral_norm(self.base_part) + spectral_norm(self.novel_part)


def decompose(original, delta, targets) -> tuple[PerturbationInstance, BlockDecomposition]:
    """Split the perturbed score matrix along the original row space."""
    a = _as_matrix(original, "original")
    dlt = _as_matrix(delta, "delta")
    c = _as_matrix(targets, "targets")
    if dlt.shape != a.shape:
        raise ValueError(f"delta shape {dlt.shape} != original shape {a.shape}")
    if c.shape[1] != a.shape[1]:
        raise ValueError(f"targets dim {c.shape[1]} != original dim {a.shape[1]}")
    svals_all = np.linalg.svd(a, compute_uv=False)
    if svals_all.size == 0 or float(svals_all[0]) == 0.0:
        raise ZeroMatrix("original embedding matrix is zero")

    u, svals, vt = np.linalg.svd(a)
    tol = max(a.shape) * _EPS * float(svals[0])
    r = int(np.sum(svals > tol))
    v = vt.T
    row_basis = v[:, :r]
    null_basis = v[:, r:]
    inst = PerturbationInstance(
        original=a,
        delta=dlt,
        targets=c,
        perturbed=a + dlt,
        rank=r,
        sigma_min_nonzero=float(svals[r - 1]),
        row_basis=row_basis,
        null_basis=null_basis,
    )

    original_in = a @ row_basis
    delta_in = dlt @ row_basis
    delta_out = dlt @ null_basis
    targets_in = c @ row_basis
    targets_out = c @ null_basis
    base_part = (original_in + delta_in) @ targets_in.T
    novel_part = delta_out @ targets_out.T
    scale = spectral_norm(base_part) + spectral_norm(novel_part)
    base_projector = projector(base_part, scale=scale)
    novel_residual = novel_part - base_projector @ novel_part
    blocks = BlockDecomposition(
        original_in=original_in,
        delta_in=delta_in,
        delta_out=delta_out,
        targets_in=targets_in,
        targets_out=targets_out,
        base_part=base_part,
        novel_part=novel_part,
        base_projector=base_projector,
        novel_residual=novel_residual,
        scores_original=a @ c.T,
        scores_perturbed=(a + dlt) @ c.T,
    )
    return inst, blocks


# Assumption labels, in checking order.
A_SPECTRAL = "spectral_margin"    # ||delta||_2 < sigma_r(original)
A_BASIS = "basis_rank"            # chosen columns of base_part have rank r
A_CONTRACTION = "contraction"     # ||pinv(base_I) P novel_I||_2 < 1
A_NOVEL = "novel_directions"      # residual novel columns add rank k >= 1
ASSUMPTION_ORDER = (A_SPECTRAL, A_BASIS, A_CONTRACTION, A_NOVEL)


@dataclasses.dataclass(frozen=True)
class AssumptionReport:
    delta_norm: float
    sigma_min_nonzero: float
    spectral_ok: bool
    basis_rank: int
    basis_ok: bool
    contraction_norm: float
    contraction_ok: bool
    novel_rank: int
    novel_ok: bool

    def all_ok(self) -> bool:
        return self.spectral_ok and self.basis_ok and self.contraction_ok and self.novel_ok

    def first_failure(self) -> str | None:
        for label, ok in zip(
            ASSUMPTION_ORDER,
            (self.spectral_ok, self.basis_ok, self.contraction_ok, self.novel_ok),
        ):
            if not ok:
                return label
        return None


def _validate_sets(n: int, r: int, basis_idx, extra_idx) -> tuple[list[int], list[int]]:
    basis = [int(i) for i in basis_idx]
    extra = [int(i) for i in extra_idx]
    for name, idx in (("basis", basis), ("extra", extra)):
        if len(set(idx)) != len(idx):
            raise BadIndexSet(f"{name} index set has repeated indices: {idx}")
        if any(i < 0 or i >= n for i in idx):
            raise BadIndexSet(f"{name} index set out of range [0, {n}): {idx}")
    if len(basis) != r:
        raise BadIndexSet(f"basis index set must have exactly {r} indices, got {len(basis)}")
    if set(basis) & set(extra):
        raise BadIndexSet(f"index sets overlap: {sorted(set(basis) & set(extra))}")
    return basis, extra


def contraction_norm(blocks: BlockDecomposition, basis_idx) -> float:
    base_i = blocks.base_part[:, list(basis_idx)]
    novel_i = blocks.novel_part[:, list(basis_idx)]
    pinv = pinv_truncated(base_i, scale=blocks.data_scale)
    return spectral_norm(pinv @ blocks.base_projector @ novel_i)


def novel_rank(blocks: BlockDecomposition, basis_idx, extra_idx) -> int:
    """Rank contributed by ``extra_idx`` residual columns outside the span of
    the ``basis_idx`` residual columns."""
    z = blocks.novel_residual
    z_i = z[:, list(basis_idx)]
    p_zi = projector(z_i, scale=blocks.data_scale)
    w = z[:, list(extra_idx)] - p_zi @ z[:, list(extra_idx)]
    return rank_of(w, scale=blocks.data_scale)


def check_assumptions(
    inst: PerturbationInstance, blocks: BlockDecomposition, basis_idx, extra_idx
) -> AssumptionReport:
    """Measure all four rank-growth assumptions for the given index sets."""
    n = inst.targets.shape[0]
    basis, extra = _validate_sets(n, inst.rank, basis_idx, extra_idx)
    delta_norm = spectral_norm(inst.delta)
    basis_rank = rank_of(blocks.base_part[:, basis], scale=blocks.data_scale)
    nu = contraction_norm(blocks, basis)
    k = novel_rank(blocks, basis, extra)
    return AssumptionReport(
        delta_norm=delta_norm,
        sigma_min_nonzero=inst.sigma_min_nonzero,
        spectral_ok=delta_norm < inst.sigma_min_nonzero,
        basis_rank=basis_rank,
        basis_ok=basis_rank == inst.rank,
        contraction_norm=nu,
        contraction_ok=nu < 1.0,
        novel_rank=k,
        novel_ok=k >= 1,
    )


# --- index-set search ---------------------------------------------------------


def greedy_pivot_columns(m: np.ndarray, max_count: int, tol: float,
                         candidates=None) -> list[int]:
    """Greedy rank-revealing column selection (modified Gram-Schmidt).

    Repeatedly picks the candidate column with the largest residual norm
    (ties to the lowest index) and deflates; stops when the best residual
    falls to ``tol``, so duplicate or dependent columns are never selected.
    """
    if candidates is None:
        candidates = range(m.shape[1])
    pool = list(candidates)
    residual = m[:, pool].astype(np.float64, copy=True)
    chosen: list[int] = []
    taken = np.zeros(len(pool), dtype=bool)
    for _ in range(min(max_count, len(pool))):
        norms = np.linalg.norm(residual, axis=0)
        norms[taken] = -1.0
        j = int(np.argmax(norms))
        if norms[j] <= tol:
            break
        taken[j] = True
        chosen.append(pool[j])
        q = residual[:, j] / norms[j]
        residual -= np.outer(q, q @ residual)
    return chosen


def _greedy_extra(blocks: BlockDecomposition, basis: list[int]) -> list[int]:
    n = blocks.novel_residual.shape[1]
    complement = [j for j in range(n) if j not in set(basis)]
    if not complement:
        return []
    z_i = blocks.novel_residual[:, basis]
    p_zi = projector(z_i, scale=blocks.data_scale)
    w = blocks.novel_residual - p_zi @ blocks.novel_residual
    tol = rank_tolerance(w, scale=blocks.data_scale)
    return greedy_pivot_columns(w, max_count=len(complement), tol=tol, candidates=complement)


def _basis_candidates(inst, blocks) -> list[list[int]]:
    """Basis orderings to try: novel-free columns first, then plain pivoting."""
    x = blocks.base_part
    tol = rank_tolerance(x, scale=blocks.data_scale)
    r = inst.rank
    out = []
    ynorms = np.linalg.norm(blocks.novel_part, axis=0)
    quiet = [j for j in range(x.shape[1]) if ynorms[j] <= SPAN_TOL * max(blocks.data_scale, 1.0)]
    if quiet:
        chosen = greedy_pivot_columns(x, r, tol, candidates=quiet)
        if len(chosen) < r:
            rest = [j for j in range(x.shape[1]) if j not in set(chosen)]
            chosen += greedy_pivot_columns(
                x - projector(x[:, chosen], scale=blocks.data_scale) @ x if chosen else x,
                r - len(chosen), tol, candidates=rest,
            )
        if len(chosen) == r:
            out.append(sorted(chosen))
    plain = greedy_pivot_columns(x, r, tol)
    if len(plain) == r and sorted(plain) not in out:
        out.append(sorted(plain))
    return out


def _search_sets(inst, blocks) -> tuple[tuple[list[int], list[int]] | None, str | None]:
    """Find (basis, extra) satisfying assumptions ii-iv, or the failure label."""
    r = inst.rank
    n = inst.targets.shape[0]
    if rank_of(blocks.base_part, scale=blocks.data_scale) < r:
        return None, A_BASIS
    reached_contraction = False
    reached_novel = False
    for basis in _basis_candidates(inst, blocks):
        if rank_of(blocks.base_part[:, basis], scale=blocks.data_scale) != r:
            continue
        reached_contraction = True
        if contraction_norm(blocks, basis) >= 1.0:
            continue
        reached_novel = True
        extra = _greedy_extra(blocks, basis)
        if extra:
            return (basis, extra), None
    if n <= 12:
        # Exhaustive fallback over basis sets; the greedy extra search is
        # already rank-optimal for a fixed basis.
        for combo in itertools.combinations(range(n), r):
            basis = list(combo)
            if rank_of(blocks.base_part[:, basis], scale=blocks.data_scale) != r:
                continue
            reached_contraction = True
            if contraction_norm(blocks, basis) >= 1.0:
                continue
            reached_novel = True
            extra = _greedy_extra(blocks, basis)
            if extra:
                return (basis, extra), None
    if reached_novel:
        return None, A_NOVEL
    if reached_contraction:
        return None, A_CONTRACTION
    return None, A_BASIS


def find_sets(inst: PerturbationInstance, blocks: BlockDecomposition):
    """Search for index sets satisfying the rank-growth assumptions.

    Returns ``(basis_idx, extra_idx)`` or ``None`` when the search (greedy,
    with an exhaustive fallback for small galleries) finds nothing -- a
    legitimate outcome, since the assumptions are existential.
    """
    sets, _ = _search_sets(inst, blocks)
    if sets is None:
        return None
    basis, extra = sets
    return tuple(basis), tuple(extra)


# --- verdicts -----------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class BasisRankVerdict:
    status: str  # holds | fails | inapplicable
    rank_expected: int
    rank_measured: int | None
    contraction: float | None


def verify_basis_rank(
    inst: PerturbationInstance, blocks: BlockDecomposition, basis_idx
) -> BasisRankVerdict:
    """Check that projecting the novel part onto the base span cannot drop
    the rank of the chosen basis columns (a Neumann-series contraction step).

    Hypotheses -- full basis rank and contraction norm below 1 -- gate the
    verdict: instances violating them are ``inapplicable``, not failures.
    """
    basis = [int(i) for i in basis_idx]
    r = inst.rank
    base_i = blocks.base_part[:, basis]
    if rank_of(base_i, scale=blocks.data_scale) != r:
        return BasisRankVerdict("inapplicable", r, None, None)
    nu = contraction_norm(blocks, basis)
    if nu >= 1.0:
        return BasisRankVerdict("inapplicable", r, None, nu)
    combined = base_i + blocks.base_projector @ blocks.novel_part[:, basis]
    measured = rank_of(combined, scale=blocks.data_scale)
    return BasisRankVerdict(
        "holds" if measured == r else "fails",
        rank_expected=r,
        rank_measured=measured,
        contraction=nu,
    )


@dataclasses.dataclass(frozen=True)
class RankGrowthVerdict:
    status: str  # holds | not_applicable | fails
    rank_original: int
    rank_perturbed: int
    preserved_rank: int          # r
    added_rank: int              # k (0 when not applicable)
    failed_assumption: str | None = None
    basis_idx: tuple[int, ...] | None = None
    extra_idx: tuple[int, ...] | None = None
    report: AssumptionReport | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "rank_original": self.rank_original,
            "rank_perturbed": self.rank_perturbed,
            "preserved_rank": self.preserved_rank,
            "added_rank": self.added_rank,
            "failed_assumption": self.failed_assumption,
            "basis_idx": list(self.basis_idx) if self.basis_idx else None,
            "extra_idx": list(self.extra_idx) if self.extra_idx else None,
        }


def verify_rank_growth(original, delta, targets) -> RankGrowthVerdict:
    """End-to-end check that the perturbed score matrix gained rank.

    Pipeline: decompose, search index sets, measure assumptions; when all
    four hold the verdict asserts rank(scores_perturbed) >= r + k > r =
    rank(scores_original) numerically, otherwise reports the first failing
    assumption.
    """
    inst, blocks = decompose(original, delta, targets)
    score_scale = spectral_norm(blocks.scores_original) + spectral_norm(blocks.scores_perturbed)
    rank_sa = rank_of(blocks.scores_original, scale=score_scale)
    rank_sb = rank_of(blocks.scores_perturbed, scale=score_scale)

    delta_norm = spectral_norm(inst.delta)
    if not delta_norm < inst.sigma_min_nonzero:
        return RankGrowthVerdict(
            "not_applicable", rank_sa, rank_sb, inst.rank, 0, failed_assumption=A_SPECTRAL
        )
    sets, failure = _search_sets(inst, blocks)
    if sets is None:
        return RankGrowthVerdict(
            "not_applicable", rank_sa, rank_sb, inst.rank, 0, failed_assumption=failure
        )
    basis, extra = sets
    report = check_assumptions(inst, blocks, basis, extra)
    if not report.all_ok():
        return RankGrowthVerdict(
            "not_applicable", rank_sa, rank_sb, inst.rank, 0,
            failed_assumption=report.first_failure(),
            basis_idx=tuple(basis), extra_idx=tuple(extra), report=report,
        )
    k = report.novel_rank
    holds = rank_sb >= inst.rank + k and rank_sb > rank_sa
    return RankGrowthVerdict(
        "holds" if holds else "fails",
        rank_original=rank_sa,
        rank_perturbed=rank_sb,
        preserved_rank=inst.rank,
        added_rank=k,
        basis_idx=tuple(basis),
        extra_idx=tuple(extra),
        report=report,
    )


# --- instance generators ------------------------------------------------------


def _random_orthonormal(rng, rows: int, cols: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(rows, max(cols, 1))))
    return q[:, :cols]


def _sample_dims(rng, m, d, n) -> tuple[int, int, int, int]:
    m = int(m) if m else int(rng.integers(3, 21))
    d = int(d) if d else int(rng.integers(3, 21))
    n = int(n) if n else int(rng.integers(3, 21))
    r_max = min(min(m, d) - 1, n - 1)
    if r_max < 1:
        raise ValueError(f"dims m={m} d={d} n={n} leave no room for a deficient rank")
    r = int(rng.integers(1, r_max + 1))
    return m, d, n, r


def make_instance(seed: int, m: int | None = None, d: int | None = None,
                  n: int | None = None):
    """Construct an assumption-satisfying (original, delta, targets) triple.

    The original matrix gets well-separated singular values on a random
    rank-r row space.  Targets are built so that r gallery rows dominate the
    in-span block (a clean basis with no novel component, keeping the
    contraction at zero) while the remaining rows carry out-of-span mass
    that the perturbation also occupies -- so the novel residual is nonzero
    exactly off the basis columns.  The perturbation is scaled to half the
    smallest nonzero singular value.
    """
    rng = np.random.default_rng(seed)
    m, d, n, r = _sample_dims(rng, m, d, n)

    v_full = _random_orthonormal(rng, d, d)
    row_basis = v_full[:, :r]
    null_basis = v_full[:, r:]
    u = _random_orthonormal(rng, m, r)
    svals = 1.0 + np.arange(r, dtype=np.float64)  # gaps >= 1, sigma_r = 1
    original = u @ (svals[:, None] * row_basis.T)

    basis_rows = rng.choice(n, size=r, replace=False)
    targets_in = 0.3 * rng.normal(size=(n, r))
    targets_in[basis_rows] = 3.0 * _random_orthonormal(rng, r, r).T
    targets_out = 0.5 * rng.normal(size=(n, d - r))
    targets_out[basis_rows] = 0.0
    targets = targets_in @ row_basis.T + targets_out @ null_basis.T

    delta_in = rng.normal(size=(m, r)) @ row_basis.T
    delta_out = rng.normal(size=(m, d - r)) @ null_basis.T
    raw = delta_in + delta_out
    delta = raw * (0.5 / spectral_norm(raw))  # sigma_r(original) == 1
    return original, delta, targets


def make_basis_rank_instance(seed: int, m: int | None = None, d: int | None = None,
                             n: int | None = None, target_contraction: float = 0.5):
    """Instance plus basis index set satisfying the contraction hypotheses
    with a genuinely nonzero projected novel part on the basis columns."""
    rng = np.random.default_rng(seed)
    m, d, n, r = _sample_dims(rng, m, d, n)

    v_full = _random_orthonormal(rng, d, d)
    row_basis = v_full[:, :r]
    null_basis = v_full[:, r:]
    u = _random_orthonormal(rng, m, r)
    svals = 1.0 + np.arange(r, dtype=np.float64)
    original = u @ (svals[:, None] * row_basis.T)

    basis_rows = rng.choice(n, size=r, replace=False)
    targets_in = 0.3 * rng.normal(size=(n, r))
    targets_in[basis_rows] = 3.0 * _random_orthonormal(rng, r, r).T
    targets_out = 0.5 * rng.normal(size=(n, d - r))
    targets_out[basis_rows] = 0.2 * rng.normal(size=(r, d - r))

    delta_in = rng.normal(size=(m, r)) @ row_basis.T
    delta_out = rng.normal(size=(m, d - r)) @ null_basis.T
    raw = delta_in + delta_out
    delta = raw * (0.5 / spectral_norm(raw))

    def build(scale_out):
        t_out = targets_out.copy()
        t_out[basis_rows] *= scale_out
        return targets_in @ row_basis.T + t_out @ null_basis.T

    targets = build(1.0)
    inst, blocks = decompose(original, delta, targets)
    nu = contraction_norm(blocks, list(basis_rows))
    if nu > 0:
        # The contraction norm is linear in the basis rows' out-of-span mass.
        targets = build(target_contraction / nu)
    return original, delta, targets, tuple(int(i) for i in basis_rows)


def run_campaign(trials: int, seed: int, m: int | None = None, d: int | None = None,
                 n: int | None = None) -> dict:
    """Monte Carlo verification campaign; returns a JSON-ready summary."""
    growth_holds = growth_fails = growth_na = 0
    basis_holds = basis_fails = basis_na = 0
    margins = {
        "spectral": float("inf"),      # sigma_r - ||delta||
        "contraction": float("inf"),   # 1 - contraction norm
        "rank_surplus": float("inf"),  # rank(perturbed scores) - (r + k)
    }
    for t in range(trials):
        original, delta, targets = make_instance(seed + t, m=m, d=d, n=n)
        verdict = verify_rank_growth(original, delta, targets)
        if verdict.status == "holds":
            growth_holds += 1
            rep = verdict.report
            margins["spectral"] = min(margins["spectral"], rep.sigma_min_nonzero - rep.delta_norm)
            margins["contraction"] = min(margins["contraction"], 1.0 - rep.contraction_norm)
            margins["rank_surplus"] = min(
                margins["rank_surplus"],
                verdict.rank_perturbed - (verdict.preserved_rank + verdict.added_rank),
            )
        elif verdict.status == "not_applicable":
            growth_na += 1
        else:
            growth_fails += 1

        b_orig, b_delta, b_targets, basis_idx = make_basis_rank_instance(seed + 10_000 + t,
                                                                         m=m, d=d, n=n)
        b_inst, b_blocks = decompose(b_orig, b_delta, b_targets)
        basis_verdict = verify_basis_rank(b_inst, b_blocks, basis_idx)
        if basis_verdict.status == "holds":
            basis_holds += 1
        elif basis_verdict.status == "inapplicable":
            basis_na += 1
        else:
            basis_fails += 1
    return {
        "trials": trials,
        "seed": seed,
        "dims": {"m": m, "d": d, "n": n},
        "rank_growth": {"holds": growth_holds, "fails": growth_fails,
                        "not_applicable": growth_na},
        "basis_rank": {"holds": basis_holds, "fails": basis_fails,
                       "inapplicable": basis_na},
        "worst_margins": {k: (None if v == float("inf") else v) for k, v in margins.items()},
    }
