"""Bi-cross-validation of the inverted Laplacian over a (k, gamma, xi) grid.

Each grid cell holds the average, over independent symmetric shuffles, of
the holdout loss sum((A - B pinv(E_k) C)^2) on the 2x2 equal-quadrant split
of the shuffled inverse.  Per-shuffle seeds are derived from the master
seed and the cell index, so any single cell is bitwise reproducible in
isolation and results do not depend on evaluation order or thread count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import _kernels
from ._seeds import STREAM_HAAR, STREAM_SHUFFLE, derive_seed, rng_from
from .errors import EmptyGrid, RankOutOfRange, SingularAfterRegularization, TooSmall
from .graph import (
    RegularizedInverseLaplacian,
    normalized_laplacian,
    rbf_weight_matrix,
    regularized_inverse,
    sigma_of_gamma,
)


@dataclass
class QuadrantSplit:
    """Equal quadrants [[a, b], [c, e]] of a shuffled square matrix."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    e: np.ndarray

    @property
    def h(self):
        return self.a.shape[0]


@dataclass
class BcvScoreGrid:
    """Averaged BCV score on the (k, gamma, xi) grid.

    ``scores[ki, gi, xj]`` is NaN exactly where the inversion failed; such
    cells are listed in ``failures`` as (gamma, xi, message).
    """

    k_values: list
    gamma_values: list
    xi_values: list
    scores: np.ndarray
    n_shuffles: int
    master_seed: int
    failures: list = field(default_factory=list)

    def is_missing(self):
        return ~np.isfinite(self.scores)


@dataclass(frozen=True)
class GridMinimum:
    """A 4-neighborhood local minimum of one xi slice of the score grid."""

    k: int
    gamma: float
    xi: float
    score: float
    on_boundary: bool

    @property
    def sigma(self):
        return sigma_of_gamma(self.gamma)


def shuffle_permutation(n, seed):
    """The uniform permutation a given shuffle seed produces."""
    return rng_from(seed).permutation(n)


def partition_quadrants(matrix):
    """Split a matrix into four equal quadrant copies, dropping the last
    row/column when the size is odd."""
    n = matrix.shape[0]
    if n < 4:
        raise TooSmall(f"need n >= 4 to form quadrants, got {n}")
    h = n // 2
    m = matrix
    return QuadrantSplit(
        a=np.ascontiguousarray(m[:h, :h]),
        b=np.ascontiguousarray(m[:h, h:2 * h]),
        c=np.ascontiguousarray(m[h:2 * h, :h]),
        e=np.ascontiguousarray(m[h:2 * h, h:2 * h]),
    )


def shuffle_and_partition(matrix, seed):
    """Apply one uniform permutation to rows and columns simultaneously,
    then split into equal quadrants.

    The simultaneous permutation preserves the similarity-matrix semantics
    (and symmetry) of the input; for odd n the last permuted row and column
    are dropped, so a different sample is excluded on each shuffle.
    """
    m = np.asarray(matrix)
    n = m.shape[0]
    if n < 4:
        raise TooSmall(f"need n >= 4 to shuffle-and-partition, got {n}")
    perm = shuffle_permutation(n, seed)
    return partition_quadrants(m[np.ix_(perm, perm)])


def truncated_pseudoinverse(e, k, rtol=1e-12):
    """Pseudo-inverse of the rank-k truncation, straight from SVD factors.

    Keeps the k largest singular triplets and inverts those above
    ``rtol * sigma_max``; the rest contribute zero.  This is the
    numerically clean route; it does not reproduce the roundoff noise
    floor of an explicit reconstruction (see ``bcv_loss``).
    """
    e = np.asarray(e, dtype=np.float64)
    h = e.shape[0]
    if not 1 <= k <= h:
        raise RankOutOfRange(f"k must be in [1, {h}], got {k}")
    u, s, vt = np.linalg.svd(e)
    smax = s[0] if s.size else 0.0
    sinv = np.where(s[:k] > rtol * smax, 1.0 / np.where(s[:k] > 0, s[:k], 1.0), 0.0)
    return (vt[:k].T * sinv[None, :]) @ u[:, :k].T


def bcv_loss(split, k):
    """Holdout loss sum((A - B pinv(E_k) C)^2) for one quadrant split.

    The rank-k pseudo-inverse is materialized as an explicit float64
    matrix (conventional machine-precision singular-value cutoff) and
    applied with plain matrix products.  On badly scaled inverses, where
    the top singular group sits many orders above the rest, the product
    roundoff at eps * |B| * |pinv| penalizes every rank past the dominant
    group -- that penalty is what turns the score curve upward after the
    true cluster count, so it is deliberately kept rather than engineered
    away with a fused factored composition.
    """
    h = split.a.shape[0]
    if not 1 <= k <= h:
        raise RankOutOfRange(f"k must be in [1, {h}], got {k}")
    return _kernels.bcv_loss_quadrants(split.a, split.b, split.c, split.e, int(k))


def averaged_bcv(inv_laplacian, k, n_shuffles=40, seed=0):
    """Mean BCV loss over independent shuffles of the inverted Laplacian.

    Per-shuffle seeds derive from (seed, shuffle index), so the mean is
    independent of evaluation order.
    """
    m = inv_laplacian.as_float64() if isinstance(
        inv_laplacian, RegularizedInverseLaplacian) else np.asarray(inv_laplacian, dtype=np.float64)
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    losses = np.empty(n_shuffles)
    for i in range(n_shuffles):
        split = shuffle_and_partition(m, derive_seed(seed, i))
        losses[i] = bcv_loss(split, k)
    return float(np.mean(losses))


def _eval_column(data, gamma, xi, k_values, gi, xj, n_shuffles, master_seed,
                 residual_tol):
    """All k cells of one (gamma, xi) column; returns (scores, error)."""
    graph = rbf_weight_matrix(data, gamma)
    lap = normalized_laplacian(graph)
    try:
        inv = regularized_inverse(
            lap, xi, derive_seed(master_seed, STREAM_HAAR, gi, xj),
            residual_tol=residual_tol)
    except SingularAfterRegularization as exc:
        return None, str(exc)
    m = inv.as_float64()
    out = np.empty(len(k_values))
    for ki, k in enumerate(k_values):
        cell_seed = derive_seed(master_seed, STREAM_SHUFFLE, ki, gi, xj)
        out[ki] = averaged_bcv(m, k, n_shuffles, cell_seed)
    return out, None


def score_grid(data, k_values, gamma_values, xi_values, n_shuffles=40,
               master_seed=0, n_jobs=1, residual_tol=1e-6):
    """Fill the |k| x |gamma| x |xi| BCV score grid.

    For each (gamma, xi) the graph, Laplacian and regularized inverse are
    built once; every (k, gamma, xi) cell then draws its own shuffles from
    seeds derived from (master_seed, cell index).  Columns whose inversion
    fails are recorded as missing, never silently skipped.  Columns are
    independent and may be evaluated on ``n_jobs`` threads.

    The whole evaluation runs under a single-threaded BLAS context: BLAS
    thread splitting changes floating-point reduction order, so pinning it
    is what makes grids bitwise identical for any ``n_jobs`` (and on small
    kernels it is also faster).  To recompute one cell in isolation and
    match the stored value bitwise, evaluate under the same context (see
    ``threadpoolctl.threadpool_limits``).
    """
    k_values = [int(k) for k in k_values]
    gamma_values = [float(g) for g in gamma_values]
    xi_values = [float(x) for x in xi_values]
    if not k_values or not gamma_values or not xi_values:
        raise ValueError("all grid axes must be non-empty")
    if min(k_values) < 1 or min(gamma_values) <= 0 or min(xi_values) <= 0:
        raise ValueError("grid axes must be positive")
    if sorted(k_values) != k_values or sorted(gamma_values) != gamma_values \
            or sorted(xi_values) != xi_values:
        raise ValueError("grid axes must be ascending")
    n = data.n_samples
    if max(k_values) > n // 2:
        raise RankOutOfRange(
            f"max k {max(k_values)} exceeds quadrant size {n // 2}")

    scores = np.full((len(k_values), len(gamma_values), len(xi_values)), np.nan)
    failures = []
    columns = [(gi, xj) for gi in range(len(gamma_values))
               for xj in range(len(xi_values))]

    def run(col):
        gi, xj = col
        return _eval_column(data, gamma_values[gi], xi_values[xj], k_values,
                            gi, xj, n_shuffles, master_seed, residual_tol)

    with threadpool_limits(limits=1, user_api="blas"):
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                results = list(pool.map(run, columns))
        else:
            results = [run(col) for col in columns]

    for (gi, xj), (col_scores, err) in zip(columns, results):
        if err is not None:
            failures.append((gamma_values[gi], xi_values[xj], err))
        else:
            scores[:, gi, xj] = col_scores

    return BcvScoreGrid(k_values=k_values, gamma_values=gamma_values,
                        xi_values=xi_values, scores=scores,
                        n_shuffles=int(n_shuffles), master_seed=int(master_seed),
                        failures=failures)


def find_minima(grid):
    """Local minima of each xi slice under the 4-neighborhood in (k, gamma).

    A cell is a minimum when its score is <= every existing neighbor; a
    plateau of equal-score adjacent minima is reported once, at its
    lexicographically smallest (k, gamma).  Cells on the edge of the
    searched plane are flagged ``on_boundary``.  Missing cells (failed
    inversions) are treated as absent neighbors and are never minima
    themselves, so a failure artifact can never be selected; EmptyGrid is
    raised only when no slice has any populated cell.
    """
    s = grid.scores
    nk, ng, nx = s.shape
    if not np.any(np.isfinite(s)):
        raise EmptyGrid("no populated cells in any xi slice of the grid")

    minima = []
    for xj in range(nx):
        plane = s[:, :, xj]
        finite = np.isfinite(plane)
        if not finite.any():
            continue
        is_min = np.zeros((nk, ng), dtype=bool)
        for ki in range(nk):
            for gi in range(ng):
                if not finite[ki, gi]:
                    continue
                v = plane[ki, gi]
                ok = True
                for dk, dg in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    ki2, gi2 = ki + dk, gi + dg
                    if 0 <= ki2 < nk and 0 <= gi2 < ng and finite[ki2, gi2]:
                        if plane[ki2, gi2] < v:
                            ok = False
                            break
                is_min[ki, gi] = ok
        # deduplicate plateaus: flood-fill equal-score adjacent minima
        seen = np.zeros((nk, ng), dtype=bool)
        for ki in range(nk):
            for gi in range(ng):
                if not is_min[ki, gi] or seen[ki, gi]:
                    continue
                v = plane[ki, gi]
                stack, cells = [(ki, gi)], []
                seen[ki, gi] = True
                while stack:
                    ck, cg = stack.pop()
                    cells.append((ck, cg))
                    for dk, dg in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                        nk2, ng2 = ck + dk, cg + dg
                        if 0 <= nk2 < nk and 0 <= ng2 < ng and not seen[nk2, ng2] \
                                and is_min[nk2, ng2] and plane[nk2, ng2] == v:
                            seen[nk2, ng2] = True
                            stack.append((nk2, ng2))
                rk, rg = min(cells)
                on_edge = rk in (0, nk - 1) or rg in (0, ng - 1)
                minima.append(GridMinimum(
                    k=grid.k_values[rk], gamma=grid.gamma_values[rg],
                    xi=grid.xi_values[xj], score=float(v), on_boundary=on_edge))
    minima.sort(key=lambda m: (m.score, m.k, m.gamma, m.xi))
    return minima
