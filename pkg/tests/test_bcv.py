import numpy as np
import pytest

from lapbcv import (
    BlobSpec,
    averaged_bcv,
    bcv_loss,
    find_minima,
    gaussian_blobs,
    normalized_laplacian,
    partition_quadrants,
    rbf_weight_matrix,
    regularized_inverse,
    score_grid,
    shuffle_and_partition,
    shuffle_permutation,
    truncated_pseudoinverse,
)
from lapbcv._seeds import STREAM_HAAR, STREAM_SHUFFLE, derive_seed
from lapbcv.bcv import BcvScoreGrid, QuadrantSplit
from lapbcv.errors import EmptyGrid, RankOutOfRange, TooSmall


def oracle_loss(split, k):
    """Literal transliteration: rank-k SVD reconstruction of E, Penrose
    pseudo-inverse, squared-residual sum over the holdout."""
    u, s, vt = np.linalg.svd(split.e)
    ek = (u[:, :k] * s[:k][None, :]) @ vt[:k]
    p = np.linalg.pinv(ek)
    return float(np.sum((split.a - split.b @ p @ split.c) ** 2))


# ------------------------------------------------------- shuffle and partition

def _identity_seed(n):
    for seed in range(100_000):
        if np.array_equal(shuffle_permutation(n, seed), np.arange(n)):
            return seed
    raise AssertionError("no identity permutation seed found")


def test_identity_permutation_gives_exact_blocks():
    m = np.arange(16, dtype=float).reshape(4, 4)
    seed = _identity_seed(4)
    split = shuffle_and_partition(m, seed)
    assert np.array_equal(split.a, m[:2, :2])
    assert np.array_equal(split.b, m[:2, 2:])
    assert np.array_equal(split.c, m[2:, :2])
    assert np.array_equal(split.e, m[2:, 2:])


def test_odd_n_drops_last_permuted_row_and_column():
    m = np.arange(25, dtype=float).reshape(5, 5)
    split = shuffle_and_partition(m, seed=3)
    assert split.a.shape == split.b.shape == split.c.shape == split.e.shape == (2, 2)


def test_symmetric_input_reassembles_symmetric():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((8, 8))
    m = m + m.T
    split = shuffle_and_partition(m, seed=11)
    reassembled = np.block([[split.a, split.b], [split.c, split.e]])
    assert np.array_equal(reassembled, reassembled.T)
    # and it is exactly the permuted source
    perm = shuffle_permutation(8, 11)
    assert np.array_equal(reassembled, m[np.ix_(perm, perm)])


def test_too_small():
    with pytest.raises(TooSmall):
        shuffle_and_partition(np.eye(3), seed=0)
    with pytest.raises(TooSmall):
        partition_quadrants(np.eye(2))


# --------------------------------------------------------------- truncated pinv

def test_truncated_pinv_diagonal():
    e = np.diag([3.0, 2.0, 1.0])
    out = truncated_pseudoinverse(e, k=2)
    assert np.allclose(out, np.diag([1 / 3, 1 / 2, 0.0]), atol=1e-15)


def test_truncated_pinv_orthogonal_full_rank_is_transpose():
    from lapbcv import haar_orthogonal
    e = haar_orthogonal(6, seed=2)
    out = truncated_pseudoinverse(e, k=6)
    assert np.abs(out - e.T).max() < 1e-12


def test_truncated_pinv_matches_reconstruction_oracle():
    rng = np.random.default_rng(4)
    e = rng.standard_normal((6, 6))
    k = 3
    u, s, vt = np.linalg.svd(e)
    ek = (u[:, :k] * s[:k][None, :]) @ vt[:k]
    expected = np.linalg.pinv(ek)
    assert np.abs(truncated_pseudoinverse(e, k) - expected).max() < 1e-10


def test_truncated_pinv_rank_bounds():
    e = np.eye(4)
    with pytest.raises(RankOutOfRange):
        truncated_pseudoinverse(e, 0)
    with pytest.raises(RankOutOfRange):
        truncated_pseudoinverse(e, 5)


# ------------------------------------------------------------------- bcv loss

def test_loss_zero_blocks():
    z = np.zeros((3, 3))
    split = QuadrantSplit(a=z, b=z, c=z, e=z)
    assert bcv_loss(split, 1) == 0.0


def test_loss_exact_rank_one():
    # generic outer product: A = B E^+ C exactly, so the loss is roundoff
    rng = np.random.default_rng(8)
    for rep in range(5):
        u = rng.standard_normal(8) + 2.0
        v = rng.standard_normal(8) + 2.0
        m = np.outer(u, v)
        split = partition_quadrants(m)
        loss = bcv_loss(split, 1)
        assert loss <= 1e-18 * np.sum(split.a ** 2)


def test_rank_one_identity_brute_force_4x4():
    # brute-force check of A = B E^+ C on 4x4 outer products
    rng = np.random.default_rng(9)
    for rep in range(20):
        u = rng.standard_normal(4) + 3.0
        v = rng.standard_normal(4) + 3.0
        m = np.outer(u, v)
        a, b, c, e = m[:2, :2], m[:2, 2:], m[2:, :2], m[2:, 2:]
        assert np.allclose(a, b @ np.linalg.pinv(e) @ c, rtol=1e-9, atol=1e-12)


def test_loss_matches_transliteration_oracle():
    rng = np.random.default_rng(10)
    m = rng.standard_normal((8, 8))
    m = m + m.T
    split = partition_quadrants(m)
    prod = bcv_loss(split, 2)
    orac = oracle_loss(split, 2)
    assert abs(prod - orac) <= 1e-10 * abs(orac)


def test_loss_oracle_property_many_matrices():
    rng = np.random.default_rng(11)
    for size in (8, 12):
        h = size // 2
        for rep in range(20):
            m = rng.standard_normal((size, size))
            m = m + m.T
            split = partition_quadrants(m)
            for k in range(1, h + 1):
                prod = bcv_loss(split, k)
                orac = oracle_loss(split, k)
                assert abs(prod - orac) <= 1e-10 * max(abs(orac), 1e-300)


def test_loss_rank_bounds():
    split = partition_quadrants(np.eye(8))
    with pytest.raises(RankOutOfRange):
        bcv_loss(split, 0)
    with pytest.raises(RankOutOfRange):
        bcv_loss(split, 5)


# --------------------------------------------------------------- averaged bcv

def test_averaged_bcv_deterministic_and_bounded():
    rng = np.random.default_rng(12)
    m = rng.standard_normal((12, 12))
    m = m + m.T
    r1 = averaged_bcv(m, k=2, n_shuffles=15, seed=5)
    r2 = averaged_bcv(m, k=2, n_shuffles=15, seed=5)
    assert r1 == r2
    losses = [bcv_loss(shuffle_and_partition(m, derive_seed(5, i)), 2)
              for i in range(15)]
    assert min(losses) <= r1 <= max(losses)


def test_averaged_bcv_default_shuffle_count_is_40():
    import inspect
    sig = inspect.signature(averaged_bcv)
    assert sig.parameters["n_shuffles"].default == 40


def test_relabeling_invariance_in_distribution():
    # permuting the matrix must not shift the expected loss: compare means
    # over 200 shuffles within 3 standard errors
    rng = np.random.default_rng(13)
    m = rng.standard_normal((16, 16))
    m = m + m.T
    perm = rng.permutation(16)
    mp = m[np.ix_(perm, perm)]
    losses_a = np.array([bcv_loss(shuffle_and_partition(m, derive_seed(1, i)), 3)
                         for i in range(200)])
    losses_b = np.array([bcv_loss(shuffle_and_partition(mp, derive_seed(2, i)), 3)
                         for i in range(200)])
    se = np.sqrt(losses_a.var() / 200 + losses_b.var() / 200)
    assert abs(losses_a.mean() - losses_b.mean()) <= 3 * se


# ----------------------------------------------------------------- score grid

def small_dataset(seed=0):
    return gaussian_blobs(BlobSpec(40, 3, 3, 1.0, 30.0, seed=seed,
                                   separation_factor=25.0))


def test_score_grid_shape_and_finiteness():
    data = small_dataset()
    grid = score_grid(data, [2, 3, 4], [0.1, 0.3], [1e-12, 1e-10],
                      n_shuffles=6, master_seed=1)
    assert grid.scores.shape == (3, 2, 2)
    assert np.all(np.isfinite(grid.scores))
    assert np.all(grid.scores >= 0.0)
    assert grid.failures == []


def test_score_grid_rejects_oversized_k():
    data = small_dataset()
    with pytest.raises(RankOutOfRange):
        score_grid(data, [2, 21], [0.1], [1e-12], n_shuffles=4)


def test_score_grid_thread_count_invariance():
    data = small_dataset()
    kw = dict(k_values=[2, 3, 4], gamma_values=[0.1, 0.3],
              xi_values=[1e-12, 1e-10], n_shuffles=6, master_seed=3)
    serial = score_grid(data, **kw, n_jobs=1)
    threaded = score_grid(data, **kw, n_jobs=4)
    assert np.array_equal(serial.scores, threaded.scores)


def test_score_grid_single_cell_reproducible():
    # any cell recomputes bitwise from (master_seed, cell index), under the
    # same single-threaded BLAS context the grid evaluation uses
    from threadpoolctl import threadpool_limits
    data = small_dataset()
    grid = score_grid(data, [2, 3, 4], [0.1, 0.3], [1e-12], n_shuffles=6,
                      master_seed=7)
    ki, gi, xj = 1, 1, 0
    with threadpool_limits(limits=1, user_api="blas"):
        lap = normalized_laplacian(rbf_weight_matrix(data, grid.gamma_values[gi]))
        inv = regularized_inverse(lap, grid.xi_values[xj],
                                  derive_seed(7, STREAM_HAAR, gi, xj))
        cell = averaged_bcv(inv, grid.k_values[ki], 6,
                            derive_seed(7, STREAM_SHUFFLE, ki, gi, xj))
    assert cell == grid.scores[ki, gi, xj]


def test_score_grid_records_missing_cells():
    data = small_dataset()
    grid = score_grid(data, [2, 3], [0.1], [1e-14, 1e-8], n_shuffles=4,
                      master_seed=1, residual_tol=1e-11)
    # the 1e-14 column cannot reach a 1e-11 residual; the 1e-8 column can
    assert np.all(np.isnan(grid.scores[:, 0, 0]))
    assert np.all(np.isfinite(grid.scores[:, 0, 1]))
    assert len(grid.failures) == 1
    assert grid.failures[0][1] == 1e-14


# ---------------------------------------------------------------- find minima

def _grid(scores, k_values, gammas, xis):
    return BcvScoreGrid(k_values=k_values, gamma_values=gammas, xi_values=xis,
                        scores=np.asarray(scores, dtype=float),
                        n_shuffles=1, master_seed=0)


def test_minima_monotone_single_gamma():
    scores = np.array([[[5.0]], [[4.0]], [[3.0]], [[2.0]]])
    grid = _grid(scores, [2, 3, 4, 5], [0.1], [1e-12])
    minima = find_minima(grid)
    assert len(minima) == 1
    assert minima[0].k == 5 and minima[0].on_boundary


def test_minima_unique_interior_cell_first():
    scores = np.full((4, 4, 1), 10.0)
    scores[2, 1, 0] = 1.0
    grid = _grid(scores, [2, 3, 4, 5], [0.1, 0.2, 0.4, 0.8], [1e-12])
    minima = find_minima(grid)
    assert minima[0].k == 4 and minima[0].gamma == 0.2
    assert not minima[0].on_boundary


def test_minima_plateau_deduplication():
    scores = np.full((3, 3, 1), 10.0)
    scores[1, 1, 0] = scores[1, 2, 0] = 2.0  # equal-score adjacent plateau
    grid = _grid(scores, [2, 3, 4], [0.1, 0.2, 0.4], [1e-12])
    minima = find_minima(grid)
    plateau = [m for m in minima if m.score == 2.0]
    assert len(plateau) == 1
    assert plateau[0].k == 3 and plateau[0].gamma == 0.2


def test_minima_respects_missing_cells():
    scores = np.full((3, 2, 2), 5.0)
    scores[:, :, 1] = np.nan
    scores[1, 0, 0] = 1.0
    grid = _grid(scores, [2, 3, 4], [0.1, 0.2], [1e-12, 1e-9])
    minima = find_minima(grid)
    assert all(m.xi == 1e-12 for m in minima)
    assert minima[0].k == 3


def test_minima_empty_grid():
    scores = np.full((2, 2, 2), np.nan)
    grid = _grid(scores, [2, 3], [0.1, 0.2], [1e-12, 1e-9])
    with pytest.raises(EmptyGrid):
        find_minima(grid)


def test_minima_tolerates_partially_missing_slice():
    scores = np.full((3, 2, 1), 5.0)
    scores[2, 1, 0] = np.nan  # one failed cell must not abort the search
    scores[1, 0, 0] = 1.0
    grid = _grid(scores, [2, 3, 4], [0.1, 0.2], [1e-12])
    minima = find_minima(grid)
    assert minima[0].k == 3 and minima[0].gamma == 0.1


def test_minimum_not_above_neighbors_property():
    rng = np.random.default_rng(21)
    scores = rng.uniform(1.0, 9.0, size=(6, 5, 2))
    grid = _grid(scores, [2, 3, 4, 5, 6, 7], [0.1, 0.2, 0.4, 0.8, 1.6],
                 [1e-13, 1e-11])
    for m in find_minima(grid):
        ki = grid.k_values.index(m.k)
        gi = grid.gamma_values.index(m.gamma)
        xj = grid.xi_values.index(m.xi)
        for dk, dg in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ki2, gi2 = ki + dk, gi + dg
            if 0 <= ki2 < 6 and 0 <= gi2 < 5:
                assert m.score <= scores[ki2, gi2, xj]
