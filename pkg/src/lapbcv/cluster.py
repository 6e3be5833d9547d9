"""Spectral clustering with chosen (k, gamma), plus the local-density
feature column used to tame heterogeneous point densities."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from ._seeds import STREAM_KMEANS, derive_seed, rng_from
from .errors import EigensolverFailure, NonFiniteInput, RankOutOfRange
from .graph import AffinityGraph, Dataset, normalized_laplacian, rbf_weight_matrix


@dataclass
class SpectralEmbedding:
    """Eigenvectors of the k smallest generalized eigenvalues, ascending.

    Columns are D-orthonormal (v^T D v = 1) and sign-fixed so the first
    sufficiently nonzero component of each vector is positive.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray


@dataclass
class ClusteringResult:
    labels: np.ndarray
    k: int
    gamma: float
    inertia: float
    seed: int
    degenerate: bool = False


def spectral_embedding(graph, laplacian, k):
    """Solve L_n v = lambda D v for the k smallest eigenpairs.

    D is the diagonal degree matrix of the graph.  Eigenvectors come back
    D-orthonormal from the generalized symmetric solver; signs are fixed
    deterministically.
    """
    ln = laplacian.matrix
    deg = graph.degrees
    n = ln.shape[0]
    if not 1 <= k <= n:
        raise RankOutOfRange(f"k must be in [1, {n}], got {k}")
    try:
        evals, evecs = scipy.linalg.eigh(ln, np.diag(deg))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    evals = evals[:k]
    evecs = evecs[:, :k]
    # deterministic sign: first component larger than 1e-12 * max|v| positive
    for j in range(evecs.shape[1]):
        v = evecs[:, j]
        big = np.abs(v) > 1e-12 * np.abs(v).max()
        idx = int(np.argmax(big))
        if v[idx] < 0:
            evecs[:, j] = -v
    return SpectralEmbedding(vectors=evecs, eigenvalues=evals)


def kmeans_assign(points, k, seed=0):
    """k-means with k-means++ init, 10 restarts, 300 iterations, tol 1e-6.

    All-identical inputs with k > 1 cannot support a meaningful split, so
    they get a deterministic round-robin assignment flagged ``degenerate``
    instead of an error (grid sweeps must not abort mid-run).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise RankOutOfRange(f"k must be in [1, {n}], got {k}")
    if k > 1 and np.all(pts == pts[0]):
        labels = np.arange(n) % k
        return ClusteringResult(labels=labels, k=int(k), gamma=np.nan,
                                inertia=0.0, seed=int(seed), degenerate=True)
    state = int(rng_from(STREAM_KMEANS, seed).integers(0, 2**32 - 1))
    km = KMeans(n_clusters=int(k), init="k-means++", n_init=10, max_iter=300,
                tol=1e-6, random_state=state)
    labels = km.fit_predict(pts)
    return ClusteringResult(labels=labels.astype(np.int64), k=int(k),
                            gamma=np.nan, inertia=float(km.inertia_),
                            seed=int(seed))


def spectral_cluster(data, k, gamma, seed=0):
    """Full pipeline: RBF graph -> normalized Laplacian -> generalized
    eigenvectors -> k-means on the embedding.  Labels stay row-aligned
    with the input."""
    graph = rbf_weight_matrix(data, gamma)
    lap = normalized_laplacian(graph)
    emb = spectral_embedding(graph, lap, k)
    result = kmeans_assign(emb.vectors, k, seed=seed)
    return ClusteringResult(labels=result.labels, k=result.k,
                            gamma=float(gamma), inertia=result.inertia,
                            seed=result.seed, degenerate=result.degenerate)


def degree_feature_column(data, gamma_density=1e-2, column_name="local_density",
                          chunk=512):
    """Append a local point-density column: entry i is the RBF degree
    sum_j exp(-gamma_density * ||x_i - x_j||^2) over the full input.

    Computed in row blocks so large inputs never materialize the full
    pairwise matrix.
    """
    if not gamma_density > 0:
        raise ValueError("gamma_density must be positive")
    x = data.values
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains NaN or Inf")
    n = x.shape[0]
    sq = np.einsum("ij,ij->i", x, x)
    density = np.empty(n)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (x[lo:hi] @ x.T)
        np.maximum(d2, 0.0, out=d2)
        density[lo:hi] = np.exp(-gamma_density * d2).sum(axis=1)
    names = None
    if data.column_names is not None:
        names = list(data.column_names) + [column_name]
    return Dataset(values=np.column_stack([x, density]), column_names=names,
                   truth_labels=data.truth_labels, coarse_labels=data.coarse_labels)
