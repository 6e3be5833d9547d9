"""Affinity graph, normalized Laplacian and the regularized inverse.

The pipeline here is: RBF weights -> degree vector -> symmetric normalized
Laplacian -> random-regularized inverse.  The Laplacian is exactly singular,
so a small full-rank random regularizer built from a Haar orthogonal matrix
is added before inverting.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._seeds import rng_from
from .errors import (
    GammaOutOfRange,
    NonFiniteInput,
    SingularAfterRegularization,
    ZeroDegree,
)

_LD = np.longdouble


@dataclass
class Dataset:
    """Row-major sample matrix with optional column names and truth labels."""

    values: np.ndarray
    column_names: list | None = None
    truth_labels: np.ndarray | None = None
    coarse_labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        n, d = self.values.shape
        if n < 2 or d < 1:
            raise ValueError("need at least 2 samples and 1 feature")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteInput("dataset contains NaN or Inf")
        if self.column_names is not None and len(self.column_names) != d:
            raise ValueError("column_names length mismatch")
        for lab in (self.truth_labels, self.coarse_labels):
            if lab is not None and len(lab) != n:
                raise ValueError("label length mismatch")

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class KernelParams:
    """RBF precision and regularization scale.

    gamma is an inverse squared length scale; sigma = 1/sqrt(2*gamma) is the
    characteristic distance the kernel resolves.
    """

    gamma: float
    xi: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise GammaOutOfRange(f"gamma must be positive, got {self.gamma}")
        if not (self.xi >= 0 and np.isfinite(self.xi)):
            raise ValueError(f"xi must be non-negative, got {self.xi}")

    @property
    def sigma(self):
        return 1.0 / np.sqrt(2.0 * self.gamma)


def sigma_of_gamma(gamma):
    """Characteristic length scale, sigma = 1/sqrt(2*gamma)."""
    return 1.0 / np.sqrt(2.0 * float(gamma))


@dataclass
class AffinityGraph:
    """Symmetric RBF weight matrix with unit diagonal, plus row-sum degrees."""

    weights: np.ndarray
    degrees: np.ndarray


@dataclass
class NormalizedLaplacian:
    """I - D^{-1/2} W D^{-1/2}; symmetric PSD with sqrt-degree null vector."""

    matrix: np.ndarray


@dataclass
class RegularizedInverseLaplacian:
    """Inverse of the regularized Laplacian, stored in extended precision.

    ``matrix`` is np.longdouble: at regularization scales around 1e-12 the
    inverse has entries of order 1e12, and a float64 representation cannot
    even express an inverse whose multiply-back residual is below 1e-6.
    ``inversion_residual`` is max|L_r @ matrix - I| measured in compensated
    arithmetic.
    """

    matrix: np.ndarray
    inversion_residual: float
    xi_used: float
    haar_seed: int

    def as_float64(self):
        return self.matrix.astype(np.float64)


def rbf_weight_matrix(data, gamma):
    """Dense RBF affinity W_ij = exp(-gamma * ||x_i - x_j||^2).

    Degrees are the row sums.  Output symmetrized and with an exact unit
    diagonal.
    """
    if not (np.isscalar(gamma) and gamma > 0 and np.isfinite(gamma)):
        raise GammaOutOfRange(f"gamma must be a positive real, got {gamma}")
    x = data.values if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("input contains NaN or Inf")
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    w = np.exp(-gamma * d2)
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 1.0)
    return AffinityGraph(weights=w, degrees=w.sum(axis=1))


def degree_matrix(graph):
    """Diagonal of the degree matrix, i.e. the row sums of W."""
    w = graph.weights if isinstance(graph, AffinityGraph) else np.asarray(graph)
    if not np.allclose(w, w.T, atol=1e-12, rtol=0.0):
        raise ValueError("weight matrix must be symmetric")
    return w.sum(axis=1)


def normalized_laplacian(graph):
    """L_n = I - D^{-1/2} W D^{-1/2}, symmetrized against roundoff."""
    w = graph.weights if isinstance(graph, AffinityGraph) else np.asarray(graph)
    deg = graph.degrees if isinstance(graph, AffinityGraph) else w.sum(axis=1)
    if np.any(deg <= 0.0):
        raise ZeroDegree("graph has a node with non-positive degree")
    dm12 = 1.0 / np.sqrt(deg)
    ln = -(w * dm12[:, None]) * dm12[None, :]
    np.fill_diagonal(ln, 1.0 + ln.diagonal())
    ln = 0.5 * (ln + ln.T)
    return NormalizedLaplacian(matrix=ln)


def haar_orthogonal(n, seed):
    """Haar-distributed random orthogonal matrix.

    Gaussian matrix -> QR -> multiply each column of Q by the sign of the
    corresponding diagonal entry of R.  Without the sign correction the QR
    factorization does not sample the Haar measure.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else rng_from(seed)
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs[None, :]


def _split_ld(x_ld):
    """Exact split of a longdouble matrix into head + tail float64 arrays."""
    xh = np.ascontiguousarray(x_ld.astype(np.float64))
    xl = np.ascontiguousarray((x_ld - xh.astype(_LD)).astype(np.float64))
    return xh, xl


def regularized_inverse(laplacian, xi, seed, residual_tol=1e-6, max_refine=6):
    """Invert L_r = L_n + xi * (H - H^T L_n H) with H Haar orthogonal.

    The plain LU inverse of this matrix has a multiply-back residual around
    eps/xi, far above ``residual_tol`` for the interesting xi range, so the
    solution is Newton-refined and stored in extended precision; the
    reported residual is measured with compensated arithmetic.  Raises
    SingularAfterRegularization when the solve fails or the refined
    residual still exceeds the tolerance (xi too small for this matrix at
    working precision; increase xi).
    """
    ln = laplacian.matrix if isinstance(laplacian, NormalizedLaplacian) else np.asarray(laplacian)
    n = ln.shape[0]
    if not (xi > 0 and np.isfinite(xi)):
        raise SingularAfterRegularization(
            f"xi must be > 0 (the unregularized Laplacian is singular); got {xi}")
    h = haar_orthogonal(n, seed)
    lr = np.ascontiguousarray(ln + xi * (h - h.T @ ln @ h))
    try:
        x0 = np.linalg.solve(lr, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SingularAfterRegularization(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(x0)):
        raise SingularAfterRegularization("linear solve produced non-finite entries")

    x_ld = x0.astype(_LD)
    resid_mat = np.empty((n, n))
    best = np.inf
    for _ in range(max_refine):
        xh, xl = _split_ld(x_ld)
        rmax = _kernels.residual_dd(lr, xh, xl, resid_mat)
        best = min(best, rmax)
        if rmax <= residual_tol / 8.0:
            break
        # Newton step X <- X + X @ R; the split keeps full precision in the
        # fast float64 GEMMs
        upd = xh @ resid_mat + xl @ resid_mat
        x_ld = x_ld + upd.astype(_LD)
    xh, xl = _split_ld(x_ld)
    rmax = _kernels.residual_dd(lr, xh, xl, resid_mat)
    if not np.isfinite(rmax) or rmax > residual_tol:
        raise SingularAfterRegularization(
            f"inversion residual {rmax:.3e} exceeds tolerance {residual_tol:.1e} "
            f"at xi={xi:.3e}; increase xi")
    return RegularizedInverseLaplacian(
        matrix=x_ld, inversion_residual=float(rmax), xi_used=float(xi),
        haar_seed=int(seed) if np.isscalar(seed) else -1)
