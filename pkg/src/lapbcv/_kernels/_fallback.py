"""Pure-numpy kernels, used when the compiled extension is unavailable.

The compensated residual accumulates ``I - a @ x`` in double-double
arithmetic (Dekker/Veltkamp splits plus Neumaier summation, vectorized one
rank-1 slab at a time).  This is what lets the multiply-back residual of an
extended-precision inverse be *measured* below 1e-6 even when the matrix
entries reach 1e12: a plain float64 or longdouble matmul would bury the
true residual under its own rounding noise.
"""
import numpy as np

BACKEND = "numpy"

_SPLITTER = 134217729.0  # 2**27 + 1, Veltkamp splitter for float64


def _two_prod(a, b):
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def _two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def residual_dd(a, xh, xl, out):
    """out = I - a @ (xh + xl), double-double accumulated; returns max|out|.

    ``xh``/``xl`` must be an exact non-overlapping float64 split of the
    extended-precision matrix being checked.
    """
    n = a.shape[0]
    s = np.zeros((n, n))
    c = np.zeros((n, n))
    for m in range(n):
        col = a[:, m][:, None]
        p, e = _two_prod(col, xh[m, :][None, :])
        s, err = _two_sum(s, p)
        c += err + e + col * xl[m, :][None, :]
    total, err = _two_sum(s, -np.eye(n))
    np.negative(total + (c + err), out=out)
    return float(np.abs(out).max())


def bcv_loss_quadrants(a, b, c, e, k, rcond=1e-15):
    """sum((a - b @ P @ c)**2) with P the pseudo-inverse of the rank-k
    truncation of e, materialized as an explicit float64 matrix.

    Materializing P (rather than composing b and c through the SVD
    factors) is deliberate: once the truncation reaches past a dominant
    singular group, P picks up entries inverse to the first weak singular
    value and the b @ P @ c products round at eps * |b| * |P|.  On badly
    scaled matrices that roundoff floor penalizes every rank beyond the
    dominant group, which is exactly the signal the shuffle-averaged score
    needs.  Singular values at or below rcond * s_max contribute zero.
    """
    u, s, vt = np.linalg.svd(e)
    smax = s[0] if s.size else 0.0
    sinv = np.where(s[:k] > rcond * smax, 1.0 / np.where(s[:k] > 0, s[:k], 1.0), 0.0)
    p = (vt[:k].T * sinv[None, :]) @ u[:, :k].T
    d = a - (b @ p) @ c
    return float(np.sum(d * d))
