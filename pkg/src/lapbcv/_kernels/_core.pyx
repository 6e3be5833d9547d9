# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: compensated inverse residual and the BCV loss.

Same contracts as ``_fallback``; see that module for the numerical
rationale.  The residual kernel runs the double-double accumulation with
hardware FMA in C (orders of magnitude faster than the vectorized numpy
version); the loss kernel drives LAPACK directly and fuses reconstruction,
second SVD, pseudo-inverse application and the squared-residual reduction.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs, fma
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dgesdd

cnp.import_array()

BACKEND = "compiled"


def residual_dd(double[:, ::1] a, double[:, ::1] xh, double[:, ::1] xl,
                double[:, ::1] out):
    """out = I - a @ (xh + xl), double-double accumulated; returns max|out|."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, m, j
    cdef double av, p, e, s, r
    cdef double *sb
    cdef double *cb
    rowmax_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] rowmax = rowmax_arr
    with nogil:
        for i in prange(n, schedule='static'):
            sb = <double *> malloc(n * sizeof(double))
            cb = <double *> malloc(n * sizeof(double))
            for j in range(n):
                sb[j] = 0.0
                cb[j] = 0.0
            for m in range(n):
                av = a[i, m]
                if av == 0.0:
                    continue
                for j in range(n):
                    p = av * xh[m, j]
                    e = fma(av, xh[m, j], -p) + av * xl[m, j]
                    # Neumaier compensated add of p into (sb[j], cb[j])
                    s = sb[j] + p
                    if fabs(sb[j]) >= fabs(p):
                        cb[j] += ((sb[j] - s) + p) + e
                    else:
                        cb[j] += ((p - s) + sb[j]) + e
                    sb[j] = s
            for j in range(n):
                if i == j:
                    r = (1.0 - sb[j]) - cb[j]
                else:
                    r = -(sb[j] + cb[j])
                out[i, j] = r
                if fabs(r) > rowmax[i]:
                    rowmax[i] = fabs(r)
            free(sb)
            free(cb)
    return float(rowmax_arr.max())


cdef int _svd(double *mat, int h, double *s, double *u, double *vt,
              double *work, int lwork, int *iwork) nogil:
    """SVD of the row-major h*h matrix in `mat` (destroyed).

    LAPACK reads the buffer column-major, i.e. as the transpose, so the
    factors swap roles: afterwards the row-major `u` array holds the RIGHT
    singular vectors of `mat` in its rows, and the row-major `vt` array
    holds the LEFT singular vectors in its columns.
    """
    cdef int info = 0
    dgesdd(b'A', &h, &h, mat, &h, s, u, &h, vt, &h, work, &lwork, iwork, &info)
    return info


def bcv_loss_quadrants(double[:, ::1] a, double[:, ::1] b, double[:, ::1] c,
                       double[:, ::1] e, int k, double rcond=1e-15):
    """sum((a - b @ P @ c)**2), P = materialized pinv of the rank-k
    truncation of e.

    P is formed as an explicit float64 matrix and applied with two GEMMs,
    mirroring the numpy fallback: the roundoff of b @ P at eps * |b| * |P|
    is the rank-overshoot penalty on badly scaled inputs and must not be
    fused away.
    """
    cdef int h = <int> e.shape[0]
    cdef int info, lwork = -1, kk = k
    cdef int i, j
    cdef double wkopt, cutoff, loss, d
    cdef double one = 1.0, zero = 0.0
    if k < 1 or k > h:
        raise ValueError("k out of range")

    buf = np.array(e, copy=True)
    u = np.empty((h, h), dtype=np.float64)
    vt = np.empty((h, h), dtype=np.float64)
    s = np.empty(h, dtype=np.float64)
    iwork = np.empty(8 * h, dtype=np.intc)
    cdef double[:, ::1] bufv = buf
    cdef double[:, ::1] uv = u
    cdef double[:, ::1] vtv = vt
    cdef double[::1] sv = s
    cdef int[::1] iwv = iwork

    with nogil:
        dgesdd(b'A', &h, &h, &bufv[0, 0], &h, &sv[0], &uv[0, 0], &h, &vtv[0, 0],
               &h, &wkopt, &lwork, &iwv[0], &info)
    lwork = <int> wkopt
    work = np.empty(lwork, dtype=np.float64)
    cdef double[::1] wv = work

    with nogil:
        info = _svd(&bufv[0, 0], h, &sv[0], &uv[0, 0], &vtv[0, 0], &wv[0],
                    lwork, &iwv[0])
    if info != 0:
        raise np.linalg.LinAlgError("SVD did not converge in bcv_loss")

    # e = sum_i s_i * left_i * right_i^T with left_i = vt[:, i], right_i = u[i, :];
    # P = pinv(e_k) = sum_{i<k, kept} (1/s_i) right_i left_i^T.
    uk = np.empty((k, h), dtype=np.float64)
    p = np.empty((h, h), dtype=np.float64)
    t1 = np.empty((h, h), dtype=np.float64)
    pred = np.empty((h, h), dtype=np.float64)
    cdef double[:, ::1] ukv = uk
    cdef double[:, ::1] pv = p
    cdef double[:, ::1] t1v = t1
    cdef double[:, ::1] predv = pred
    cutoff = rcond * sv[0]
    loss = 0.0
    with nogil:
        for i in range(kk):
            if sv[i] > cutoff and sv[i] > 0.0:
                d = 1.0 / sv[i]
            else:
                d = 0.0
            for j in range(h):
                ukv[i, j] = d * uv[i, j]
        # P = uk^T(h x k) @ vt^T[:k](k x h); col-major: P^T = vt[:, :k] @ uk
        dgemm(b'T', b'T', &h, &h, &kk, &one, &vtv[0, 0], &h, &ukv[0, 0], &h,
              &zero, &pv[0, 0], &h)
        # t1 = b @ P; col-major: t1^T = P^T @ b^T
        dgemm(b'N', b'N', &h, &h, &h, &one, &pv[0, 0], &h, &b[0, 0], &h,
              &zero, &t1v[0, 0], &h)
        # pred = t1 @ c; col-major: pred^T = c^T @ t1^T
        dgemm(b'N', b'N', &h, &h, &h, &one, &c[0, 0], &h, &t1v[0, 0], &h,
              &zero, &predv[0, 0], &h)
        for i in range(h):
            for j in range(h):
                d = a[i, j] - predv[i, j]
                loss += d * d
    return float(loss)
