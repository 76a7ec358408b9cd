# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recurrence kernels.

Twin of ``_kernels_py``; the per-time-step loop runs in C with BLAS matrix
products, which removes the Python overhead that dominates small-batch
training runs.  Layouts and semantics are identical to the fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

BACKEND = "compiled"


cdef inline void gemm_rm(char ta, char tb, int m, int n, int k,
                         double alpha, double* a, int lda,
                         double* b, int ldb,
                         double beta, double* c, int ldc) noexcept nogil:
    # Row-major C(m,n) = alpha*op(A)op(B) + beta*C via the column-major BLAS
    # identity C^T = op(B)^T op(A)^T.
    dgemm(&tb, &ta, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


def modrelu(z, b):
    """Magnitude-thresholded identity: (|z| + b) * sign(z) where positive,
    else 0.  sign(0) is 0, so the kink and the dead region both output 0."""
    z = np.asarray(z, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mag = np.abs(z) + b
    return np.where(mag > 0.0, mag * np.sign(z), 0.0)


def rnn_forward(cnp.ndarray[double, ndim=2, mode="c"] v not None,
                cnp.ndarray[double, ndim=3, mode="c"] pre not None,
                cnp.ndarray[double, ndim=1, mode="c"] bias not None,
                cnp.ndarray[double, ndim=2, mode="c"] h0 not None,
                bint linear):
    """Run the recurrence h_t = phi(V h_{t-1} + pre_t) and return the full
    trace (T+1, B, n)."""
    cdef int t_len = pre.shape[0]
    cdef int batch = pre.shape[1]
    cdef int n = pre.shape[2]
    cdef cnp.ndarray[double, ndim=3, mode="c"] h = np.empty(
        (t_len + 1, batch, n))
    cdef double* hp = <double*> h.data
    cdef double* prep = <double*> pre.data
    cdef double* vp = <double*> v.data
    cdef double* bp = <double*> bias.data
    cdef int t, i, step = batch * n
    cdef double zv, mag
    memcpy(hp, <double*> h0.data, step * sizeof(double))
    with nogil:
        for t in range(1, t_len + 1):
            memcpy(hp + t * step, prep + (t - 1) * step, step * sizeof(double))
            gemm_rm(b'N', b'T', batch, n, n, 1.0,
                    hp + (t - 1) * step, n, vp, n, 1.0, hp + t * step, n)
            if not linear:
                for i in range(step):
                    zv = hp[t * step + i]
                    mag = (zv if zv >= 0 else -zv) + bp[i % n]
                    if mag > 0.0:
                        hp[t * step + i] = mag if zv > 0 else (-mag if zv < 0 else 0.0)
                    else:
                        hp[t * step + i] = 0.0
    return h


def rnn_backward(cnp.ndarray[double, ndim=2, mode="c"] v not None,
                 cnp.ndarray[double, ndim=3, mode="c"] h not None,
                 cnp.ndarray[double, ndim=3, mode="c"] gout not None,
                 bint linear):
    """Reverse sweep through the recurrence.

    ``gout[t-1]`` is the loss gradient injected at h_t by the output head.
    Returns (dv, dbias, dpre, dh0, hnorms) where hnorms[g] is the Frobenius
    norm of dL/dh_{T-g} (recorded in the order the sweep produces them,
    time gap ascending, including the initial state at gap T).
    """
    cdef int t_len = gout.shape[0]
    cdef int batch = h.shape[1]
    cdef int n = h.shape[2]
    cdef cnp.ndarray[double, ndim=2, mode="c"] dv = np.zeros((n, n))
    cdef cnp.ndarray[double, ndim=1, mode="c"] dbias = np.zeros(n)
    cdef cnp.ndarray[double, ndim=3, mode="c"] dpre = np.empty(
        (t_len, batch, n))
    cdef cnp.ndarray[double, ndim=2, mode="c"] dh = np.zeros((batch, n))
    cdef cnp.ndarray[double, ndim=1, mode="c"] hnorms = np.empty(t_len + 1)
    cdef double* hp = <double*> h.data
    cdef double* gp = <double*> gout.data
    cdef double* dvp = <double*> dv.data
    cdef double* dbp = <double*> dbias.data
    cdef double* dprep = <double*> dpre.data
    cdef double* dhp = <double*> dh.data
    cdef double* vp = <double*> v.data
    cdef int t, i, step = batch * n
    cdef double acc, hv, dhv
    cdef double* dz
    with nogil:
        for t in range(t_len, 0, -1):
            acc = 0.0
            for i in range(step):
                dhv = dhp[i] + gp[(t - 1) * step + i]
                dhp[i] = dhv
                acc += dhv * dhv
            hnorms[t_len - t] = sqrt(acc)
            dz = dprep + (t - 1) * step
            if linear:
                memcpy(dz, dhp, step * sizeof(double))
            else:
                for i in range(step):
                    hv = hp[t * step + i]
                    if hv != 0.0:
                        dz[i] = dhp[i]
                        dbp[i % n] += dhp[i] if hv > 0 else -dhp[i]
                    else:
                        dz[i] = 0.0
            gemm_rm(b'T', b'N', n, n, batch, 1.0, dz, n,
                    hp + (t - 1) * step, n, 1.0, dvp, n)
            gemm_rm(b'N', b'N', batch, n, n, 1.0, dz, n, vp, n, 0.0, dhp, n)
        acc = 0.0
        for i in range(step):
            acc += dhp[i] * dhp[i]
        hnorms[t_len] = sqrt(acc)
    return dv, dbias, dpre, dh, hnorms
