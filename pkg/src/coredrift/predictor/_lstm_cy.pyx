# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled LSTM recurrence. Same contract as ``_lstm_py``.

Matrix products go through the BLAS that scipy links; gate nonlinearities and
the cell update run as fused C loops.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline double _sigmoid(double z) noexcept nogil:
    return 1.0 / (1.0 + exp(-z))


cdef inline double _tanh(double z) noexcept nogil:
    return 1.0 - 2.0 / (exp(2.0 * z) + 1.0)


def lstm_forward(double[:, ::1] W, double[::1] b, double[:, ::1] X):
    cdef int B = X.shape[0], T = X.shape[1]
    cdef int H = W.shape[1] - 1
    cdef int G = 4 * H
    cdef int ldw = H + 1
    cdef int t, n, j
    cdef double x, zero = 0.0, one = 1.0
    cdef char *tr = b'T'
    cdef char *nt = b'N'

    hs_a = np.zeros((T + 1, B, H))
    cs_a = np.zeros((T + 1, B, H))
    gates_a = np.empty((T, B, G))
    cdef double[:, :, ::1] hs = hs_a
    cdef double[:, :, ::1] cs = cs_a
    cdef double[:, :, ::1] gates = gates_a
    cdef double c_
    cdef double *z

    with nogil:
        for t in range(T):
            for n in range(B):
                x = X[n, t]
                for j in range(G):
                    gates[t, n, j] = b[j] + x * W[j, 0]
            # gates[t] (B x G, row-major) += hs[t] @ Wh.T
            dgemm(tr, nt, &G, &B, &H, &one, &W[0, 1], &ldw, &hs[t, 0, 0], &H, &one, &gates[t, 0, 0], &G)
            for n in range(B):
                z = &gates[t, n, 0]
                for j in range(2 * H):
                    z[j] = _sigmoid(z[j])
                for j in range(2 * H, 3 * H):
                    z[j] = _tanh(z[j])
                for j in range(3 * H, G):
                    z[j] = _sigmoid(z[j])
                for j in range(H):
                    c_ = z[H + j] * cs[t, n, j] + z[j] * z[2 * H + j]
                    cs[t + 1, n, j] = c_
                    hs[t + 1, n, j] = z[3 * H + j] * _tanh(c_)
    return hs_a, cs_a, gates_a


def lstm_backward(double[:, ::1] W, double[:, ::1] X, double[:, :, ::1] hs,
                  double[:, :, ::1] cs, double[:, :, ::1] gates, double[:, ::1] dh_last):
    cdef int B = X.shape[0], T = X.shape[1]
    cdef int H = W.shape[1] - 1
    cdef int G = 4 * H
    cdef int ldw = H + 1
    cdef int t, n, j
    cdef double zero = 0.0, one = 1.0
    cdef double i_, f_, g_, o_, tc, dcv, dhv, x
    cdef char *tr = b'T'
    cdef char *nt = b'N'

    dW_a = np.zeros((G, H + 1))
    db_a = np.zeros(G)
    dh_a = np.array(dh_last, dtype=np.float64, copy=True, order="C")
    dc_a = np.zeros((B, H))
    dz_a = np.empty((B, G))
    cdef double[:, ::1] dW = dW_a
    cdef double[::1] db = db_a
    cdef double[:, ::1] dh = dh_a
    cdef double[:, ::1] dc = dc_a
    cdef double[:, ::1] dz = dz_a

    with nogil:
        for t in range(T - 1, -1, -1):
            for n in range(B):
                for j in range(H):
                    i_ = gates[t, n, j]
                    f_ = gates[t, n, H + j]
                    g_ = gates[t, n, 2 * H + j]
                    o_ = gates[t, n, 3 * H + j]
                    tc = _tanh(cs[t + 1, n, j])
                    dhv = dh[n, j]
                    dcv = dc[n, j] + dhv * o_ * (1.0 - tc * tc)
                    dz[n, j] = dcv * g_ * i_ * (1.0 - i_)
                    dz[n, H + j] = dcv * cs[t, n, j] * f_ * (1.0 - f_)
                    dz[n, 2 * H + j] = dcv * i_ * (1.0 - g_ * g_)
                    dz[n, 3 * H + j] = dhv * tc * o_ * (1.0 - o_)
                    dc[n, j] = dcv * f_
            for n in range(B):
                x = X[n, t]
                for j in range(G):
                    dW[j, 0] += dz[n, j] * x
                    db[j] += dz[n, j]
            # dW[:, 1:] += dz.T @ hs[t]
            dgemm(nt, tr, &H, &G, &B, &one, &hs[t, 0, 0], &H, &dz[0, 0], &G, &one, &dW[0, 1], &ldw)
            # dh = dz @ Wh
            dgemm(nt, nt, &H, &B, &G, &one, &W[0, 1], &ldw, &dz[0, 0], &G, &zero, &dh[0, 0], &H)
    return dW_a, db_a
