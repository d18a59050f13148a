# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the two-hidden-layer network.

Same signatures and flattening order as ``numpy_backend``; fused loops over
the batch avoid the temporary arrays the vectorized fallback allocates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double act_value(double z, int code) noexcept:
    if code == 0:
        if z >= 0.0:
            return 1.0 / (1.0 + exp(-z))
        return exp(z) / (1.0 + exp(z))
    elif code == 1:
        return tanh(z)
    return z


cdef inline double act_deriv(double h, int code) noexcept:
    # derivative expressed through the activation value h
    if code == 0:
        return h * (1.0 - h)
    elif code == 1:
        return 1.0 - h * h
    return 1.0


cdef void _hidden(const double[:, ::1] X, Py_ssize_t m,
                  const double[:, ::1] W1, const double[::1] b1,
                  const double[:, ::1] W2, const double[::1] b2,
                  int code,
                  double[::1] h1, double[::1] s1,
                  double[::1] h2, double[::1] s2) noexcept:
    cdef Py_ssize_t nin = W1.shape[0], N1 = W1.shape[1], N2 = W2.shape[1]
    cdef Py_ssize_t s, k, i
    cdef double z
    for s in range(N1):
        z = b1[s]
        for k in range(nin):
            z += X[m, k] * W1[k, s]
        h1[s] = act_value(z, code)
        s1[s] = act_deriv(h1[s], code)
    for i in range(N2):
        z = b2[i]
        for s in range(N1):
            z += h1[s] * W2[s, i]
        h2[i] = act_value(z, code)
        s2[i] = act_deriv(h2[i], code)


def forward_batch(double[:, ::1] X,
                  double[:, ::1] W1, double[::1] b1,
                  double[:, ::1] W2, double[::1] b2,
                  double[:, ::1] Wo, double[::1] bo,
                  int act_code):
    """Network outputs for a batch of states; returns (M, nout)."""
    cdef Py_ssize_t M = X.shape[0], N1 = W1.shape[1], N2 = W2.shape[1]
    cdef Py_ssize_t nout = Wo.shape[1]
    out_arr = np.empty((M, nout))
    cdef double[:, ::1] out = out_arr
    h1_arr = np.empty(N1); s1_arr = np.empty(N1)
    h2_arr = np.empty(N2); s2_arr = np.empty(N2)
    cdef double[::1] h1 = h1_arr, s1 = s1_arr, h2 = h2_arr, s2 = s2_arr
    cdef Py_ssize_t m, j, i
    cdef double acc
    for m in range(M):
        _hidden(X, m, W1, b1, W2, b2, act_code, h1, s1, h2, s2)
        for j in range(nout):
            acc = bo[j]
            for i in range(N2):
                acc += h2[i] * Wo[i, j]
            out[m, j] = acc
    return out_arr


def input_jacobian_batch(double[:, ::1] X,
                         double[:, ::1] W1, double[::1] b1,
                         double[:, ::1] W2, double[::1] b2,
                         double[:, ::1] Wo, double[::1] bo,
                         int act_code):
    """d(output_j)/d(x_k) for every batch point; returns (M, nout, nin)."""
    cdef Py_ssize_t M = X.shape[0], nin = W1.shape[0]
    cdef Py_ssize_t N1 = W1.shape[1], N2 = W2.shape[1], nout = Wo.shape[1]
    out_arr = np.zeros((M, nout, nin))
    cdef double[:, :, ::1] out = out_arr
    h1_arr = np.empty(N1); s1_arr = np.empty(N1)
    h2_arr = np.empty(N2); s2_arr = np.empty(N2)
    g_arr = np.empty(N2)
    cdef double[::1] h1 = h1_arr, s1 = s1_arr, h2 = h2_arr, s2 = s2_arr, g = g_arr
    cdef Py_ssize_t m, j, k, s, i
    cdef double acc
    for m in range(M):
        _hidden(X, m, W1, b1, W2, b2, act_code, h1, s1, h2, s2)
        for k in range(nin):
            # g = W2.T (W1[k, :] * s1), then rows Wo[:, j] . (s2 * g)
            for i in range(N2):
                acc = 0.0
                for s in range(N1):
                    acc += W2[s, i] * W1[k, s] * s1[s]
                g[i] = acc * s2[i]
            for j in range(nout):
                acc = 0.0
                for i in range(N2):
                    acc += Wo[i, j] * g[i]
                out[m, j, k] = acc
    return out_arr


def param_jacobian_batch(double[:, ::1] X,
                         double[:, ::1] W1, double[::1] b1,
                         double[:, ::1] W2, double[::1] b2,
                         double[:, ::1] Wo, double[::1] bo,
                         int act_code):
    """d(output_j)/dp in the Wo/W2/W1/bo/b2/b1 column-major order; (M, nout, P)."""
    cdef Py_ssize_t M = X.shape[0], nin = W1.shape[0]
    cdef Py_ssize_t N1 = W1.shape[1], N2 = W2.shape[1], nout = Wo.shape[1]
    cdef Py_ssize_t P = nout * N2 + N2 * N1 + N1 * nin + nout + N2 + N1
    out_arr = np.zeros((M, nout, P))
    cdef double[:, :, ::1] out = out_arr
    h1_arr = np.empty(N1); s1_arr = np.empty(N1)
    h2_arr = np.empty(N2); s2_arr = np.empty(N2)
    v2_arr = np.empty(N2); u1_arr = np.empty(N1)
    cdef double[::1] h1 = h1_arr, s1 = s1_arr, h2 = h2_arr, s2 = s2_arr
    cdef double[::1] v2 = v2_arr, u1 = u1_arr
    cdef Py_ssize_t off_w2 = nout * N2
    cdef Py_ssize_t off_w1 = off_w2 + N2 * N1
    cdef Py_ssize_t off_bo = off_w1 + N1 * nin
    cdef Py_ssize_t off_b2 = off_bo + nout
    cdef Py_ssize_t off_b1 = off_b2 + N2
    cdef Py_ssize_t m, j, q, h, s, k
    cdef double acc
    for m in range(M):
        _hidden(X, m, W1, b1, W2, b2, act_code, h1, s1, h2, s2)
        for j in range(nout):
            for q in range(N2):
                v2[q] = Wo[q, j] * s2[q]
            for s in range(N1):
                acc = 0.0
                for q in range(N2):
                    acc += W2[s, q] * v2[q]
                u1[s] = acc * s1[s]
            # Wo block: only the column q = j is active
            for h in range(N2):
                out[m, j, j * N2 + h] = h2[h]
            # W2 block, entry (h, q) at q*N1 + h
            for q in range(N2):
                for h in range(N1):
                    out[m, j, off_w2 + q * N1 + h] = v2[q] * h1[h]
            # W1 block, entry (k, s) at s*nin + k
            for s in range(N1):
                for k in range(nin):
                    out[m, j, off_w1 + s * nin + k] = u1[s] * X[m, k]
            out[m, j, off_bo + j] = 1.0
            for q in range(N2):
                out[m, j, off_b2 + q] = v2[q]
            for s in range(N1):
                out[m, j, off_b1 + s] = u1[s]
    return out_arr
