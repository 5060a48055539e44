# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the numeric kernels in ``_pykernels``.

Loops are written for the small shapes this package actually runs (batch 4
rollout steps, batch ~128 update minibatches, hidden width 64).
"""

import numpy as np

from libc.math cimport exp, log, tanh


def mlp_forward(double[:, ::1] x, double[:, ::1] w1, double[::1] b1,
                double[:, ::1] w2, double[::1] b2,
                double[:, ::1] w3, double[::1] b3):
    cdef Py_ssize_t B = x.shape[0], D = x.shape[1]
    cdef Py_ssize_t H1 = w1.shape[1], H2 = w2.shape[1], O = w3.shape[1]
    h1_arr = np.empty((B, H1))
    h2_arr = np.empty((B, H2))
    out_arr = np.empty((B, O))
    cdef double[:, ::1] h1 = h1_arr
    cdef double[:, ::1] h2 = h2_arr
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double xv

    for i in range(B):
        for j in range(H1):
            h1[i, j] = b1[j]
        for k in range(D):
            xv = x[i, k]
            for j in range(H1):
                h1[i, j] += xv * w1[k, j]
        for j in range(H1):
            h1[i, j] = tanh(h1[i, j])

        for j in range(H2):
            h2[i, j] = b2[j]
        for k in range(H1):
            xv = h1[i, k]
            for j in range(H2):
                h2[i, j] += xv * w2[k, j]
        for j in range(H2):
            h2[i, j] = tanh(h2[i, j])

        for j in range(O):
            out[i, j] = b3[j]
        for k in range(H2):
            xv = h2[i, k]
            for j in range(O):
                out[i, j] += xv * w3[k, j]
    return out_arr, h1_arr, h2_arr


def mlp_backward(double[:, ::1] x, double[:, ::1] h1, double[:, ::1] h2,
                 double[:, ::1] w2, double[:, ::1] w3, double[:, ::1] dout):
    cdef Py_ssize_t B = x.shape[0], D = x.shape[1]
    cdef Py_ssize_t H1 = w2.shape[0], H2 = w3.shape[0], O = w3.shape[1]
    dw1_arr = np.zeros((D, H1)); db1_arr = np.zeros(H1)
    dw2_arr = np.zeros((H1, H2)); db2_arr = np.zeros(H2)
    dw3_arr = np.zeros((H2, O)); db3_arr = np.zeros(O)
    dz2_arr = np.empty((B, H2))
    dz1_arr = np.empty((B, H1))
    cdef double[:, ::1] dw1 = dw1_arr, dw2 = dw2_arr, dw3 = dw3_arr
    cdef double[::1] db1 = db1_arr, db2 = db2_arr, db3 = db3_arr
    cdef double[:, ::1] dz2 = dz2_arr, dz1 = dz1_arr
    cdef Py_ssize_t i, j, k
    cdef double acc, g

    for i in range(B):
        # dw3 += h2[i].T dout[i]; db3 += dout[i]
        for k in range(H2):
            g = h2[i, k]
            for j in range(O):
                dw3[k, j] += g * dout[i, j]
        for j in range(O):
            db3[j] += dout[i, j]
        # dz2[i] = (dout[i] @ w3.T) * (1 - h2[i]^2)
        for k in range(H2):
            acc = 0.0
            for j in range(O):
                acc += dout[i, j] * w3[k, j]
            dz2[i, k] = acc * (1.0 - h2[i, k] * h2[i, k])
        for k in range(H1):
            g = h1[i, k]
            for j in range(H2):
                dw2[k, j] += g * dz2[i, j]
        for j in range(H2):
            db2[j] += dz2[i, j]
        for k in range(H1):
            acc = 0.0
            for j in range(H2):
                acc += dz2[i, j] * w2[k, j]
            dz1[i, k] = acc * (1.0 - h1[i, k] * h1[i, k])
        for k in range(D):
            g = x[i, k]
            for j in range(H1):
                dw1[k, j] += g * dz1[i, j]
        for j in range(H1):
            db1[j] += dz1[i, j]
    return dw1_arr, db1_arr, dw2_arr, db2_arr, dw3_arr, db3_arr


def gae_scan(double[:, ::1] rewards, double[:, ::1] values,
             double[:, ::1] dones, double[::1] next_value,
             double gamma, double lam):
    cdef Py_ssize_t T = rewards.shape[0], N = rewards.shape[1]
    adv_arr = np.empty((T, N))
    ret_arr = np.empty((T, N))
    cdef double[:, ::1] adv = adv_arr
    cdef double[:, ::1] ret = ret_arr
    cdef Py_ssize_t t, i
    cdef double nonterminal, nv, delta, last

    for i in range(N):
        last = 0.0
        for t in range(T - 1, -1, -1):
            nonterminal = 1.0 - dones[t, i]
            nv = next_value[i] if t == T - 1 else values[t + 1, i]
            delta = rewards[t, i] + gamma * nv * nonterminal - values[t, i]
            last = delta + gamma * lam * nonterminal * last
            adv[t, i] = last
            ret[t, i] = last + values[t, i]
    return adv_arr, ret_arr


def categorical_from_logits(double[:, ::1] logits, double[::1] u):
    cdef Py_ssize_t B = logits.shape[0], A = logits.shape[1]
    actions_arr = np.empty(B, dtype=np.int64)
    logp_arr = np.empty(B)
    cdef long long[::1] actions = actions_arr
    cdef double[::1] logp = logp_arr
    cdef Py_ssize_t i, j, chosen
    cdef double m, z, threshold, cumulative

    for i in range(B):
        m = logits[i, 0]
        for j in range(1, A):
            if logits[i, j] > m:
                m = logits[i, j]
        z = 0.0
        for j in range(A):
            z += exp(logits[i, j] - m)
        threshold = u[i] * z
        cumulative = 0.0
        chosen = A - 1
        for j in range(A):
            cumulative += exp(logits[i, j] - m)
            if cumulative >= threshold:
                chosen = j
                break
        actions[i] = chosen
        logp[i] = logits[i, chosen] - m - log(z)
    return actions_arr, logp_arr
