# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SMO loop for the soft-margin SVM dual.

Solves  min 1/2 a'Qa - e'a  s.t.  y'a = 0,  0 <= a_t <= C_t
with Q_st = y_s y_t K(x_s, x_t), using second-order working-set selection.
Kernel rows come from a precomputed Gram matrix when one is passed,
otherwise they are evaluated on the fly from ``X``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, INFINITY

cnp.import_array()

cdef double TAU = 1e-12


cdef inline void _fill_row(Py_ssize_t i, const double[:, ::1] X, const double[:, ::1] K, bint have_k,
                           int kernel, double gamma, double[::1] sqnorm, double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t t, f
    cdef double acc
    if have_k:
        for t in range(n):
            out[t] = K[i, t]
        return
    for t in range(n):
        acc = 0.0
        for f in range(d):
            acc += X[i, f] * X[t, f]
        if kernel == 0:
            out[t] = acc
        else:
            out[t] = exp(-gamma * (sqnorm[i] + sqnorm[t] - 2.0 * acc))


def smo_solve(const double[:, ::1] X, const double[::1] y, const double[::1] C, int kernel, double gamma,
              K, double eps, long max_iter):
    """Return ``(alpha, rho, n_iter, converged)``; decision is sum a_t y_t K(x_t, x) - rho."""
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef bint have_k = K is not None
    cdef const double[:, ::1] Kv
    if have_k:
        Kv = K
    else:
        Kv = np.zeros((1, 1))

    alpha_arr = np.zeros(n)
    G_arr = -np.ones(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] G = G_arr
    cdef double[::1] QD = np.empty(n)
    cdef double[::1] sqnorm = np.empty(n)
    cdef double[::1] Ki = np.empty(n)
    cdef double[::1] Kj = np.empty(n)

    cdef Py_ssize_t t, f, i, j
    cdef double acc, Gmax, Gmin, v, b, a, obj, obj_min
    cdef double Ci, Cj, ai_old, aj_old, quad, delta, diff, s, dai, daj
    cdef long it = 0
    cdef bint converged = False

    for t in range(n):
        acc = 0.0
        for f in range(d):
            acc += X[t, f] * X[t, f]
        sqnorm[t] = acc
        if have_k:
            QD[t] = Kv[t, t]
        elif kernel == 0:
            QD[t] = acc
        else:
            QD[t] = 1.0

    with nogil:
        while it < max_iter:
            # i: maximal violating index in I_up
            Gmax = -INFINITY
            i = -1
            for t in range(n):
                if (y[t] > 0 and alpha[t] < C[t]) or (y[t] < 0 and alpha[t] > 0):
                    v = -y[t] * G[t]
                    if v > Gmax:
                        Gmax = v
                        i = t
            if i < 0:
                converged = True
                break
            _fill_row(i, X, Kv, have_k, kernel, gamma, sqnorm, Ki)

            # j: second-order choice in I_low
            Gmin = INFINITY
            obj_min = INFINITY
            j = -1
            for t in range(n):
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C[t]):
                    v = -y[t] * G[t]
                    if v < Gmin:
                        Gmin = v
                    b = Gmax - v
                    if b > 0:
                        a = QD[i] + QD[t] - 2.0 * Ki[t]
                        if a <= 0:
                            a = TAU
                        obj = -(b * b) / a
                        if obj < obj_min:
                            obj_min = obj
                            j = t
            if Gmax - Gmin < eps or j < 0:
                converged = True
                break
            _fill_row(j, X, Kv, have_k, kernel, gamma, sqnorm, Kj)

            Ci = C[i]
            Cj = C[j]
            ai_old = alpha[i]
            aj_old = alpha[j]
            if y[i] != y[j]:
                quad = QD[i] + QD[j] - 2.0 * Ki[j]
                if quad <= 0:
                    quad = TAU
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = -diff
                if diff > Ci - Cj:
                    if alpha[i] > Ci:
                        alpha[i] = Ci
                        alpha[j] = Ci - diff
                else:
                    if alpha[j] > Cj:
                        alpha[j] = Cj
                        alpha[i] = Cj + diff
            else:
                quad = QD[i] + QD[j] - 2.0 * Ki[j]
                if quad <= 0:
                    quad = TAU
                delta = (G[i] - G[j]) / quad
                s = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if s > Ci:
                    if alpha[i] > Ci:
                        alpha[i] = Ci
                        alpha[j] = s - Ci
                else:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = s
                if s > Cj:
                    if alpha[j] > Cj:
                        alpha[j] = Cj
                        alpha[i] = s - Cj
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = s

            dai = (alpha[i] - ai_old) * y[i]
            daj = (alpha[j] - aj_old) * y[j]
            for t in range(n):
                G[t] += y[t] * (Ki[t] * dai + Kj[t] * daj)
            it += 1

    return alpha_arr, _rho(alpha, G, y, C), it, bool(converged)


cdef double _rho(double[::1] alpha, double[::1] G, const double[::1] y, const double[::1] C):
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t t
    cdef double ub = INFINITY, lb = -INFINITY, sum_free = 0.0, yG
    cdef long nr_free = 0
    for t in range(n):
        yG = y[t] * G[t]
        if alpha[t] >= C[t]:
            if y[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nr_free += 1
            sum_free += yG
    if nr_free > 0:
        return sum_free / nr_free
    return (ub + lb) / 2.0
