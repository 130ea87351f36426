"""Pure numpy implementation of the SMO loop, used when the extension is not built.

Follows the compiled version step for step; per-iteration work is vectorised
over the training set instead of looped.
"""

import numpy as np

TAU = 1e-12


def _row(i, X, K, kernel, gamma, sqnorm):
    if K is not None:
        return K[i]
    dots = X @ X[i]
    if kernel == 0:
        return dots
    return np.exp(-gamma * (sqnorm[i] + sqnorm - 2.0 * dots))


def _rho(alpha, G, y, C):
    yG = y * G
    upper = alpha >= C
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        return float(yG[free].sum() / free.sum())
    ub_mask = (upper & (y < 0)) | (lower & (y > 0))
    lb_mask = (upper & (y > 0)) | (lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2.0)


def smo_solve(X, y, C, kernel, gamma, K, eps, max_iter):
    """Return ``(alpha, rho, n_iter, converged)``; see :mod:`augscope.core`."""
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    sqnorm = np.einsum("ij,ij->i", X, X)
    if K is not None:
        QD = np.diag(K).copy()
    elif kernel == 0:
        QD = sqnorm.copy()
    else:
        QD = np.ones(n)
    pos = y > 0
    neg = ~pos

    it = 0
    converged = False
    while it < max_iter:
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        if not up.any():
            converged = True
            break
        score = -y * G
        masked = np.where(up, score, -np.inf)
        i = int(np.argmax(masked))
        Gmax = masked[i]
        Ki = _row(i, X, K, kernel, gamma, sqnorm)

        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        Gmin = score[low].min() if low.any() else np.inf
        b = Gmax - score
        cand = low & (b > 0)
        if Gmax - Gmin < eps or not cand.any():
            converged = True
            break
        a = QD[i] + QD - 2.0 * Ki
        a = np.where(a <= 0, TAU, a)
        obj = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        Kj = _row(j, X, K, kernel, gamma, sqnorm)

        Ci, Cj = C[i], C[j]
        ai_old, aj_old = alpha[i], alpha[j]
        ai, aj = ai_old, aj_old
        quad = QD[i] + QD[j] - 2.0 * Ki[j]
        if quad <= 0:
            quad = TAU
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = ai + aj
            ai -= delta
            aj += delta
            if s > Ci:
                if ai > Ci:
                    ai, aj = Ci, s - Ci
            elif aj < 0:
                aj, ai = 0.0, s
            if s > Cj:
                if aj > Cj:
                    aj, ai = Cj, s - Cj
            elif ai < 0:
                ai, aj = 0.0, s
        alpha[i], alpha[j] = ai, aj
        G += y * (Ki * ((ai - ai_old) * y[i]) + Kj * ((aj - aj_old) * y[j]))
        it += 1

    return alpha, _rho(alpha, G, y, C), it, converged
