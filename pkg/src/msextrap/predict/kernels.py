"""Numba kernels for the empirical target and its gradients.

Layout: ``W`` is the ``(N, n)`` matrix of learning windows, ``X0`` the ``N``
matching targets.  ``U_j = exp(-M_j^-alpha)`` with ``M_j = max_i lam_i W[j, i]``.
``boot`` selects the bootstrap penalty, which pairs window ``j`` with window
``hidx[j]``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

BIG_EXP = 700.0


@njit(cache=True, nogil=True)
def frechet_u(m, alpha):
    if m <= 0.0:
        return 0.0
    t = m ** (-alpha)
    if t > BIG_EXP:
        return 0.0
    return math.exp(-t)


@njit(cache=True, nogil=True)
def frechet_h(m, alpha):
    """Density of the unit alpha-Frechet law at ``m``."""
    if m <= 0.0:
        return 0.0
    t = m ** (-alpha)
    if t > BIG_EXP:
        return 0.0
    return alpha / m * t * math.exp(-t)


@njit(cache=True, nogil=True)
def window_max(lam, W, j):
    """Max-linear value of window ``j``, its argmax (lowest index on ties) and a tie flag."""
    best = -1.0
    arg = 0
    tie = False
    for i in range(W.shape[1]):
        v = lam[i] * W[j, i]
        if v > best:
            best = v
            arg = i
            tie = False
        elif v == best:
            tie = True
    return best, arg, tie


@njit(cache=True, nogil=True)
def all_maxima(lam, W, alpha):
    N = W.shape[0]
    M = np.empty(N)
    U = np.empty(N)
    arg = np.empty(N, dtype=np.int64)
    ties = 0
    for j in range(N):
        m, a, t = window_max(lam, W, j)
        M[j] = m
        arg[j] = a
        U[j] = frechet_u(m, alpha)
        if t:
            ties += 1
    return M, U, arg, ties


@njit(cache=True, nogil=True)
def phi(lam, W, X0, alpha, gamma, boot, hidx):
    N = W.shape[0]
    M, U, arg, ties = all_maxima(lam, W, alpha)
    exc = 0.0
    for j in range(N):
        exc += 2.0 * frechet_u(max(X0[j], M[j]), alpha) - U[j] - 0.5
    exc /= N
    if gamma == 0.0:
        return exc
    pen = 0.0
    if boot:
        for j in range(N):
            pen += 1.0 / 3.0 - max(U[j], U[hidx[j]]) + U[j] * U[j]
        return exc + gamma * pen / N
    # sum_{j,m} max(U_j, U_m) = sum_k (2k - 1) U_(k)
    Us = np.sort(U)
    pair = 0.0
    sq = 0.0
    for k in range(N):
        pair += (2.0 * (k + 1) - 1.0) * Us[k]
        sq += U[k] * U[k]
    return exc + gamma / 3.0 + gamma * sq / N - gamma * pair / (N * N)


@njit(cache=True, nogil=True)
def grad_window(lam, W, X0, alpha, gamma, boot, hidx, j, out):
    """Gradient of the summand ``Q_j`` written into ``out``; returns True on a max tie."""
    N = W.shape[0]
    n = W.shape[1]
    for i in range(n):
        out[i] = 0.0
    mj, aj, tie = window_max(lam, W, j)
    uj = frechet_u(mj, alpha)
    hj = frechet_h(mj, alpha)
    if X0[j] == mj:
        tie = True
    coef = (2.0 if X0[j] < mj else 0.0) - 1.0
    if boot:
        k = hidx[j]
        mk, ak, tk = window_max(lam, W, k)
        uk = frechet_u(mk, alpha)
        tie = tie or tk or (uk == uj and k != j)
        coef += 2.0 * gamma * uj
        if uk <= uj:
            coef -= gamma
        else:
            out[ak] -= gamma * frechet_h(mk, alpha) * W[k, ak]
    else:
        below = 0
        for m in range(j):
            mm, am, tm = window_max(lam, W, m)
            um = frechet_u(mm, alpha)
            if um < uj:
                below += 1
            elif um > uj:
                out[am] -= 2.0 * gamma / N * frechet_h(mm, alpha) * W[m, am]
            else:
                tie = True
                below += 1
            if tm:
                tie = True
        coef += 2.0 * gamma * uj - gamma / N - 2.0 * gamma / N * below
    out[aj] += coef * hj * W[j, aj]
    return tie


@njit(cache=True, nogil=True)
def grad_full(lam, W, X0, alpha, gamma, boot, hidx):
    """Gradient of the full target; ties use the lowest-index subgradient."""
    N = W.shape[0]
    n = W.shape[1]
    M, U, arg, ties = all_maxima(lam, W, alpha)
    g = np.zeros(n)
    if boot:
        tmp = np.empty(n)
        for j in range(N):
            grad_window(lam, W, X0, alpha, gamma, boot, hidx, j, tmp)
            for i in range(n):
                g[i] += tmp[i]
        for i in range(n):
            g[i] /= N
        return g
    order = np.argsort(U, kind="mergesort")
    rank = np.empty(N)
    for r in range(N):
        rank[order[r]] = r + 1.0
    for j in range(N):
        h = frechet_h(M[j], alpha)
        coef = (2.0 if X0[j] < M[j] else 0.0) - 1.0
        coef += 2.0 * gamma * U[j] - gamma / N * (2.0 * rank[j] - 1.0)
        g[arg[j]] += coef * h * W[j, arg[j]]
    for i in range(n):
        g[i] /= N
    return g


@njit(cache=True, nogil=True)
def descend(lam0, W, X0, alpha, gamma, boot, hidx, js, adam, eta, patience,
            log_param, beta1, beta2, eps):
    """Stochastic gradient loop with best-so-far tracking and early stopping.

    Returns best weights, best target value, per-iteration target trace and
    the number of skipped tied draws.
    """
    n = lam0.shape[0]
    lam = lam0.copy()
    tau = np.log(lam0) if log_param else lam0.copy()
    best = lam0.copy()
    best_phi = phi(lam, W, X0, alpha, gamma, boot, hidx)
    trace = np.empty(js.shape[0])
    m1 = np.zeros(n)
    m2 = np.zeros(n)
    g = np.empty(n)
    stall = 0
    it = 0
    skipped = 0
    for k in range(js.shape[0]):
        tie = grad_window(lam, W, X0, alpha, gamma, boot, hidx, js[k], g)
        if tie:
            skipped += 1
            continue
        if log_param:
            for i in range(n):
                g[i] *= lam[i]
        if adam:
            t = it + 1
            for i in range(n):
                m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i]
                m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i]
                mh = m1[i] / (1.0 - beta1**t)
                vh = m2[i] / (1.0 - beta2**t)
                tau[i] -= eta * mh / (math.sqrt(vh) + eps)
        else:
            for i in range(n):
                tau[i] -= eta * g[i]
        for i in range(n):
            if log_param:
                tau[i] = min(max(tau[i], -50.0), 50.0)
                lam[i] = math.exp(tau[i])
            else:
                tau[i] = max(tau[i], 1e-12)
                lam[i] = tau[i]
        val = phi(lam, W, X0, alpha, gamma, boot, hidx)
        trace[it] = val
        it += 1
        if val < best_phi:
            best_phi = val
            best[:] = lam
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    return best, best_phi, trace[:it], skipped
