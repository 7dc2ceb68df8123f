"""Compiled homotopy kernel for the lasso path (LARS with the lasso modification).

Stationarity scale: on the active set ``X_A^T (r0 - X beta) = lam * sign(beta_A)``,
i.e. the minimizer of ``0.5 * ||r0 - X beta||^2 + lam * ||beta||_1``.

The design is expected in Fortran order so that columns are contiguous.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Event codes returned alongside the path.
STATUS_COMPLETE = 0
STATUS_MAX_STEPS = 1
STATUS_DEGENERATE = 2


@njit(cache=True, nogil=True)
def _col_dot(X, j, v):
    n = X.shape[0]
    acc = 0.0
    for i in range(n):
        acc += X[i, j] * v[i]
    return acc


@njit(cache=True, nogil=True)
def _entry_step(lam, cj, aj, sitting):
    """Step until ``|cj - g * aj| = lam - g``; a just-dropped variable sits on the
    boundary of its own sign, so only the opposite boundary counts for it."""
    g = np.inf
    if 1.0 - aj > 0.0 and not (sitting and cj > 0.0):
        g = max(lam - cj, 0.0) / (1.0 - aj)
    if 1.0 + aj > 0.0 and not (sitting and cj < 0.0):
        g2 = max(lam + cj, 0.0) / (1.0 + aj)
        if g2 < g:
            g = g2
    return g


@njit(cache=True, nogil=True)
def _cholesky(G, k, L):
    """Dense Cholesky of the leading k x k block of G into L. False if not PD."""
    for i in range(k):
        for j in range(i + 1):
            s = G[i, j]
            for m in range(j):
                s -= L[i, m] * L[j, m]
            if i == j:
                if s <= 0.0:
                    return False
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return True


@njit(cache=True, nogil=True)
def _chol_solve(L, k, b, out):
    # forward: L z = b
    for i in range(k):
        s = b[i]
        for m in range(i):
            s -= L[i, m] * out[m]
        out[i] = s / L[i, i]
    # backward: L^T x = z
    for i in range(k - 1, -1, -1):
        s = out[i]
        for m in range(i + 1, k):
            s -= L[m, i] * out[m]
        out[i] = s / L[i, i]


@njit(cache=True, nogil=True)
def lars_lasso(X, r0, allowed, tie_tol, collinear_tol, max_steps):
    """Trace the exact lasso path of ``r0`` on the allowed columns of ``X``.

    Returns ``(knots, coefs, status, n_skipped)``; ``knots`` strictly decreasing,
    ``coefs`` of shape (p, K).
    """
    n, p = X.shape
    norms2 = np.zeros(p)
    usable = np.zeros(p, dtype=np.bool_)
    for j in range(p):
        if allowed[j]:
            s = 0.0
            for i in range(n):
                s += X[i, j] * X[i, j]
            norms2[j] = s
            usable[j] = s > 0.0

    XT = np.ascontiguousarray(X.T)
    c = np.dot(XT, r0)
    lam = 0.0
    for j in range(p):
        if usable[j] and abs(c[j]) > lam:
            lam = abs(c[j])
    lam_max = lam

    cap = 2 * min(n, p) + 16
    knots = np.empty(cap)
    coefs = np.zeros((p, cap))
    if lam_max <= 0.0:
        knots[0] = 0.0
        return knots[:1].copy(), coefs[:, :1].copy(), STATUS_COMPLETE, 0

    knots[0] = lam_max
    n_knots = 1

    rank_cap = min(n, p)
    active = np.empty(rank_cap, dtype=np.int64)
    signs = np.zeros(rank_cap)
    is_active = np.zeros(p, dtype=np.bool_)
    ignored = np.zeros(p, dtype=np.bool_)
    G = np.zeros((rank_cap, rank_cap))
    L = np.zeros((rank_cap, rank_cap))
    d = np.zeros(rank_cap)
    w = np.zeros(rank_cap)
    beta = np.zeros(p)
    dfull = np.zeros(p)
    gcol = np.zeros(rank_cap)
    k = 0
    tie = tie_tol * lam_max

    # first entrant: lowest index among near-maximal correlations
    enter = -1
    for j in range(p):
        if usable[j] and abs(c[j]) >= lam_max - tie:
            enter = j
            break
    just_dropped = -1
    status = STATUS_COMPLETE
    n_skipped = 0
    steps = 0

    while True:
        if enter >= 0:
            j = enter
            enter = -1
            # Gram column against the current active set
            for m in range(k):
                gcol[m] = 0.0
                col = active[m]
                s = 0.0
                for i in range(n):
                    s += X[i, col] * X[i, j]
                gcol[m] = s
            # w = L^{-1} gcol
            for m in range(k):
                s = gcol[m]
                for q in range(m):
                    s -= L[m, q] * w[q]
                w[m] = s / L[m, m]
            diag2 = norms2[j]
            for m in range(k):
                diag2 -= w[m] * w[m]
            if k >= rank_cap or diag2 <= collinear_tol * norms2[j]:
                # column (numerically) in the span of the active set
                ignored[j] = True
                n_skipped += 1
            else:
                for m in range(k):
                    G[k, m] = gcol[m]
                    G[m, k] = gcol[m]
                    L[k, m] = w[m]
                G[k, k] = norms2[j]
                L[k, k] = np.sqrt(diag2)
                active[k] = j
                signs[k] = 1.0 if c[j] > 0.0 else -1.0
                is_active[j] = True
                k += 1

        if k == 0:
            # every remaining candidate was skipped; nothing can move
            status = STATUS_DEGENERATE
            break

        _chol_solve(L, k, signs, d)
        dfull[:] = 0.0
        for m in range(k):
            dfull[active[m]] = d[m]
        u = np.dot(X, dfull)

        gamma = lam
        event = 0  # 0: reach lam = 0, 1: entry, 2: drop
        best_entry = lam
        entry_j = -1
        a = np.dot(XT, u)
        for j in range(p):
            if not usable[j] or is_active[j] or ignored[j]:
                continue
            g = _entry_step(lam, c[j], a[j], j == just_dropped)
            if g < best_entry - tie:
                best_entry = g
                entry_j = j
        if entry_j >= 0:
            # lowest index among near-ties at the minimal step
            for j in range(entry_j):
                if usable[j] and not is_active[j] and not ignored[j]:
                    if _entry_step(lam, c[j], a[j], j == just_dropped) <= best_entry + tie:
                        entry_j = j
                        break
            gamma = best_entry
            event = 1

        drop_m = -1
        best_drop = np.inf
        for m in range(k):
            bm = beta[active[m]]
            if bm != 0.0 and d[m] != 0.0:
                g = -bm / d[m]
                if g > 0.0 and g < best_drop:
                    best_drop = g
                    drop_m = m
        if drop_m >= 0 and best_drop <= gamma + tie and best_drop < lam:
            gamma = best_drop
            event = 2

        # advance
        for m in range(k):
            beta[active[m]] += gamma * d[m]
        if event == 2:
            beta[active[drop_m]] = 0.0
        lam_new = lam - gamma
        if event == 0 or lam_new < 0.0:
            lam_new = 0.0

        r = r0 - np.dot(X, beta)
        c = np.dot(XT, r)

        if lam_new < knots[n_knots - 1]:
            if n_knots == cap:
                new_cap = 2 * cap
                nk = np.empty(new_cap)
                nk[:cap] = knots
                nc = np.zeros((p, new_cap))
                nc[:, :cap] = coefs
                knots = nk
                coefs = nc
                cap = new_cap
            knots[n_knots] = lam_new
            n_knots += 1
        for j in range(p):
            coefs[j, n_knots - 1] = beta[j]
        lam = lam_new

        just_dropped = -1
        if lam <= 0.0:
            break
        steps += 1
        if steps >= max_steps:
            status = STATUS_MAX_STEPS
            break

        if event == 1:
            enter = entry_j
        elif event == 2:
            gone = active[drop_m]
            is_active[gone] = False
            for m in range(drop_m, k - 1):
                active[m] = active[m + 1]
                signs[m] = signs[m + 1]
            k -= 1
            for m1 in range(k):
                for m2 in range(k):
                    G[m1, m2] = 0.0
            for m1 in range(k):
                for m2 in range(m1 + 1):
                    s = 0.0
                    c1 = active[m1]
                    c2 = active[m2]
                    for i in range(n):
                        s += X[i, c1] * X[i, c2]
                    G[m1, m2] = s
                    G[m2, m1] = s
            if not _cholesky(G, k, L):
                status = STATUS_DEGENERATE
                break
            just_dropped = gone

    return knots[:n_knots].copy(), coefs[:, :n_knots].copy(), status, n_skipped
