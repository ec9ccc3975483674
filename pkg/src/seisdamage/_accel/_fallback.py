"""Pure numpy implementations of the compiled kernels.

Same arithmetic, same operation order and the same first-index tie rules as
``_core.pyx``; the Newmark sweep is vectorised across periods that share a
sub-step count instead of looping period by period.
"""
import math

import numpy as np

TAU = 1e-12


def newmark_peak_displacement(ag, dt, periods, damping):
    """Peak |relative displacement| of a unit-mass linear SDOF per period."""
    ag = np.ascontiguousarray(ag, dtype=np.float64)
    periods = np.ascontiguousarray(periods, dtype=np.float64)
    n = ag.shape[0]
    out = np.zeros(periods.shape[0])
    w = 2.0 * 3.141592653589793 / periods
    k = w * w
    c = 2.0 * damping * w
    nsub = np.maximum(np.ceil(dt / (periods / 20.0) - 1e-9), 1).astype(np.int64)
    for ns in np.unique(nsub):
        sel = nsub == ns
        h = dt / int(ns)
        cs = c[sel]
        khat = k[sel] + 2.0 * cs / h + 4.0 / (h * h)
        acoef = 4.0 / h + 2.0 * cs
        m = int(sel.sum())
        u = np.zeros(m)
        v = np.zeros(m)
        a = np.full(m, -ag[0])
        pk = np.zeros(m)
        dps = (ag[:-1] - ag[1:]) / int(ns)
        for i in range(n - 1):
            dp = dps[i]
            for _ in range(int(ns)):
                du = (dp + acoef * v + 2.0 * a) / khat
                dv = 2.0 * du / h - 2.0 * v
                da = 4.0 * du / (h * h) - 4.0 * v / h - 2.0 * a
                u = u + du
                v = v + dv
                a = a + da
                np.maximum(pk, np.abs(u), out=pk)
        out[sel] = pk
    return out


def smo_solve(Q, y, C, tol, max_iter):
    """Solve min 1/2 a'Qa - e'a s.t. y'a = 0, 0 <= a <= C.

    Returns ``(alpha, grad, n_iter, gap)``.
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    a = np.zeros(n)
    G = np.full(n, -1.0)
    QD = np.diagonal(Q).copy()
    pos = y > 0
    it = 0
    gap = math.inf
    while it < max_iter:
        up = np.where(pos, a < C, a > 0)
        score = np.where(up, -y * G, -np.inf)
        i = int(np.argmax(score))
        gmax = score[i]
        if not up[i]:
            gap = -math.inf
            break
        low = np.where(pos, a > 0, a < C)
        yG = y * G
        gmax2 = np.max(np.where(low, yG, -np.inf))
        gd = gmax + yG
        quad = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        quad = np.where(quad <= 0, TAU, quad)
        obj = np.where(low & (gd > 0), -(gd * gd) / quad, np.inf)
        j = int(np.argmin(obj))
        gap = gmax + gmax2
        if not np.isfinite(obj[j]) or gap < tol:
            break
        oi, oj = a[i], a[j]
        ai, aj = oi, oj
        if y[i] != y[j]:
            q = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            if q <= 0:
                q = TAU
            delta = (-G[i] - G[j]) / q
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            q = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            if q <= 0:
                q = TAU
            delta = (G[i] - G[j]) / q
            tot = ai + aj
            ai -= delta
            aj += delta
            if tot > C:
                if ai > C:
                    ai, aj = C, tot - C
            elif aj < 0:
                aj, ai = 0.0, tot
            if tot > C:
                if aj > C:
                    aj, ai = C, tot - C
            elif ai < 0:
                ai, aj = 0.0, tot
        a[i] = ai
        a[j] = aj
        G += Q[i] * (ai - oi) + Q[j] * (aj - oj)
        it += 1
    return a, G, it, gap
