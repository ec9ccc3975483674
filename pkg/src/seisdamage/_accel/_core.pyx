# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Newmark SDOF sweep and the SMO dual solver.

Both functions mirror :mod:`seisdamage._accel._fallback` operation for
operation so the two backends agree to rounding (in practice bit-for-bit).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, fabs, INFINITY

cnp.import_array()

DEF TAU = 1e-12


def newmark_peak_displacement(const double[::1] ag, double dt,
                              const double[::1] periods, double damping):
    """Peak |relative displacement| of a unit-mass linear SDOF per period."""
    cdef Py_ssize_t n = ag.shape[0]
    cdef Py_ssize_t nper = periods.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(nper, dtype=np.float64)
    cdef double[::1] peak = out
    cdef Py_ssize_t p, i
    cdef int s, nsub
    cdef double T, w, k, c, h, khat, acoef, dp, dph, du, dv, da, u, v, a, pk
    with nogil:
        for p in range(nper):
            T = periods[p]
            w = 2.0 * 3.141592653589793 / T
            k = w * w
            c = 2.0 * damping * w
            nsub = <int>ceil(dt / (T / 20.0) - 1e-9)
            if nsub < 1:
                nsub = 1
            h = dt / nsub
            khat = k + 2.0 * c / h + 4.0 / (h * h)
            acoef = 4.0 / h + 2.0 * c
            u = 0.0
            v = 0.0
            a = -ag[0]
            pk = 0.0
            for i in range(n - 1):
                dp = (ag[i] - ag[i + 1]) / nsub
                for s in range(nsub):
                    dph = dp + acoef * v + 2.0 * a
                    du = dph / khat
                    dv = 2.0 * du / h - 2.0 * v
                    da = 4.0 * du / (h * h) - 4.0 * v / h - 2.0 * a
                    u = u + du
                    v = v + dv
                    a = a + da
                    if fabs(u) > pk:
                        pk = fabs(u)
            peak[p] = pk
    return out


def smo_solve(const double[:, ::1] Q, const double[::1] y, double C,
              double tol, long max_iter):
    """Solve min 1/2 a'Qa - e'a s.t. y'a = 0, 0 <= a <= C.

    Returns ``(alpha, grad, n_iter, gap)``.
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] alpha_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad_arr = np.full(n, -1.0, dtype=np.float64)
    cdef double[::1] a = alpha_arr
    cdef double[::1] G = grad_arr
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef double gmax, gmax2, gd, quad, obj, objmin, gap = INFINITY
    cdef double ai, aj, oi, oj, delta, diff, tot, dai, daj, yi
    with nogil:
        while it < max_iter:
            gmax = -INFINITY
            i = -1
            for t in range(n):
                if y[t] > 0:
                    if a[t] < C and -G[t] > gmax:
                        gmax = -G[t]
                        i = t
                else:
                    if a[t] > 0 and G[t] > gmax:
                        gmax = G[t]
                        i = t
            gmax2 = -INFINITY
            j = -1
            objmin = INFINITY
            if i >= 0:
                yi = y[i]
                for t in range(n):
                    if y[t] > 0:
                        if a[t] > 0:
                            if G[t] > gmax2:
                                gmax2 = G[t]
                            gd = gmax + G[t]
                            if gd > 0:
                                quad = Q[i, i] + Q[t, t] - 2.0 * yi * Q[i, t]
                                if quad <= 0:
                                    quad = TAU
                                obj = -(gd * gd) / quad
                                if obj < objmin:
                                    objmin = obj
                                    j = t
                    else:
                        if a[t] < C:
                            if -G[t] > gmax2:
                                gmax2 = -G[t]
                            gd = gmax - G[t]
                            if gd > 0:
                                quad = Q[i, i] + Q[t, t] + 2.0 * yi * Q[i, t]
                                if quad <= 0:
                                    quad = TAU
                                obj = -(gd * gd) / quad
                                if obj < objmin:
                                    objmin = obj
                                    j = t
            gap = gmax + gmax2
            if i < 0 or j < 0 or gap < tol:
                break
            oi = a[i]
            oj = a[j]
            ai = oi
            aj = oj
            if y[i] != y[j]:
                quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
                if quad <= 0:
                    quad = TAU
                delta = (-G[i] - G[j]) / quad
                diff = ai - aj
                ai = ai + delta
                aj = aj + delta
                if diff > 0:
                    if aj < 0:
                        aj = 0.0
                        ai = diff
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = -diff
                if diff > 0:
                    if ai > C:
                        ai = C
                        aj = C - diff
                else:
                    if aj > C:
                        aj = C
                        ai = C + diff
            else:
                quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
                if quad <= 0:
                    quad = TAU
                delta = (G[i] - G[j]) / quad
                tot = ai + aj
                ai = ai - delta
                aj = aj + delta
                if tot > C:
                    if ai > C:
                        ai = C
                        aj = tot - C
                else:
                    if aj < 0:
                        aj = 0.0
                        ai = tot
                if tot > C:
                    if aj > C:
                        aj = C
                        ai = tot - C
                else:
                    if ai < 0:
                        ai = 0.0
                        aj = tot
            a[i] = ai
            a[j] = aj
            dai = ai - oi
            daj = aj - oj
            for t in range(n):
                G[t] = G[t] + (Q[i, t] * dai + Q[j, t] * daj)
            it += 1
    return alpha_arr, grad_arr, it, gap
