"""Compiled O(n^2) sup kernels over grid-point pairs.

All kernels take uniform-grid data (row k <-> t_start + k*mesh) and a window
[i0, i1] of row indices.
"""

import numpy as np
from numba import njit


def lag_weights(n_lags, mesh, exponent):
    """(k*mesh)**(-exponent) for k = 0..n_lags; entry 0 is unused."""
    w = np.zeros(n_lags + 1)
    k = np.arange(1, n_lags + 1, dtype=np.float64)
    w[1:] = (k * mesh) ** (-exponent)
    return w


@njit(cache=True, fastmath=True)
def _holder_sup(v, w, i0, i1):
    # v is component-major (m, n+1); the inner loops run over s so they vectorise
    m = v.shape[0]
    best = 0.0
    acc = np.empty(i1 - i0)
    for lag in range(1, i1 - i0 + 1):
        cnt = i1 - i0 - lag + 1
        acc[:cnt] = 0.0
        for a in range(m):
            for k in range(cnt):
                d = v[a, i0 + k + lag] - v[a, i0 + k]
                acc[k] += d * d
        r = 0.0
        for k in range(cnt):
            r = max(r, acc[k])
        r = np.sqrt(r) * w[lag]
        if r > best:
            best = r
    return best


def holder_sup(values, mesh, beta, i0, i1):
    values = np.asarray(values, dtype=np.float64).reshape(values.shape[0], -1)
    w = lag_weights(i1 - i0, mesh, beta)
    return float(_holder_sup(np.ascontiguousarray(values.T), w, i0, i1))


@njit(cache=True, fastmath=True)
def _rough_sup(P, C, E, ua, ub, w1, w2, i0, i1):
    # P = xa - xb, and for every area entry (i, j)
    #   Xa(s,t)_ij - Xb(s,t)_ij = C_ij(t) + E_ij(s) + D_i(s) ub_j(t) + ua_i(s) D_j(t)
    # with C = Aa - Ab, u = x - x(0), D = ub - ua, E_ij = -C_ij + ua_i ua_j - ub_i ub_j.
    # Writing the cross term through D keeps rho(a, a) = 0 exact even when the
    # compiler fuses multiply-adds. All arrays are component-major so the loops
    # over s are contiguous.
    D = ub - ua
    m = P.shape[0]
    best = 0.0
    best_path = 0.0
    best_area = 0.0
    acc = np.empty(i1 - i0)
    amax = np.empty(i1 - i0)
    for lag in range(1, i1 - i0 + 1):
        cnt = i1 - i0 - lag + 1
        acc[:cnt] = 0.0
        amax[:cnt] = 0.0
        for a in range(m):
            for k in range(cnt):
                d = P[a, i0 + k + lag] - P[a, i0 + k]
                acc[k] += d * d
        for i in range(m):
            for j in range(m):
                for k in range(cnt):
                    s = i0 + k
                    t = s + lag
                    d = abs(C[i, j, t] + E[i, j, s] + D[i, s] * ub[j, t] + ua[i, s] * D[j, t])
                    amax[k] = max(amax[k], d)
        c1 = w1[lag]
        c2 = w2[lag]
        for k in range(cnt):
            p = np.sqrt(acc[k]) * c1
            q = amax[k] * c2
            if p + q > best:
                best = p + q
            if p > best_path:
                best_path = p
            if q > best_area:
                best_area = q
    return best, best_path, best_area


@njit(cache=True, fastmath=True)
def _rough_sup2(P, C, E, ua, ub, w1, w2, i0, i1):
    # same sup as _rough_sup, unrolled for two components (the common case)
    best = 0.0
    best_path = 0.0
    best_area = 0.0
    P0, P1 = P[0], P[1]
    u0, u1 = ua[0], ua[1]
    v0, v1 = ub[0], ub[1]
    D0 = v0 - u0
    D1 = v1 - u1
    C00, C01, C10, C11 = C[0, 0], C[0, 1], C[1, 0], C[1, 1]
    E00, E01, E10, E11 = E[0, 0], E[0, 1], E[1, 0], E[1, 1]
    for lag in range(1, i1 - i0 + 1):
        c1 = w1[lag]
        c2 = w2[lag]
        mp = 0.0
        ma = 0.0
        mt = 0.0
        for s in range(i0, i1 - lag + 1):
            t = s + lag
            d0 = P0[t] - P0[s]
            d1 = P1[t] - P1[s]
            p = np.sqrt(d0 * d0 + d1 * d1) * c1
            a00 = abs(C00[t] + E00[s] + D0[s] * v0[t] + u0[s] * D0[t])
            a01 = abs(C01[t] + E01[s] + D0[s] * v1[t] + u0[s] * D1[t])
            a10 = abs(C10[t] + E10[s] + D1[s] * v0[t] + u1[s] * D0[t])
            a11 = abs(C11[t] + E11[s] + D1[s] * v1[t] + u1[s] * D1[t])
            q = max(max(a00, a01), max(a10, a11)) * c2
            mp = max(mp, p)
            ma = max(ma, q)
            mt = max(mt, p + q)
        best_path = max(best_path, mp)
        best_area = max(best_area, ma)
        best = max(best, mt)
    return best, best_path, best_area


def rough_sup(xa, Aa, xb, Ab, mesh, beta, i0, i1):
    """Return (sup of path+area term, sup of path term, sup of area term)."""
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    ua = xa - xa[0]
    ub = xb - xb[0]
    C = np.asarray(Aa, dtype=np.float64) - np.asarray(Ab, dtype=np.float64)
    E = -C + ua[:, :, None] * ua[:, None, :] - ub[:, :, None] * ub[:, None, :]
    P = np.ascontiguousarray((xa - xb).T)
    C = np.ascontiguousarray(C.transpose(1, 2, 0))
    E = np.ascontiguousarray(E.transpose(1, 2, 0))
    ua = np.ascontiguousarray(ua.T)
    ub = np.ascontiguousarray(ub.T)
    w1 = lag_weights(i1 - i0, mesh, beta)
    w2 = lag_weights(i1 - i0, mesh, 2.0 * beta)
    kernel = _rough_sup2 if P.shape[0] == 2 else _rough_sup
    a, b, c = kernel(P, C, E, ua, ub, w1, w2, i0, i1)
    return float(a), float(b), float(c)
