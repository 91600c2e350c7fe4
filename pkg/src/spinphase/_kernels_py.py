"""Pure-Python reference versions of the hot kernels.

These mirror ``_kernels.pyx`` line for line and are used when the compiled
extension is unavailable (or when ``SPINPHASE_PURE_PYTHON=1``).
"""
import math

import numpy as np

_FOUR_PI = 4.0 * math.pi


def threej_series(tj1, tj2, tm1, tm2):
    """All 3j symbols (j1 j2 j; m1 m2 -m1-m2) over the allowed range of j.

    Arguments are doubled integers.  Returns ``(two_jmin, values)`` where
    ``values[i]`` belongs to ``j = two_jmin/2 + i``.  Uses the three-term
    recurrence in j run from both ends and matched inside the classical region.
    """
    tm3 = -tm1 - tm2
    if abs(tm1) > tj1 or abs(tm2) > tj2 or (tj1 - tm1) % 2 or (tj2 - tm2) % 2:
        return 0, np.zeros(0)
    two_jmin = max(abs(tj1 - tj2), abs(tm3))
    two_jmax = tj1 + tj2
    if two_jmax < two_jmin:
        return two_jmin, np.zeros(0)
    n = (two_jmax - two_jmin) // 2 + 1
    j1, j2, m1, m2, m3 = tj1 / 2.0, tj2 / 2.0, tm1 / 2.0, tm2 / 2.0, tm3 / 2.0
    jmin = two_jmin / 2.0
    sign_top = -1.0 if ((tj1 - tj2 - tm3) // 2) % 2 else 1.0
    if n == 1:
        return two_jmin, np.array([sign_top / math.sqrt(2 * jmin + 1)])

    def A(j):
        v = (j * j - (j1 - j2) ** 2) * ((j1 + j2 + 1) ** 2 - j * j) * (j * j - m3 * m3)
        return math.sqrt(v) if v > 0 else 0.0

    def B(j):
        return -(2 * j + 1) * (j1 * (j1 + 1) * m3 - j2 * (j2 + 1) * m3 - j * (j + 1) * (m2 - m1))

    f = [0.0] * n
    start = 1
    if two_jmin == 0:
        # j1 == j2 and m3 == 0: the recurrence is singular at j = 0
        ph = -1.0 if ((tj1 - tm1) // 2) % 2 else 1.0
        f[0] = ph / math.sqrt(tj1 + 1)
        f[1] = ph * m1 / math.sqrt(j1 * (j1 + 1) * (2 * j1 + 1))
        start = 2
    else:
        f[0] = 1.0
    for i in range(start, n):
        j = jmin + i - 1
        prev = f[i - 2] if i >= 2 else 0.0
        f[i] = -(B(j) * f[i - 1] + (j + 1) * A(j) * prev) / (j * A(j + 1))
        if abs(f[i]) > 1e100:
            for k in range(i + 1):
                f[k] *= 1e-100
    g = [0.0] * n
    g[n - 1] = 1.0
    for i in range(n - 1, 0, -1):
        j = jmin + i
        nxt = g[i + 1] if i + 1 < n else 0.0
        g[i - 1] = -(B(j) * g[i] + j * A(j + 1) * nxt) / ((j + 1) * A(j))
        if abs(g[i - 1]) > 1e100:
            for k in range(i - 1, n):
                g[k] *= 1e-100
    kf = _first_peak(f, 1)
    kb = _first_peak(g, -1)
    k = (kf + kb) // 2
    best, kk = -1.0, k
    for c in (k - 1, k, k + 1):
        if 0 <= c < n:
            w = abs(f[c]) * abs(g[c])
            if w > best:
                best, kk = w, c
    k = kk
    if f[k] == 0.0 or g[k] == 0.0:
        # degenerate parity pattern; fall back to the backward solution
        vals = g
    else:
        scale = f[k] / g[k]
        vals = f[: k + 1] + [x * scale for x in g[k + 1:]]
    norm = 0.0
    for i in range(n):
        norm += (2 * (jmin + i) + 1) * vals[i] * vals[i]
    norm = math.sqrt(norm)
    s = sign_top if vals[n - 1] > 0 else -sign_top
    out = np.array(vals) * (s / norm)
    return two_jmin, out


def _first_peak(v, direction):
    n = len(v)
    idx = range(n) if direction > 0 else range(n - 1, -1, -1)
    idx = list(idx)
    prev = -1.0
    for p in range(len(idx) - 1):
        cur = abs(v[idx[p]]) + abs(v[idx[p + 1]])
        if cur < prev:
            return idx[p]
        prev = cur
    return idx[-1]


def multiply_kernel(j1, m1, c1, eta1, j2, m2, c2, eta2, lcap):
    """Coefficients of the pointwise product of two spin-weighted expansions.

    ``j*``, ``m*`` are integer arrays and ``c*`` complex arrays of the two
    operands; ``lcap`` bounds the output rank (negative means no bound).
    Returns a dense complex array indexed ``[L, M + Lmax]``.
    """
    eta3 = eta1 + eta2
    n1, n2 = len(j1), len(j2)
    if n1 == 0 or n2 == 0:
        return np.zeros((0, 1), dtype=complex)
    lmax = int(max(j1)) + int(max(j2))
    if lcap >= 0:
        lmax = min(lmax, lcap)
    if lmax < abs(eta3):
        return np.zeros((0, 1), dtype=complex)
    out = np.zeros((lmax + 1, 2 * lmax + 1), dtype=complex)
    eta_cache = {}
    for a in range(n1):
        ja, ma, ca = int(j1[a]), int(m1[a]), c1[a]
        if ca == 0:
            continue
        for b in range(n2):
            jb, mb, cb = int(j2[b]), int(m2[b]), c2[b]
            if cb == 0:
                continue
            M = ma + mb
            key = (ja, jb)
            if key not in eta_cache:
                eta_cache[key] = threej_series(2 * ja, 2 * jb, -2 * eta1, -2 * eta2)
            te0, tev = eta_cache[key]
            tm0, tmv = threej_series(2 * ja, 2 * jb, 2 * ma, 2 * mb)
            if len(tev) == 0 or len(tmv) == 0:
                continue
            lo = max(te0 // 2, tm0 // 2, abs(M), abs(eta3))
            hi = min(ja + jb, lmax)
            if hi < lo:
                continue
            cab = ca * cb
            base = (2 * ja + 1) * (2 * jb + 1) / _FOUR_PI
            for L in range(lo, hi + 1):
                w = tmv[L - tm0 // 2] * tev[L - te0 // 2]
                if w == 0.0:
                    continue
                ph = -1.0 if (M + eta3) % 2 else 1.0
                out[L, M + lmax] += ph * math.sqrt(base * (2 * L + 1)) * w * cab
    return out
