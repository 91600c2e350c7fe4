# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_kernels_py`` for the reference)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, M_PI

cnp.import_array()


cdef inline double _A(double j, double j1, double j2, double m3) nogil:
    cdef double v = (j * j - (j1 - j2) * (j1 - j2)) * ((j1 + j2 + 1) * (j1 + j2 + 1) - j * j) * (j * j - m3 * m3)
    if v > 0:
        return sqrt(v)
    return 0.0


cdef inline double _B(double j, double j1, double j2, double m1, double m2, double m3) nogil:
    return -(2 * j + 1) * (j1 * (j1 + 1) * m3 - j2 * (j2 + 1) * m3 - j * (j + 1) * (m2 - m1))


cdef int _first_peak(double[:] v, int n, int direction) nogil:
    cdef int p, i0, i1
    cdef double prev = -1.0, cur
    for p in range(n - 1):
        if direction > 0:
            i0 = p
            i1 = p + 1
        else:
            i0 = n - 1 - p
            i1 = n - 2 - p
        cur = fabs(v[i0]) + fabs(v[i1])
        if cur < prev:
            return i0
        prev = cur
    if direction > 0:
        return n - 1
    return 0


cdef int _series(int tj1, int tj2, int tm1, int tm2, double[:] out,
                 double[:] f, double[:] g) nogil:
    # fills out[0:n] for j = jmin .. j1+j2 and returns 2*jmin, or -1 if empty
    cdef int tm3 = -tm1 - tm2
    cdef int two_jmin, two_jmax, n, i, k, kf, kb, kk, c, start
    cdef double j1, j2, m1, m2, m3, jmin, j, prev, nxt, sign_top, scale, norm, s, best, w, ph
    if abs(tm1) > tj1 or abs(tm2) > tj2 or (tj1 - tm1) % 2 != 0 or (tj2 - tm2) % 2 != 0:
        return -1
    two_jmin = abs(tj1 - tj2)
    if abs(tm3) > two_jmin:
        two_jmin = abs(tm3)
    two_jmax = tj1 + tj2
    if two_jmax < two_jmin:
        return -1
    n = (two_jmax - two_jmin) // 2 + 1
    j1 = tj1 / 2.0
    j2 = tj2 / 2.0
    m1 = tm1 / 2.0
    m2 = tm2 / 2.0
    m3 = tm3 / 2.0
    jmin = two_jmin / 2.0
    k = (tj1 - tj2 - tm3) // 2
    sign_top = -1.0 if (k % 2 != 0) else 1.0
    if n == 1:
        out[0] = sign_top / sqrt(2 * jmin + 1)
        return two_jmin
    start = 1
    if two_jmin == 0:
        k = (tj1 - tm1) // 2
        ph = -1.0 if (k % 2 != 0) else 1.0
        f[0] = ph / sqrt(tj1 + 1.0)
        f[1] = ph * m1 / sqrt(j1 * (j1 + 1) * (2 * j1 + 1))
        start = 2
    else:
        f[0] = 1.0
    for i in range(start, n):
        j = jmin + i - 1
        prev = f[i - 2] if i >= 2 else 0.0
        f[i] = -(_B(j, j1, j2, m1, m2, m3) * f[i - 1] + (j + 1) * _A(j, j1, j2, m3) * prev) / (j * _A(j + 1, j1, j2, m3))
        if fabs(f[i]) > 1e100:
            for k in range(i + 1):
                f[k] *= 1e-100
    g[n - 1] = 1.0
    for i in range(n - 1, 0, -1):
        j = jmin + i
        nxt = g[i + 1] if i + 1 < n else 0.0
        g[i - 1] = -(_B(j, j1, j2, m1, m2, m3) * g[i] + j * _A(j + 1, j1, j2, m3) * nxt) / ((j + 1) * _A(j, j1, j2, m3))
        if fabs(g[i - 1]) > 1e100:
            for k in range(i - 1, n):
                g[k] *= 1e-100
    kf = _first_peak(f, n, 1)
    kb = _first_peak(g, n, -1)
    k = (kf + kb) // 2
    best = -1.0
    kk = k
    for c in range(k - 1, k + 2):
        if 0 <= c < n:
            w = fabs(f[c]) * fabs(g[c])
            if w > best:
                best = w
                kk = c
    k = kk
    if f[k] == 0.0 or g[k] == 0.0:
        for i in range(n):
            out[i] = g[i]
    else:
        scale = f[k] / g[k]
        for i in range(n):
            out[i] = f[i] if i <= k else g[i] * scale
    norm = 0.0
    for i in range(n):
        norm += (2 * (jmin + i) + 1) * out[i] * out[i]
    norm = sqrt(norm)
    s = sign_top if out[n - 1] > 0 else -sign_top
    for i in range(n):
        out[i] *= s / norm
    return two_jmin


def threej_series(int tj1, int tj2, int tm1, int tm2):
    """All 3j symbols (j1 j2 j; m1 m2 -m1-m2) over the allowed j; doubled arguments."""
    cdef int n = (tj1 + tj2) // 2 + 2
    out = np.zeros(n)
    f = np.zeros(n)
    g = np.zeros(n)
    cdef int t0 = _series(tj1, tj2, tm1, tm2, out, f, g)
    if t0 < 0:
        return 0, np.zeros(0)
    return t0, out[: (tj1 + tj2 - t0) // 2 + 1].copy()


def multiply_kernel(j1, m1, c1, int eta1, j2, m2, c2, int eta2, int lcap):
    """Coefficients of the pointwise product of two spin-weighted expansions."""
    cdef long[:] J1 = np.ascontiguousarray(j1, dtype=np.int64)
    cdef long[:] Mv1 = np.ascontiguousarray(m1, dtype=np.int64)
    cdef long[:] J2 = np.ascontiguousarray(j2, dtype=np.int64)
    cdef long[:] Mv2 = np.ascontiguousarray(m2, dtype=np.int64)
    cdef double complex[:] C1 = np.ascontiguousarray(c1, dtype=np.complex128)
    cdef double complex[:] C2 = np.ascontiguousarray(c2, dtype=np.complex128)
    cdef int n1 = J1.shape[0]
    cdef int n2 = J2.shape[0]
    cdef int eta3 = eta1 + eta2
    if n1 == 0 or n2 == 0:
        return np.zeros((0, 1), dtype=complex)
    cdef int jm1 = int(np.max(j1)), jm2 = int(np.max(j2))
    cdef int lmax = jm1 + jm2
    if lcap >= 0 and lcap < lmax:
        lmax = lcap
    if lmax < abs(eta3):
        return np.zeros((0, 1), dtype=complex)
    out_np = np.zeros((lmax + 1, 2 * lmax + 1), dtype=np.complex128)
    cdef double complex[:, :] out = out_np
    cdef int width = jm1 + jm2 + 2
    # eta-dependent 3j series, one row per (j1, j2)
    eta_np = np.zeros((jm1 + 1, jm2 + 1, width))
    eta_lo_np = np.full((jm1 + 1, jm2 + 1), -1, dtype=np.int64)
    cdef double[:, :, :] eta_tab = eta_np
    cdef long[:, :] eta_lo = eta_lo_np
    cdef double[:] buf = np.zeros(width)
    cdef double[:] fb = np.zeros(width)
    cdef double[:] gb = np.zeros(width)
    cdef double[:] mser = np.zeros(width)
    cdef int a, b, ja, jb, ma, mb, M, L, lo, hi, t0, te0, i
    cdef double base, w, ph
    cdef double complex cab
    for a in range(n1):
        for b in range(n2):
            ja = J1[a]
            jb = J2[b]
            if eta_lo[ja, jb] == -1:
                t0 = _series(2 * ja, 2 * jb, -2 * eta1, -2 * eta2, buf, fb, gb)
                if t0 < 0:
                    eta_lo[ja, jb] = -2
                else:
                    eta_lo[ja, jb] = t0 // 2
                    for i in range(ja + jb - t0 // 2 + 1):
                        eta_tab[ja, jb, i] = buf[i]
    with nogil:
        for a in range(n1):
            if C1[a] == 0:
                continue
            ja = J1[a]
            ma = Mv1[a]
            for b in range(n2):
                if C2[b] == 0:
                    continue
                jb = J2[b]
                mb = Mv2[b]
                te0 = eta_lo[ja, jb]
                if te0 < 0:
                    continue
                t0 = _series(2 * ja, 2 * jb, 2 * ma, 2 * mb, mser, fb, gb)
                if t0 < 0:
                    continue
                M = ma + mb
                lo = t0 // 2
                if te0 > lo:
                    lo = te0
                if abs(M) > lo:
                    lo = abs(M)
                if abs(eta3) > lo:
                    lo = abs(eta3)
                hi = ja + jb
                if lmax < hi:
                    hi = lmax
                if hi < lo:
                    continue
                cab = C1[a] * C2[b]
                base = (2 * ja + 1) * (2 * jb + 1) / (4.0 * M_PI)
                ph = -1.0 if ((M + eta3) % 2 != 0) else 1.0
                for L in range(lo, hi + 1):
                    w = mser[L - t0 // 2] * eta_tab[ja, jb, L - te0]
                    if w == 0.0:
                        continue
                    out[L, M + lmax] = out[L, M + lmax] + ph * sqrt(base * (2 * L + 1)) * w * cab
    return out_np
