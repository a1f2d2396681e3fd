# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference versions and
the packed storage layout."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, exp, fabs, isfinite, log, log1p, sqrt
from scipy.special.cython_special cimport erf, log_ndtr

cnp.import_array()

cdef double LOG_2PI = log(2.0 * 3.141592653589793)
cdef double LOG2 = log(2.0)
cdef double HALF_LOG_2PI = 0.5 * LOG_2PI
cdef double INV_SQRT2 = 0.7071067811865476

# fixed Gauss-Legendre rule for wide truncated Gaussians (see quadrature.py)
DEF WIDE_NODES = 64
cdef double WIDE_VARIANCE = 1.0
cdef double WIDE_MAX_TILT = 20.0
cdef double GL_X[WIDE_NODES]
cdef double GL_W[WIDE_NODES]
_x, _w = np.polynomial.legendre.leggauss(WIDE_NODES)
for _i in range(WIDE_NODES):
    GL_X[_i] = _x[_i]
    GL_W[_i] = _w[_i]


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    cdef double m
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    m = a if a > b else b
    return m + log1p(exp(-fabs(a - b)))


cdef double _logsumexp(double[::1] v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    cdef Py_ssize_t i
    cdef double m = -INFINITY
    cdef double s = 0.0
    for i in range(lo, hi):
        if v[i] > m:
            m = v[i]
    if m == -INFINITY:
        return -INFINITY
    for i in range(lo, hi):
        s += exp(v[i] - m)
    return m + log(s)


cdef inline double _log_norm(double x, double mean, double var) noexcept nogil:
    cdef double d = x - mean
    return -0.5 * (LOG_2PI + log(var)) - 0.5 * d * d / var


cdef inline double _log_ndtr_diff(double a, double b) noexcept nogil:
    cdef double la, lb
    if a > 0.0:
        la = log_ndtr(-a)
        lb = log_ndtr(-b)
        return la + log1p(-exp(lb - la))
    if b < 0.0:
        la = log_ndtr(a)
        lb = log_ndtr(b)
        return lb + log1p(-exp(la - lb))
    return log(0.5 * (erf(b * INV_SQRT2) - erf(a * INV_SQRT2)))


cdef inline double _log_mass(double f, double F) noexcept nogil:
    cdef double sd = sqrt(F)
    return _log_ndtr_diff((-1.0 - f) / sd, (1.0 - f) / sd)


cdef void _wide_moments(double f, double F, double* m1, double* m2) noexcept nogil:
    cdef int i
    cdef double m = f if fabs(f) <= 1.0 else (1.0 if f > 0.0 else -1.0)
    cdef double g, z = 0.0, s1 = 0.0, s2 = 0.0, x
    for i in range(WIDE_NODES):
        x = GL_X[i]
        g = GL_W[i] * exp(-0.5 * ((x - f) * (x - f) - (m - f) * (m - f)) / F)
        z += g
        s1 += g * x
        s2 += g * x * x
    m1[0] = s1 / z
    m2[0] = s2 / z


cdef inline void _moments(double f, double F, double lz, double* m1, double* m2) noexcept nogil:
    # lz is the log truncation mass of N(f, F) on (-1, 1)
    if F > WIDE_VARIANCE and fabs(f) <= WIDE_MAX_TILT * F:
        _wide_moments(f, F, m1, m2)
        return
    cdef double sd = sqrt(F)
    cdef double a = (-1.0 - f) / sd
    cdef double b = (1.0 - f) / sd
    cdef double ra = exp(-0.5 * a * a - HALF_LOG_2PI - lz)
    cdef double rb = exp(-0.5 * b * b - HALF_LOG_2PI - lz)
    cdef double mu = f + sd * (ra - rb)
    cdef double var = F * (1.0 + a * ra - b * rb - (ra - rb) * (ra - rb))
    if mu < -1.0:
        mu = -1.0
    elif mu > 1.0:
        mu = 1.0
    if var < 0.0:
        var = 0.0
    m1[0] = mu
    m2[0] = var + mu * mu


def phi_filter(eps, double sigma2):
    cdef double[::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = e.shape[0]
    cdef Py_ssize_t k, k0 = -1
    cdef double f, F, lag, prev, denom
    for k in range(n - 1):
        if e[k] != 0.0:
            k0 = k
            break
    if k0 < 0:
        return NAN, INFINITY, -1
    prev = e[k0]
    f = e[k0 + 1] / prev
    F = sigma2 / (prev * prev)
    for k in range(k0 + 2, n):
        lag = e[k - 1]
        if lag == 0.0:
            continue
        denom = sigma2 + lag * lag * F
        f = (f * sigma2 + e[k] * lag * F) / denom
        F = sigma2 * F / denom
    return f, F, k0


def switch_forward(eps, double sigma2, double lp_init_rw, double lp_init_c, double lp11, double lp10,
                   double lp00, double lp01, double log_width, double log_prune=-INFINITY):
    cdef double[::1] e = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t n = e.shape[0]
    cdef Py_ssize_t size = n * (n - 1) // 2
    logw_a = np.full(size, -np.inf)
    f_a = np.zeros(size)
    F_a = np.full(size, np.inf)
    m1_a = np.zeros(size)
    m2_a = np.full(size, 1.0 / 3.0)
    log_z_a = np.zeros(n)
    rw_a = np.full(n, np.nan)
    cdef double[::1] logw = logw_a, f = f_a, F = F_a, m1 = m1_a, m2 = m2_a
    cdef double[::1] log_z = log_z_a, rw_logp = rw_a
    # truncation log-mass of each component in the current slice, by start j-1
    cdef double[::1] lm = np.zeros(n)

    cdef Py_ssize_t k, j, lo, plo, idx
    cdef double x, lag, rw_term, a_rw, lc_prev, prev_rw = 0.0
    cdef double cf, cF, pv, nf, nF, nlm, w, top, lz, f2, F2, lm2, zero_incr
    cdef double mu, mm

    with nogil:
        for k in range(1, n):
            x = e[k]
            lag = e[k - 1]
            lo = k * (k - 1) // 2
            rw_term = _log_norm(x, lag, sigma2)
            zero_incr = _log_norm(x, 0.0, sigma2)
            if lag != 0.0:
                f2 = x / lag
                F2 = sigma2 / (lag * lag)
                lm2 = _log_mass(f2, F2)
            if k == 1:
                a_rw = lp_init_rw + rw_term
                # the segment starting at t = 2 conditions on eps_1: flat prior
                w = lp_init_c
                if lag != 0.0:
                    w = w - LOG2 - log(fabs(lag)) + lm2
                    f[lo] = f2
                    F[lo] = F2
                    lm[0] = lm2
                else:
                    w = w + zero_incr
                    lm[0] = 0.0
                logw[lo] = w
            else:
                plo = (k - 1) * (k - 2) // 2
                lc_prev = _logsumexp(logw, plo, plo + k - 1)
                a_rw = _logaddexp(prev_rw + lp11, lc_prev + lp01) + rw_term
                for j in range(k - 1):
                    idx = lo + j
                    w = logw[plo + j]
                    if w == -INFINITY:
                        continue
                    w = w + lp00
                    cf = f[plo + j]
                    cF = F[plo + j]
                    if lag == 0.0:
                        w = w + zero_incr
                        f[idx] = cf
                        F[idx] = cF
                    elif isfinite(cF):
                        pv = sigma2 + lag * lag * cF
                        nf = (cf * sigma2 + x * lag * cF) / pv
                        nF = sigma2 * cF / pv
                        nlm = _log_mass(nf, nF)
                        w = w + _log_norm(x, cf * lag, pv) + nlm - lm[j]
                        f[idx] = nf
                        F[idx] = nF
                        lm[j] = nlm
                    else:
                        w = w - LOG2 - log(fabs(lag)) + lm2
                        f[idx] = f2
                        F[idx] = F2
                        lm[j] = lm2
                    logw[idx] = w
                # fresh segment after a random-walk step: uniform reset emission
                logw[lo + k - 1] = prev_rw + lp10 - log_width
                lm[k - 1] = 0.0

            if log_prune > -INFINITY:
                top = a_rw
                for j in range(k):
                    if logw[lo + j] > top:
                        top = logw[lo + j]
                for j in range(k):
                    if logw[lo + j] < top + log_prune:
                        logw[lo + j] = -INFINITY

            lz = _logsumexp(logw, lo, lo + k)
            lz = _logaddexp(lz, a_rw)
            log_z[k] = lz
            prev_rw = a_rw - lz
            rw_logp[k] = prev_rw
            for j in range(k):
                idx = lo + j
                if logw[idx] == -INFINITY:
                    continue
                logw[idx] = logw[idx] - lz
                if isfinite(F[idx]):
                    _moments(f[idx], F[idx], lm[j], &mu, &mm)
                    m1[idx] = mu
                    m2[idx] = mm
    return log_z_a, rw_a, logw_a, f_a, F_a, m1_a, m2_a


def switch_backward(rw_logp_in, logw_in, m1_in, m2_in, double lp11, double lp01):
    cdef double[::1] rw_logp = np.ascontiguousarray(rw_logp_in, dtype=np.float64)
    cdef double[::1] logw = np.ascontiguousarray(logw_in, dtype=np.float64)
    cdef double[::1] m1 = np.ascontiguousarray(m1_in, dtype=np.float64)
    cdef double[::1] m2 = np.ascontiguousarray(m2_in, dtype=np.float64)
    cdef Py_ssize_t n = rw_logp.shape[0]
    cdef Py_ssize_t size = logw.shape[0]
    slogw_a = np.full(size, -np.inf)
    endw_a = np.full(size, -np.inf)
    srw_a = np.full(n, np.nan)
    phi1_a = np.zeros(n)
    phi2_a = np.zeros(n)
    phi1c_a = np.zeros(n)
    phi2c_a = np.zeros(n)
    pst_a = np.zeros(n)
    cdef double[::1] slogw = slogw_a, endw = endw_a, srw = srw_a
    cdef double[::1] phi1 = phi1_a, phi2 = phi2_a, phi1c = phi1c_a, phi2c = phi2c_a, pst = pst_a
    cdef double[::1] mu1 = np.zeros(n), mu2 = np.zeros(n)

    cdef Py_ssize_t k, j, lo, nlo
    cdef double lc, ld, lr, en, ew, s1, s2

    with nogil:
        k = n - 1
        lo = k * (k - 1) // 2
        srw[k] = rw_logp[k]
        for j in range(k):
            slogw[lo + j] = logw[lo + j]
            endw[lo + j] = logw[lo + j]
            ew = exp(logw[lo + j])
            mu1[j] = ew * m1[lo + j]
            mu2[j] = ew * m2[lo + j]
        while True:
            s1 = 0.0
            s2 = 0.0
            for j in range(k - 1):
                s1 += mu1[j]
                s2 += mu2[j]
            if k >= 2:
                phi1c[k] = s1
                phi2c[k] = s2
                pst[k] = exp(slogw[lo + k - 1])
            phi1[k] = s1 + mu1[k - 1]
            phi2[k] = s2 + mu2[k - 1]
            if k == 1:
                phi1c[k] = phi1[k]
                phi2c[k] = phi2[k]
                break
            k -= 1
            lo = k * (k - 1) // 2
            nlo = (k + 1) * k // 2
            lc = _logsumexp(logw, lo, lo + k)
            ld = _logaddexp(rw_logp[k] + lp11, lc + lp01)
            lr = srw[k + 1] - ld if isfinite(ld) else -INFINITY
            srw[k] = _logaddexp(slogw[nlo + k], lr + rw_logp[k] + lp11)
            for j in range(k):
                en = lr + logw[lo + j] + lp01
                endw[lo + j] = en
                slogw[lo + j] = _logaddexp(slogw[nlo + j], en)
                ew = exp(en)
                mu1[j] += ew * m1[lo + j]
                mu2[j] += ew * m2[lo + j]
    return srw_a, slogw_a, endw_a, phi1_a, phi2_a, phi1c_a, phi2c_a, pst_a
