"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` one for one and are used when the compiled
extension is unavailable (or ``BAYESCOINT_PURE=1``).

Packed storage: time index k runs over 1..T-1 (0-based eps index, i.e. the
model times t = 2..T). Slice k holds components j = 1..k, where j is the
0-based eps index of the segment start; component (k, j) lives at
``k*(k-1)//2 + (j-1)``. Component j = k at k >= 2 is a freshly reset segment
whose phi posterior is still flat (F = inf).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .quadrature import log_mass, truncnorm_moments

LOG_2PI = math.log(2.0 * math.pi)
LOG2 = math.log(2.0)


def packed_size(t_len: int) -> int:
    return t_len * (t_len - 1) // 2


def offset(k: int) -> int:
    return k * (k - 1) // 2


def phi_filter(eps: np.ndarray, sigma2: float) -> tuple[float, float, int]:
    """Sequential (f, F) recursion for phi under a uniform prior.

    Returns (f, F, k0) where k0 is the eps index of the lag that initialised
    the recursion, or (nan, inf, -1) if every lag is zero.
    """
    eps = np.asarray(eps, dtype=float)
    n = eps.size
    k0 = -1
    for k in range(n - 1):
        if eps[k] != 0.0:
            k0 = k
            break
    if k0 < 0:
        return math.nan, math.inf, -1
    prev = float(eps[k0])
    f = float(eps[k0 + 1]) / prev
    F = sigma2 / (prev * prev)
    for k in range(k0 + 2, n):
        lag = float(eps[k - 1])
        if lag == 0.0:
            continue
        denom = sigma2 + lag * lag * F
        f = (f * sigma2 + float(eps[k]) * lag * F) / denom
        F = sigma2 * F / denom
    return f, F, k0


def _log_norm(x, mean, var):
    return -0.5 * (LOG_2PI + np.log(var)) - 0.5 * (x - mean) ** 2 / var


def switch_forward(eps, sigma2, lp_init_rw, lp_init_c, lp11, lp10, lp00, lp01, log_width, log_prune=-math.inf):
    """Mixture filter for the reset model.

    Arguments are log transition probabilities: lp11 = log p(rw|rw),
    lp10 = log p(c|rw), lp00 = log p(c|c), lp01 = log p(rw|c).
    Components whose weight falls below ``log_prune`` relative to the largest
    weight in the slice are dropped (the default keeps everything).
    Returns (log_z, rw_logp, logw, f, F, m1, m2); log_z[0] and rw_logp[0] are
    unused (time t = 1 carries no regime).
    """
    eps = np.ascontiguousarray(eps, dtype=float)
    n = eps.size
    size = packed_size(n)
    logw = np.full(size, -np.inf)
    f = np.zeros(size)
    F = np.full(size, np.inf)
    m1 = np.zeros(size)
    m2 = np.full(size, 1.0 / 3.0)
    log_z = np.zeros(n)
    rw_logp = np.full(n, np.nan)

    cur_logmass = np.zeros(0)
    prev_rw = 0.0
    for k in range(1, n):
        e, lag = eps[k], eps[k - 1]
        lo = offset(k)
        rw_term = _log_norm(e, lag, sigma2)
        if k == 1:
            a_rw = lp_init_rw + rw_term
            cont_w = np.array([lp_init_c])
            cf = np.zeros(1)
            cF = np.full(1, np.inf)
            clm = np.zeros(1)
        else:
            prev_lo = offset(k - 1)
            prev_w = logw[prev_lo : prev_lo + k - 1]
            lc_prev = logsumexp(prev_w) if np.any(np.isfinite(prev_w)) else -np.inf
            a_rw = np.logaddexp(prev_rw + lp11, lc_prev + lp01) + rw_term
            cont_w = prev_w + lp00
            cf = f[prev_lo : prev_lo + k - 1].copy()
            cF = F[prev_lo : prev_lo + k - 1].copy()
            clm = cur_logmass

        # advance the continuing components (Kalman step in phi)
        flat = ~np.isfinite(cF)
        incr = np.empty(cf.size)
        nf, nF = cf.copy(), cF.copy()
        nlm = clm.copy()
        if lag != 0.0:
            g = ~flat
            if np.any(g):
                pv = sigma2 + lag * lag * cF[g]
                incr[g] = _log_norm(e, cf[g] * lag, pv)
                nf[g] = (cf[g] * sigma2 + e * lag * cF[g]) / pv
                nF[g] = sigma2 * cF[g] / pv
                nlm[g] = log_mass(nf[g], nF[g])
                incr[g] += nlm[g] - clm[g]
            if np.any(flat):
                f2 = e / lag
                F2 = sigma2 / (lag * lag)
                lm2 = float(log_mass(f2, F2))
                incr[flat] = -LOG2 - math.log(abs(lag)) + lm2
                nf[flat] = f2
                nF[flat] = F2
                nlm[flat] = lm2
        else:
            incr[:] = _log_norm(e, 0.0, sigma2)
        cont_w = cont_w + incr

        if k == 1:
            all_w = cont_w
            all_f, all_F, all_lm = nf, nF, nlm
        else:
            new_w = prev_rw + lp10 - log_width
            all_w = np.append(cont_w, new_w)
            all_f = np.append(nf, 0.0)
            all_F = np.append(nF, np.inf)
            all_lm = np.append(nlm, 0.0)

        if log_prune > -math.inf:
            top = max(float(np.max(all_w)), float(a_rw))
            all_w = np.where(all_w < top + log_prune, -np.inf, all_w)
        lz = logsumexp(np.append(all_w, a_rw))
        log_z[k] = lz
        prev_rw = a_rw - lz
        rw_logp[k] = prev_rw
        logw[lo : lo + k] = all_w - lz
        f[lo : lo + k] = all_f
        F[lo : lo + k] = all_F
        g = np.isfinite(all_F)
        if np.any(g):
            a1, a2 = truncnorm_moments(all_f[g], all_F[g])
            m1[lo : lo + k][g] = a1
            m2[lo : lo + k][g] = a2
        cur_logmass = all_lm
    return log_z, rw_logp, logw, f, F, m1, m2


def switch_backward(rw_logp, logw, m1, m2, lp11, lp01):
    """Correction smoother over the packed filter output.

    Returns (srw_logp, slogw, endw, phi1, phi2, phi1_cont, phi2_cont, p_start):
    smoothed log RW probability per time, smoothed log weight of each start,
    log probability that segment j ends exactly at k, per-time mixed moments
    E[phi_t 1{i_t=0}], E[phi_t^2 1{i_t=0}], the same restricted to steps that
    carry a phi-dependent emission, and the probability that t starts a
    segment with a reset emission.
    """
    n = rw_logp.size
    size = logw.size
    slogw = np.full(size, -np.inf)
    endw = np.full(size, -np.inf)
    srw = np.full(n, np.nan)
    phi1 = np.zeros(n)
    phi2 = np.zeros(n)
    phi1_c = np.zeros(n)
    phi2_c = np.zeros(n)
    p_start = np.zeros(n)

    k = n - 1
    lo = offset(k)
    srw[k] = rw_logp[k]
    slogw[lo : lo + k] = logw[lo : lo + k]
    endw[lo : lo + k] = logw[lo : lo + k]
    w = np.exp(logw[lo : lo + k])
    mu1 = w * m1[lo : lo + k]
    mu2 = w * m2[lo : lo + k]

    def record(k, mu1, mu2, sw):
        phi1[k] = mu1.sum()
        phi2[k] = mu2.sum()
        if k >= 2:
            phi1_c[k] = mu1[:-1].sum()
            phi2_c[k] = mu2[:-1].sum()
            p_start[k] = math.exp(sw[-1])
        else:
            phi1_c[k] = phi1[k]
            phi2_c[k] = phi2[k]

    record(k, mu1, mu2, slogw[lo : lo + k])
    for k in range(n - 2, 0, -1):
        lo = offset(k)
        nlo = offset(k + 1)
        fw = logw[lo : lo + k]
        lc = logsumexp(fw) if np.any(np.isfinite(fw)) else -np.inf
        ld = np.logaddexp(rw_logp[k] + lp11, lc + lp01)
        lr = srw[k + 1] - ld if np.isfinite(ld) else -np.inf
        ends = lr + fw + lp01
        endw[lo : lo + k] = ends
        srw[k] = np.logaddexp(slogw[nlo + k], lr + rw_logp[k] + lp11)
        slogw[lo : lo + k] = np.logaddexp(slogw[nlo : nlo + k], ends)
        e = np.exp(ends)
        mu1 = mu1[:k] + e * m1[lo : lo + k]
        mu2 = mu2[:k] + e * m2[lo : lo + k]
        record(k, mu1, mu2, slogw[lo : lo + k])
    return srw, slogw, endw, phi1, phi2, phi1_c, phi2_c, p_start
