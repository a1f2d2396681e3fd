"""Intermittent cointegration: an exact reset model over regimes i_t and phi_t.

i_t = 1 marks a random-walk step (phi_t = 1); i_t = 0 a cointegrated step
whose phi_t is constant within a segment and redrawn from U(-1, 1) when a new
segment starts. A segment starting at t >= 3 gives eps_t a uniform density of
width ``reset_width`` instead of an AR(1) emission; a segment starting at t = 2
uses eps_1 as its first lag, exactly like the single-regime model.

Indexing the mixture components by segment start makes filtering exact with
t - 1 components at time t (O(T^2) overall). The correction smoother copies
continuing components from t+1 and adds filtered components weighted by the
probability that their segment ends at t; it is also O(T^2).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .em import EmConfig, EmTrace, QuadForm, trace_converged
from .errors import DegenerateResidualsError, InputError, NumericalError
from .phi import FLAT_VARIANCE, PhiPosterior, Prefactor, sequential_filter
from .series import RegressionParams, SeriesPair, compute_residuals, default_width, ols_fit

PRUNE_LOG_THRESHOLD = -40.0
MAP_PHI_MARGIN = 1e-6


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else -math.inf


@dataclass(frozen=True)
class SwitchConfig:
    """Regime prior. ``reset_width=None`` means the range of the residuals."""

    p_init_rw: float
    p_rw_to_rw: float
    p_c_to_c: float
    reset_width: float | None = None
    prune: bool = False

    def __post_init__(self):
        for name in ("p_init_rw", "p_rw_to_rw", "p_c_to_c"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {p}")
        if self.reset_width is not None and not self.reset_width > 0.0:
            raise InputError("reset_width must be positive")

    def width_for(self, eps) -> float:
        return default_width(eps) if self.reset_width is None else float(self.reset_width)

    def log_probs(self) -> dict:
        return {
            "lp_init_rw": _log(self.p_init_rw),
            "lp_init_c": _log(1.0 - self.p_init_rw),
            "lp11": _log(self.p_rw_to_rw),
            "lp10": _log(1.0 - self.p_rw_to_rw),
            "lp00": _log(self.p_c_to_c),
            "lp01": _log(1.0 - self.p_c_to_c),
        }


@dataclass(frozen=True)
class MixtureComponent:
    """One truncated-Gaussian component of p(phi_t, i_t = 0 | data).

    ``start`` is the (1-based) time the segment began; ``end`` is set for
    smoothed components and gives the time the segment ends.
    """

    run_length: int
    start: int
    log_weight: float
    post: PhiPosterior
    flat: bool = False
    end: int | None = None


@dataclass(frozen=True)
class SwitchSlice:
    t: int
    rw_prob: float
    components: list[MixtureComponent]
    log_z: float | None = None

    @property
    def total_mass(self) -> float:
        return self.rw_prob + sum(math.exp(c.log_weight) for c in self.components)


def _offset(k: int) -> int:
    return k * (k - 1) // 2


def _make_post(f: float, F: float) -> tuple[PhiPosterior, bool]:
    if math.isfinite(F):
        return PhiPosterior(float(f), float(F), Prefactor.NONE), False
    return PhiPosterior(0.0, FLAT_VARIANCE, Prefactor.NONE), True


@dataclass(frozen=True, eq=False)
class FilterResult(Sequence):
    """Filtered posteriors for t = 2..T; item i is time t = i + 2."""

    eps: np.ndarray
    sigma2: float
    width: float
    log_z: np.ndarray
    rw_logp: np.ndarray
    logw: np.ndarray
    f: np.ndarray
    F: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    loglik: float

    @property
    def t_len(self) -> int:
        return self.eps.size

    @property
    def rw_prob(self) -> np.ndarray:
        """p(i_t = 1 | eps_{1:t}) for t = 2..T."""
        return np.exp(self.rw_logp[1:])

    def __len__(self) -> int:
        return self.t_len - 1

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        k = i + 1
        lo = _offset(k)
        comps = []
        for j in range(1, k + 1):
            lw = float(self.logw[lo + j - 1])
            if lw == -math.inf:
                continue
            post, flat = _make_post(self.f[lo + j - 1], self.F[lo + j - 1])
            comps.append(MixtureComponent(k - j + 1, j + 1, lw, post, flat))
        return SwitchSlice(k + 1, float(math.exp(self.rw_logp[k])), comps, float(self.log_z[k]))


@dataclass(frozen=True, eq=False)
class SmoothResult(Sequence):
    """Smoothed posteriors for t = 2..T; item i is time t = i + 2.

    ``phi1``/``phi2`` hold E[phi_t 1{i_t=0} | eps_{1:T}] and the second moment;
    the ``_cont`` variants exclude segment-start steps, whose emission does not
    involve phi. ``p_start`` is the probability that t starts a segment after a
    random-walk step.
    """

    filtered: FilterResult
    rw_logp: np.ndarray
    logw: np.ndarray
    endw: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    phi1_cont: np.ndarray
    phi2_cont: np.ndarray
    p_start: np.ndarray

    @property
    def rw_prob(self) -> np.ndarray:
        return np.exp(self.rw_logp[1:])

    def phi_mean(self) -> np.ndarray:
        """E[phi_t | eps_{1:T}] for t = 2..T, with phi_t = 1 on random-walk steps."""
        return self.rw_prob + self.phi1[1:]

    def segment_log_weight(self, start: int, end: int) -> float:
        """log P(a cointegrated segment occupies exactly [start, end] | data)."""
        j, k = start - 1, end - 1
        return float(self.endw[_offset(k) + j - 1])

    def __len__(self) -> int:
        return self.filtered.t_len - 1

    def __getitem__(self, i):
        """Smoothed slice with components indexed by (start, end).

        Materialising a slice costs O(t (T - t)); the per-time summaries are
        available as arrays without this.
        """
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        k = i + 1
        fil = self.filtered
        comps = []
        for e in range(k, fil.t_len):
            lo = _offset(e)
            for j in range(1, k + 1):
                lw = float(self.endw[lo + j - 1])
                if lw == -math.inf:
                    continue
                post, flat = _make_post(fil.f[lo + j - 1], fil.F[lo + j - 1])
                comps.append(MixtureComponent(k - j + 1, j + 1, lw, post, flat, end=e + 1))
        return SwitchSlice(k + 1, float(math.exp(self.rw_logp[k])), comps)


def switch_filter(eps, sigma2: float, cfg: SwitchConfig, width: float | None = None) -> FilterResult:
    """Forward pass; log-likelihood = -log(width) + sum_t log Z_t."""
    eps = np.ascontiguousarray(eps, dtype=float)
    if eps.size < 3:
        raise InputError("T >= 3 required")
    if not sigma2 > 0.0:
        raise InputError("sigma2 must be positive")
    w = cfg.width_for(eps) if width is None else float(width)
    lp = cfg.log_probs()
    log_prune = PRUNE_LOG_THRESHOLD if cfg.prune else -math.inf
    out = _backend.kernels.switch_forward(
        eps, float(sigma2), lp["lp_init_rw"], lp["lp_init_c"], lp["lp11"], lp["lp10"], lp["lp00"], lp["lp01"], math.log(w), log_prune
    )
    log_z, rw_logp, logw, f, F, m1, m2 = out
    loglik = -math.log(w) + float(np.sum(log_z[1:]))
    if not math.isfinite(loglik):
        raise NumericalError("switching filter likelihood is not finite")
    return FilterResult(eps, float(sigma2), w, log_z, rw_logp, logw, f, F, m1, m2, loglik)


def switch_smooth(filtered: FilterResult, cfg: SwitchConfig) -> SmoothResult:
    """Backward correction pass producing exact smoothed marginals."""
    lp = cfg.log_probs()
    out = _backend.kernels.switch_backward(filtered.rw_logp, filtered.logw, filtered.m1, filtered.m2, lp["lp11"], lp["lp01"])
    return SmoothResult(filtered, *out)


def switch_quadform(smoothed: SmoothResult) -> QuadForm:
    """Expected energy weights for the regression parameters.

    Random-walk steps enter as phi = 1; segment-start steps carry no
    Gaussian emission and are left out.
    """
    n = smoothed.filtered.t_len
    p_rw = np.exp(smoothed.rw_logp[1:])
    p_start = smoothed.p_start[1:]
    own = 1.0 - p_start
    cross = p_rw + smoothed.phi1_cont[1:]
    lag_sq = p_rw + smoothed.phi2_cont[1:]
    diag = np.zeros(n)
    diag[1:] += own
    diag[:-1] += lag_sq
    return QuadForm(diag, cross, float(own.sum()))


def switch_expected_energy(pair: SeriesPair, params: RegressionParams, qf: QuadForm) -> float:
    return qf.energy(compute_residuals(pair, params), params.sigma2)


@dataclass(frozen=True)
class SwitchEmResult:
    params: RegressionParams
    filtered: FilterResult
    smoothed: SmoothResult
    loglik: float
    width: float
    trace: EmTrace = field(repr=False)

    def __iter__(self):
        # (params, smoothed, trace) unpacking
        return iter((self.params, self.smoothed, self.trace))


def switch_m_step(pair: SeriesPair, qf: QuadForm, alpha_hold: float | None = None) -> RegressionParams:
    """Closed-form maximiser of the expected energy; see ``QuadForm.solve`` for ``alpha_hold``."""
    alpha, beta = qf.solve(pair, alpha_hold)
    eps = pair.y - alpha - beta * pair.x
    s2 = qf.value(eps) / qf.count
    if not s2 > 0.0:
        raise DegenerateResidualsError("variance update collapsed to zero")
    return RegressionParams(alpha, beta, s2)


def switch_em(pair: SeriesPair, init: RegressionParams | None = None, cfg: SwitchConfig = None, em_cfg: EmConfig = EmConfig()) -> SwitchEmResult:
    """EM for (alpha, beta, sigma2) with regimes and phi_t latent.

    The reset width is fixed for the whole run (range of the initial residuals
    unless given), so the monitored likelihood is a single objective.
    """
    if cfg is None:
        raise InputError("a SwitchConfig is required")
    if init is None:
        init = ols_fit(pair).to_params()
    params = init
    width = cfg.width_for(compute_residuals(pair, params))
    trace = EmTrace()
    while True:
        eps = compute_residuals(pair, params)
        filtered = switch_filter(eps, params.sigma2, cfg, width)
        smoothed = switch_smooth(filtered, cfg)
        trace.loglik_history.append(filtered.loglik)
        trace.params_history.append(params)
        if trace_converged(trace, em_cfg):
            trace.converged = True
            break
        if len(trace.loglik_history) >= em_cfg.max_iters:
            break
        params = switch_m_step(pair, switch_quadform(smoothed), params.alpha)
    return SwitchEmResult(params, filtered, smoothed, filtered.loglik, width, trace)


def map_regimes(smoothed) -> np.ndarray:
    """Per-time argmax of p(i_t | eps_{1:T}) for t = 2..T; ties go to i_t = 0."""
    p = smoothed.rw_prob if hasattr(smoothed, "rw_prob") else np.asarray(smoothed, dtype=float)
    return (np.asarray(p) > 0.5).astype(np.int8)


def regime_segments(regimes) -> list[tuple[int, int]]:
    """Maximal runs of i_t = 0 as 1-based inclusive (start, end) times."""
    r = np.asarray(regimes)
    segs = []
    t = 0
    while t < r.size:
        if r[t] == 0:
            u = t
            while u + 1 < r.size and r[u + 1] == 0:
                u += 1
            segs.append((t + 2, u + 2))
            t = u + 1
        else:
            t += 1
    return segs


def map_phi(eps, sigma2: float, regimes, margin: float = MAP_PHI_MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """Point estimates of phi_t (t = 2..T) given MAP regimes.

    Each cointegrated segment gets the clamped mean of its uniform-prior
    posterior. Returns (phi_hat, flagged); flagged marks segments with no
    usable data, where phi_hat defaults to 0.
    """
    eps = np.asarray(eps, dtype=float)
    r = np.asarray(regimes)
    if r.size != eps.size - 1:
        raise InputError("regimes must cover t = 2..T")
    phi = np.ones(r.size)
    flagged = np.zeros(r.size, dtype=bool)
    for s, e in regime_segments(r):
        # a segment starting at t = 2 conditions on eps_1; later ones start at their reset value
        data = eps[0:e] if s == 2 else eps[s - 1 : e]
        sl = slice(s - 2, e - 1)
        try:
            post = sequential_filter(data, sigma2) if data.size >= 2 else None
        except DegenerateResidualsError:
            post = None
        if post is None:
            phi[sl] = 0.0
            flagged[sl] = True
        else:
            phi[sl] = min(max(post.f, -1.0 + margin), 1.0 - margin)
    return phi, flagged
