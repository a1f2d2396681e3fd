"""Simulation and Monte Carlo harness: error rates, ROC curves, segment recovery.

Every series is generated from its own seed (``base_seed + index``), so a
report is a pure function of its arguments regardless of how many worker
processes are used.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .cointtest import DEFAULT_LOG_THRESHOLD, DF_LEVEL, bayes_test, classical_test, df_critical_value, df_null_taus
from .em import EmConfig
from .errors import InputError
from .series import SeriesPair
from .switching import SwitchConfig, map_regimes, switch_em

WORKERS_ENV = "BAYESCOINT_WORKERS"
PHI_STREAM = 1  # separate RNG stream for the per-series phi draw

DESK_LENGTHS = (20, 50, 100, 200)
DESK_RATES_N = 500
FULL_RATES_N = 5000
DESK_ROC_N = 2000
FULL_ROC_N = 10_000
ROC_T = 100
DEFAULT_SEGMENT_CFG = SwitchConfig(p_init_rw=0.5, p_rw_to_rw=0.99, p_c_to_c=0.99)


class XProcess(enum.Enum):
    RANDOM_WALK = "random_walk"
    SUPPLIED = "supplied"


@dataclass(frozen=True)
class SimSpec:
    """One simulated pair. ``phi = 1`` gives random-walk residuals."""

    t_len: int
    alpha: float = 0.0
    beta: float = 1.0
    sigma2: float = 1.0
    phi: float = 1.0
    x_process: XProcess = XProcess.RANDOM_WALK
    seed: int = 0
    x: tuple | None = None

    def __post_init__(self):
        if self.t_len < 3:
            raise InputError("t_len must be >= 3")
        if not -1.0 <= self.phi <= 1.0:
            raise InputError("phi must lie in [-1, 1]")
        if not self.sigma2 > 0.0:
            raise InputError("sigma2 must be positive")
        if self.x_process is XProcess.SUPPLIED and (self.x is None or len(self.x) != self.t_len):
            raise InputError("supplied x must have length t_len")


@dataclass(frozen=True)
class SegmentedSpec:
    """Residuals whose AR coefficient is piecewise constant over consecutive segments."""

    lengths: tuple[int, ...] = (200, 200, 200)
    phis: tuple[float, ...] = (0.5, 1.0, 0.5)
    alpha: float = 0.0
    beta: float = 1.0
    sigma2: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if len(self.lengths) != len(self.phis) or not self.lengths:
            raise InputError("lengths and phis must be non-empty and of equal size")
        if sum(self.lengths) < 3 or min(self.lengths) < 1:
            raise InputError("segments must be non-empty with total length >= 3")
        if any(not -1.0 <= p <= 1.0 for p in self.phis):
            raise InputError("phis must lie in [-1, 1]")

    @property
    def t_len(self) -> int:
        return int(sum(self.lengths))

    def phi_path(self) -> np.ndarray:
        return np.repeat(np.asarray(self.phis, dtype=float), self.lengths)

    def true_regimes(self) -> np.ndarray:
        """i_t for t = 2..T (1 on random-walk steps)."""
        return (self.phi_path()[1:] == 1.0).astype(np.int8)


def _stationary_sd(phi: float, sigma2: float) -> float:
    return math.sqrt(sigma2 / (1.0 - phi * phi)) if abs(phi) < 1.0 else 0.0


def _ar_residuals(rng: np.random.Generator, phis: np.ndarray, sigma2: float) -> np.ndarray:
    n = phis.size
    z0 = rng.standard_normal()
    eta = math.sqrt(sigma2) * rng.standard_normal(n - 1)
    eps = np.empty(n)
    eps[0] = _stationary_sd(phis[0], sigma2) * z0
    for t in range(1, n):
        eps[t] = phis[t] * eps[t - 1] + eta[t - 1]
    return eps


def _x_path(rng: np.random.Generator, t_len: int) -> np.ndarray:
    return np.cumsum(rng.standard_normal(t_len))


def simulate(spec: SimSpec) -> SeriesPair:
    """x first (random walk or supplied), then eps_1 and the innovations."""
    rng = np.random.default_rng(spec.seed)
    if spec.x_process is XProcess.RANDOM_WALK:
        x = _x_path(rng, spec.t_len)
    else:
        x = np.asarray(spec.x, dtype=float)
    eps = _ar_residuals(rng, np.full(spec.t_len, float(spec.phi)), spec.sigma2)
    return SeriesPair(x, spec.alpha + spec.beta * x + eps)


def simulate_segmented(spec: SegmentedSpec) -> SeriesPair:
    rng = np.random.default_rng(spec.seed)
    x = _x_path(rng, spec.t_len)
    eps = _ar_residuals(rng, spec.phi_path(), spec.sigma2)
    return SeriesPair(x, spec.alpha + spec.beta * x + eps)


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _pmap(fn, jobs: list, workers: int | None):
    """Order-preserving map; serial when one worker is requested."""
    w = worker_count(workers)
    if w == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    chunk = max(1, len(jobs) // (4 * w))
    with ProcessPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


# ---------------------------------------------------------------------------
# Bayes vs classical scoring


@dataclass(frozen=True)
class _ScoreJob:
    t_len: int
    seed: int
    cointegrated: bool
    critical_value: float
    log_threshold: float
    em_cfg: EmConfig


@dataclass(frozen=True)
class SeriesScore:
    seed: int
    cointegrated: bool
    phi: float
    log_bayes_factor: float
    df_tau: float
    bayes_verdict: bool
    classical_verdict: bool


def _draw_phi(seed: int, cointegrated: bool) -> float:
    if not cointegrated:
        return 1.0
    return float(np.random.default_rng([PHI_STREAM, seed]).uniform(-1.0, 1.0))


def _score(job: _ScoreJob) -> SeriesScore:
    phi = _draw_phi(job.seed, job.cointegrated)
    pair = simulate(SimSpec(job.t_len, phi=phi, seed=job.seed))
    bt = bayes_test(pair, job.em_cfg, job.log_threshold)
    df = classical_test(pair, critical_value=job.critical_value)
    return SeriesScore(job.seed, job.cointegrated, phi, bt.log_bayes_factor, df.tau, bt.cointegrated, df.reject_unit_root)


def score_series(t_len: int, n: int, base_seed: int, index0: int = 0, level: float = DF_LEVEL,
                 log_threshold: float = DEFAULT_LOG_THRESHOLD, em_cfg: EmConfig = EmConfig(),
                 workers: int | None = None) -> list[SeriesScore]:
    """Score ``n`` series of length ``t_len``: the first half cointegrated, the rest random walks.

    Series ``i`` uses seed ``base_seed + index0 + i``.
    """
    if n < 2 or n % 2:
        raise InputError("n must be a positive even number")
    cv = df_critical_value(t_len, level)
    jobs = [_ScoreJob(t_len, base_seed + index0 + i, i < n // 2, cv, log_threshold, em_cfg) for i in range(n)]
    return _pmap(_score, jobs, workers)


def confusion(truth, verdict) -> dict:
    """Counts and rates with the true-class denominators."""
    truth = np.asarray(truth, dtype=bool)
    verdict = np.asarray(verdict, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = int((~truth).sum())
    fp = int((verdict & ~truth).sum())
    fn = int((~verdict & truth).sum())
    return {
        "fp_rate": fp / n_neg if n_neg else 0.0,
        "fn_rate": fn / n_pos if n_pos else 0.0,
        "n_true_neg": n_neg,
        "n_true_pos": n_pos,
        "n_false_pos": fp,
        "n_false_neg": fn,
    }


@dataclass(frozen=True)
class RateRow:
    method: str
    t_len: int
    fp_rate: float
    fn_rate: float
    n_true_neg: int
    n_true_pos: int
    n_false_pos: int
    n_false_neg: int


RATES_COLUMNS = ("method", "t_len", "fp_rate", "fn_rate", "n_true_neg", "n_true_pos")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


@dataclass(frozen=True)
class RatesReport:
    lengths: tuple[int, ...]
    n_per_length: int
    base_seed: int
    log_threshold: float
    level: float
    rows: tuple[RateRow, ...]

    def rate(self, method: str, t_len: int) -> RateRow:
        for r in self.rows:
            if r.method == method and r.t_len == t_len:
                return r
        raise KeyError((method, t_len))

    def to_csv(self) -> str:
        return _csv(RATES_COLUMNS, [[getattr(r, c) for c in RATES_COLUMNS] for r in self.rows])

    def to_dict(self) -> dict:
        out = {
            "lengths": list(self.lengths),
            "n_per_length": self.n_per_length,
            "base_seed": self.base_seed,
            "threshold_log_c": self.log_threshold,
            "level": self.level,
            "methods": {},
        }
        for r in self.rows:
            d = asdict(r)
            out["methods"].setdefault(d.pop("method"), {})[str(d.pop("t_len"))] = d
        return out


def run_rates(lengths=DESK_LENGTHS, n_per_length: int = DESK_RATES_N, base_seed: int = 0,
              log_threshold: float = DEFAULT_LOG_THRESHOLD, level: float = DF_LEVEL,
              em_cfg: EmConfig = EmConfig(), workers: int | None = None) -> RatesReport:
    """False-positive and false-negative rates of both tests per series length."""
    rows = []
    for i, t_len in enumerate(lengths):
        scores = score_series(t_len, n_per_length, base_seed, i * n_per_length, level, log_threshold, em_cfg, workers)
        truth = [s.cointegrated for s in scores]
        for method, verdict in (
            ("bayes", [s.bayes_verdict for s in scores]),
            ("classical", [s.classical_verdict for s in scores]),
        ):
            rows.append(RateRow(method, int(t_len), **confusion(truth, verdict)))
    return RatesReport(tuple(int(t) for t in lengths), n_per_length, base_seed, float(log_threshold), float(level), tuple(rows))


# ---------------------------------------------------------------------------
# ROC


def auc(scores, truth) -> float:
    """Mann-Whitney AUC: P(score of a positive > score of a negative), ties count half."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class RocPoint:
    method: str
    threshold: float
    tpr: float
    fpr: float


def default_thresholds() -> list[float]:
    """Bayes thresholds C (not log C), including the 0 and infinity endpoints."""
    return [0.0] + [math.exp(v) for v in np.linspace(-30.0, 30.0, 121)] + [math.inf]


def default_levels() -> list[float]:
    return [float(v) for v in np.linspace(0.0, 1.0, 101)]


def _roc_points(method: str, cuts, predicted) -> list[RocPoint]:
    return [RocPoint(method, float(c), *p) for c, p in zip(cuts, predicted)]


@dataclass(frozen=True)
class RocReport:
    t_len: int
    n: int
    base_seed: int
    points: tuple[RocPoint, ...]
    auc: dict

    def curve(self, method: str) -> tuple[np.ndarray, np.ndarray]:
        pts = [p for p in self.points if p.method == method]
        return np.array([p.fpr for p in pts]), np.array([p.tpr for p in pts])

    def to_csv(self) -> str:
        rows = [[p.method, p.threshold, p.tpr, p.fpr] for p in self.points]
        rows += [[f"auc_{m}", "", v, ""] for m, v in self.auc.items()]
        return _csv(("method", "threshold", "tpr", "fpr"), rows)

    def to_dict(self) -> dict:
        methods: dict = {}
        for p in self.points:
            methods.setdefault(p.method, []).append({"threshold": p.threshold, "tpr": p.tpr, "fpr": p.fpr})
        return {"t_len": self.t_len, "n": self.n, "base_seed": self.base_seed, "auc": dict(self.auc), "curves": methods}


def run_roc(t_len: int = ROC_T, n: int = DESK_ROC_N, thresholds=None, base_seed: int = 0, levels=None,
            em_cfg: EmConfig = EmConfig(), workers: int | None = None) -> RocReport:
    """Sweep the Bayes threshold C and the classical significance level.

    ``thresholds`` are values of C >= 0 (0 and inf give the curve endpoints);
    a series is called cointegrated when log BF < log C. The classical test
    rejects at level a when tau falls below the simulated a-quantile.
    """
    thresholds = sorted(default_thresholds() if thresholds is None else [float(c) for c in thresholds])
    levels = sorted(default_levels() if levels is None else [float(a) for a in levels])
    if thresholds[0] < 0.0:
        raise InputError("thresholds must be non-negative")
    if levels[0] < 0.0 or levels[-1] > 1.0:
        raise InputError("levels must lie in [0, 1]")
    scores = score_series(t_len, n, base_seed, em_cfg=em_cfg, workers=workers)
    truth = np.array([s.cointegrated for s in scores])
    lbf = np.array([s.log_bayes_factor for s in scores])
    tau = np.array([s.df_tau for s in scores])
    null = df_null_taus(t_len)

    def rates(pred):
        c = confusion(truth, pred)
        return 1.0 - c["fn_rate"], c["fp_rate"]

    with np.errstate(divide="ignore"):
        bayes = [rates(lbf < math.log(c) if c > 0.0 else np.zeros(n, bool)) for c in thresholds]
    classical = []
    for a in levels:
        cv = -math.inf if a <= 0.0 else (math.inf if a >= 1.0 else float(np.quantile(null, a)))
        classical.append(rates(tau < cv))
    points = _roc_points("bayes", thresholds, bayes) + _roc_points("classical", levels, classical)
    areas = {"bayes": auc(-lbf, truth), "classical": auc(-tau, truth)}
    return RocReport(t_len, n, base_seed, tuple(points), areas)


# ---------------------------------------------------------------------------
# segment recovery


def regime_boundaries(regimes) -> np.ndarray:
    """Times t (1-based) at which i_t differs from i_{t-1}; regimes cover t = 2..T."""
    r = np.asarray(regimes)
    return np.flatnonzero(np.diff(r) != 0) + 3


def boundary_errors(true_b, found_b, t_len: int) -> np.ndarray:
    """Distance from each true boundary to the nearest detected one (t_len if none)."""
    found_b = np.asarray(found_b)
    return np.array([np.min(np.abs(found_b - b)) if found_b.size else t_len for b in true_b], dtype=float)


@dataclass(frozen=True)
class _SegJob:
    spec: SegmentedSpec
    cfg: SwitchConfig
    em_cfg: EmConfig


@dataclass(frozen=True)
class SegmentRun:
    seed: int
    accuracy: float
    boundary_errors: tuple[float, ...]
    n_detected: int
    sigma2: float
    loglik: float
    em_iterations: int


def _segment_one(job: _SegJob) -> SegmentRun:
    pair = simulate_segmented(job.spec)
    res = switch_em(pair, cfg=job.cfg, em_cfg=job.em_cfg)
    est = map_regimes(res.smoothed)
    truth = job.spec.true_regimes()
    found = regime_boundaries(est)
    errs = boundary_errors(regime_boundaries(truth), found, job.spec.t_len)
    return SegmentRun(job.spec.seed, float(np.mean(est == truth)), tuple(float(e) for e in errs), int(found.size),
                      res.params.sigma2, res.loglik, res.trace.iterations)


@dataclass(frozen=True)
class SegmentReport:
    spec: SegmentedSpec
    cfg: SwitchConfig
    runs: tuple[SegmentRun, ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([r.accuracy for r in self.runs]))

    @property
    def mean_boundary_error(self) -> float:
        e = [x for r in self.runs for x in r.boundary_errors]
        return float(np.mean(e)) if e else 0.0

    @property
    def boundary_hit_rate(self) -> float:
        """Fraction of runs whose every true boundary is matched within 5 steps."""
        return float(np.mean([all(e <= 5 for e in r.boundary_errors) for r in self.runs]))

    def to_csv(self) -> str:
        nb = max((len(r.boundary_errors) for r in self.runs), default=0)
        header = ["seed", "accuracy", "n_detected"] + [f"boundary_error_{i + 1}" for i in range(nb)]
        rows = [[r.seed, r.accuracy, r.n_detected, *r.boundary_errors] for r in self.runs]
        return _csv(header, rows)

    def to_dict(self) -> dict:
        return {
            "spec": {**asdict(self.spec), "lengths": list(self.spec.lengths), "phis": list(self.spec.phis)},
            "cfg": asdict(self.cfg),
            "mean_accuracy": self.mean_accuracy,
            "mean_boundary_error": self.mean_boundary_error,
            "boundary_hit_rate": self.boundary_hit_rate,
            "runs": [asdict(r) for r in self.runs],
        }


def run_segment_recovery(spec: SegmentedSpec = SegmentedSpec(), cfg: SwitchConfig = DEFAULT_SEGMENT_CFG, n: int = 100,
                         em_cfg: EmConfig = EmConfig(), workers: int | None = None) -> SegmentReport:
    """Fit the switching model to ``n`` simulations of ``spec`` (seeds spec.seed + i)."""
    if n < 1:
        raise InputError("n must be positive")
    jobs = [_SegJob(SegmentedSpec(spec.lengths, spec.phis, spec.alpha, spec.beta, spec.sigma2, spec.seed + i), cfg, em_cfg)
            for i in range(n)]
    return SegmentReport(spec, cfg, tuple(_pmap(_segment_one, jobs, workers)))


def dumps(report) -> str:
    """Canonical JSON for a report (sorted keys, repr floats)."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=True) + "\n"
