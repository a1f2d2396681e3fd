import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bayescoint.errors import InputError
from bayescoint.experiments import (
    RATES_COLUMNS,
    SegmentedSpec,
    SimSpec,
    XProcess,
    auc,
    boundary_errors,
    confusion,
    dumps,
    regime_boundaries,
    run_rates,
    run_roc,
    run_segment_recovery,
    score_series,
    simulate,
    simulate_segmented,
    worker_count,
)


def residuals(pair, spec):
    return pair.y - spec.alpha - spec.beta * pair.x


class TestSimulate:
    def test_white_noise_autocorrelation(self):
        spec = SimSpec(5000, phi=0.0, seed=3)
        eps = residuals(simulate(spec), spec)
        r1 = np.corrcoef(eps[1:], eps[:-1])[0, 1]
        assert abs(r1) < 3 / math.sqrt(spec.t_len)

    def test_stationary_variance(self):
        spec = SimSpec(10_000, phi=0.5, sigma2=2.0, alpha=1.0, beta=-0.5, seed=4)
        eps = residuals(simulate(spec), spec)
        assert eps.var() == pytest.approx(2.0 / (1 - 0.25), rel=0.1)

    def test_deterministic(self):
        a, b = simulate(SimSpec(200, phi=0.3, seed=9)), simulate(SimSpec(200, phi=0.3, seed=9))
        assert a.x.tobytes() == b.x.tobytes() and a.y.tobytes() == b.y.tobytes()
        c = simulate(SimSpec(200, phi=0.3, seed=10))
        assert not np.array_equal(a.y, c.y)

    def test_random_walk_starts_at_zero(self):
        spec = SimSpec(50, phi=1.0, seed=2)
        eps = residuals(simulate(spec), spec)
        assert eps[0] == 0.0
        assert np.std(np.diff(eps)) == pytest.approx(1.0, rel=0.4)

    def test_supplied_x(self):
        x = tuple(float(v) for v in range(20))
        pair = simulate(SimSpec(20, x_process=XProcess.SUPPLIED, x=x, phi=0.0))
        np.testing.assert_array_equal(pair.x, x)

    @pytest.mark.parametrize("kw", [{"t_len": 2}, {"t_len": 10, "phi": 1.5}, {"t_len": 10, "sigma2": 0.0},
                                    {"t_len": 10, "x_process": XProcess.SUPPLIED}])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            SimSpec(**kw)

    def test_segmented(self):
        spec = SegmentedSpec((50, 30, 20), (0.5, 1.0, 0.0), seed=1)
        pair = simulate_segmented(spec)
        assert len(pair) == 100
        r = spec.true_regimes()
        assert r.size == 99 and r.sum() == 30
        np.testing.assert_array_equal(regime_boundaries(r), [51, 81])


class TestScoring:
    def test_confusion_perfect(self):
        truth = np.array([1, 1, 0, 0, 1], bool)
        c = confusion(truth, truth)
        assert c["fp_rate"] == 0.0 and c["fn_rate"] == 0.0
        assert (c["n_true_pos"], c["n_true_neg"]) == (3, 2)

    def test_confusion_denominators(self):
        c = confusion([1, 1, 0, 0, 0], [0, 1, 1, 1, 0])
        assert c["fn_rate"] == 0.5 and c["fp_rate"] == pytest.approx(2 / 3)

    def test_half_cointegrated_and_seeded(self):
        s = score_series(30, 8, base_seed=100, index0=4, workers=1)
        assert [x.seed for x in s] == list(range(104, 112))
        assert [x.cointegrated for x in s] == [True] * 4 + [False] * 4
        assert all(abs(x.phi) < 1 for x in s[:4]) and all(x.phi == 1 for x in s[4:])

    def test_odd_n(self):
        with pytest.raises(InputError):
            score_series(30, 7, 0)

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=30), st.data())
    def test_auc_bounds_and_complement(self, scores, data):
        truth = data.draw(st.lists(st.booleans(), min_size=len(scores), max_size=len(scores)))
        if all(truth) or not any(truth):
            return
        a = auc(scores, truth)
        assert 0.0 <= a <= 1.0
        assert a + auc([-s for s in scores], truth) == pytest.approx(1.0)

    def test_auc_separated(self):
        assert auc([3, 4, 1, 2], [True, True, False, False]) == 1.0
        assert auc([1, 1, 1, 1], [True, True, False, False]) == 0.5


@pytest.fixture(scope="module")
def rates():
    return run_rates((20, 40), 20, base_seed=5, workers=1)


class TestReports:
    def test_rates_in_unit_interval(self, rates):
        assert len(rates.rows) == 4
        for r in rates.rows:
            assert 0 <= r.fp_rate <= 1 and 0 <= r.fn_rate <= 1
            assert r.n_true_neg == r.n_true_pos == 10

    def test_rates_csv(self, rates):
        lines = rates.to_csv().splitlines()
        assert lines[0] == ",".join(RATES_COLUMNS)
        assert len(lines) == 5

    def test_rates_parallel_identical(self, rates):
        assert dumps(run_rates((20, 40), 20, base_seed=5, workers=2)) == dumps(rates)

    def test_roc(self):
        rep = run_roc(40, 30, thresholds=[0.0, 1.0, math.inf], levels=[0.0, 0.05, 1.0], base_seed=2, workers=1)
        for m in ("bayes", "classical"):
            fpr, tpr = rep.curve(m)
            assert (fpr[0], tpr[0]) == (0.0, 0.0) and (fpr[-1], tpr[-1]) == (1.0, 1.0)
            assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
            assert 0.0 <= rep.auc[m] <= 1.0
        assert rep.to_csv().splitlines()[-2].startswith("auc_bayes")

    def test_roc_default_sweep_monotone(self):
        rep = run_roc(30, 20, base_seed=0, workers=1)
        for m in ("bayes", "classical"):
            fpr, tpr = rep.curve(m)
            assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
        assert dumps(run_roc(30, 20, base_seed=0, workers=2)) == dumps(rep)

    def test_roc_rejects_negative_threshold(self):
        with pytest.raises(InputError):
            run_roc(30, 4, thresholds=[-1.0])


class TestSegments:
    def test_boundary_errors(self):
        np.testing.assert_array_equal(boundary_errors([200, 400], [198, 410, 600], 600), [2, 10])
        np.testing.assert_array_equal(boundary_errors([200], [], 600), [600])

    def test_report_deterministic(self):
        spec = SegmentedSpec((60, 60, 60), (0.3, 1.0, 0.3), seed=11)
        a = run_segment_recovery(spec, n=2, workers=1)
        b = run_segment_recovery(spec, n=2, workers=2)
        assert dumps(a) == dumps(b)
        assert [r.seed for r in a.runs] == [11, 12]
        assert 0.0 <= a.mean_accuracy <= 1.0


def test_worker_count(monkeypatch):
    monkeypatch.setenv("BAYESCOINT_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(1) == 1
