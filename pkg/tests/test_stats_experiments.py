import math

import numpy as np
import pytest
from scipy import stats

from boolvis.asymptotics import gumbel_cdf
from boolvis.experiments import (
    ExperimentReport,
    bracket_verdict,
    conditional_tail,
    estimate_tail,
    gumbel_clearing,
    gumbel_small_R,
    simulate_visibility,
)
from boolvis.model import ConstantDisc, ModelConfig
from boolvis.stats import SlopeFit, TailRow, fit_log_slope, ks_distance, wilson_interval


class TestWilson:
    def test_half(self):
        lo, hi = wilson_interval(50, 100)
        assert lo == pytest.approx(0.40383, abs=1e-4)
        assert hi == pytest.approx(0.59617, abs=1e-4)
        assert (hi - lo) / 2 == pytest.approx(0.0961, abs=1e-4)

    def test_agrees_with_scipy(self):
        for k, n in [(3, 40), (17, 200), (999, 1000)]:
            ref = stats.binomtest(k, n).proportion_ci(method="wilson")
            assert wilson_interval(k, n) == pytest.approx((ref.low, ref.high), abs=1e-12)

    def test_edges(self):
        assert wilson_interval(0, 100)[0] == 0.0
        assert wilson_interval(100, 100)[1] == 1.0
        with pytest.raises(ValueError):
            wilson_interval(5, 3)


class TestKS:
    def test_point_mass(self):
        assert ks_distance([0.5], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)

    def test_exact_quantiles(self):
        n = 200
        x = (np.arange(n) + 0.5) / n
        assert ks_distance(x, lambda t: t) == pytest.approx(0.5 / n)

    def test_gumbel_draws(self):
        x = np.random.default_rng(0).gumbel(size=10_000)
        assert ks_distance(x, gumbel_cdf) < 1.63 / math.sqrt(x.size)
        assert ks_distance(x, gumbel_cdf) == pytest.approx(stats.kstest(x, "gumbel_r").statistic, abs=1e-12)


def synthetic(f, r_grid, trials=10**9):
    return [TailRow.from_probability(r, f(r), trials) for r in r_grid]


class TestSlopeFit:
    def test_pure_exponential(self):
        fit = fit_log_slope(synthetic(lambda r: math.exp(-2 * r), range(2, 9)), "linear")
        assert fit.slope == pytest.approx(-2.0, abs=1e-9)

    def test_log_term_recovered(self):
        rows = synthetic(lambda r: 0.7 * r * math.exp(-2 * r), range(2, 9))
        fit = fit_log_slope(rows, "linear_plus_log")
        assert fit.slope == pytest.approx(-2.0, abs=1e-9)
        assert fit.log_coef == pytest.approx(1.0, abs=1e-9)
        # The plain fit absorbs the log term into a biased slope.
        assert abs(fit_log_slope(rows, "linear").slope + 2.0) > 0.1

    def test_sparse_rows_excluded(self):
        rows = synthetic(lambda r: math.exp(-2 * r), range(2, 9))
        rows += [TailRow.from_counts(9.0, 10**9, 3)]
        assert fit_log_slope(rows, "linear").n_rows == 7
        with pytest.raises(ValueError):
            fit_log_slope(rows[:3], "linear")

    def test_bad_model(self):
        with pytest.raises(ValueError):
            fit_log_slope(synthetic(lambda r: math.exp(-r), range(1, 6)), "cubic")

    def test_bootstrap_stderr_shrinks(self):
        f = lambda r: math.exp(-r)
        small = fit_log_slope(synthetic(f, range(1, 6), 10**4), "linear").stderr
        big = fit_log_slope(synthetic(f, range(1, 6), 10**6), "linear").stderr
        assert big < small / 5


class TestBracket:
    def fit(self, slope):
        return SlopeFit(slope, 0.01, "linear_plus_log", 5, 0.0)

    def test_endpoints(self):
        v = bracket_verdict(self.fit(-2.0), 1.0)
        assert v["bracket_lo"] == pytest.approx(-math.pi)
        assert v["bracket_hi"] == pytest.approx(-math.pi / 3)
        assert v["pass"]
        assert not bracket_verdict(self.fit(-4.0), 1.0)["pass"]


CFG = ModelConfig(2, 1.0, ConstantDisc(0.5))


class TestEstimateTail:
    def test_reproducible_and_worker_independent(self):
        a = estimate_tail(CFG, [1, 2, 3], 25_000, seed=4)
        b = estimate_tail(CFG, [1, 2, 3], 25_000, seed=4)
        c = estimate_tail(CFG, [1, 2, 3], 25_000, seed=4, workers=2)
        assert a == b == c
        assert estimate_tail(CFG, [1, 2, 3], 25_000, seed=5) != a

    def test_monotone(self):
        rows = estimate_tail(CFG, [0.5, 1, 1.5, 2, 3, 4], 5000, seed=1)
        p = [r.p_hat for r in rows]
        assert all(x >= y for x, y in zip(p, p[1:]))
        assert rows[0].hits <= rows[0].trials

    def test_threshold_matches_exact(self):
        grid = [1.0, 2.0, 3.0]
        t = estimate_tail(CFG, grid, 2000, seed=2)
        e = estimate_tail(CFG, grid, 2000, seed=2, method="exact")
        for a, b in zip(t, e):
            s = math.sqrt(a.stderr ** 2 + b.stderr ** 2) + 1e-3
            assert abs(a.p_hat - b.p_hat) < 4 * s

    def test_validation(self):
        with pytest.raises(ValueError):
            estimate_tail(CFG, [2, 1], 1000)
        with pytest.raises(ValueError):
            estimate_tail(CFG, [1], 10)
        with pytest.raises(ValueError):
            estimate_tail(CFG, [1], 1000, method="guess")


class TestReport:
    def test_csv_format(self):
        rows = [TailRow.from_counts(1.0, 3, 1)]
        text = ExperimentReport("tail", {}, 0, rows=rows).to_csv()
        head, line = text.strip().splitlines()
        assert head == "r,trials,hits,p_hat,ci_lo,ci_hi"
        assert line.split(",")[3] == "0.333333333"

    def test_json_roundtrip(self):
        import json

        rep = ExperimentReport("x", {"a": 1}, 3, samples=[1.0, 2.0], summary={"ks": 0.1})
        doc = json.loads(rep.to_json())
        assert doc["seed"] == 3 and doc["samples"] == [1.0, 2.0]
        assert rep.to_csv().splitlines()[0] == "sample"


def test_simulate_visibility_deterministic():
    a = simulate_visibility(CFG, 20, seed=3, initial_reach=4.0)
    b = simulate_visibility(CFG, 20, seed=3, initial_reach=4.0, workers=2)
    np.testing.assert_array_equal(a, b)
    assert np.all(np.isfinite(a)) and np.all(a > 0)


def test_conditional_tail_decreasing_in_alpha():
    p = [conditional_tail(6.0, a, 4000, seed=1).p_hat for a in (0.2, 0.5, 0.8)]
    assert p[0] >= p[1] >= p[2]


def test_gumbel_runs_small():
    rep = gumbel_small_R(0.2, samples=40, seed=1)
    assert len(rep.samples) == 40 and 0 <= rep.summary["ks"] <= 1
    rep = gumbel_clearing(6.0, samples=30, seed=1)
    assert rep.summary["min_V_minus_r"] >= 0
    with pytest.raises(ValueError):
        gumbel_small_R(0.5)
    with pytest.raises(ValueError):
        gumbel_clearing(2.0)
