import math

import numpy as np
import pytest

from squeezelab import GaussianState, HomodyneConfig, ValidationError, estimate_variance, simulate, sweep_trace
from squeezelab.homodyne import RNG_NAME, dark_variance, quadrature_variance


def se(var, n):
    return var * math.sqrt(2.0 / (n - 1))


STRONG = GaussianState.from_db(-11.5, 16.0)


class TestSimulate:
    def test_squeezed_and_anti_squeezed_segments(self):
        n = 10**6
        trace = simulate(HomodyneConfig(STRONG, [(0.0, n), (math.pi / 2, n)], dark_noise_db=-80, seed=1))
        v0 = np.var(trace.segments[0][1], ddof=1)
        v90 = np.var(trace.segments[1][1], ddof=1)
        assert abs(v0 - 0.0708) < 3 * se(0.0708, n)
        expected = 10**1.6 + 1e-8
        assert abs(v90 - expected) < 3 * se(expected, n)
        assert 10**1.6 == pytest.approx(39.8, abs=0.05)

    def test_vacuum_is_rotation_invariant(self):
        n = 10**6
        trace = simulate(HomodyneConfig(GaussianState.vacuum(), [(math.pi / 4, n)], seed=2))
        assert abs(np.var(trace.segments[0][1], ddof=1) - 1) < 3 * se(1.0, n)

    def test_shapes_and_metadata(self):
        cfg = HomodyneConfig(STRONG, [(0.0, 10), (1.0, 25)], seed=9, vacuum_samples=7)
        trace = simulate(cfg)
        assert [s.size for _, s in trace.segments] == [10, 25]
        assert trace.vacuum_reference.size == 7
        assert trace.seed_used == 9 and trace.rng == RNG_NAME == "numpy.random.PCG64"
        assert simulate(HomodyneConfig(STRONG, [(0.0, 10), (1.0, 25)])).vacuum_reference.size == 25

    def test_bit_identical(self):
        cfg = HomodyneConfig(STRONG, [(0.0, 1000), (0.3, 500)], dark_noise_db=-20, seed=123)
        a, b = simulate(cfg), simulate(cfg)
        for (ta, sa), (tb, sb) in zip(a.segments, b.segments):
            assert ta == tb and sa.tobytes() == sb.tobytes()
        assert a.vacuum_reference.tobytes() == b.vacuum_reference.tobytes()

    def test_segments_independent_of_schedule_order(self):
        # each segment draws from its own (seed, index) stream
        a = simulate(HomodyneConfig(STRONG, [(0.0, 100), (1.0, 100)], seed=4))
        b = simulate(HomodyneConfig(STRONG, [(0.0, 100), (1.0, 200)], seed=4))
        assert np.array_equal(a.segments[0][1], b.segments[0][1])
        assert np.array_equal(a.segments[1][1], b.segments[1][1][:100])

    def test_different_seeds_differ(self):
        a = simulate(HomodyneConfig(STRONG, [(0.0, 100)], seed=1))
        b = simulate(HomodyneConfig(STRONG, [(0.0, 100)], seed=2))
        assert not np.array_equal(a.segments[0][1], b.segments[0][1])

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            HomodyneConfig(STRONG, [])
        with pytest.raises(ValidationError):
            HomodyneConfig(STRONG, [(0.0, 1)])
        with pytest.raises(ValidationError):
            HomodyneConfig(STRONG, [(math.nan, 10)])
        with pytest.raises(ValidationError):
            HomodyneConfig(STRONG, [(0.0, 10)], seed=-1)
        with pytest.raises(ValidationError):
            HomodyneConfig(STRONG, [(0.0, 10)], dark_noise_db=math.inf)

    def test_dark_variance(self):
        assert dark_variance(None) == 0.0
        assert dark_variance(-math.inf) == 0.0
        assert dark_variance(-20) == pytest.approx(0.01)


class TestEstimate:
    def test_identical_series_give_one(self):
        x = np.random.default_rng(0).standard_normal(1000)
        assert estimate_variance(x, x).value == 1.0

    def test_round_trip_in_db(self):
        state = GaussianState.from_db(-6.2, 6.7)
        trace = simulate(HomodyneConfig(state, [(0.0, 10**6)], seed=7))
        est = estimate_variance(trace.segments[0][1], trace.vacuum_reference)
        assert est.db == pytest.approx(-6.2, abs=0.02)
        assert est.db_stderr == pytest.approx(10 / math.log(10) * 2 / math.sqrt(10**6 - 1), rel=1e-3)

    def test_dark_noise_subtraction(self):
        state = GaussianState.from_db(-6.2, 6.7)
        clean_trace = simulate(HomodyneConfig(state, [(0.0, 10**6)], seed=8))
        dark_trace = simulate(HomodyneConfig(state, [(0.0, 10**6)], dark_noise_db=-10, seed=8))
        clean = estimate_variance(clean_trace.segments[0][1], clean_trace.vacuum_reference)
        dark = estimate_variance(dark_trace.segments[0][1], dark_trace.vacuum_reference, -10)
        assert abs(dark.value - clean.value) < 3 * math.hypot(dark.stderr, clean.stderr)
        raw = estimate_variance(dark_trace.segments[0][1], dark_trace.vacuum_reference)
        assert raw.value > dark.value

    def test_coverage(self):
        truth = 10**-0.62
        state = GaussianState.from_db(-6.2, 6.7)
        hits = 0
        for seed in range(100):
            tr = simulate(HomodyneConfig(state, [(0.0, 20000)], seed=seed))
            est = estimate_variance(tr.segments[0][1], tr.vacuum_reference)
            hits += abs(est.value - truth) <= est.stderr
        assert abs(hits / 100 - 0.68) <= 0.1

    def test_quadrature_law(self):
        dark_db = -15
        dark = dark_variance(dark_db)
        state = GaussianState.from_db(-4.0, 5.0)
        thetas = np.linspace(0, math.pi, 25)
        n = 200_000
        trace = simulate(HomodyneConfig(state, [(t, n) for t in thetas], dark_noise_db=dark_db, seed=3))
        v = np.array([np.var(s, ddof=1) for _, s in trace.segments])
        sig = np.array([se(x, n) for x in v])
        design = np.column_stack([np.cos(thetas) ** 2, np.sin(thetas) ** 2]) / sig[:, None]
        (a, b), *_ = np.linalg.lstsq(design, v / sig, rcond=None)
        cov = np.linalg.inv(design.T @ design)
        assert abs(a - (state.v1 + dark)) < 3 * math.sqrt(cov[0, 0])
        assert abs(b - (state.v2 + dark)) < 3 * math.sqrt(cov[1, 1])
        chi2 = float(np.sum(((v - a * np.cos(thetas) ** 2 - b * np.sin(thetas) ** 2) / sig) ** 2))
        # 23 degrees of freedom; well inside the 0.999 quantile
        assert chi2 < 50

    def test_rejects_bad_input(self):
        with pytest.raises(ValidationError):
            estimate_variance([1.0], [1.0, 2.0])
        with pytest.raises(ValidationError):
            estimate_variance([1.0, -1.0], [0.01, -0.01], dark_noise_db=0.0)


class TestSweep:
    def test_vacuum_is_flat(self):
        out = sweep_trace(GaussianState.vacuum(), 1e-6, 200_000, 10_000, seed=1)
        assert all(abs(e.value - 1) < 3 * e.stderr for _, e in out)

    def test_pi_sweep_reaches_both_extremes(self):
        state = GaussianState.from_db(-2.9, 2.9)
        window = 20_000
        nwin = 101
        rate = math.pi / (nwin * window - 1)
        out = sweep_trace(state, rate, nwin * window, window, seed=5)
        lo = min(out, key=lambda x: x[1].value)
        hi = max(out, key=lambda x: x[1].value)
        assert lo[1].db == pytest.approx(-2.9, abs=3 * lo[1].db_stderr + 0.01)
        assert hi[1].db == pytest.approx(2.9, abs=3 * hi[1].db_stderr + 0.01)
        assert abs(hi[0] - math.pi / 2) < 0.1
        for theta, est in out:
            assert abs(est.value - quadrature_variance(state, theta)) < 4 * est.stderr + 1e-3

    def test_midpoint_of_pure_state(self):
        v = 10**-0.5
        state = GaussianState(v, 1 / v)
        out = sweep_trace(state, 1e-7, 400_000, 200_000, theta0=math.pi / 4 - 0.01, seed=2)
        theta, est = out[0]
        assert theta == pytest.approx(math.pi / 4, abs=0.011)
        assert abs(est.value - (v + 1 / v) / 2) < 3 * est.stderr + 0.02

    def test_precondition(self):
        with pytest.raises(ValidationError):
            sweep_trace(GaussianState.vacuum(), 0.01, 1000, 100)
        with pytest.raises(ValidationError):
            sweep_trace(GaussianState.vacuum(), 1e-5, 1000, 8)
        with pytest.raises(ValidationError):
            sweep_trace(GaussianState.vacuum(), 1e-5, 10, 16)

    def test_deterministic(self):
        a = sweep_trace(STRONG, 1e-5, 50_000, 1000, seed=3)
        b = sweep_trace(STRONG, 1e-5, 50_000, 1000, seed=3)
        assert [(t, e.value) for t, e in a] == [(t, e.value) for t, e in b]
