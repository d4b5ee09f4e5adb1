import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.stats import norm

from funbayes import (
    DataError,
    MarginalEstimate,
    clamp_pseudo,
    ecdf,
    kde_logdensity,
    plugin_bandwidth,
    silverman_bandwidth,
)
from funbayes.density import LOG_DENSITY_FLOOR, _plugin_bandwidth_impl


def sj_solve_the_equation(x):
    """Independent reference: Sheather-Jones solve-the-equation bandwidth.

    Uses the classical pilot constants (0.920, 0.912) and a root solve,
    a different pipeline from the package's two-stage direct plug-in.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    lam = min(sd, iqr / 1.349)
    a = 0.920 * lam * n ** (-1 / 7)
    b = 0.912 * lam * n ** (-1 / 9)
    diff = x[:, None] - x[None, :]

    def phi4_sum(g):
        z = diff / g
        return ((z**4 - 6 * z**2 + 3) * np.exp(-0.5 * z * z)).sum() / np.sqrt(2 * np.pi)

    def phi6_sum(g):
        z = diff / g
        return ((z**6 - 15 * z**4 + 45 * z**2 - 15) * np.exp(-0.5 * z * z)).sum() / np.sqrt(2 * np.pi)

    tdb = -phi6_sum(b) / (n * (n - 1) * b**7)
    sda = phi4_sum(a) / (n * (n - 1) * a**5)

    def equation(h):
        gamma = 1.357 * (sda / tdb) ** (1 / 7) * h ** (5 / 7)
        sdg = phi4_sum(gamma) / (n * (n - 1) * gamma**5)
        return (1.0 / (2 * np.sqrt(np.pi) * n * sdg)) ** 0.2 - h

    return brentq(equation, 1e-4 * sd, 2.0 * sd)


class TestPluginBandwidth:
    def test_against_solve_the_equation_oracle(self):
        x = np.random.default_rng(42).standard_normal(100)
        h = plugin_bandwidth(x)
        oracle = sj_solve_the_equation(x)
        assert abs(h - oracle) / oracle < 0.30

    def test_scale_equivariance(self):
        x = np.random.default_rng(3).standard_normal(200)
        h = plugin_bandwidth(x)
        for c in (2.0, 0.5, 17.3):
            assert plugin_bandwidth(c * x) == pytest.approx(c * h, rel=1e-9)

    def test_constant_sample_raises(self):
        with pytest.raises(DataError):
            plugin_bandwidth(np.full(50, 3.0))

    def test_short_sample_falls_back_to_silverman(self):
        x = np.array([0.0, 1.0, 2.0, 4.0])
        h, fallback = _plugin_bandwidth_impl(x)
        assert fallback
        assert h == pytest.approx(silverman_bandwidth(x))

    def test_positive_on_rough_samples(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            x = np.concatenate([rng.standard_normal(20), 10 + rng.standard_normal(20)])
            assert plugin_bandwidth(x) > 0


class TestKDE:
    def test_two_point_closed_form(self):
        est = MarginalEstimate(np.array([-1.0, 1.0]), bandwidth=1.0, sd=np.sqrt(2.0))
        expected = np.log((norm.pdf(1.0) + norm.pdf(-1.0)) / 2.0)
        assert kde_logdensity(est, 0.0) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(np.log(0.24197072451914337), abs=1e-12)

    def test_integrates_to_one(self, rng):
        sample = rng.standard_normal(60)
        est = MarginalEstimate.fit(sample)
        lo = sample.min() - 8 * est.bandwidth
        hi = sample.max() + 8 * est.bandwidth
        xs = np.linspace(lo, hi, 4001)
        dens = np.exp(kde_logdensity(est, xs))
        assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-3)

    def test_symmetry(self):
        est = MarginalEstimate(np.array([-2.0, -1.0, 1.0, 2.0]), bandwidth=0.7, sd=1.0)
        xs = np.linspace(0.1, 4.0, 17)
        left = kde_logdensity(est, -xs)
        right = kde_logdensity(est, xs)
        assert np.allclose(left, right, atol=1e-13)

    def test_floor_keeps_values_finite(self):
        est = MarginalEstimate(np.array([0.0, 0.1]), bandwidth=0.05, sd=0.1)
        val = kde_logdensity(est, 1e6)
        assert np.isfinite(val)
        assert val >= LOG_DENSITY_FLOOR

    def test_continuity_scan(self):
        est = MarginalEstimate(np.array([0.0, 1.0, 2.0]), bandwidth=0.3, sd=1.0)
        xs = np.linspace(-50, 50, 20001)
        vals = kde_logdensity(est, xs)
        assert np.all(np.isfinite(vals))
        assert np.max(np.abs(np.diff(vals))) < 2.0  # no jumps at the floor seam


class TestECDF:
    def test_direct_count(self):
        assert ecdf(np.array([1.0, 2.0, 3.0]), 2.0) == pytest.approx(0.5)

    def test_below_min_is_zero(self):
        assert ecdf(np.array([1.0, 2.0, 3.0]), 0.0) == 0.0
        assert clamp_pseudo(0.0, 3) == pytest.approx(1.0 / 8.0)

    def test_at_max(self):
        assert ecdf(np.array([1.0, 2.0, 3.0]), 3.0) == pytest.approx(3.0 / 4.0)

    def test_monotone_and_bounded(self, rng):
        sample = rng.standard_normal(40)
        xs = np.sort(rng.standard_normal(100) * 3)
        vals = ecdf(sample, xs)
        assert np.all(np.diff(vals) >= 0)
        assert vals.min() >= 0.0
        assert vals.max() <= 40 / 41

    def test_empty_sample(self):
        with pytest.raises(DataError):
            ecdf(np.array([]), 1.0)

    def test_clamp_bounds(self):
        n = 9
        u = clamp_pseudo(np.array([0.0, 0.5, 1.0]), n)
        eps = 0.5 / (n + 1)
        assert u[0] == pytest.approx(eps)
        assert u[1] == 0.5
        assert u[2] == pytest.approx(1 - eps)
