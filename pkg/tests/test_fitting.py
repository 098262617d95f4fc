import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from gbmtails.dpareto import DoubleParetoDist, dpareto_quantile, solve_exponents_canonical
from gbmtails.fitting import (
    DegenerateInputError,
    OneSidedDataError,
    SampleCsvError,
    SampleSet,
    compare_models,
    default_hill_k,
    fit_dpareto_mle,
    fit_lognormal,
    hill_estimator,
    loglog_histogram,
    read_sample_csv,
    write_sample_csv,
)
from gbmtails.killing import sample_killed_batch
from gbmtails.rng import RngStream
from gbmtails.sde import GbmParams, sample_terminal_levels, terminal_log_law

from conftest import QUASI, SCHEDULE


def pareto_samples(n: int, exponent: float, seed: int) -> np.ndarray:
    u = RngStream(seed, 0).uniforms(n)
    return (1.0 - u) ** (-1.0 / exponent)


def dpareto_samples(dist: DoubleParetoDist, n: int, seed: int, stream: int = 0) -> np.ndarray:
    u = np.clip(RngStream(seed, stream).uniforms(n), 1e-15, 1.0 - 1e-15)
    return dpareto_quantile(dist, u)


class TestSampleSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            SampleSet(np.array([]))
        with pytest.raises(ValueError):
            SampleSet(np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            SampleSet(np.array([1.0, math.nan]))

    def test_csv_round_trip(self, tmp_path):
        samples = SampleSet(np.array([1.5, 2.25, 0.125]), source="unit")
        path = tmp_path / "s.csv"
        write_sample_csv(path, samples)
        again = read_sample_csv(path)
        assert np.array_equal(again.values, samples.values)

    def test_csv_rejects_bad_rows_with_line_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("value\n1.0\n-3.0\nnan\n2.0\nbogus\n")
        with pytest.raises(SampleCsvError) as err:
            read_sample_csv(path)
        assert err.value.lines == [3, 4, 6]
        assert "line 3" in str(err.value)

    def test_csv_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("values\n1.0\n")
        with pytest.raises(SampleCsvError):
            read_sample_csv(path)

    def test_csv_rejects_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("value\n")
        with pytest.raises(SampleCsvError):
            read_sample_csv(path)


class TestHill:
    def test_synthetic_pareto(self):
        samples = SampleSet(pareto_samples(100_000, 1.5, seed=80))
        assert abs(hill_estimator(samples, 1000) - 1.5) < 0.1

    def test_killed_gbm_upper_tail(self, quasi_batch):
        sol = solve_exponents_canonical(QUASI.r, QUASI.alpha, SCHEDULE.nu)
        est = hill_estimator(SampleSet(quasi_batch[:, 1]), 10_000)
        assert abs(est - sol.m1_canonical) / sol.m1_canonical < 0.15

    def test_degenerate_ties(self):
        with pytest.raises(DegenerateInputError):
            hill_estimator(SampleSet(np.full(100, 3.0)), 10)

    def test_k_range(self):
        samples = SampleSet(np.arange(1.0, 11.0))
        for k in (0, 1, 10, 11):
            with pytest.raises(ValueError):
                hill_estimator(samples, k)

    def test_default_k(self):
        assert default_hill_k(500) == 10
        assert default_hill_k(100_000) == 1000


class TestLognormal:
    def test_closed_form_moments(self):
        mu, sigma, ll = fit_lognormal(SampleSet(np.array([1.0, math.e**2, math.e**4])))
        assert mu == pytest.approx(2.0, rel=1e-14)
        assert sigma == pytest.approx(math.sqrt(8.0 / 3.0), rel=1e-14)
        assert math.isfinite(ll)

    def test_monte_carlo_recovery(self):
        law = terminal_log_law(QUASI, 10.0)
        levels = sample_terminal_levels(QUASI, 10.0, 100_000, master_seed=51)
        mu, sigma, _ = fit_lognormal(SampleSet(levels))
        assert abs(mu - law.mean) < 3 * law.std / math.sqrt(1e5)
        assert abs(sigma - law.std) < 3 * law.std / math.sqrt(2e5)

    def test_degenerate_zero_variance(self):
        mu, sigma, ll = fit_lognormal(SampleSet(np.full(5, 2.0)))
        assert mu == math.log(2.0) and sigma == 0.0 and math.isinf(ll)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            fit_lognormal(SampleSet(np.array([1.0])))


class TestDoubleParetoFit:
    def test_recovers_synthetic_parameters(self):
        truth = DoubleParetoDist(center=1.0, m1=1.5, m2=0.8)
        samples = SampleSet(dpareto_samples(truth, 100_000, seed=88))
        center, m1, m2, ll = fit_dpareto_mle(samples)
        assert abs(center - truth.center) / truth.center < 0.05
        assert abs(m1 - truth.m1) / truth.m1 < 0.05
        assert abs(m2 - truth.m2) / truth.m2 < 0.05
        assert math.isfinite(ll)

    def test_symmetric_data_exact_center_and_equal_rates(self):
        center, m1, m2, _ = fit_dpareto_mle(
            SampleSet(np.array([0.25, 0.5, 1.0, 2.0, 4.0]))
        )
        assert center == 1.0
        assert m1 == m2

    def test_one_sided_error_when_no_two_sided_candidate(self):
        with pytest.raises(OneSidedDataError):
            fit_dpareto_mle(SampleSet(np.array([1.0, 1.0, 1.0, 2.0, 2.0])))

    def test_preconditions(self):
        with pytest.raises(ValueError):
            fit_dpareto_mle(SampleSet(np.array([1.0, 2.0])))
        with pytest.raises(ValueError):
            fit_dpareto_mle(SampleSet(np.full(10, 1.0)))

    def test_consistency_in_sample_size(self):
        truth = DoubleParetoDist(center=1.0, m1=1.5, m2=0.8)
        med_errs = []
        for n in (1000, 10_000, 100_000):
            errs = []
            for seed in range(20):
                samples = SampleSet(dpareto_samples(truth, n, seed=seed, stream=7))
                _, m1, _, _ = fit_dpareto_mle(samples)
                errs.append(abs(m1 - truth.m1))
            med_errs.append(np.median(errs))
        assert med_errs[0] > med_errs[1] > med_errs[2]


class TestInvariances:
    def test_scale_equivariance(self):
        truth = DoubleParetoDist(center=1.0, m1=1.5, m2=0.8)
        x = dpareto_samples(truth, 20_000, seed=88)
        c0, m10, m20, _ = fit_dpareto_mle(SampleSet(x))
        h0 = hill_estimator(SampleSet(x), 200)
        mu0, s0, _ = fit_lognormal(SampleSet(x))
        for scale in (7.25, 1e-3, 3137.5):
            scaled = SampleSet(x * scale)
            c, m1, m2, _ = fit_dpareto_mle(scaled)
            assert abs(c / (c0 * scale) - 1) < 1e-10
            assert abs(m1 - m10) / m10 < 1e-10
            assert abs(m2 - m20) / m20 < 1e-10
            assert abs(hill_estimator(scaled, 200) - h0) / h0 < 1e-10
            mu, s, _ = fit_lognormal(scaled)
            assert abs(mu - mu0 - math.log(scale)) < 1e-10
            assert abs(s - s0) / s0 < 1e-10

    def test_permutation_invariance_is_byte_exact(self):
        truth = DoubleParetoDist(center=1.0, m1=1.5, m2=0.8)
        x = dpareto_samples(truth, 5000, seed=88)
        shuffled = np.random.default_rng(4).permutation(x)
        assert fit_dpareto_mle(SampleSet(shuffled)) == fit_dpareto_mle(SampleSet(x))
        assert hill_estimator(SampleSet(shuffled), 100) == hill_estimator(SampleSet(x), 100)
        assert fit_lognormal(SampleSet(shuffled)) == fit_lognormal(SampleSet(x))


class TestCompareModels:
    def test_killed_data_prefers_double_pareto(self, quasi_batch):
        report = compare_models(SampleSet(quasi_batch[:100_000, 1]))
        assert report.preferred == "double_pareto"
        assert not report.errors

    def test_fixed_horizon_data_prefers_lognormal(self):
        levels = sample_terminal_levels(QUASI, 10.0, 100_000, master_seed=51)
        report = compare_models(SampleSet(levels))
        assert report.preferred == "lognormal"

    def test_pure_pareto_rejects_lognormal(self):
        # one-sided power data: either power-law model may win (the
        # double-Pareto can mimic a pure Pareto with a steep lower branch),
        # but lognormal must lose
        report = compare_models(SampleSet(pareto_samples(50_000, 1.5, seed=80)))
        assert report.preferred in ("double_pareto", "pareto_tail")
        ln_fit = report.fit_for("lognormal")
        assert all(
            f.aic < ln_fit.aic for f in report.fits if f.model != "lognormal"
        )

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            compare_models(SampleSet(np.arange(1.0, 6.0)))

    def test_errors_propagate_per_model(self):
        report = compare_models(SampleSet(np.full(12, 3.0)))
        assert report.preferred is None
        assert set(report.errors) == {"double_pareto", "lognormal", "pareto_tail"}
        assert report.fits == ()

    def test_aic_and_ks_invariants(self, quasi_batch):
        report = compare_models(SampleSet(quasi_batch[:20_000, 1]))
        k_params = {"double_pareto": 3, "lognormal": 2, "pareto_tail": 2}
        for fit in report.fits:
            assert fit.aic == pytest.approx(
                2 * k_params[fit.model] - 2 * fit.log_likelihood, rel=1e-12
            )
            assert 0.0 <= fit.ks_statistic <= 1.0
        best = min(report.fits, key=lambda f: f.aic)
        assert report.preferred == best.model

    def test_model_subset_and_k_override(self, quasi_batch):
        samples = SampleSet(quasi_batch[:5000, 1])
        report = compare_models(samples, models=("lognormal",))
        assert [f.model for f in report.fits] == ["lognormal"]
        full = compare_models(samples, hill_k=2000)
        tail = full.fit_for("pareto_tail")
        assert tail.parameters["hill_k"] == 2000

    def test_report_json_dict_is_stable(self, quasi_batch):
        samples = SampleSet(quasi_batch[:2000, 1], source="x")
        a = compare_models(samples).to_json_dict()
        b = compare_models(samples).to_json_dict()
        assert a == b
        assert a["preferred"] == "double_pareto"


class TestLogLogHistogram:
    def test_single_value(self):
        table = loglog_histogram(SampleSet(np.full(7, 4.2)), bins_per_decade=5)
        assert table.shape[0] == 1
        center, density = table[0]
        width = 4.2 * (10 ** (1 / 5) - 1)
        assert density == pytest.approx(1.0 / width, rel=1e-12)

    def test_total_mass(self):
        x = pareto_samples(100_000, 1.5, seed=80)
        table = loglog_histogram(SampleSet(x), bins_per_decade=8)
        # recover widths from geometric centers: width = center * (g - 1/g)
        g = 10 ** (1 / 16)
        widths = table[:, 0] * (g - 1.0 / g)
        assert np.sum(table[:, 1] * widths) == pytest.approx(1.0, abs=1e-12)

    def test_pareto_slope(self):
        x = pareto_samples(1_000_000, 1.5, seed=66)
        table = loglog_histogram(SampleSet(x), bins_per_decade=8)
        centers, density = table[:, 0], table[:, 1]
        mask = (centers >= 10.0) & (centers <= 1000.0)
        slope = np.polyfit(np.log(centers[mask]), np.log(density[mask]), 1)[0]
        assert slope == pytest.approx(-2.5, abs=0.15)

    def test_rejects_bad_bins(self):
        with pytest.raises(ValueError):
            loglog_histogram(SampleSet(np.array([1.0, 2.0])), 0)


class TestRegimeNarrative:
    def test_fitted_exponent_tracks_volatility(self):
        # sweep alpha across the critical volatility; fitted m1 must be
        # rank-monotone (decreasing) in alpha
        alphas = np.linspace(0.1, 0.55, 8)
        fitted = []
        for i, alpha in enumerate(alphas):
            params = GbmParams(x0=1.0, r=0.05, alpha=float(alpha))
            batch = sample_killed_batch(params, SCHEDULE, 100_000, master_seed=900 + i)
            _, m1, _, _ = fit_dpareto_mle(SampleSet(batch[:, 1]))
            fitted.append(m1)
        rho = spearmanr(alphas, fitted).statistic
        assert abs(rho) >= 0.9
