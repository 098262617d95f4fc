import math

import numpy as np
import pytest
from scipy.stats import kstest

from gbmtails.agents import (
    HiaParams,
    Population,
    _update_sizes,
    init_population,
    run_hia,
    run_sweep,
    step_population,
    sweep_csv_text,
)
from gbmtails.rng import RngStream
from gbmtails.sde import GbmParams, terminal_log_law
from gbmtails.serialization import dumps


def params(**overrides) -> HiaParams:
    base = dict(
        n_agents=100, noise_std=0.3, drift=0.0, coupling_in=0.1,
        coupling_out=0.1, steps=5, floor=1e-6,
    )
    base.update(overrides)
    return HiaParams(**base)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            params(n_agents=1)
        with pytest.raises(ValueError):
            params(noise_std=-0.1)
        with pytest.raises(ValueError):
            params(coupling_in=-1.0)
        with pytest.raises(ValueError):
            params(steps=0)
        with pytest.raises(ValueError):
            params(floor=0.0)
        with pytest.raises(ValueError):
            params(floor=1.5)

    def test_population_validation(self):
        with pytest.raises(ValueError):
            Population(sizes=np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            Population(sizes=np.array([]))


class TestInit:
    def test_zero_noise_gives_unit_sizes(self):
        pop = init_population(params(noise_std=0.0), RngStream(1, 0))
        assert np.all(pop.sizes == 1.0)
        assert pop.step == 0

    def test_log_moments(self):
        pop = init_population(params(n_agents=10_000, noise_std=1.0), RngStream(3, 0))
        assert abs(np.mean(np.log(pop.sizes))) < 3 * (1.0 / 100)

    def test_determinism(self):
        a = init_population(params(), RngStream(9, 0))
        b = init_population(params(), RngStream(9, 0))
        assert a.sizes.tobytes() == b.sizes.tobytes()

    def test_floor_clamp(self):
        pop = init_population(params(n_agents=5000, noise_std=5.0, floor=0.5), RngStream(2, 0))
        assert np.all(pop.sizes >= 0.5)


class TestStep:
    def test_decoupled_deterministic_growth(self):
        p = params(noise_std=0.0, coupling_in=0.0, coupling_out=0.0, drift=0.07)
        rng = RngStream(4, 0)
        pop = init_population(p, rng)
        stepped = step_population(pop, p, rng)
        assert np.array_equal(stepped.sizes, pop.sizes * math.exp(0.07))
        assert stepped.step == 1

    def test_uses_pre_update_mean(self):
        # with pure competition the update must be linear in the old sizes
        p = params(n_agents=3, noise_std=0.0, drift=0.0, coupling_in=0.0,
                   coupling_out=0.5)
        pop = Population(sizes=np.array([1.0, 2.0, 3.0]))
        out = step_population(pop, p, RngStream(0, 0))
        wbar = 2.0
        expected = np.maximum(pop.sizes - 0.5 * wbar * pop.sizes, p.floor)
        assert np.allclose(out.sizes, expected, rtol=1e-15)

    def test_exchangeability_of_update_core(self):
        rng = RngStream(11, 0)
        sizes = np.exp(rng.normals(40))
        growth = np.exp(0.2 * rng.normals(40))
        p = params(n_agents=40)
        perm = np.random.default_rng(1).permutation(40)
        direct = _update_sizes(sizes, growth, p)[perm]
        permuted = _update_sizes(sizes[perm], growth[perm], p)
        assert direct.tobytes() == permuted.tobytes()

    def test_floor_never_violated(self):
        p = params(n_agents=500, noise_std=1.0, coupling_out=2.0, floor=1e-3, steps=30)
        rng = RngStream(5, 0)
        pop = init_population(p, rng)
        for _ in range(30):
            pop = step_population(pop, p, rng)
            assert np.all(pop.sizes >= p.floor)

    def test_decoupled_marginal_matches_exact_gbm_law(self):
        # with couplings off, log sizes after k steps follow the fixed-horizon
        # law with matched per-step drift and volatility
        k, noise, drift = 50, 0.3, 0.01
        p = params(n_agents=10_000, noise_std=noise, drift=drift,
                   coupling_in=0.0, coupling_out=0.0, steps=k)
        rng = RngStream(123, 0)
        pop = init_population(p, rng)
        for _ in range(k):
            pop = step_population(pop, p, rng)
        r_matched = noise**2 / 2 + k * drift / (k + 1)
        law = terminal_log_law(GbmParams(x0=1.0, r=r_matched, alpha=noise), k + 1)
        p_value = kstest(np.log(pop.sizes), "norm", args=(law.mean, law.std)).pvalue
        assert p_value >= 0.01


class TestRunHia:
    def test_single_step_is_init_plus_step(self):
        p = params(n_agents=50, steps=1)
        pop, _, _ = run_hia(p, seed=21)
        rng = RngStream(21, 0)
        manual = step_population(init_population(p, rng), p, rng)
        assert pop.sizes.tobytes() == manual.sizes.tobytes()

    def test_fit_report_bytes_are_reproducible(self):
        p = params(n_agents=300, steps=60)
        _, ea1, rep1 = run_hia(p, seed=8)
        _, ea2, rep2 = run_hia(p, seed=8)
        assert ea1 == ea2
        assert dumps(rep1.to_json_dict()) == dumps(rep2.to_json_dict())

    def test_effective_alpha_tracks_injected_noise_when_decoupled(self):
        p = params(n_agents=2000, noise_std=0.3, coupling_in=0.0,
                   coupling_out=0.0, steps=100)
        _, effective_alpha, report = run_hia(p, seed=3)
        assert abs(effective_alpha - 0.3) < 0.02
        assert report.preferred == "lognormal"

    def test_coupled_run_grows_heavy_tail(self):
        p = params(n_agents=2000, noise_std=0.5, steps=600)
        _, _, report = run_hia(p, seed=14)
        assert report.preferred in ("double_pareto", "pareto_tail")

    def test_needs_enough_agents_for_model_comparison(self):
        with pytest.raises(ValueError):
            run_hia(params(n_agents=5), seed=0)


class TestSweep:
    def test_small_sweep_shape_and_csv(self):
        base = params(n_agents=250, steps=120)
        result = run_sweep(base, "noise_std", [0.1, 0.3, 0.6], n_seeds=2, master_seed=5)
        assert len(result.points) == 3
        assert result.varied == "noise_std"
        assert -1.0 <= result.spearman_rho <= 1.0
        text = sweep_csv_text(result)
        lines = text.strip().split("\n")
        assert lines[0] == "noise_std,coupling,effective_alpha,m1_hat,preferred_model,spearman_rho"
        assert len(lines) == 4

    def test_rejects_bad_requests(self):
        base = params()
        with pytest.raises(ValueError):
            run_sweep(base, "floor", [0.1, 0.2], 1, 0)
        with pytest.raises(ValueError):
            run_sweep(base, "noise_std", [0.1], 1, 0)
        with pytest.raises(ValueError):
            run_sweep(base, "noise_std", [0.1, 0.2], 0, 0)
