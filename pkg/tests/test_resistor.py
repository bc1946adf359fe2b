"""Monte Carlo torus oracle: determinism, exact special cases, statistics."""

import numpy as np
import pytest

from homogenize import (
    CapabilityError,
    DistributionSpec,
    SolverError,
    constant,
    dual,
    estimate_sigma_e,
    sample_network,
    solve_corrector,
    two_component,
)
from homogenize import resistor as resistor_mod


class TestSampling:
    def test_constant_law_fills_uniformly(self):
        net = sample_network(2, 8, constant(1.0), seed=0)
        assert np.all(net.conductances == 1.0)

    def test_deterministic_for_fixed_seed(self):
        a = sample_network(2, 8, two_component(0.6, 1.4), seed=42, sample_index=3)
        b = sample_network(2, 8, two_component(0.6, 1.4), seed=42, sample_index=3)
        assert np.array_equal(a.conductances, b.conductances)

    def test_sample_index_varies_draws(self):
        a = sample_network(2, 8, two_component(0.6, 1.4), seed=42, sample_index=0)
        b = sample_network(2, 8, two_component(0.6, 1.4), seed=42, sample_index=1)
        assert not np.array_equal(a.conductances, b.conductances)

    def test_atom_fraction_concentrates(self):
        net = sample_network(2, 64, two_component(0.6, 1.4), seed=5)
        frac = np.mean(net.conductances == 0.6)
        assert abs(frac - 0.5) <= 3.0 / np.sqrt(2 * 64**2)

    def test_validation(self):
        with pytest.raises(ValueError):
            sample_network(2, 3, constant(1.0), seed=0)
        raw = DistributionSpec(atoms=None, raw_mean=1.0, raw_u_moments=(0.01,), raw_u0=0.1)
        with pytest.raises(CapabilityError):
            sample_network(2, 8, raw, seed=0)


class TestCorrector:
    def test_uniform_network_is_exact(self):
        net = sample_network(2, 8, constant(2.5), seed=0)
        sol = solve_corrector(net)
        assert sol.estimate == pytest.approx(2.5, abs=1e-12)
        assert np.max(np.abs(sol.phi)) < 1e-12

    def test_1d_chain_harmonic_mean(self):
        net = sample_network(1, 16, two_component(0.5, 2.0), seed=9)
        sol = solve_corrector(net, direction=1)
        hm = 1.0 / np.mean(1.0 / net.conductances)
        assert sol.estimate == pytest.approx(hm, rel=1e-10)

    def test_estimate_within_variational_bounds(self):
        for i in range(5):
            net = sample_network(2, 16, two_component(0.6, 1.4), seed=100, sample_index=i)
            sol = solve_corrector(net)
            harm = 1.0 / np.mean(1.0 / net.conductances)
            arith = np.mean(net.conductances)
            assert harm - 1e-12 <= sol.estimate <= arith + 1e-12

    def test_direction_validation(self):
        net = sample_network(2, 8, constant(1.0), seed=0)
        with pytest.raises(ValueError):
            solve_corrector(net, direction=3)

    def test_zero_mean_gauge(self):
        net = sample_network(2, 12, two_component(0.6, 1.4), seed=17)
        sol = solve_corrector(net)
        assert abs(sol.phi.mean()) < 1e-12


class TestEstimator:
    def test_constant_dist(self):
        est = estimate_sigma_e(2, 8, constant(1.5), samples=3, seed=0)
        assert est.mean == pytest.approx(1.5, abs=1e-12)
        assert est.stderr == pytest.approx(0.0, abs=1e-12)

    def test_deterministic_and_thread_invariant(self):
        kwargs = dict(samples=6, seed=21)
        a = estimate_sigma_e(2, 12, two_component(0.6, 1.4), **kwargs)
        b = estimate_sigma_e(2, 12, two_component(0.6, 1.4), **kwargs)
        c = estimate_sigma_e(2, 12, two_component(0.6, 1.4), threads=2, **kwargs)
        assert a.mean == b.mean == c.mean
        assert a.stderr == b.stderr == c.stderr

    def test_per_sample_kept_on_request(self):
        est = estimate_sigma_e(2, 8, two_component(0.6, 1.4), samples=4, seed=1,
                               keep_per_sample=True)
        assert len(est.per_sample) == 4
        assert est.mean == pytest.approx(np.mean(est.per_sample))

    def test_statistical_duality_2d(self):
        kd = two_component(0.6, 1.4)
        e1 = estimate_sigma_e(2, 32, kd, samples=60, seed=11)
        e2 = estimate_sigma_e(2, 32, dual(kd), samples=60, seed=12)
        product = e1.mean * e2.mean
        err = product * (e1.stderr / e1.mean + e2.stderr / e2.mean)
        assert product == pytest.approx(1.0, abs=3 * err)

    def test_failed_samples_are_skipped_and_counted(self, monkeypatch):
        calls = {"n": 0}
        original = resistor_mod.solve_corrector

        def flaky(network, direction=1, tol=1e-10):
            calls["n"] += 1
            if network.sample_index == 1:
                raise SolverError("synthetic failure", residual=1.0)
            return original(network, direction=direction, tol=tol)

        monkeypatch.setattr(resistor_mod, "solve_corrector", flaky)
        est = resistor_mod.estimate_sigma_e(2, 8, two_component(0.6, 1.4), samples=4, seed=2)
        assert est.skipped == 1
        assert est.samples == 3
        assert calls["n"] == 4

    def test_sample_count_validation(self):
        with pytest.raises(ValueError):
            estimate_sigma_e(2, 8, constant(1.0), samples=1, seed=0)

    def test_finite_size_trend_reported(self):
        # informational: the L=16 vs L=64 bias trend for the 0.6/1.4 law
        kd = two_component(0.6, 1.4)
        exact = np.sqrt(0.84)
        devs = {}
        for L in (16, 32):
            est = estimate_sigma_e(2, L, kd, samples=30, seed=5)
            devs[L] = abs(est.mean - exact)
        print(f"finite-size |bias|: L=16 -> {devs[16]:.2e}, L=32 -> {devs[32]:.2e}")
