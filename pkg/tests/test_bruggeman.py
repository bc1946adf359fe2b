"""Effective-medium root, its series, and the comparison with the expansion."""

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from homogenize import (
    DistributionSpec,
    bruggeman_coefficients,
    bruggeman_series,
    coefficients,
    compare,
    constant,
    dual,
    moments,
    scale,
    solve_bruggeman,
    three_value,
    two_component,
)


def polynomial_root_oracle(atoms, d):
    """Clear denominators of the self-consistency sum and find the root."""
    total = np.zeros(1)
    for i, (vi, pi) in enumerate(atoms):
        term = np.array([pi * vi, -pi])  # p_i * (v_i - x)
        for j, (vj, _) in enumerate(atoms):
            if j != i:
                term = npoly.polymul(term, np.array([vj, d - 1.0]))
        total = npoly.polyadd(total, term)
    roots = npoly.polyroots(total)
    vs = [v for v, _ in atoms]
    real = [r.real for r in roots if abs(r.imag) < 1e-9 and min(vs) <= r.real <= max(vs)]
    assert len(real) == 1
    return real[0]


class TestRoot:
    def test_two_component_equipartition_2d(self):
        root = solve_bruggeman(two_component(1.0, 4.0), 2)
        assert root.sigma_B == pytest.approx(2.0, abs=1e-10)
        assert abs(root.residual) < 1e-12

    def test_constant_law_any_dimension(self):
        for d in (1, 2, 3, 5):
            assert solve_bruggeman(constant(3.7), d).sigma_B == 3.7

    def test_three_component_vs_polynomial_oracle(self):
        atoms = ((1.0, 1 / 3), (2.0, 1 / 3), (3.0, 1 / 3))
        dist = DistributionSpec(atoms=atoms)
        expected = polynomial_root_oracle(atoms, 3)
        assert solve_bruggeman(dist, 3).sigma_B == pytest.approx(expected, abs=1e-10)

    def test_1d_harmonic_mean(self):
        dist = two_component(0.5, 2.0, 0.3)
        hm = 1.0 / (0.3 / 0.5 + 0.7 / 2.0)
        assert solve_bruggeman(dist, 1).sigma_B == pytest.approx(hm, rel=1e-12)

    def test_root_bracketed_by_support(self):
        dist = DistributionSpec(atoms=((0.2, 0.25), (1.0, 0.5), (5.0, 0.25)))
        for d in (2, 3, 4):
            root = solve_bruggeman(dist, d).sigma_B
            assert 0.2 <= root <= 5.0

    def test_2d_solver_duality(self):
        for dist in [
            two_component(0.6, 1.4),
            two_component(1.0, 4.0, 0.3),
            DistributionSpec(atoms=((0.5, 0.2), (1.0, 0.5), (3.0, 0.3))),
        ]:
            p = solve_bruggeman(dist, 2).sigma_B * solve_bruggeman(dual(dist), 2).sigma_B
            assert p == pytest.approx(1.0, abs=1e-10)

    def test_homogeneity(self):
        dist = two_component(0.8, 1.3, 0.4)
        base = solve_bruggeman(dist, 3).sigma_B
        assert solve_bruggeman(scale(dist, 2.0), 3).sigma_B == pytest.approx(
            2.0 * base, rel=1e-12
        )

    def test_permutation_invariance(self):
        a = DistributionSpec(atoms=((1.0, 1 / 3), (2.0, 1 / 3), (3.0, 1 / 3)))
        b = DistributionSpec(atoms=((3.0, 1 / 3), (1.0, 1 / 3), (2.0, 1 / 3)))
        assert solve_bruggeman(a, 2).sigma_B == solve_bruggeman(b, 2).sigma_B


class TestSeries:
    def test_2d_coefficient_tuple(self):
        b = bruggeman_coefficients(2, 6)
        expected = {
            (2,): -0.5,
            (3,): 0.25,
            (4,): -0.125,
            (2, 2): 0.0,
            (5,): 1 / 16,
            (2, 3): 1 / 16,
            (6,): -1 / 32,
            (2, 4): -1 / 16,
            (3, 3): -1 / 32,
            (2, 2, 2): 1 / 32,
        }
        assert set(b) == set(expected)
        for sig, val in expected.items():
            assert b[sig] == pytest.approx(val, abs=1e-15)

    def test_constant_gives_unit_xi(self):
        for order in range(2, 7):
            s = bruggeman_series(constant(2.0), 3, order)
            assert s.sigma_e == pytest.approx(2.0, abs=1e-15)
            assert s.remainder_bound is None

    def test_series_approaches_root(self):
        dist = two_component(0.6, 1.4)
        root = solve_bruggeman(dist, 2).sigma_B
        series = bruggeman_series(dist, 2, 6).sigma_e
        u0 = 0.4
        assert abs(root - series) <= u0**8  # symmetric law: next term is 8th order

    def test_gap_scales_like_u0_7(self, rng):
        worst = 0.0
        for _ in range(25):
            n = int(rng.integers(2, 5))
            vals = 1.0 + rng.uniform(-0.2, 0.2, size=n)
            probs = rng.dirichlet(np.ones(n))
            dist = DistributionSpec(atoms=tuple(zip(vals, probs)))
            u0 = moments(dist, 2).u0
            if u0 < 1e-3:
                continue
            gap = abs(
                solve_bruggeman(dist, 2).sigma_B - bruggeman_series(dist, 2, 6).sigma_e
            )
            worst = max(worst, gap / u0**7)
        assert worst < 1.0  # observed ~0.02; anything near 1 signals a regression


class TestCoefficientAgreement:
    def test_shared_through_order3_any_d(self, const2, const3):
        for d, consts in [(2, const2), (3, const3)]:
            a = coefficients(d, 5, consts).a
            b = bruggeman_coefficients(d, 5)
            for sig in [(2,), (3,)]:
                assert a[sig] == b[sig]

    def test_shared_through_order4_2d(self, const2):
        a = coefficients(2, 4, const2).a
        b = bruggeman_coefficients(2, 4)
        assert a[(4,)] == b[(4,)]
        assert a[(2, 2)] == b[(2, 2)] == 0.0

    def test_order4_gap_is_H_term(self, const3):
        a = coefficients(3, 4, const3).a
        b = bruggeman_coefficients(3, 4)
        assert a[(2, 2)] - b[(2, 2)] == pytest.approx((1 - const3.H) / 27, abs=1e-12)


class TestCompare:
    def test_d3_small_disorder_positive(self, const3):
        rep = compare(two_component(0.9, 1.1), 3, const3)
        assert rep.case == "d_ge_3_variance"
        assert rep.predicted_sign == "positive"
        assert rep.leading_order == 4
        assert 2.5e-7 < rep.leading_difference < 3.2e-7

    def test_2d_skewed_follows_third_moment(self, const2):
        up = compare(two_component(0.9, 1.1, 0.7), 2, const2)
        assert up.case == "2d_skewed"
        assert up.predicted_sign == "positive"
        down = compare(two_component(1.1, 0.9, 0.7), 2, const2)
        assert down.predicted_sign == "negative"
        m3 = moments(two_component(0.9, 1.1, 0.7), 3).u_moment(3)
        assert np.sign(up.leading_difference) == np.sign(m3)

    def test_2d_symmetric_three_value_negative(self, const2):
        rep = compare(three_value(0.2, -1.0, 0.3), 2, const2)
        assert rep.case == "2d_symmetric"
        assert rep.predicted_sign == "negative"
        assert rep.leading_order == 6

    def test_symmetric_two_component_indeterminate(self, const2):
        # almost self-dual: sigma_e and sigma_B coincide, spread vanishes
        rep = compare(two_component(0.8, 1.2), 2, const2)
        assert rep.predicted_sign == "indeterminate"

    def test_sign_grid_u0_below_02(self, const2, const3):
        for eps in (0.05, 0.1, 0.2):
            assert compare(two_component(1 - eps, 1 + eps), 3, const3).predicted_sign == "positive"
        for eps in (0.05, 0.15):
            for p1 in (0.6, 0.7):
                up = compare(two_component(1 - eps, 1 + eps, p1), 2, const2)
                down = compare(two_component(1 + eps, 1 - eps, p1), 2, const2)
                assert up.predicted_sign == "positive"
                assert down.predicted_sign == "negative"
        for eps in (0.1, 0.2):
            for p in (0.2, 0.3, 0.4):
                rep = compare(three_value(eps, -1.0, p), 2, const2)
                assert rep.predicted_sign == "negative"
