import math

import mpmath as mp
import numpy as np
import pytest

from districtbounds.instance import Assignment, Instance, Node
from districtbounds.probit import (DegenerateDistrictError, ProbitCurve,
                                   objective_spec, phi, phi_derivative,
                                   phi_inverse, std_normal_cdf,
                                   true_objective)

mp.mp.dps = 40


def oracle_cdf(z):
    """High-precision standard normal CDF."""
    return float(mp.ncdf(mp.mpf(repr(float(z)))))


class TestStandardNormalCdf:
    def test_half_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_figure_values(self):
        # plotted curve points for the bvap parameters
        assert std_normal_cdf(6.826 * 0.0 - 2.827) == pytest.approx(
            0.00234931639457267, abs=1e-12)
        assert std_normal_cdf(6.826 * 0.5 - 2.827) == pytest.approx(
            0.721062242578815, abs=1e-12)

    def test_against_high_precision_oracle(self):
        rng = np.random.default_rng(0)
        for z in rng.uniform(-8, 8, 200):
            assert std_normal_cdf(z) == pytest.approx(oracle_cdf(z), abs=1e-12)

    def test_symmetry_and_complement(self):
        rng = np.random.default_rng(1)
        for z in rng.uniform(-6, 6, 500):
            assert abs(std_normal_cdf(-z) - (1.0 - std_normal_cdf(z))) <= 1e-14

    def test_tail_saturation(self):
        assert std_normal_cdf(-50.0) == 0.0
        assert std_normal_cdf(50.0) == 1.0


class TestCurves:
    def test_phi_center_is_half(self, bvap_curve):
        assert phi(bvap_curve, 2.827 / 6.826) == pytest.approx(0.5, abs=1e-15)

    def test_cpvi_half_point(self, cpvi_spec):
        assert phi(cpvi_spec.curve, 51.69 / 50.0) == pytest.approx(0.5, abs=1e-12)

    def test_phi_oracle_value(self, bvap_curve):
        assert phi(bvap_curve, 0.6) == pytest.approx(
            oracle_cdf(6.826 * 0.6 - 2.827), abs=1e-13)

    def test_monotone(self, bvap_curve):
        rng = np.random.default_rng(2)
        pairs = rng.uniform(0, 1, (10_000, 2))
        for r1, r2 in pairs:
            lo, hi = min(r1, r2), max(r1, r2)
            if hi - lo > 1e-12:
                assert phi(bvap_curve, lo) < phi(bvap_curve, hi)

    def test_increasing_requires_positive_beta(self):
        with pytest.raises(ValueError):
            ProbitCurve(beta=-1.0, beta0=0.0)

    def test_brh_parameters_as_published(self):
        rim = objective_spec("brh_rim")
        assert rim.curve.beta0 == -4.194
        assert dict(rim.terms[0].numerator) == {"bvap": 0.975, "hvap": 0.3}
        deep = objective_spec("brh-deep")
        assert deep.curve.beta0 == -4.729
        # as published these saturate for any nonnegative ratio
        assert phi(rim.curve, 0.0) > 0.99997


class TestInverse:
    def test_half(self, bvap_curve):
        assert phi_inverse(bvap_curve, 0.5) == pytest.approx(2.827 / 6.826,
                                                             abs=1e-10)

    def test_round_trip(self, bvap_curve):
        for p in (0.3, 0.9, 0.0023493, 1 - 1e-9):
            assert phi(bvap_curve, phi_inverse(bvap_curve, p)) == pytest.approx(
                p, abs=1e-10)

    def test_identity_on_unit_interval(self, bvap_curve):
        for r in np.linspace(0.01, 0.99, 37):
            assert phi_inverse(bvap_curve, phi(bvap_curve, r)) == pytest.approx(
                r, abs=1e-10)

    def test_figure_point_inverts_to_zero(self, bvap_curve):
        assert phi_inverse(bvap_curve, 0.00234931639457267) == pytest.approx(
            0.0, abs=1e-6)

    def test_domain_errors(self, bvap_curve):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                phi_inverse(bvap_curve, p)


class TestDerivative:
    def test_at_center(self, bvap_curve):
        expect = 6.826 / math.sqrt(2 * math.pi)
        assert phi_derivative(bvap_curve, 2.827 / 6.826) == pytest.approx(
            expect, rel=1e-12)

    def test_oracle_value_at_06(self, bvap_curve):
        z = mp.mpf("6.826") * mp.mpf("0.6") - mp.mpf("2.827")
        expect = float(mp.mpf("6.826") * mp.npdf(z))
        assert phi_derivative(bvap_curve, 0.6) == pytest.approx(expect, rel=1e-12)

    def test_nonnegative(self, bvap_curve, cpvi_spec):
        for r in np.linspace(-2, 3, 101):
            assert phi_derivative(bvap_curve, r) >= 0.0
            assert phi_derivative(cpvi_spec.curve, r) >= 0.0

    def test_matches_finite_differences(self, bvap_curve):
        h = 1e-6
        for r in np.linspace(-5, 5, 81):
            fd = (phi(bvap_curve, r + h) - phi(bvap_curve, r - h)) / (2 * h)
            d = phi_derivative(bvap_curve, r)
            assert d == pytest.approx(fd, rel=1e-6, abs=1e-12)


class TestTrueObjective:
    def test_two_districts(self, two_node, bvap_spec):
        val = true_objective(two_node, Assignment([0, 1]), bvap_spec)
        expect = phi(bvap_spec.curve, 0.6) + phi(bvap_spec.curve, 0.2)
        assert val == pytest.approx(expect, abs=1e-12)
        assert val == pytest.approx(0.9696, abs=1e-4)

    def test_all_zero_numerator(self, bvap_spec):
        inst = Instance(nodes=(Node(0, pop=10, vap=10), Node(1, pop=10, vap=10)),
                        edges=((0, 1),), k=2, tau=1.0)
        val = true_objective(inst, Assignment([0, 1]), bvap_spec)
        assert val == pytest.approx(2 * 0.00234931639457267, abs=1e-9)

    def test_zero_denominator_errors_with_district(self, cpvi_spec):
        inst = Instance(nodes=(Node(0, pop=10, vap=10, dv16=0, tv16=0,
                                    dv20=1, tv20=5),
                               Node(1, pop=10, vap=10, dv16=2, tv16=5,
                                    dv20=1, tv20=5)),
                        edges=((0, 1),), k=2, tau=1.0)
        with pytest.raises(DegenerateDistrictError, match="district 0"):
            true_objective(inst, Assignment([0, 1]), cpvi_spec)

    def test_cpvi_sums_two_ratios(self, cpvi_spec):
        inst = Instance(nodes=(Node(0, pop=10, vap=10, dv16=3, tv16=5,
                                    dv20=4, tv20=5),),
                        edges=(), k=1, tau=1.0)
        val = true_objective(inst, Assignment([0]), cpvi_spec)
        assert val == pytest.approx(phi(cpvi_spec.curve, 3 / 5 + 4 / 5), abs=1e-12)
