import math

import mpmath as mp
import numpy as np
import pytest

from districtbounds.breakpoints import (BreakpointSet, curve_integral,
                                        expected_error, max_error,
                                        multi_ratio_grid,
                                        multiplicative_breakpoints,
                                        step_exp_breakpoints,
                                        step_max_breakpoints)

mp.mp.dps = 40


class LinearCurve:
    """f(r) = r on [0, 1]; uniform breakpoints are optimal for it."""

    def value(self, r):
        return r

    def derivative(self, r):
        return 1.0

    def inverse(self, p):
        return p


class TestStepMax:
    def test_single_interval(self, bvap_curve):
        bs = step_max_breakpoints(bvap_curve, 0.0, 1.0, 1)
        assert bs.points == (0.0, 1.0)

    def test_first_breakpoint_oracle(self, bvap_curve):
        # independent inversion of the evenly divided range via mpmath
        phi0 = mp.ncdf(mp.mpf("6.826") * 0 - mp.mpf("2.827"))
        phi1 = mp.ncdf(mp.mpf("6.826") * 1 - mp.mpf("2.827"))
        target = phi0 + (phi1 - phi0) / 10
        z = mp.sqrt(2) * mp.erfinv(2 * target - 1)
        expect = float((z + mp.mpf("2.827")) / mp.mpf("6.826"))
        bs = step_max_breakpoints(bvap_curve, 0.0, 1.0, 10)
        assert bs.points[1] == pytest.approx(expect, abs=1e-9)
        assert bs.points[1] == pytest.approx(0.22816, abs=1e-4)

    def test_equal_increments(self, bvap_curve):
        bs = step_max_breakpoints(bvap_curve, 0.0, 1.0, 10)
        vals = bs.values()
        steps = np.diff(vals)
        assert np.max(np.abs(steps - steps[0])) <= 1e-8

    def test_max_jump_is_epsilon(self, bvap_curve):
        bs = step_max_breakpoints(bvap_curve, 0.0, 1.0, 7)
        eps = (bvap_curve.value(1.0) - bvap_curve.value(0.0)) / 7
        assert max_error(bvap_curve, bs) == pytest.approx(eps, abs=1e-10)

    def test_optimality_against_perturbations(self, bvap_curve):
        bs = step_max_breakpoints(bvap_curve, 0.0, 1.0, 8)
        base = max_error(bvap_curve, bs)
        rng = np.random.default_rng(3)
        pts = np.array(bs.points)
        for _ in range(1000):
            noise = rng.uniform(-0.02, 0.02, len(pts) - 2)
            cand = pts.copy()
            cand[1:-1] = np.clip(cand[1:-1] + noise, 1e-6, 1 - 1e-6)
            cand.sort()
            if np.any(np.diff(cand) <= 0):
                continue
            other = BreakpointSet(points=tuple(cand), curve=bvap_curve)
            assert max_error(bvap_curve, other) >= base - 1e-12


class TestStepExp:
    def test_paper_first_breakpoint(self, bvap_curve):
        bs = step_exp_breakpoints(bvap_curve, 0.0, 1.0, 10)
        assert bs.converged
        assert bs.points[1] == pytest.approx(0.13667514421081, abs=2e-3)

    def test_linear_curve_gives_midpoint(self):
        bs = step_exp_breakpoints(LinearCurve(), 0.0, 1.0, 2)
        assert bs.points[1] == pytest.approx(0.5, abs=1e-6)

    def test_linear_curve_uniform_spacing(self):
        bs = step_exp_breakpoints(LinearCurve(), 0.0, 1.0, 6)
        assert np.allclose(np.diff(bs.points), 1.0 / 6, atol=1e-6)

    def test_beats_step_max_in_expectation(self, bvap_curve):
        exp_set = step_exp_breakpoints(bvap_curve, 0.0, 1.0, 10)
        max_set = step_max_breakpoints(bvap_curve, 0.0, 1.0, 10)
        assert expected_error(bvap_curve, exp_set) <= expected_error(
            bvap_curve, max_set) + 1e-12

    def test_stationarity(self, bvap_curve):
        # zero gradient: b_t - b_{t-1} = (value(b_{t+1}) - value(b_t)) / slope(b_t)
        bs = step_exp_breakpoints(bvap_curve, 0.0, 1.0, 10)
        b = bs.points
        for t in range(1, len(b) - 1):
            lhs = b[t] - b[t - 1]
            rhs = (bvap_curve.value(b[t + 1]) - bvap_curve.value(b[t])) \
                / bvap_curve.derivative(b[t])
            assert lhs == pytest.approx(rhs, abs=1e-5)


class TestErrors:
    def test_full_interval_max_error(self, bvap_curve):
        bs = BreakpointSet(points=(0.0, 1.0), curve=bvap_curve)
        assert max_error(bvap_curve, bs) == pytest.approx(0.99762, abs=1e-5)

    def test_expected_error_single_step(self, bvap_curve):
        bs = BreakpointSet(points=(0.0, 1.0), curve=bvap_curve)
        integral = curve_integral(bvap_curve, 0.0, 1.0)
        assert expected_error(bvap_curve, bs) == pytest.approx(
            bvap_curve.value(1.0) - integral, abs=1e-9)

    def test_refinement_never_hurts(self, bvap_curve):
        pts = (0.0, 0.3, 0.7, 1.0)
        coarse = BreakpointSet(points=pts, curve=bvap_curve)
        halved = []
        for a, b in zip(pts, pts[1:]):
            halved += [a, (a + b) / 2]
        fine = BreakpointSet(points=tuple(halved + [1.0]), curve=bvap_curve)
        assert expected_error(bvap_curve, fine) <= expected_error(
            bvap_curve, coarse) + 1e-12

    def test_quadrature_against_oracle(self, bvap_curve):
        expect = float(mp.quad(
            lambda r: mp.ncdf(mp.mpf("6.826") * r - mp.mpf("2.827")), [0, 1]))
        assert curve_integral(bvap_curve, 0.0, 1.0) == pytest.approx(expect,
                                                                     abs=1e-9)


class TestGeometric:
    def test_paper_gamma(self):
        _, gamma = multiplicative_breakpoints(1.0, 11.0, 100)
        assert gamma == pytest.approx(0.953, abs=5e-4)

    def test_gamma_formula_exact(self):
        for a, b, ell in ((1.0, 11.0, 100), (0.5, 7.0, 13), (2.0, 3.0, 1)):
            _, gamma = multiplicative_breakpoints(a, b, ell)
            assert abs(gamma - (a / b) ** (2.0 / ell)) <= 1e-12

    def test_single_interval(self):
        bs, gamma = multiplicative_breakpoints(2.0, 5.0, 1)
        assert bs.points == (2.0, 5.0)
        assert gamma == pytest.approx(4.0 / 25.0, abs=1e-15)

    def test_beats_uniform(self):
        a, b, ell = 1.0, 11.0, 20
        _, geo = multiplicative_breakpoints(a, b, ell)
        uni = np.linspace(a, b, ell + 1)
        uni_gamma = min((uni[i] / uni[i + 1]) ** 2 for i in range(ell))
        assert uni_gamma <= geo

    def test_requires_positive_start(self):
        with pytest.raises(ValueError):
            multiplicative_breakpoints(0.0, 5.0, 3)


class TestMultiRatioGrid:
    def test_half_cell(self, cpvi_spec):
        grid = multi_ratio_grid(cpvi_spec.curve, [(0.3, 0.7), (0.3, 0.7)], 4)
        # psi at summed breakpoints; the half point of the curve 1.0338
        found = grid.psi[2, 2]  # 0.5 + 0.5... depends on spacing
        assert grid.curve.value(1.0338) == pytest.approx(0.5, abs=1e-12)
        assert found == pytest.approx(grid.curve.value(1.0), abs=1e-12)

    def test_table_shape_and_monotone(self, cpvi_spec):
        grid = multi_ratio_grid(cpvi_spec.curve, [(0.0, 1.0), (0.0, 1.0)], 5)
        assert grid.table.shape == (5, 5)
        assert np.all(np.diff(grid.psi, axis=0) >= 0)
        assert np.all(np.diff(grid.psi, axis=1) >= 0)

    def test_delta_is_exhaustive_max(self, cpvi_spec):
        grid = multi_ratio_grid(cpvi_spec.curve, [(0.1, 0.9), (0.2, 0.8)], 4)
        psi = grid.psi
        expect = max(psi[s, t] - psi[s - 1, t - 1]
                     for s in range(1, 5) for t in range(1, 5))
        assert grid.delta() == pytest.approx(expect, abs=0)
