import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from districtbounds.graycode import (binarize, gray, gray_inverse,
                                     slice_index, slice_index_by_angle,
                                     strengthened_support)


class TestBinarize:
    def test_examples(self):
        assert binarize(4, 3) == (1, 0, 0)
        assert binarize(0, 5) == (0, 0, 0, 0, 0)
        assert binarize(6, 3) == (1, 1, 0)

    def test_range_checks(self):
        with pytest.raises(ValueError):
            binarize(8, 3)
        with pytest.raises(ValueError):
            binarize(-1, 3)


class TestGray:
    def test_figure_codes(self):
        assert gray(4, 3) == (1, 1, 0)
        assert gray(6, 3) == (1, 0, 1)

    def test_endpoints(self):
        for nu in (1, 3, 6):
            assert gray(0, nu) == tuple([0] * nu)
            assert gray(2 ** nu - 1, nu) == tuple([1] + [0] * (nu - 1))

    @given(nu=st.integers(1, 12), data=st.data())
    @settings(max_examples=200, deadline=None)
    def test_inverse_round_trip(self, nu, data):
        i = data.draw(st.integers(0, 2 ** nu - 1))
        assert gray_inverse(gray(i, nu)) == i

    def test_single_bit_adjacency(self):
        for nu in range(1, 13):
            prev = gray(0, nu)
            for i in range(1, 2 ** nu):
                cur = gray(i, nu)
                assert sum(a != b for a, b in zip(prev, cur)) == 1
                prev = cur


class TestSupport:
    def test_empty_for_zero(self):
        assert strengthened_support((0, 0, 0)) == ()

    def test_alpha4(self):
        assert strengthened_support(gray(4, 3)) == (1,)

    def test_alpha5(self):
        assert gray(5, 3) == (1, 1, 1)
        assert strengthened_support((1, 1, 1)) == (1, 2, 3)

    def test_truncation_property(self):
        # any code agreeing with alpha^i on the support bits has index >= i
        for nu in range(1, 9):
            for i in range(2 ** nu):
                support = strengthened_support(gray(i, nu))
                code_i = gray(i, nu)
                for ip in range(2 ** nu):
                    code_p = gray(ip, nu)
                    if all(code_p[t - 1] == code_i[t - 1] for t in support):
                        assert ip >= i


class TestSliceIndex:
    def test_diagonal_is_slice_zero(self):
        i, code, _ = slice_index(1.0, 1.0, 4)
        assert i == 0
        assert code == tuple([0] * 4)

    def test_axis_is_last_slice(self):
        i, code, _ = slice_index(1.0, 0.0, 4)
        assert i == 2 ** 4 - 1
        assert code == tuple([1] + [0] * 3)

    def test_norm_preserved_and_wedge(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            x1 = rng.uniform(0.1, 10)
            x2 = rng.uniform(0, x1)
            nu = int(rng.integers(1, 7))
            _, _, (xi, eta) = slice_index(x1, x2, nu)
            assert math.hypot(xi, eta) == pytest.approx(math.hypot(x1, x2),
                                                        abs=1e-12 * max(1, x1))
            assert -1e-12 <= math.atan2(eta, xi) <= math.pi / 4 / 2 ** nu + 1e-12

    def test_matches_arctangent_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(10_000):
            x1 = rng.uniform(1e-3, 5)
            x2 = rng.uniform(0, x1)
            nu = int(rng.integers(1, 7))
            i, code, _ = slice_index(x1, x2, nu)
            assert i == slice_index_by_angle(x1, x2, nu)
            assert code == gray(i, nu)

    def test_domain_violation(self):
        with pytest.raises(ValueError):
            slice_index(1.0, 2.0, 3)
        with pytest.raises(ValueError):
            slice_index(0.0, 0.0, 3)
