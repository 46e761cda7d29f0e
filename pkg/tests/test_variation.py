import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flevy.criterion import Verdict
from flevy.errors import InvalidParameter
from flevy.levy import CompoundPoisson, IncrementGrid, PathSample, make_model, uniform_grid
from flevy.synth import FlpPath, KernelSpec, synthesize
from flevy.variation import (
    dyadic_tv,
    derivative_estimate,
    direct_expected_tv,
    expected_tv,
    growth_exponent,
    nd_derivative_from_increments,
    paired_derivative_error,
    sample_nd_derivative,
    sample_nd_derivative_values,
    sample_y0,
    sample_y0_values,
    tv_profile,
    tv_profile_matrix,
    y0_from_increments,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def dyadic_values(m):
    return arrays(np.float64, 2**m + 1, elements=finite)


class TestDyadicTV:
    def test_examples(self):
        assert dyadic_tv([0.0, 1.0, 0.0], 1) == 2.0
        assert dyadic_tv(np.full(9, 3.5), 3) == 0.0
        mono = np.cumsum(np.abs(np.random.default_rng(0).normal(size=17)))
        assert dyadic_tv(mono, 4) == pytest.approx(mono[-1] - mono[0], rel=1e-14)

    def test_coarse_depth_subsamples(self):
        v = np.array([0.0, 5.0, 1.0, -2.0, 4.0])
        assert dyadic_tv(v, 1) == abs(1.0 - 0.0) + abs(4.0 - 1.0)
        assert dyadic_tv(v, 0) == 4.0

    @pytest.mark.parametrize("vals, depth", [(np.zeros(6), 1), (np.zeros(5), 3), (np.zeros(1), 0)])
    def test_missing_nodes(self, vals, depth):
        with pytest.raises(InvalidParameter):
            dyadic_tv(vals, depth)

    @given(dyadic_values(6), st.integers(1, 6))
    def test_additivity(self, v, n):
        half = 2**5
        whole = dyadic_tv(v, n)
        parts = dyadic_tv(v[: half + 1], n - 1) + dyadic_tv(v[half:], n - 1)
        assert whole == pytest.approx(parts, rel=1e-12, abs=1e-9)

    @given(dyadic_values(6))
    def test_nondecreasing_in_depth(self, v):
        tv = [dyadic_tv(v, n) for n in range(7)]
        assert all(b >= a * (1 - 1e-12) for a, b in zip(tv, tv[1:]))

    @given(dyadic_values(5), st.floats(1e-3, 1e3))
    def test_scale_equivariance(self, v, c):
        for n in range(6):
            assert dyadic_tv(c * v, n) == pytest.approx(c * dyadic_tv(v, n), rel=1e-12, abs=1e-300)

    def test_growth_exponent(self):
        assert growth_exponent([2.0, 4.0, 8.0, 16.0], [1, 2, 3, 4]) == pytest.approx(1.0)
        assert growth_exponent([0, 0, 0], [1, 2, 3]) == 0.0
        assert math.isnan(growth_exponent([0, 1, 2], [1, 2, 3]))


class TestProfile:
    def test_zero_path(self):
        times = np.linspace(0, 1, 257)
        rep = tv_profile(FlpPath(times, np.zeros(257), KernelSpec("m", 0.25), -1.0, 1 / 256, 0.0),
                         0.0, 1.0, 8)
        assert all(tv == 0.0 for _, tv in rep.tv_by_depth)
        assert rep.converged
        assert rep.growth_exponent == 0.0

    def test_linear_path_growth_zero(self):
        times = np.linspace(0, 2, 129)
        rep = tv_profile_matrix(3.0 * times, times, 0.0, 2.0, 7)
        assert rep.tv_max == pytest.approx(6.0)
        assert rep.growth_exponent == pytest.approx(0.0, abs=1e-12)
        assert rep.converged

    def test_subinterval(self):
        times = np.linspace(0, 1, 65)
        vals = np.sin(8 * times)
        rep = tv_profile_matrix(vals, times, 0.5, 1.0, 5)
        want = np.abs(np.diff(vals[32:])).sum()
        assert rep.tv_max == pytest.approx(want, rel=1e-13)

    def test_insufficient_resolution(self):
        times = np.linspace(0, 1, 17)
        with pytest.raises(InvalidParameter):
            tv_profile_matrix(np.zeros(17), times, 0.0, 1.0, 5)
        with pytest.raises(InvalidParameter):
            tv_profile_matrix(np.zeros(17), times, 0.0, 1.0, 0)

    def test_cpp_path_converges(self, cpp_model):
        rep = direct_expected_tv(cpp_model, 0.25, 0.0, 1.0, 20, 10, 1e-2, seed=1)
        assert rep.converged
        assert rep.converged_fraction >= 0.95

    def test_brownian_growth(self, brownian_model):
        rep = direct_expected_tv(brownian_model, 0.25, 0.0, 1.0, 10, 10, 0.1, seed=2, oversample=2)
        assert rep.growth_exponent == pytest.approx(0.25, abs=0.1)
        assert not rep.converged


class TestY0:
    def test_single_jump(self):
        d, s0, J = 0.25, -0.75, 2.0
        grid = uniform_grid(-4.0, 0.0, 0.25)
        inc = np.zeros(grid.n_cells)
        inc[np.flatnonzero(grid.tags == s0)[0]] = J
        assert y0_from_increments(grid, inc, d)[0] == pytest.approx(J * 0.75 ** (d - 1), rel=1e-14)

    def test_innermost_cell_dropped(self):
        grid = uniform_grid(-1.0, 0.0, 0.25)
        inc = np.zeros(grid.n_cells)
        inc[-1] = 1.0
        assert y0_from_increments(grid, inc, 0.3)[0] == 0.0

    def test_zero_driver(self):
        y = sample_y0(make_model(), 0.25, -10.0, seed=0, delta=2**-10)
        assert y.value == 0.0
        assert y.tail_std == 0.0

    def test_symmetric_driver(self, cpp_model):
        vals, meta = sample_y0_values(cpp_model, 0.25, -1e3, 17, 10_000, delta=2**-20)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean()) <= 5 * se
        # sign balance: binomial(10^4, 1/2)
        frac = np.mean(vals > 0) - np.mean(vals < 0)
        assert abs(frac) <= 5 / math.sqrt(vals.size)
        assert meta["criterion_holds"]
        assert 0 < meta["stub_bound"] < math.inf

    def test_draws_are_reproducible_and_indexed(self, cpp_model):
        a, _ = sample_y0_values(cpp_model, 0.25, -100.0, 5, 6, delta=2**-12)
        b, _ = sample_y0_values(cpp_model, 0.25, -100.0, 5, 3, first_draw=3, delta=2**-12)
        # same streams; batch shape only changes BLAS rounding
        np.testing.assert_allclose(a[3:], b, rtol=1e-14)
        single = sample_y0(cpp_model, 0.25, -100.0, seed=5, draw=4, delta=2**-12)
        assert single.value == pytest.approx(a[4], rel=1e-14)

    def test_flags_failing_criterion(self, brownian_model):
        y = sample_y0(brownian_model, 0.25, -100.0, seed=1, delta=2**-12)
        assert not y.criterion_holds
        assert y.stub_bound == math.inf
        assert math.isfinite(y.value)

    def test_bad_radius(self, cpp_model):
        with pytest.raises(InvalidParameter):
            sample_y0(cpp_model, 0.25, 1.0)
        with pytest.raises(InvalidParameter):
            sample_y0(cpp_model, 0.25, -1e-3, delta=1e-2)


class TestExpectedTV:
    def test_doubling_interval(self, cpp_model):
        kw = dict(r_tail=-100.0, delta=2**-12)
        one = expected_tv(cpp_model, 0.25, 0.0, 1.0, 200, 3, **kw)
        two = expected_tv(cpp_model, 0.25, 0.0, 2.0, 200, 3, **kw)
        assert two.estimate == 2 * one.estimate
        assert two.stderr == 2 * one.stderr
        shifted = expected_tv(cpp_model, 0.25, 5.0, 6.0, 200, 3, **kw)
        assert shifted.estimate == one.estimate

    def test_gaussian_part_is_infinite(self):
        m = make_model(0.5, 0, CompoundPoisson(((1.0, 0.5), (-1.0, 0.5))))
        res = expected_tv(m, 0.25, 0.0, 1.0, 100, 0)
        assert res.verdict is Verdict.INFINITE
        assert res.estimate == math.inf

    def test_scale_equivariance(self, cpp_model):
        c = 3.0
        kw = dict(r_tail=-100.0, delta=2**-12)
        base = expected_tv(cpp_model, 0.25, 0.0, 1.0, 100, 9, **kw)
        scaled = expected_tv(cpp_model.scaled(c), 0.25, 0.0, 1.0, 100, 9, **kw)
        assert scaled.estimate == pytest.approx(c * base.estimate, rel=1e-12)

    def test_reasonable_value(self, cpp_model):
        res = expected_tv(cpp_model, 0.25, 0.0, 1.0, 1000, 11)
        assert res.verdict is Verdict.FINITE
        assert 0.7 < res.estimate < 1.3
        assert res.stderr > 0


class TestDerivative:
    def test_linear_path(self):
        times = np.arange(-8, 9) / 8
        path = FlpPath(times, 2.5 * times, KernelSpec("m", 0.2), -1.0, 1 / 8, 0.0)
        for side in ("right", "left"):
            for t, q in derivative_estimate(path, [0.5, 0.25, 0.125], side):
                assert q == pytest.approx(2.5, rel=1e-15)
                assert (t > 0) == (side == "right")

    def test_single_jump(self):
        d, s0, J = 0.3, 0.125, -1.0
        grid = uniform_grid(-2.0, 1.0, 0.0625)
        inc = np.zeros(grid.n_cells)
        inc[np.flatnonzero(grid.tags == s0)[0]] = J
        path = synthesize(PathSample(grid, inc), KernelSpec("m", d), grid.nodes[grid.zero_index:])
        for t, q in derivative_estimate(path, [1.0, 0.5, 0.25]):
            assert q == pytest.approx(J * (t - s0) ** d / math.gamma(d + 1) / t, rel=1e-13)

    def test_bad_side(self):
        path = FlpPath(np.array([0.0, 1.0]), np.zeros(2), KernelSpec("m", 0.2), -1.0, 1.0, 0.0)
        with pytest.raises(InvalidParameter):
            derivative_estimate(path, [1.0], side="up")

    def test_paired_error_shrinks(self, cpp_model):
        ts = 2.0 ** -np.arange(3, 7)
        err = paired_derivative_error(cpp_model, 0.25, ts, 40, seed=3, step=2**-8, tol=1e-2,
                                      origins=(0.0, 0.5))
        for side in ("right", "left"):
            assert err[side].shape == (4,)
            assert err[side][-1] < err[side][0]


class TestNdDerivative:
    @pytest.mark.parametrize("s0", [0.5, -0.75])
    def test_single_jump_each_side(self, s0):
        d, J = 0.25, 1.5
        grid = uniform_grid(-2.0, 2.0, 0.25)
        inc = np.zeros(grid.n_cells)
        inc[np.flatnonzero(grid.tags == s0)[0]] = J
        got = nd_derivative_from_increments(grid, inc, d)[0]
        want = -np.sign(s0) * abs(s0) ** (d - 1) * J / math.gamma(d)
        assert got == pytest.approx(want, rel=1e-14)

    def test_zero_driver(self):
        assert sample_nd_derivative(make_model(), 0.25, -10.0, delta=2**-10).value == 0.0

    def test_symmetry(self, cpp_model):
        vals, meta = sample_nd_derivative_values(cpp_model, 0.25, -1e3, 4, 10_000, delta=2**-20)
        assert meta["criterion_holds"]
        single = sample_nd_derivative(cpp_model, 0.25, -1e3, seed=4, draw=7, delta=2**-20)
        assert single.value == pytest.approx(vals[7], rel=1e-13)
        se = vals.std(ddof=1) / math.sqrt(vals.size)
        assert abs(vals.mean()) <= 5 * se
