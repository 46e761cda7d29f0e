import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flevy.errors import InvalidParameter, Unsupported
from flevy.levy import (
    CompoundPoisson,
    IncrementGrid,
    LevyModel,
    Mixture,
    NoJumps,
    PathSample,
    TruncatedStable,
    abs_moment,
    coarsened_grid,
    dump_model,
    load_model,
    make_model,
    model_from_dict,
    model_to_dict,
    sample_increment_matrix,
    sample_increments,
    splice_two_sided,
    tail_mass,
    time_reverse,
    uniform_grid,
    write_path_csv,
)
from flevy.levy import _Family


class TestMakeModel:
    def test_brownian(self):
        m = make_model(1.0, 0.0, None, centered=True)
        assert m.mean == 0.0
        assert m.variance == 1.0

    def test_symmetric_poisson_needs_no_drift(self, cpp_model):
        assert cpp_model.mean == 0.0
        assert cpp_model.gamma == 0.0
        assert cpp_model.variance == 1.0

    def test_truncated_stable_variance(self, stable_model):
        # 2 * int_0^1 x^2 x^-2 dx
        assert stable_model.variance == pytest.approx(2.0, rel=1e-15)

    def test_negative_sigma(self):
        with pytest.raises(InvalidParameter):
            make_model(-0.1)

    def test_negative_rate(self):
        with pytest.raises(InvalidParameter):
            CompoundPoisson(((1.0, -0.5),))

    def test_invalid_stable_parameters(self):
        with pytest.raises(InvalidParameter):
            TruncatedStable(2.0)
        with pytest.raises(InvalidParameter):
            TruncatedStable(1.0, c=0.0)

    def test_centering_needs_finite_variance(self):
        class Heavy(_Family):
            def tail(self, x, side=1):
                return 1.0 / x

            def moment(self, p, lo, hi, side=1):
                return math.inf if p >= 1 else 1.0

            def is_symmetric(self):
                return True

        with pytest.raises(Unsupported):
            make_model(0.0, 0.0, Heavy(), centered=True)

    def test_uncentered_mean_uses_cutoff_convention(self):
        # beta(x) = (1 - |x|) on [-1, 1]: an atom at 1 is not compensated
        m = make_model(0.0, 0.0, CompoundPoisson(((1.0, 2.0),)), centered=False)
        assert m.mean == pytest.approx(2.0)
        assert m.gamma == pytest.approx(0.0)
        m = make_model(0.0, 0.3, CompoundPoisson(((0.5, 2.0),)), centered=False)
        # int x (1 - beta(x)) nu(dx) = 0.5 * 0.5 * 2
        assert m.mean == pytest.approx(0.3 + 0.5)


class TestTailAndMoments:
    def test_tail_examples(self, stable_model, cpp_model):
        assert tail_mass(stable_model, 0.5) == pytest.approx(1.0, rel=1e-15)
        assert tail_mass(stable_model, 2.0) == 0.0
        assert tail_mass(cpp_model, 2.0) == 0.0
        assert tail_mass(cpp_model, 1.0) == 0.5

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_tail_rejects_nonpositive(self, cpp_model, x):
        with pytest.raises(InvalidParameter):
            tail_mass(cpp_model, x)

    def test_abs_moment_examples(self, stable_model):
        assert abs_moment(stable_model, 4 / 3, 0, 1) == pytest.approx(6.0, rel=1e-12)
        heavy = make_model(0, 0, TruncatedStable(1.5))
        assert abs_moment(heavy, 4 / 3, 0, 1) == math.inf
        lam = 0.7
        single = make_model(0, 0, CompoundPoisson(((1.0, lam),)), centered=False)
        for p in (0.3, 1.0, 5.0):
            assert abs_moment(single, p, 0, 1) == pytest.approx(lam)

    def test_abs_moment_matches_quadrature(self):
        from scipy.integrate import quad

        fam = TruncatedStable(0.7, c=1.3, symmetric=False)
        m = make_model(0, 0, fam)
        want = quad(lambda x: x**1.5 * 1.3 * x ** (-1.7), 0.2, 0.9)[0]
        assert abs_moment(m, 1.5, 0.2, 0.9) == pytest.approx(want, rel=1e-10)

    def test_mixture_adds_and_inf_absorbs(self):
        m = make_model(0, 0, Mixture((CompoundPoisson(((0.5, 1.0),)), TruncatedStable(1.5))))
        assert abs_moment(m, 1.0, 0, 1) == math.inf
        assert tail_mass(m, 0.5) == pytest.approx(1.0 + (0.5**-1.5 - 1) / 1.5)

    @given(st.floats(0.05, 1.95), st.floats(0.1, 3.0),
           st.lists(st.floats(1e-3, 5.0), min_size=2, max_size=8))
    def test_tail_nonincreasing(self, alpha, rate, xs):
        m = make_model(0, 0, Mixture((TruncatedStable(alpha), CompoundPoisson(((1.5, rate),)))))
        xs = sorted(xs)
        tails = [tail_mass(m, x) for x in xs]
        assert all(a >= b for a, b in zip(tails, tails[1:]))
        assert tail_mass(m, 10 * 1.5) == 0.0

    @given(st.floats(0.05, 1.95))
    def test_abs_moment_nonincreasing_in_p(self, alpha):
        m = make_model(0, 0, TruncatedStable(alpha))
        ps = np.linspace(0.1, 4.0, 25)
        vals = [abs_moment(m, p, 0, 1) for p in ps]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_tail_right_continuous_at_atom(self):
        m = make_model(0, 0, CompoundPoisson(((0.5, 2.0), (-0.5, 2.0))))
        assert tail_mass(m, 0.5) == 2.0
        assert tail_mass(m, 0.5 + 1e-12) == 0.0


class TestGrids:
    def test_uniform_grid(self):
        g = uniform_grid(-1.0, 1.0, 0.25)
        assert g.n_cells == 8
        assert g.zero_index == 4
        assert g.is_uniform

    def test_zero_must_be_node(self):
        with pytest.raises(InvalidParameter):
            IncrementGrid(0.1, np.array([1, 2, 3]))
        with pytest.raises(InvalidParameter):
            uniform_grid(-0.15, 1.0, 0.1)

    def test_coarsened_grid_keeps_fine_nodes(self):
        g = coarsened_grid(-1000.0, 1.0, 2**-6, fine_radius=1.0)
        assert g.r_min <= -1000.0
        fine = g.node_indices(np.arange(-64, 65) / 64)
        assert np.all(np.diff(fine) == 1)
        assert np.all(np.diff(g.ticks) >= 1)
        # growth bounded by the configured rate
        w = g.widths[: g.zero_index - 64]
        dist = -g.ticks[1: g.zero_index - 63]
        assert np.all(w <= np.maximum(1, dist / 64) + 1)

    def test_tick_overflow_rejected(self):
        with pytest.raises(InvalidParameter):
            coarsened_grid(-1e30, 1.0, 2**-10)

    def test_off_grid_times(self):
        g = uniform_grid(-1, 1, 0.25)
        with pytest.raises(InvalidParameter):
            g.node_indices([0.3])


class TestSampling:
    def test_brownian_moments(self, brownian_model):
        h = 0.01
        g = uniform_grid(0.0, 1000.0, h)
        x = sample_increments(brownian_model, g, seed=3).increments
        n = x.size
        assert n == 100_000
        assert abs(x.mean()) <= 5 * x.std(ddof=1) / math.sqrt(n)
        var = x.var(ddof=1)
        assert abs(var - h) <= 5 * h * math.sqrt(2.0 / n)

    def test_poisson_subordinator(self):
        m = make_model(0, 0, CompoundPoisson(((1.0, 2.0),)), centered=False)
        p = sample_increments(m, uniform_grid(0.0, 50.0, 0.01), seed=5)
        assert np.all(np.diff(p.values) >= 0)
        assert np.array_equal(p.increments, np.round(p.increments))
        assert set(np.unique(p.increments)) <= {0.0, 1.0, 2.0, 3.0}
        assert p.values[-1] > 0

    def test_determinism(self, stable_model):
        g = coarsened_grid(-50.0, 1.0, 2**-6)
        a = sample_increments(stable_model, g, seed=11, path_index=2)
        b = sample_increments(stable_model, g, seed=11, path_index=2)
        assert a.increments.tobytes() == b.increments.tobytes()
        c = sample_increments(stable_model, g, seed=12, path_index=2)
        assert not np.array_equal(a.increments, c.increments)

    def test_matrix_rows_match_single_draws(self, cpp_model):
        g = uniform_grid(-1.0, 1.0, 2**-5)
        mat = sample_increment_matrix(cpp_model, g, 9, 3, first_index=4)
        for i in range(3):
            row = sample_increments(cpp_model, g, 9, path_index=4 + i).increments
            assert np.array_equal(mat[i], row)

    def test_extending_left_keeps_inner_cells(self, cpp_model):
        short = uniform_grid(-1.0, 1.0, 2**-4)
        long = uniform_grid(-3.0, 1.0, 2**-4)
        a = sample_increments(cpp_model, short, 4).increments
        b = sample_increments(cpp_model, long, 4).increments
        assert np.array_equal(a, b[-a.size:])

    def test_anchored_at_zero(self, cpp_model):
        p = sample_increments(cpp_model, uniform_grid(-2.0, 1.0, 0.125), 1)
        assert p.value_at(0.0) == 0.0
        np.testing.assert_allclose(np.diff(p.values), p.increments, atol=1e-13)

    @pytest.mark.parametrize("model_name", ["cpp_model", "stable_model", "brownian_model"])
    def test_unit_increment_moments(self, model_name, request):
        model = request.getfixturevalue(model_name)
        g = uniform_grid(0.0, 1.0, 1.0)
        x = sample_increment_matrix(model, g, 21, 100_000)[:, 0]
        n = x.size
        sd = x.std(ddof=1)
        assert abs(x.mean()) <= 5 * sd / math.sqrt(n)
        fourth = np.mean((x - x.mean()) ** 4)
        se_var = math.sqrt((fourth - sd**4) / n)
        assert abs(x.var(ddof=1) - model.variance) <= 5 * se_var

    def test_asymmetric_stable_is_centered(self):
        m = make_model(0, 0, TruncatedStable(0.8, symmetric=False))
        x = sample_increment_matrix(m, uniform_grid(0.0, 1.0, 1.0), 2, 50_000)[:, 0]
        assert abs(x.mean()) <= 5 * x.std(ddof=1) / math.sqrt(x.size)


class TestSplice:
    def _one_sided(self, inc, step=0.25):
        ticks = np.arange(len(inc) + 1)
        return PathSample(IncrementGrid(step, ticks), np.asarray(inc, dtype=float))

    def test_zero_source(self):
        pos = self._one_sided([1.0, 2.0])
        out = splice_two_sided(pos, self._one_sided([0.0, 0.0, 0.0]))
        assert np.all(out.values[:3] == 0.0)
        assert out.value_at(0.5) == 3.0

    def test_single_jump_left_limit(self):
        # jump of +1 inside the cell [0.5, 0.75) of the source
        src = self._one_sided([0, 0, 1.0, 0, 0])
        out = splice_two_sided(self._one_sided([0.0]), src)
        for u, want in [(0.25, 0.0), (0.5, 0.0), (0.75, -1.0), (1.0, -1.0), (1.25, -1.0)]:
            assert out.value_at(-u) == want

    def test_increments_telescope(self):
        pos = self._one_sided([0.5, -1.0, 2.0])
        neg = self._one_sided([1.0, 3.0])
        out = splice_two_sided(pos, neg)
        np.testing.assert_allclose(np.cumsum(out.increments), out.values[1:] - out.values[0])
        assert out.value_at(0.0) == 0.0

    def test_incompatible(self):
        with pytest.raises(InvalidParameter):
            splice_two_sided(self._one_sided([1.0]), self._one_sided([1.0], step=0.5))

    def test_time_reverse_mirrors_tags(self, cpp_model):
        g = uniform_grid(-1.0, 1.0, 0.25)
        p = sample_increments(cpp_model, g, 0)
        r = time_reverse(p)
        np.testing.assert_array_equal(r.grid.tags, -p.grid.tags[::-1])
        np.testing.assert_array_equal(r.increments, p.increments[::-1])


class TestSerialization:
    @pytest.mark.parametrize("model", [
        make_model(0.5),
        make_model(0, 0, CompoundPoisson(((1.0, 0.5), (-1.0, 0.5)))),
        make_model(0.2, 0.1, Mixture((TruncatedStable(0.6, 2.0, False),
                                      CompoundPoisson(((0.3, 1.0),)))), centered=False),
    ])
    def test_roundtrip(self, model, tmp_path):
        assert model_from_dict(json.loads(json.dumps(model_to_dict(model)))) == model
        dump_model(model, tmp_path / "m.json")
        again = load_model(tmp_path / "m.json")
        assert again.sigma == model.sigma
        assert again.mean == pytest.approx(model.mean, abs=1e-15)
        assert again.jumps == model.jumps

    def test_bad_documents(self):
        with pytest.raises(InvalidParameter):
            model_from_dict({"jumps": [{"type": "cgmy"}]})
        with pytest.raises(InvalidParameter):
            model_from_dict([1, 2])

    def test_csv_round_trip(self, cpp_model, tmp_path):
        p = sample_increments(cpp_model, uniform_grid(-1.0, 1.0, 0.125), 0)
        write_path_csv(p, tmp_path / "p.csv")
        data = np.loadtxt(tmp_path / "p.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(data[:, 0], p.grid.nodes)
        np.testing.assert_array_equal(data[:, 1], p.values)


def test_no_jumps_family():
    f = NoJumps()
    assert f.tail(0.1) == 0.0 and f.leaves() == [] and f.is_symmetric()
    assert isinstance(make_model(), LevyModel)


def test_scaled_model():
    m = make_model(1.0, 0, CompoundPoisson(((1.0, 0.5), (-1.0, 0.5))))
    s = m.scaled(2.0)
    assert s.variance == pytest.approx(4 * m.variance)
    with pytest.raises(Unsupported):
        make_model(0, 0, TruncatedStable(1.0)).scaled(2.0)
