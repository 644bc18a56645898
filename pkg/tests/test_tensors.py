import numpy as np
import pytest

from mmot import (
    broadcast_sum,
    gibbs_init,
    kl_divergence,
    marginal,
    materialize_plan,
    product_measure,
    rmot_objective,
)
from mmot.tensors import validate_histogram, validate_shape


class TestMarginal:
    def test_product_measure_factors(self):
        a1 = np.array([0.3, 0.7])
        a2 = np.array([0.5, 0.5])
        pi = product_measure([a1, a2])
        np.testing.assert_allclose(marginal(pi, 0), a1, atol=1e-14)
        np.testing.assert_allclose(marginal(pi, 1), a2, atol=1e-14)

    def test_constant_tensor(self):
        pi = np.full((2, 2), 0.25)
        np.testing.assert_array_equal(marginal(pi, 1), [0.5, 0.5])

    def test_direct_summation(self):
        pi = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_allclose(marginal(pi, 0), [0.3, 0.7])
        np.testing.assert_allclose(marginal(pi, 1), [0.4, 0.6])

    def test_axis_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            marginal(np.ones((2, 2)), 2)

    def test_mass_consistency(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            shape = tuple(rng.integers(1, 5, size=rng.integers(2, 5)))
            pi = rng.uniform(0, 1, size=shape)
            total = pi.sum()
            for k in range(pi.ndim):
                assert abs(marginal(pi, k).sum() - total) <= 1e-12 * max(1.0, total)


class TestProductMeasure:
    def test_single_cell(self):
        pi = product_measure([np.array([1.0]), np.array([1.0])])
        np.testing.assert_array_equal(pi, [[1.0]])

    def test_uniform(self):
        pi = product_measure([np.array([0.5, 0.5])] * 2)
        np.testing.assert_array_equal(pi, np.full((2, 2), 0.25))

    def test_elementwise_oracle(self):
        pi = product_measure([np.array([0.3, 0.7]), np.array([0.2, 0.8])])
        np.testing.assert_allclose(pi, [[0.06, 0.24], [0.14, 0.56]], atol=1e-15)

    def test_marginal_fixed_point(self):
        rng = np.random.default_rng(2)
        hs = []
        for n in (3, 4, 2):
            a = rng.uniform(0.1, 1, size=n)
            hs.append(a / a.sum())
        pi = product_measure(hs)
        assert abs(pi.sum() - 1.0) < 1e-12
        for k, a in enumerate(hs):
            np.testing.assert_allclose(marginal(pi, k), a, atol=1e-14)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            product_measure([np.array([1.0]), np.array([[0.5, 0.5]])])


class TestMaterializePlan:
    def test_zero_potentials_match_init(self):
        rng = np.random.default_rng(3)
        C = rng.uniform(0, 2, size=(3, 4))
        hs = [np.full(3, 1 / 3), np.full(4, 0.25)]
        v = [np.zeros(3), np.zeros(4)]
        np.testing.assert_array_equal(
            materialize_plan(C, 1.3, v, hs), gibbs_init(C, 1.3, hs)
        )

    def test_single_cell_cost(self):
        plan = materialize_plan(
            np.array([[2.0]]), 1.0, [np.zeros(1), np.zeros(1)],
            [np.array([1.0]), np.array([1.0])],
        )
        np.testing.assert_allclose(plan, [[np.exp(-2.0)]], rtol=1e-15)

    def test_single_cell_potentials(self):
        plan = materialize_plan(
            np.array([[0.0]]), 1.0, [np.ones(1), np.ones(1)],
            [np.array([1.0]), np.array([1.0])],
        )
        np.testing.assert_allclose(plan, [[np.exp(2.0)]], rtol=1e-15)

    def test_positivity(self):
        rng = np.random.default_rng(4)
        C = rng.uniform(0, 5, size=(3, 3, 3))
        hs = []
        for _ in range(3):
            a = rng.uniform(0.1, 1, size=3)
            hs.append(a / a.sum())
        v = [rng.normal(size=3) for _ in range(3)]
        assert np.all(materialize_plan(C, 0.7, v, hs) > 0)

    def test_bad_eta(self):
        with pytest.raises(ValueError, match="eta"):
            materialize_plan(
                np.zeros((2, 2)), 0.0, [np.zeros(2)] * 2, [np.full(2, 0.5)] * 2
            )

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            materialize_plan(
                np.zeros((2, 2)), 1.0, [np.zeros(3), np.zeros(2)],
                [np.full(2, 0.5)] * 2,
            )


class TestObjective:
    def test_single_cell(self):
        for c, eta in ((2.0, 1.0), (0.3, 0.5)):
            val = rmot_objective(np.array([[c]]), eta, np.array([[1.0]]))
            assert val == pytest.approx(c - eta, rel=1e-15)

    def test_uniform_plan_zero_cost(self):
        pi = np.full((2, 2), 0.25)
        val = rmot_objective(np.zeros((2, 2)), 1.0, pi)
        assert val == pytest.approx(np.log(0.25) - 1.0, rel=1e-12)

    def test_zero_entry_convention(self):
        pi = np.array([[0.5, 0.0], [0.0, 0.5]])
        val = rmot_objective(np.zeros((2, 2)), 1.0, pi)
        assert val == pytest.approx(2 * (0.5 * np.log(0.5) - 0.5), rel=1e-12)

    def test_negative_plan_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            rmot_objective(np.zeros((2, 2)), 1.0, np.array([[0.5, -0.1], [0.3, 0.3]]))

    def test_matches_kl_to_gibbs_kernel(self):
        # objective = eta * KL(pi, exp(-C/eta)) - eta * sum(exp(-C/eta))
        rng = np.random.default_rng(5)
        for _ in range(10):
            C = rng.uniform(0, 1, size=(2, 2, 2))
            pi = rng.uniform(0.01, 1, size=(2, 2, 2))
            eta = rng.uniform(0.3, 3)
            xi = np.exp(-C / eta)
            expected = eta * kl_divergence(pi, xi) - eta * xi.sum()
            assert rmot_objective(C, eta, pi) == pytest.approx(expected, rel=1e-10)


class TestValidation:
    def test_shape_needs_two_axes(self):
        with pytest.raises(ValueError, match="at least 2"):
            validate_shape([5])

    def test_shape_positive_dims(self):
        with pytest.raises(ValueError, match=">= 1"):
            validate_shape([3, 0])

    def test_desk_scale_guard(self):
        with pytest.raises(ValueError, match="dense-storage limit"):
            validate_shape([10**4, 10**5])
        assert validate_shape([10**4, 10**3]) == (10**4, 10**3)

    def test_histogram_positivity(self):
        with pytest.raises(ValueError, match="strictly positive"):
            validate_histogram(np.array([0.5, 0.5, 0.0]))

    def test_histogram_sum(self):
        with pytest.raises(ValueError, match="sums to"):
            validate_histogram(np.array([0.5, 0.4]))
        validate_histogram(np.array([0.25, 0.75]))


class TestBroadcastSum:
    def test_matches_loop(self):
        rng = np.random.default_rng(6)
        vs = [rng.normal(size=n) for n in (2, 3, 4)]
        out = broadcast_sum(vs)
        for j0 in range(2):
            for j1 in range(3):
                for j2 in range(4):
                    assert out[j0, j1, j2] == pytest.approx(
                        vs[0][j0] + vs[1][j1] + vs[2][j2], rel=1e-15
                    )
