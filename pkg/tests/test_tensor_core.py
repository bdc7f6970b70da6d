import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorcells.tensor_core import (
    linear_to_multi,
    mode_product,
    multi_to_linear,
    outer_accumulate,
    reshape_vector,
)

from oracles import digits_of, naive_mode_product


class TestBijections:
    def test_zero_maps_to_zero_digits(self):
        assert linear_to_multi(0, (8, 4, 4, 4)) == (0, 0, 0, 0)
        assert multi_to_linear((0, 0, 0, 0), (8, 4, 4, 4)) == 0

    def test_maximal_index(self):
        assert linear_to_multi(511, (8, 4, 4, 4)) == (7, 3, 3, 3)
        assert multi_to_linear((7, 3, 3, 3), (8, 4, 4, 4)) == 511

    def test_mixed_radix_expansion(self):
        # 77 = 1*64 + 0*16 + 3*4 + 1, big-endian digits in bases (8,4,4,4)
        assert linear_to_multi(77, (8, 4, 4, 4)) == (1, 0, 3, 1)
        assert multi_to_linear((1, 0, 3, 1), (8, 4, 4, 4)) == 77

    @pytest.mark.parametrize("dims", [(8, 4, 4, 4), (2, 3, 5, 7), (4096,), (1, 9, 1, 5), (2,) * 12])
    def test_exhaustive_round_trip(self, dims):
        total = int(np.prod(dims))
        assert total <= 4096
        for p in range(total):
            digits = linear_to_multi(p, dims)
            assert digits == digits_of(p, dims)
            assert multi_to_linear(digits, dims) == p

    def test_out_of_range_linear(self):
        with pytest.raises(IndexError):
            linear_to_multi(512, (8, 4, 4, 4))
        with pytest.raises(IndexError):
            linear_to_multi(-1, (8, 4, 4, 4))

    def test_out_of_range_component(self):
        with pytest.raises(IndexError):
            multi_to_linear((0, 4, 0, 0), (8, 4, 4, 4))
        with pytest.raises(IndexError):
            multi_to_linear((0, 0), (8, 4, 4, 4))


class TestModeProduct:
    def test_identity_contraction(self):
        t = np.eye(2)
        out = mode_product(t, np.eye(2), mode=0)
        np.testing.assert_array_equal(out, t)

    def test_shape_law(self):
        t = np.arange(6.0).reshape(2, 3)
        out = mode_product(t, np.ones((4, 2)), mode=0)
        assert out.shape == (4, 3)

    def test_hand_contraction(self):
        t = np.array([[1.0, 2.0], [3.0, 4.0]])
        m = np.array([[1.0, 1.0]])
        out = mode_product(t, m, mode=1)
        np.testing.assert_allclose(out, [[3.0], [7.0]])
        np.testing.assert_allclose(out, naive_mode_product(t, m, 1))

    def test_matches_naive_on_random(self):
        rng = np.random.default_rng(0)
        t = rng.normal(size=(3, 4, 2))
        m = rng.normal(size=(5, 4))
        np.testing.assert_allclose(mode_product(t, m, 1), naive_mode_product(t, m, 1), atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        t = rng.normal(size=(3, 4))
        m1, m2 = rng.normal(size=(2, 5, 4))
        a, b = 0.7, -1.3
        lhs = mode_product(t, a * m1 + b * m2, 1)
        rhs = a * mode_product(t, m1, 1) + b * mode_product(t, m2, 1)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_successive_mode_products_reproduce_tucker(self):
        # contracting a core by factor matrices over every mode equals the
        # brute-force nested sum
        rng = np.random.default_rng(2)
        core = rng.normal(size=(2, 3, 2))
        factors = [rng.normal(size=(4, 2)), rng.normal(size=(2, 3)), rng.normal(size=(3, 2))]
        t = core
        for k, f in enumerate(factors):
            t = mode_product(t, f, k)
        naive = core
        for k, f in enumerate(factors):
            naive = naive_mode_product(naive, f, k)
        np.testing.assert_allclose(t, naive, rtol=1e-12, atol=1e-12)

    def test_errors(self):
        t = np.zeros((2, 3))
        with pytest.raises(ValueError):
            mode_product(t, np.zeros((4, 2)), mode=1)  # dim mismatch
        with pytest.raises(ValueError):
            mode_product(t, np.zeros((4, 2)), mode=2)  # mode out of range


class TestOuterAccumulate:
    def test_unit_vectors(self):
        target = np.zeros((2, 2))
        outer_accumulate([np.array([1.0, 0.0]), np.array([1.0, 0.0])], target, 1.0)
        np.testing.assert_array_equal(target, [[1, 0], [0, 0]])

    def test_zero_scale_leaves_target(self):
        rng = np.random.default_rng(3)
        target = rng.normal(size=(3, 2))
        before = target.copy()
        outer_accumulate([rng.normal(size=3), rng.normal(size=2)], target, 0.0)
        np.testing.assert_array_equal(target, before)

    def test_scaled_outer_product(self):
        target = np.zeros((2, 2))
        outer_accumulate([np.array([1.0, 2.0]), np.array([3.0, 4.0])], target, 2.0)
        np.testing.assert_allclose(target, [[6, 8], [12, 16]])

    def test_rank_terms_match_naive_cp_sum(self):
        rng = np.random.default_rng(4)
        dims = (3, 2, 4)
        rank = 5
        vecs = [rng.normal(size=(d, rank)) for d in dims]
        target = np.zeros(dims)
        for r in range(rank):
            outer_accumulate([v[:, r] for v in vecs], target, 1.0)
        naive = np.zeros(dims)
        for i in range(dims[0]):
            for j in range(dims[1]):
                for k in range(dims[2]):
                    naive[i, j, k] = sum(
                        vecs[0][i, r] * vecs[1][j, r] * vecs[2][k, r] for r in range(rank)
                    )
        np.testing.assert_allclose(target, naive, rtol=1e-12, atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            outer_accumulate([np.zeros(3)], np.zeros((2,)), 1.0)


class TestReshapeVector:
    def test_row_major_layout(self):
        out = reshape_vector(np.array([1.0, 2.0, 3.0, 4.0]), (2, 2))
        np.testing.assert_array_equal(out, [[1, 2], [3, 4]])

    def test_identity_reshape(self):
        v = np.arange(5.0)
        np.testing.assert_array_equal(reshape_vector(v, (5,)), v)

    def test_entry_matches_bijection(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=24)
        t = reshape_vector(v, (2, 3, 4))
        for idx in np.ndindex(2, 3, 4):
            assert t[idx] == v[multi_to_linear(idx, (2, 3, 4))]

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_round_trip(self, seed):
        v = np.random.default_rng(seed).normal(size=256)
        t = reshape_vector(v, (4, 4, 4, 4))
        np.testing.assert_array_equal(t.reshape(-1), v)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            reshape_vector(np.zeros(5), (2, 2))
