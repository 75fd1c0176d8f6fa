import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import fractional_matrix_power

from milacsim import IndexRange, block, hermitian_power, is_unitary_symmetric, right_singular_frame
from milacsim.errors import (
    NotHermitianError,
    NotPositiveDefiniteError,
    OutOfRangeError,
    ZeroVectorError,
)


def random_hpd(n, rng, real=False):
    a = rng.standard_normal((n, n))
    if not real:
        a = a + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n * np.eye(n)


class TestHermitianPower:
    def test_identity_inverse_sqrt(self):
        for n in (1, 3, 7):
            out = hermitian_power(np.eye(n), -0.5)
            assert np.allclose(out, np.eye(n), atol=1e-14)

    def test_diagonal_sqrt(self):
        out = hermitian_power(np.diag([4.0, 9.0]), 0.5)
        assert np.allclose(out, np.diag([2.0, 3.0]), atol=1e-14)

    def test_sqrt_reconstructs(self, rng):
        a = random_hpd(12, rng)
        s = hermitian_power(a, 0.5)
        assert np.linalg.norm(s @ s - a) <= 1e-10 * np.linalg.norm(a)

    def test_inverse_sqrt_against_independent_oracle(self, rng):
        a = random_hpd(8, rng, real=True)
        s = hermitian_power(a, -0.5)
        assert np.allclose(s @ a @ s, np.eye(8), atol=1e-10)
        oracle = fractional_matrix_power(a, -0.5)
        assert np.allclose(s, oracle, atol=1e-9)

    def test_real_input_gives_real_output(self, rng):
        a = random_hpd(5, rng, real=True)
        assert not np.iscomplexobj(hermitian_power(a, -1.0))

    def test_minus_one_is_inverse(self, rng):
        a = random_hpd(6, rng)
        assert np.allclose(hermitian_power(a, -1.0) @ a, np.eye(6), atol=1e-11)

    def test_rejects_nonhermitian(self, rng):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        with pytest.raises(NotHermitianError):
            hermitian_power(a + a.conj().T + 0.1j * np.eye(4), 0.5)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            hermitian_power(np.diag([1.0, -2.0]), 0.5)

    def test_rejects_bad_exponent(self):
        with pytest.raises(ValueError):
            hermitian_power(np.eye(2), 2.0)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 16), seed=st.integers(0, 2**32 - 1))
    def test_half_powers_invert(self, n, seed):
        a = random_hpd(n, np.random.default_rng(seed))
        prod = hermitian_power(a, -0.5) @ hermitian_power(a, 0.5)
        assert np.linalg.norm(prod - np.eye(n)) <= 1e-10 * max(1.0, np.linalg.norm(a))

    def test_half_powers_invert_large(self):
        a = random_hpd(256, np.random.default_rng(7))
        prod = hermitian_power(a, -0.5) @ hermitian_power(a, 0.5)
        assert np.linalg.norm(prod - np.eye(256)) <= 1e-10 * np.linalg.norm(a)


class TestRightSingularFrame:
    def test_axis_aligned(self):
        v, v_perp = right_singular_frame(np.array([1.0, 0.0, 0.0]))
        assert np.allclose(v[:, 0], [1, 0, 0])
        # completion spans the remaining axes
        assert np.allclose(v_perp.conj().T @ v_perp, np.eye(2), atol=1e-14)
        assert np.allclose(v_perp[0, :], 0.0, atol=1e-14)

    def test_complex_normalization(self):
        g = np.array([1.0, 1j]) / np.sqrt(2)
        v, _ = right_singular_frame(g)
        assert abs(g @ v[:, 0]) == pytest.approx(1.0, abs=1e-14)

    def test_orthogonality_and_unitarity(self, rng):
        g = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        v, v_perp = right_singular_frame(g)
        frame = np.hstack([v, v_perp])
        assert np.max(np.abs(frame.conj().T @ frame - np.eye(16))) < 1e-12
        assert np.max(np.abs(g @ v_perp)) < 1e-12 * np.linalg.norm(g)

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            right_singular_frame(np.zeros(4))

    def test_single_element(self):
        v, v_perp = right_singular_frame(np.array([2j]))
        assert v.shape == (1, 1) and v_perp.shape == (1, 0)
        assert abs(v[0, 0] + 1j) < 1e-15

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 24), seed=st.integers(0, 2**32 - 1))
    def test_frame_is_unitary(self, n, seed):
        gen = np.random.default_rng(seed)
        g = gen.standard_normal(n) + 1j * gen.standard_normal(n)
        v, v_perp = right_singular_frame(g)
        frame = np.hstack([v, v_perp])
        assert np.max(np.abs(frame.conj().T @ frame - np.eye(n))) < 1e-12


class TestBlock:
    def test_identity_block(self):
        out = block(np.eye(3), IndexRange(2, 3), IndexRange(2, 3))
        assert np.array_equal(out, np.eye(2))

    def test_single_entry(self):
        a = np.array([["a", "b"], ["c", "d"]])
        assert block(a, IndexRange(2, 2), IndexRange(1, 1))[0, 0] == "c"

    def test_selector_matches_elementwise_indexing(self, rng):
        n_t = 5
        a = rng.standard_normal((n_t + 1, n_t + 1)) + 1j * rng.standard_normal((n_t + 1, n_t + 1))
        out = block(a, IndexRange(2, n_t + 1), IndexRange(1, 1))
        expected = np.array([[a[r, 0]] for r in range(1, n_t + 1)])
        assert np.array_equal(out, expected)

    def test_composition(self, rng):
        a = rng.standard_normal((8, 8))
        outer = block(a, IndexRange(2, 7), IndexRange(3, 8))
        inner = block(outer, IndexRange(2, 4), IndexRange(1, 3))
        direct = block(a, IndexRange(3, 5), IndexRange(3, 5))
        assert np.array_equal(inner, direct)

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            block(np.eye(3), IndexRange(2, 4), IndexRange(1, 1))
        with pytest.raises(OutOfRangeError):
            IndexRange(3, 2)
        with pytest.raises(OutOfRangeError):
            IndexRange(0, 2)

    def test_returns_copy(self):
        a = np.zeros((2, 2))
        out = block(a, IndexRange(1, 1), IndexRange(1, 1))
        out[0, 0] = 5.0
        assert a[0, 0] == 0.0


class TestIsUnitarySymmetric:
    def test_identity(self):
        res = is_unitary_symmetric(np.eye(4))
        assert res.unitarity == 0.0 and res.symmetry == 0.0

    def test_diagonal_phases(self):
        res = is_unitary_symmetric(np.diag([1.0, -1.0, 1j]))
        assert res.unitarity < 1e-15 and res.symmetry == 0.0

    def test_flags_violations(self):
        res = is_unitary_symmetric(2 * np.eye(2))
        assert res.unitarity == pytest.approx(3.0)
        res = is_unitary_symmetric(np.array([[0, 1.0], [0, 0]]))
        assert res.symmetry == pytest.approx(1.0)
