import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isacwave import complexify as cx

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
complex_lists = st.lists(
    st.tuples(finite, finite).map(lambda p: complex(*p)), min_size=1, max_size=12
)


def test_stack_vector_zero():
    np.testing.assert_array_equal(cx.stack_vector([0, 0]), [0.0, 0.0, 0.0, 0.0])


def test_stack_vector_reads_parts():
    np.testing.assert_array_equal(cx.stack_vector([1 + 1j]), [1.0, 1.0])


@given(complex_lists)
def test_round_trip_exact(zs):
    z = np.array(zs)
    np.testing.assert_array_equal(cx.unstack_vector(cx.stack_vector(z)), z)


@given(complex_lists)
def test_norm_preserved(zs):
    z = np.array(zs)
    assert np.linalg.norm(cx.stack_vector(z)) == pytest.approx(np.linalg.norm(z), rel=1e-14)


def test_unstack_odd_length_rejected():
    with pytest.raises(ValueError):
        cx.unstack_vector([1.0, 2.0, 3.0])


def test_stack_matrix_real_scalar_is_identity():
    np.testing.assert_array_equal(cx.stack_matrix([[1.0]]), np.eye(2))


def test_stack_matrix_imaginary_unit_is_rotation():
    np.testing.assert_array_equal(cx.stack_matrix([[1j]]), [[0.0, -1.0], [1.0, 0.0]])


def test_stack_matrix_block_structure():
    rng = np.random.default_rng(0)
    xi = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    big = cx.stack_matrix(xi)
    np.testing.assert_array_equal(big[:3, :5], big[3:, 5:])
    np.testing.assert_array_equal(big[:3, 5:], -big[3:, :5])


def test_multiplication_homomorphism_bulk():
    rng = np.random.default_rng(1)
    for _ in range(300):
        m, n = rng.integers(1, 7, size=2)
        xi = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lhs = cx.stack_matrix(xi) @ cx.stack_vector(z)
        rhs = cx.stack_vector(xi @ z)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_vec_is_column_major():
    m = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(cx.vec(m), [1, 3, 2, 4])
    np.testing.assert_array_equal(cx.unvec(cx.vec(m), 2, 2), m)


def test_instance_scalar_identity():
    c_mat, s_vec, h_bar = cx.build_quadmax_instance(
        np.array([[1.0 + 0j]]), np.array([[0.0 + 0j]]), np.array([[0.5 + 0j]]), 1.0
    )
    np.testing.assert_array_equal(c_mat, np.eye(2))
    np.testing.assert_array_equal(s_vec, [0.0, 0.0])
    np.testing.assert_array_equal(h_bar, [0.5, 0.0])


def test_instance_shapes():
    rng = np.random.default_rng(2)
    k, n, frame = 2, 3, 4
    x_eff = rng.standard_normal((n, frame)) + 1j * rng.standard_normal((n, frame))
    s_mat = rng.standard_normal((k, frame)) + 1j * rng.standard_normal((k, frame))
    h_bar = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    c_mat, s_vec, h_vec = cx.build_quadmax_instance(x_eff, s_mat, h_bar, 2.0)
    assert c_mat.shape == (2 * k * frame, 2 * k * n) == (16, 12)
    assert s_vec.shape == (16,)
    assert h_vec.shape == (12,)


def test_instance_objective_matches_frobenius_cost():
    rng = np.random.default_rng(3)
    k, n, frame, scale = 2, 3, 4, np.sqrt(4.0)
    x_eff = rng.standard_normal((n, frame)) + 1j * rng.standard_normal((n, frame))
    s_mat = rng.standard_normal((k, frame)) + 1j * rng.standard_normal((k, frame))
    h_bar = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    c_mat, s_vec, _ = cx.build_quadmax_instance(x_eff, s_mat, h_bar, scale)
    for _ in range(100):
        h = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
        quad = np.sum((c_mat @ cx.channel_to_real(h) - s_vec) ** 2)
        direct = np.sum(np.abs(scale * h @ x_eff - s_mat) ** 2)
        assert quad == pytest.approx(direct, rel=1e-10)


def test_instance_gram_positive_definite_for_full_power_factor():
    # with X_eff X_eff^H = L * R and R positive definite, C^T C must be too
    rng = np.random.default_rng(4)
    k, n, frame = 2, 3, 6
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r_mat = g @ g.conj().T + n * np.eye(n)
    f_mat = np.linalg.cholesky(r_mat)
    q = np.linalg.qr((rng.standard_normal((frame, n)) + 1j * rng.standard_normal((frame, n))))[0]
    x_eff = np.sqrt(frame) * f_mat @ q.conj().T
    h_bar = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    s_mat = rng.standard_normal((k, frame)) + 1j * rng.standard_normal((k, frame))
    c_mat, _, _ = cx.build_quadmax_instance(x_eff, s_mat, h_bar, 1.0)
    eigmin = np.min(np.linalg.eigvalsh(c_mat.T @ c_mat))
    assert eigmin > 0


def test_instance_dimension_mismatch():
    with pytest.raises(ValueError):
        cx.build_quadmax_instance(np.zeros((3, 4)), np.zeros((2, 5)), np.zeros((2, 3)), 1.0)
    with pytest.raises(ValueError):
        cx.build_quadmax_instance(np.zeros((3, 4)), np.zeros((2, 4)), np.zeros((2, 2)), 1.0)


@settings(max_examples=25)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
def test_homomorphism_property(m, n, seed):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    lhs = cx.stack_matrix(xi) @ cx.stack_vector(z)
    rhs = cx.stack_vector(xi @ z)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12
