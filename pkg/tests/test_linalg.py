import numpy as np
import pytest
from hypothesis import given, strategies as st

from colldeph import linalg
from colldeph.errors import NotHermitian, ShapeMismatch
from conftest import random_density


def naive_partial_transpose(m, n, subset):
    """Entry-by-entry reference: swap the row/column bits of every qubit in ``subset``."""
    d = 2**n
    out = np.zeros_like(m)
    for i in range(d):
        for j in range(d):
            bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
            bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
            for q in subset:
                bi[q], bj[q] = bj[q], bi[q]
            ii = int("".join(map(str, bi)), 2)
            jj = int("".join(map(str, bj)), 2)
            out[ii, jj] = m[i, j]
    return out


@pytest.mark.parametrize("n,subset", [(2, (0,)), (2, (1,)), (3, (0,)), (3, (1, 2)), (4, (0, 2)), (4, (3,))])
def test_partial_transpose_matches_entrywise_reference(n, subset, rng):
    m = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    np.testing.assert_allclose(linalg.partial_transpose(m, n, subset), naive_partial_transpose(m, n, subset))


def test_partial_transpose_two_qubit_index_formula(rng):
    m = rng.normal(size=(4, 4))
    pt = linalg.partial_transpose(m, 2, [1])
    for i, j, k, l in np.ndindex(2, 2, 2, 2):
        assert pt[2 * i + j, 2 * k + l] == m[2 * i + l, 2 * k + j]


@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_partial_transpose_algebra(n, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(n, rng)
    subset = tuple(q for q in range(n) if rng.random() < 0.5)
    comp = tuple(q for q in range(n) if q not in subset)
    pt = linalg.partial_transpose(rho, n, subset)
    np.testing.assert_allclose(linalg.partial_transpose(pt, n, subset), rho, atol=1e-15)
    np.testing.assert_allclose(linalg.partial_transpose(pt, n, comp), rho.T, atol=1e-15)
    assert abs(np.trace(pt) - 1) < 1e-12
    assert linalg.is_hermitian(pt)


def test_partial_transpose_detects_bell_state():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = np.outer(phi, phi)
    assert linalg.min_eigval(linalg.partial_transpose(rho, 2, [0])) == pytest.approx(-0.5)


def test_partial_transpose_rejects_bad_subset():
    with pytest.raises(ValueError):
        linalg.partial_transpose(np.eye(4), 2, [2])


def test_register_shape_argument():
    shape = linalg.QubitRegisterShape(3)
    assert shape.dim == 8 and shape.local_dims == (2, 2, 2)
    m = np.arange(64.0).reshape(8, 8)
    np.testing.assert_array_equal(linalg.partial_transpose(m, shape, [1]), linalg.partial_transpose(m, 3, [1]))
    np.testing.assert_array_equal(linalg.partial_transpose(m, None, [1]), linalg.partial_transpose(m, 3, [1]))


def test_kron_all_orders_qubit_zero_first():
    one = np.array([[0, 0], [0, 1]])
    zero = np.array([[1, 0], [0, 0]])
    m = linalg.kron_all([one, zero, zero])
    assert m[4, 4] == 1 and np.count_nonzero(m) == 1


def test_hermitian_eigvals_sorted_and_exact():
    np.testing.assert_allclose(linalg.hermitian_eigvals(linalg.SIGMA_Y), [-1, 1])
    vals, vecs = linalg.hermitian_eigh(linalg.SIGMA_X)
    np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.conj().T, linalg.SIGMA_X, atol=1e-15)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linalg.hermitian_eigvals(np.array([[0, 1], [0, 0]]))
    # deviations at the tolerance are symmetrized, not rejected
    m = np.eye(2, dtype=complex)
    m[0, 1] = 5e-11
    linalg.hermitian_eigvals(m)


def test_num_qubits_of_rejects_non_power_of_two():
    with pytest.raises(ShapeMismatch):
        linalg.num_qubits_of(np.eye(3))


@given(st.integers(2, 16), st.integers(0, 2**31 - 1))
def test_random_unitary_is_unitary(dim, seed):
    u = linalg.random_unitary(dim, np.random.default_rng(seed))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(dim), atol=1e-12)


def test_paulis_are_read_only():
    with pytest.raises(ValueError):
        linalg.SIGMA_X[0, 0] = 3
