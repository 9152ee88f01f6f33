import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from colldeph import channel, linalg, states
from colldeph.channel import DephasingChannel, FieldOrientation, SpectralModel
from colldeph.errors import DegenerateOrientation, DimensionMismatch, InvalidState, UnsupportedQubitCount
from conftest import random_density, random_orientation

orientations = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: math.hypot(*v) > 0.1)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("orient", [(0, 0, 1), (1, 0, 0), (2, 1, 1), (0.3, -0.2, 0.9)])
def test_theta_projectors_resolve_identity(n, orient):
    th = channel.theta_operators(orient, n)
    d = 2**n
    np.testing.assert_allclose(sum(th), np.eye(d), atol=1e-13)
    for j, a in enumerate(th):
        assert linalg.is_hermitian(a, 1e-13)
        assert np.trace(a).real == pytest.approx(math.comb(n, j))
        for k, b in enumerate(th):
            np.testing.assert_allclose(a @ b, a if j == k else 0, atol=1e-13)


def test_theta_along_z_counts_excitations():
    th = channel.theta_operators((0, 0, 1), 3)
    for j, t in enumerate(th):
        diag = np.real(np.diag(t))
        expected = [1.0 if bin(i).count("1") == j else 0.0 for i in range(8)]
        np.testing.assert_allclose(diag, expected)


@given(st.floats(0, 50), st.integers(2, 4))
def test_toeplitz_matrix_is_psd(t, n):
    m = channel.toeplitz_matrix(channel.STANDARD_CAUCHY, n, t)
    assert np.allclose(np.diag(m), 1.0)
    assert linalg.min_eigval(m) >= -1e-12


@given(st.floats(0, 20), st.floats(-3, 3), st.floats(0.1, 4))
def test_shifted_lorentzian_toeplitz_is_psd(t, center, width):
    m = channel.toeplitz_matrix(SpectralModel.lorentzian(center, width), 3, t)
    assert linalg.min_eigval(m) >= -1e-12


def test_toeplitz_rejects_negative_time():
    with pytest.raises(ValueError):
        channel.toeplitz_matrix(channel.STANDARD_CAUCHY, 3, -0.1)


def test_spectral_model_validation():
    with pytest.raises(ValueError):
        SpectralModel.lorentzian(0, 0)
    with pytest.raises(ValueError):
        SpectralModel(channel.SpectralKind.STANDARD_CAUCHY, 1.0, 1.0)
    assert channel.STANDARD_CAUCHY.phi(2.0) == pytest.approx(math.exp(-2))


def test_channel_preserves_trace_and_positivity_on_500_random_triples():
    rng = np.random.default_rng(500)
    for _ in range(500):
        n = int(rng.integers(2, 5))
        rho = random_density(n, rng, rank=int(rng.integers(1, 2**n + 1)))
        ch = DephasingChannel(n, random_orientation(rng))
        out = ch.evolve(rho, float(rng.uniform(0, 20)))
        assert abs(np.trace(out).real - 1) <= 1e-12
        assert linalg.min_eigval(out) >= -1e-9
        assert linalg.hermiticity_error(out) == 0.0


@pytest.mark.parametrize("orient", [(1, 0, 0), (2, 1, 1), (0.2, -0.7, 0.4)])
def test_evolve_matches_frequency_quadrature(orient):
    rng = np.random.default_rng(7)
    rho = random_density(2, rng)
    ch = DephasingChannel(2, orient)
    for t in (0.25, 0.5, 1.0, 2.0, 5.0):
        ref = channel.quadrature_evolve(ch, rho, t, half_width=200, nodes=100_001)
        assert np.max(np.abs(ch.evolve(rho, t) - ref)) <= 1e-4


def test_shifted_lorentzian_matches_quadrature():
    rng = np.random.default_rng(8)
    rho = random_density(2, rng)
    ch = DephasingChannel(2, (0, 1, 1), SpectralModel.lorentzian(0.7, 0.5))
    ref = channel.quadrature_evolve(ch, rho, 1.5)
    assert np.max(np.abs(ch.evolve(rho, 1.5) - ref)) <= 1e-4


def test_evolve_at_zero_is_identity_and_long_time_is_asymptotic(rng):
    rho = random_density(3, rng)
    ch = DephasingChannel(3, (1, 2, 3))
    assert np.array_equal(ch.evolve(rho, 0.0), rho)
    np.testing.assert_allclose(ch.evolve(rho, 60.0), ch.asymptotic(rho), atol=1e-15)


def test_asymptotic_state_is_a_fixed_point(rng):
    rho = random_density(3, rng)
    ch = DephasingChannel(3, (0.5, 0.1, -0.3))
    inf = ch.asymptotic(rho)
    np.testing.assert_allclose(ch.evolve(inf, 2.3), inf, atol=1e-14)
    np.testing.assert_allclose(ch.asymptotic(inf), inf, atol=1e-14)


def test_evolution_composes_in_time(rng):
    # the averaged channel is a composition for exponential phi: phi(a + b) = phi(a) phi(b)
    rho = random_density(2, rng)
    ch = DephasingChannel(2, (1, 1, 0))
    np.testing.assert_allclose(ch.evolve(ch.evolve(rho, 0.4), 0.9), ch.evolve(rho, 1.3), atol=1e-14)


@given(orientations, st.floats(0, 10), st.integers(0, 2**31 - 1))
def test_orientation_covariance(orient, t, seed):
    # rotating the field axis by R and the state by U(R) commutes with the channel
    rng = np.random.default_rng(seed)
    u = linalg.random_unitary(2, rng)
    n = 3
    rho = random_density(n, rng)
    o = FieldOrientation(orient)
    rotated_sigma = u @ o.sigma() @ u.conj().T
    new_axis = [np.real(np.trace(rotated_sigma @ p)) / 2 for p in linalg.PAULI]
    big = linalg.kron_all([u] * n)
    lhs = DephasingChannel(n, new_axis).evolve(big @ rho @ big.conj().T, t)
    rhs = big @ DephasingChannel(n, o).evolve(rho, t) @ big.conj().T
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_z_axis_preserves_populations_in_computational_basis(rng):
    rho = random_density(3, rng)
    out = DephasingChannel(3, (0, 0, 1)).evolve(rho, 4.0)
    np.testing.assert_allclose(np.diag(out), np.diag(rho), atol=1e-15)


def test_orientation_normalization_and_errors():
    o = FieldOrientation(2, 1, 1)
    assert np.linalg.norm(o.vector) == pytest.approx(1.0)
    assert FieldOrientation((2, 1, 1)) == o
    with pytest.raises(DegenerateOrientation):
        FieldOrientation(0, 0, 0)
    with pytest.raises(DegenerateOrientation):
        FieldOrientation(math.nan, 0, 1)
    with pytest.raises(ValueError):
        FieldOrientation(1, 0)


def test_channel_input_validation():
    with pytest.raises(UnsupportedQubitCount):
        DephasingChannel(5, (1, 0, 0))
    ch = DephasingChannel(3, (1, 0, 0))
    with pytest.raises(DimensionMismatch):
        ch.evolve(np.eye(4) / 4, 1.0)
    with pytest.raises(InvalidState):
        ch.evolve(np.eye(8) / 4, 1.0)
    with pytest.raises(ValueError):
        ch.evolve(np.eye(8) / 8, -1.0)
    with pytest.raises(ValueError):
        ch.thetas[0][0, 0] = 2


def test_unitary_average_reproduces_single_frequency_rotation():
    ch = DephasingChannel(2, (0, 0, 1))
    u = ch.unitary(1.3, 2.0)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-15)
    # along z the phase of |01> relative to |00> is exp(i omega t)
    assert u[1, 1] / u[0, 0] == pytest.approx(np.exp(1j * 1.3 * 2.0))


def test_known_ghz_coherence_decay():
    # along z the GHZ_3 coherence picks up phi(3t) = e^{-3t}
    rho = states.projector(states.ghz(3))
    out = DephasingChannel(3, (0, 0, 1)).evolve(rho, 0.7)
    assert out[0, 7] == pytest.approx(0.5 * math.exp(-3 * 0.7))
