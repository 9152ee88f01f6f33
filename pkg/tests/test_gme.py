import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from colldeph import gme, linalg, states
from colldeph.errors import CertificateInvalid, InvalidState, UnsupportedQubitCount
from colldeph.gme import Bipartition, WitnessCertificate
from conftest import random_density


def E(rho):
    return gme.genuine_negativity(rho).value


def test_bipartition_counts_and_canonical_side():
    assert [str(b) for b in gme.bipartitions(3)] == ["A|BC", "B|AC", "C|AB"]
    four = gme.bipartitions(4)
    assert len(four) == 7
    assert [b.subset for b in four] == [(0,), (1,), (2,), (3,), (0, 1), (0, 2), (0, 3)]
    # smaller side wins; equal halves keep the side holding qubit 0
    assert Bipartition.of(4, (2, 3)) == Bipartition.of(4, (0, 1))
    assert Bipartition.of(4, (0, 2, 3)).subset == (1,)
    assert Bipartition.of(3, (1, 2)).subset == (0,)
    with pytest.raises(ValueError):
        Bipartition.of(3, (0, 1, 2))


@settings(max_examples=10)
@given(st.integers(0, 2**31 - 1))
def test_two_qubits_reduce_to_negativity(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(2, rng, rank=int(rng.integers(1, 5)))
    assert E(rho) == pytest.approx(gme.bipartite_negativity(rho), abs=1e-6)


@pytest.mark.parametrize("name,expected,tol", [("ghz", 0.5, 1e-4), ("w", 0.443, 5e-3)])
def test_three_qubit_pure_values(name, expected, tol):
    assert E(states.projector(states.named_state(name, 3))) == pytest.approx(expected, abs=tol)


def test_local_unitary_invariance(ghz3, rng):
    u = linalg.kron_all([linalg.random_unitary(2, rng) for _ in range(3)])
    rotated = u @ ghz3 @ u.conj().T
    assert E(rotated) == pytest.approx(E(ghz3), abs=1e-6)


def test_convexity(rng):
    a = states.projector(states.ghz(3))
    b = states.projector(states.w(3))
    mix = 0.3 * a + 0.7 * b
    assert E(mix) <= 0.3 * E(a) + 0.7 * E(b) + 1e-6


def test_biseparable_and_mixed_states_give_zero():
    bell = states.projector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    zero = np.diag([1.0, 0.0]).astype(complex)
    product_ab_c = np.kron(bell, zero)
    product_a_bc = np.kron(zero, bell)
    assert E(0.5 * product_ab_c + 0.5 * product_a_bc) == pytest.approx(0.0, abs=1e-6)
    assert E(np.eye(8) / 8) == pytest.approx(0.0, abs=1e-7)


def test_white_noise_below_threshold_is_not_detected():
    assert E(states.white_noise_mix(states.ghz(3), 0.4)) == pytest.approx(0.0, abs=1e-6)
    assert E(states.white_noise_mix(states.ghz(3), 0.5)) > 0.01


def test_certificate_audits_and_reports_expectation(ghz3):
    res = gme.genuine_negativity(ghz3)
    assert res.status.value == "optimal"
    assert res.diagnostics["witness_expectation"] == pytest.approx(-res.value)
    assert gme.verify_certificate(ghz3, res.certificate) == pytest.approx(-res.value)
    assert res.raw_optimum == pytest.approx(res.value, abs=1e-5)
    assert res.diagnostics["primal_value"] - res.diagnostics["dual_value"] >= -1e-6


def test_certificate_text_round_trip(ghz3):
    cert = gme.genuine_negativity(ghz3).certificate
    back = WitnessCertificate.from_text(cert.to_text())
    assert np.array_equal(back.witness, cert.witness)
    assert set(back.decompositions) == set(cert.decompositions)
    assert gme.verify_certificate(ghz3, back) == gme.verify_certificate(ghz3, cert)


@pytest.mark.parametrize("tamper,check", [
    ("witness_shift", "decomposition"),
    ("p_scale", "upper-bound"),
    ("p_negative", "lower-bound"),
    ("drop", "coverage"),
    ("antihermitian", "hermitian"),
])
def test_tampered_certificates_are_rejected(ghz3, tamper, check):
    cert = gme.genuine_negativity(ghz3).certificate
    bp = gme.bipartitions(3)[1]
    pm, qm = cert.decompositions[bp]
    d = 8
    if tamper == "witness_shift":
        cert.witness = cert.witness + 1e-3 * np.eye(d)
    elif tamper in ("p_scale", "p_negative"):
        # move 2 I between P and Q: the split stays exact but P leaves [0, I]
        shift = (2.0 if tamper == "p_scale" else -2.0) * np.eye(d)
        cert.decompositions[bp] = (pm + shift, qm - shift)
    elif tamper == "drop":
        del cert.decompositions[bp]
    else:
        cert.witness = cert.witness.astype(complex)
        cert.witness[0, 1] += 1e-3j
    with pytest.raises(CertificateInvalid) as info:
        gme.verify_certificate(ghz3, cert)
    assert info.value.check == check


def test_input_errors():
    with pytest.raises(UnsupportedQubitCount):
        gme.genuine_negativity(np.eye(32) / 32)
    with pytest.raises(InvalidState):
        gme.genuine_negativity(np.eye(8) / 4)


@pytest.mark.slow
def test_four_qubit_ghz_value():
    assert E(states.projector(states.ghz(4))) == pytest.approx(0.5, abs=1e-4)


@pytest.mark.parametrize("index", [0, 108, 124])
def test_degenerate_random_states_still_get_audited_values(index):
    # these seeded states drive the Schur matrix to indefiniteness near the optimum
    rho = states.white_noise_mix(states.random_pure(3, states.RandomStateSeed(5).derive(index)), 0.95)
    res = gme.genuine_negativity(rho)
    assert res.status.value in ("optimal", "near-optimal")
    assert res.value == pytest.approx(res.raw_optimum, abs=1e-5)
    assert gme.verify_certificate(rho, res.certificate) == pytest.approx(-res.value)
