import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binomial_qec import fock
from binomial_qec.params import DeviceParams

CFG = fock.HilbertConfig(n_max=12)
CFG_A = fock.HilbertConfig(n_max=12, include_ancilla=True)


def test_ladder_algebra():
    a = fock.destroy(CFG)
    n = fock.number(CFG)
    np.testing.assert_allclose(a.conj().T, fock.create(CFG))
    np.testing.assert_allclose(a.conj().T @ a, n, atol=1e-12)
    # the commutator [a, a+] = 1 holds except in the truncation corner
    comm = a @ a.conj().T - a.conj().T @ a
    np.testing.assert_allclose(comm[:-1, :-1], np.eye(CFG.n_fock)[:-1, :-1],
                               atol=1e-12)


def test_parity_squares_to_identity():
    p = fock.parity_op(CFG)
    np.testing.assert_allclose(p @ p, fock.identity(CFG), atol=1e-12)
    even, odd = fock.parity_projectors(CFG)
    np.testing.assert_allclose(even + odd, fock.identity(CFG), atol=1e-12)
    np.testing.assert_allclose(even - odd, p, atol=1e-12)


def test_fock_kets_orthonormal():
    kets = [fock.fock_ket(CFG, n) for n in range(CFG.n_fock)]
    gram = np.array([[abs(u.conj() @ v) for v in kets] for u in kets])
    np.testing.assert_allclose(gram, np.eye(CFG.n_fock), atol=1e-12)


def test_ancilla_operators_commute_with_oscillator():
    a = fock.destroy(CFG_A)
    for sig in (fock.sigma_x(CFG_A), fock.sigma_y(CFG_A), fock.sigma_z(CFG_A)):
        np.testing.assert_allclose(a @ sig, sig @ a, atol=1e-12)


def test_sigma_z_convention():
    # |g> is the +1 eigenstate: parity mapping leaves g for even results
    g = np.kron(np.array([1.0, 0.0]), fock.fock_ket(fock.HilbertConfig(4), 0))
    cfg = fock.HilbertConfig(4, include_ancilla=True)
    np.testing.assert_allclose(fock.sigma_z(cfg) @ g, g, atol=1e-12)


def test_oscillator_ops_reject_ancilla_space():
    with pytest.raises(fock.DimensionMismatch):
        fock.sigma_x(CFG)


@given(st.floats(0.05, 1.2), st.floats(0, 2 * math.pi))
@settings(max_examples=25, deadline=None)
def test_displacement_unitary_and_inverse(r, phi):
    alpha = r * np.exp(1j * phi)
    cfg = fock.HilbertConfig(n_max=20)
    d = fock.displacement(cfg, alpha)
    fock.assert_unitary(d)
    np.testing.assert_allclose(d.conj().T, fock.displacement(cfg, -alpha),
                               atol=1e-9)


def test_displacement_coherent_amplitude():
    cfg = fock.HilbertConfig(n_max=24)
    alpha = 0.9 * math.sqrt(2)
    ket = fock.displacement(cfg, alpha) @ fock.fock_ket(cfg, 0)
    nbar = float(np.real(ket.conj() @ fock.number(cfg) @ ket))
    assert abs(nbar - abs(alpha) ** 2) < 1e-6


def test_displacement_warns_when_truncated():
    with pytest.warns(fock.TruncationWarning):
        fock.displacement(fock.HilbertConfig(n_max=4), 2.5)


def test_kerr_spectrum_matched_frame():
    # the |4>-matched frame pins |0> and |4| to zero energy
    dev = DeviceParams()
    h = fock.kerr_hamiltonian(fock.HilbertConfig(n_max=4), dev,
                              frame="four_matched")
    e = np.real(np.diag(h)) / (2 * math.pi)
    assert abs(e[0]) < 1e-9 and abs(e[4]) < 1e-9
    # |2> beats at K_s + K_s'/2 below the matched line
    expected = -dev.k_s * 2 * (2 - 1) / 2 + 2 * (dev.k_s * 4 * 3 / 2
                                                 + dev.k_s_prime * 4 * 3 * 2 / 6) / 4
    assert abs(e[2] - expected) < 1e-9


def test_kerr_bare_frame_energies():
    dev = DeviceParams()
    h = fock.kerr_hamiltonian(fock.HilbertConfig(n_max=6), dev, frame="omega_s")
    e = np.real(np.diag(h)) / (2 * math.pi)
    for n in range(7):
        expected = -dev.k_s / 2 * n * (n - 1) - dev.k_s_prime / 6 * n * (n - 1) * (n - 2)
        assert abs(e[n] - expected) < 1e-9


def test_dispersive_shift_acts_only_on_excited():
    dev = DeviceParams()
    cfg = fock.HilbertConfig(n_max=4, include_ancilla=True)
    h = fock.dispersive_hamiltonian(cfg, dev)
    g2 = np.kron(np.array([1.0, 0]), fock.fock_ket(fock.HilbertConfig(4), 2))
    e2 = np.kron(np.array([0, 1.0]), fock.fock_ket(fock.HilbertConfig(4), 2))
    assert abs(g2.conj() @ h @ g2) < 1e-12
    assert abs(e2.conj() @ h @ e2 / (2 * math.pi) + 2 * dev.chi_qs) < 1e-3


def test_expm_hamiltonian_matches_series():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = m + m.conj().T
    u = fock.expm_hamiltonian(h, 0.37)
    fock.assert_unitary(u)
    np.testing.assert_allclose(u, fock.expm(-1j * 0.37 * h), atol=1e-10)


def test_check_density_rejects_trace_defect():
    rho = np.eye(3) / 2.9
    with pytest.raises(ValueError):
        fock.check_density(rho)


def test_parity_measurement_phase():
    # exp(-i pi n) flips odd Fock states only, up to global sign convention
    cfg = fock.HilbertConfig(n_max=6)
    u = fock.expm_hamiltonian(np.pi * fock.number(cfg), 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for n in range(7):
            ket = fock.fock_ket(cfg, n)
            phase = complex(ket.conj() @ u @ ket)
            assert abs(phase - (-1) ** n) < 1e-9
