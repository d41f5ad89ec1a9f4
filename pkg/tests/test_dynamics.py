import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binomial_qec import dynamics, fock
from binomial_qec.params import DeviceParams, NoiseParams

CFG = fock.HilbertConfig(n_max=6)
NOISE = NoiseParams()


def _random_open_system(seed, dim=4, n_ops=2):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (m + m.conj().T) / 2
    c_ops = [0.4 * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
             for _ in range(n_ops)]
    return h, c_ops


def test_collapse_rates():
    ops = dynamics.collapse_ops(CFG, NOISE)
    rates = {lab: np.max(np.abs(op)) ** 2 for lab, op in zip(ops.labels, ops.ops)}
    kappa = NOISE.kappa_s
    # a carries sqrt(n_max) in its largest element
    assert abs(rates["storage_loss"] / CFG.n_max - kappa * (1 + NOISE.n_th_s)) < 1e-6
    assert abs(rates["storage_gain"] / CFG.n_max - kappa * NOISE.n_th_s) < 1e-9


def test_ancilla_channels_present_only_with_ancilla():
    cfg = fock.HilbertConfig(n_max=4, include_ancilla=True)
    labels = dynamics.collapse_ops(cfg, NOISE).labels
    assert {"ancilla_decay", "ancilla_excitation", "ancilla_dephasing"} <= set(labels)
    assert set(dynamics.collapse_ops(CFG, NOISE).labels) == {"storage_loss",
                                                             "storage_gain"}


def test_fock_population_decay_closed_form():
    # pure loss: <n>(t) = n0 exp(-kappa t) exactly, for any Fock state
    noise = NoiseParams(n_th_s=0.0)
    c_ops = dynamics.collapse_ops(CFG, noise)
    h = np.zeros((CFG.dim, CFG.dim))
    rho0 = fock.ket_to_density(fock.fock_ket(CFG, 4))
    t = 37e-6
    rho = dynamics.apply_propagator(dynamics.propagator(h, c_ops, t), rho0)
    nbar = float(np.real(np.trace(fock.number(CFG) @ rho)))
    assert abs(nbar - 4 * math.exp(-noise.kappa_s * t)) < 1e-10


def test_coherence_decays_at_half_rate():
    noise = NoiseParams(n_th_s=0.0)
    c_ops = dynamics.collapse_ops(CFG, noise)
    h = np.zeros((CFG.dim, CFG.dim))
    psi = (fock.fock_ket(CFG, 0) + fock.fock_ket(CFG, 1)) / math.sqrt(2)
    t = 50e-6
    rho = dynamics.apply_propagator(dynamics.propagator(h, c_ops, t),
                                    fock.ket_to_density(psi))
    assert abs(rho[0, 1] - 0.5 * math.exp(-0.5 * noise.kappa_s * t)) < 1e-10


def test_rk4_matches_exponential_propagator():
    h, c_ops = _random_open_system(11)
    h = h * 1e5
    c_ops = [c * 300.0 for c in c_ops]
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[0, 0] = 1.0
    t = 5e-6
    exact = dynamics.apply_propagator(dynamics.propagator(h, c_ops, t), rho0)
    stepped = dynamics.lindblad_evolve(rho0, h, c_ops, t, dt=20e-9)
    np.testing.assert_allclose(stepped, exact, atol=1e-9)


def test_rk4_step_guard():
    h, c_ops = _random_open_system(5)
    with pytest.raises(dynamics.StepSizeTooLarge):
        dynamics.lindblad_evolve(np.eye(4) / 4, h * 1e9, c_ops, 1e-6, dt=1e-6)


def test_effective_hamiltonian_antihermitian_part():
    h, c_ops = _random_open_system(7)
    h_eff = dynamics.effective_hamiltonian(h, c_ops)
    anti = (h_eff - h_eff.conj().T) / 2
    expect = sum(-0.5j * (c.conj().T @ c) for c in c_ops)
    np.testing.assert_allclose(anti, expect, atol=1e-12)


def test_nojump_norm_is_survival_probability():
    # |1> under pure loss survives jump-free with probability e^{-kappa t}
    noise = NoiseParams(n_th_s=0.0)
    c_ops = dynamics.collapse_ops(CFG, noise)
    u = dynamics.nojump_propagator(np.zeros((CFG.dim, CFG.dim)), c_ops, 40e-6)
    psi = u @ fock.fock_ket(CFG, 1)
    assert abs(np.linalg.norm(psi) ** 2 - math.exp(-noise.kappa_s * 40e-6)) < 1e-12


@given(st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_lindblad_preserves_trace_and_hermiticity(seed):
    h, c_ops = _random_open_system(seed)
    rng = np.random.default_rng(seed + 1)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho0 = m @ m.conj().T
    rho0 /= np.trace(rho0)
    rho = dynamics.apply_propagator(dynamics.propagator(h, c_ops, 0.3), rho0)
    assert abs(np.trace(rho) - 1.0) < 1e-9
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-9)
    assert np.linalg.eigvalsh(rho).min() > -1e-9


def test_liouvillian_matches_bracket_form():
    h, c_ops = _random_open_system(3)
    rng = np.random.default_rng(4)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    lhs = (dynamics.liouvillian(h, c_ops) @ rho.reshape(-1)).reshape(4, 4)
    rhs = -1j * (h @ rho - rho @ h)
    for c in c_ops:
        rhs += c @ rho @ c.conj().T - 0.5 * (c.conj().T @ c @ rho
                                             + rho @ c.conj().T @ c)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_trajectory_average_approaches_master_equation():
    cfg = fock.HilbertConfig(n_max=6)
    noise = NoiseParams()
    c_ops = dynamics.collapse_ops(cfg, noise)
    h = fock.kerr_hamiltonian(cfg, DeviceParams())
    psi0 = (fock.fock_ket(cfg, 0) + fock.fock_ket(cfg, 4)) / math.sqrt(2)
    t = 40e-6
    seg = [dynamics.Segment(h=h, c_ops=c_ops, duration=t)]
    avg = dynamics.trajectory_average(psi0, seg, n_traj=600, master_seed=9)
    exact = dynamics.apply_propagator(dynamics.propagator(h, c_ops, t),
                                      fock.ket_to_density(psi0))
    assert np.max(np.abs(avg - exact)) < 0.05


def test_trajectory_seed_independent_of_order():
    cfg = fock.HilbertConfig(n_max=4)
    c_ops = dynamics.collapse_ops(cfg, NoiseParams(tau_s=20e-6))
    h = np.zeros((cfg.dim, cfg.dim))
    seg = [dynamics.Segment(h=h, c_ops=c_ops, duration=30e-6)]
    psi0 = fock.fock_ket(cfg, 3)
    runs = {}
    for idx in (5, 2, 9):
        rec = dynamics.trajectory_run(psi0, seg, dynamics.trajectory_seed(77, idx))
        runs[idx] = rec.final_state
    # re-running any index reproduces its state exactly, in any order
    for idx in (9, 5, 2):
        rec = dynamics.trajectory_run(psi0, seg, dynamics.trajectory_seed(77, idx))
        np.testing.assert_array_equal(rec.final_state, runs[idx])
