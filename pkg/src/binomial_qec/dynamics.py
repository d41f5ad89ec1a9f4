"""Open-system dynamics: Lindblad propagation and quantum trajectories.

Superoperators act on row-major vectorized density matrices,
vec(A X B) = (A kron B^T) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from . import fock
from .fock import HilbertConfig
from .params import NoiseParams

DT_PULSE = 1e-9
DT_IDLE = 20e-9
# RK4 absolute-stability boundary on the imaginary axis.
_RK4_STABILITY = 2.8


class StepSizeTooLarge(ValueError):
    """Fixed RK4 step outside the stability region of the generator."""


@dataclass(frozen=True)
class CollapseSet:
    ops: tuple
    labels: tuple

    def __iter__(self):
        return iter(self.ops)

    def __len__(self):
        return len(self.ops)


def collapse_ops(cfg: HilbertConfig, noise: NoiseParams,
                 oscillator: bool = True, ancilla: bool | None = None) -> CollapseSet:
    """Jump operators with rates folded in as amplitude prefactors."""
    if ancilla is None:
        ancilla = cfg.include_ancilla
    ops, labels = [], []
    if oscillator:
        kappa = noise.kappa_s
        ops.append(np.sqrt(kappa * (1 + noise.n_th_s)) * fock.destroy(cfg))
        labels.append("storage_loss")
        if noise.n_th_s > 0:
            ops.append(np.sqrt(kappa * noise.n_th_s) * fock.create(cfg))
            labels.append("storage_gain")
    if ancilla:
        ops.append(np.sqrt(1.0 / noise.t1) * fock.sigma_minus(cfg))
        labels.append("ancilla_decay")
        if noise.n_th_q > 0:
            ops.append(np.sqrt(noise.gamma_up) * fock.sigma_plus(cfg))
            labels.append("ancilla_excitation")
        ops.append(np.sqrt(0.5 / noise.t_phi) * fock.sigma_z(cfg))
        labels.append("ancilla_dephasing")
    return CollapseSet(tuple(ops), tuple(labels))


def liouvillian(h: np.ndarray, c_ops) -> np.ndarray:
    """Dense Lindblad generator for vectorized densities."""
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for l_op in c_ops:
        ldl = l_op.conj().T @ l_op
        gen += np.kron(l_op, l_op.conj())
        gen -= 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
    return gen


def effective_hamiltonian(h: np.ndarray, c_ops) -> np.ndarray:
    """Non-Hermitian no-jump generator H - (i/2) sum L+L."""
    h_eff = h.astype(complex).copy()
    for l_op in c_ops:
        h_eff -= 0.5j * (l_op.conj().T @ l_op)
    return h_eff


def lindblad_evolve(rho0: np.ndarray, h: np.ndarray, c_ops, t: float,
                    dt: float = DT_IDLE) -> np.ndarray:
    """Fixed-step RK4 integration of the master equation over [0, t].

    The step count is ceil(t / dt) with the step shrunk to fit t exactly, so
    identical inputs give bit-identical outputs.
    """
    if t == 0.0:
        return rho0.copy()
    gen = liouvillian(h, c_ops)
    scale = np.max(np.sum(np.abs(gen), axis=1))
    if dt * scale > _RK4_STABILITY:
        raise StepSizeTooLarge(
            f"dt={dt:g} with generator scale {scale:.3e} exceeds RK4 stability;"
            f" need dt < {_RK4_STABILITY / scale:.3e}"
        )
    n_steps = max(1, int(np.ceil(t / dt - 1e-12)))
    step = t / n_steps
    v = rho0.reshape(-1).astype(complex)
    for _ in range(n_steps):
        k1 = gen @ v
        k2 = gen @ (v + 0.5 * step * k1)
        k3 = gen @ (v + 0.5 * step * k2)
        k4 = gen @ (v + step * k3)
        v = v + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return v.reshape(rho0.shape)


def propagator(h: np.ndarray, c_ops, t: float) -> np.ndarray:
    """exp(L t) as a dense superoperator; exact for time-independent segments."""
    return scipy.linalg.expm(liouvillian(h, c_ops) * t)


def apply_propagator(sup: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return (sup @ rho.reshape(-1)).reshape(d, d)


def nojump_propagator(h: np.ndarray, c_ops, t: float) -> np.ndarray:
    """exp(-i H_eff t) governing the conditional no-jump evolution."""
    return scipy.linalg.expm(-1j * effective_hamiltonian(h, c_ops) * t)


@dataclass(frozen=True)
class Segment:
    h: np.ndarray
    c_ops: CollapseSet
    duration: float


@dataclass
class TrajectoryRecord:
    jump_times: list = field(default_factory=list)
    jump_channels: list = field(default_factory=list)
    final_state: np.ndarray | None = None


def _is_diagonal(m: np.ndarray) -> bool:
    return np.max(np.abs(m - np.diag(np.diag(m)))) < 1e-12 * max(1.0, np.max(np.abs(m)))


def _jump(psi: np.ndarray, c_ops, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    weights = np.array([np.linalg.norm(l_op @ psi) ** 2 for l_op in c_ops])
    total = weights.sum()
    k = int(rng.choice(len(weights), p=weights / total))
    out = c_ops.ops[k] @ psi
    return out / np.linalg.norm(out), k


def _diag_segment(psi, r, t0, seg, rec, rng):
    """No-jump evolution for diagonal H_eff, with exact jump-time solving."""
    h_eff = effective_hamiltonian(seg.h, seg.c_ops)
    diag = np.diag(h_eff)
    elapsed = 0.0
    while True:
        remaining = seg.duration - elapsed
        p = np.abs(psi) ** 2
        gamma = -2.0 * diag.imag  # |psi_n(t)|^2 = p_n exp(-gamma_n t)

        def norm_sq(t):
            return float(p @ np.exp(-gamma * t))

        if norm_sq(remaining) > r:
            psi = psi * np.exp(-1j * diag * remaining)
            return psi, r
        t_jump = scipy.optimize.brentq(lambda t: norm_sq(t) - r, 0.0, remaining,
                                       xtol=1e-15, rtol=1e-14)
        psi = psi * np.exp(-1j * diag * t_jump)
        psi, k = _jump(psi, seg.c_ops, rng)
        rec.jump_times.append(t0 + elapsed + t_jump)
        rec.jump_channels.append(k)
        elapsed += t_jump
        r = rng.uniform()


def _stepped_segment(psi, r, t0, seg, rec, rng, dt):
    h_eff = effective_hamiltonian(seg.h, seg.c_ops)
    n_steps = max(1, int(np.ceil(seg.duration / dt - 1e-12)))
    step = seg.duration / n_steps
    u_step = scipy.linalg.expm(-1j * h_eff * step)
    for i in range(n_steps):
        nxt = u_step @ psi
        if np.linalg.norm(nxt) ** 2 > r:
            psi = nxt
            continue
        # Bisect inside the step for the crossing time.
        lo, hi = 0.0, step
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            cand = scipy.linalg.expm(-1j * h_eff * mid) @ psi
            if np.linalg.norm(cand) ** 2 > r:
                lo = mid
            else:
                hi = mid
        psi = scipy.linalg.expm(-1j * h_eff * hi) @ psi
        psi, k = _jump(psi, seg.c_ops, rng)
        rec.jump_times.append(t0 + i * step + hi)
        rec.jump_channels.append(k)
        r = rng.uniform()
    return psi, r


def trajectory_run(psi0: np.ndarray, segments, rng: np.random.Generator,
                   dt: float = DT_IDLE) -> TrajectoryRecord:
    """Single Monte-Carlo trajectory through a schedule of segments.

    The running squared norm of the unnormalized state is compared against a
    uniformly drawn threshold; each jump renormalizes and redraws.  Diagonal
    no-jump generators (idling segments) are handled in closed form.
    """
    rec = TrajectoryRecord()
    psi = psi0.astype(complex).copy()
    r = rng.uniform()
    t0 = 0.0
    for seg in segments:
        if _is_diagonal(effective_hamiltonian(seg.h, seg.c_ops)):
            psi, r = _diag_segment(psi, r, t0, seg, rec, rng)
        else:
            psi, r = _stepped_segment(psi, r, t0, seg, rec, rng, dt)
        t0 += seg.duration
    rec.final_state = psi / np.linalg.norm(psi)
    return rec


def trajectory_seed(master_seed: int, index: int) -> np.random.Generator:
    """Deterministic per-trajectory generator, independent of launch order."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, index)))


def trajectory_average(psi0: np.ndarray, segments, n_traj: int,
                       master_seed: int) -> np.ndarray:
    """Ensemble-averaged density matrix over independent trajectories."""
    dim = psi0.shape[0]
    acc = np.zeros((dim, dim), dtype=complex)
    for i in range(n_traj):
        rec = trajectory_run(psi0, segments, trajectory_seed(master_seed, i))
        acc += fock.ket_to_density(rec.final_state)
    return acc / n_traj
