"""Lowest-order binomial code words, deformation bookkeeping and gates.

All gate targets are expressed in the |4>-matched rotating frame (quarter of
the |4> Kerr shift), where the |0> and |4> code-word components stay
degenerate and the only deterministic Kerr phase sits on |2>.  Photon loss
maps the code words onto the odd error space: a|0L> -> sqrt(2)|3>,
a|1L> -> sqrt(2)|1> before normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, fock
from .fock import HilbertConfig
from .params import DeviceParams, NoiseParams

ORTHONORMAL_ATOL = 1e-10


class NonOrthogonalInput(ValueError):
    """Isometry source or target vectors are not orthonormal."""


def code_words(cfg: HilbertConfig, level: int = 0) -> tuple[np.ndarray, np.ndarray]:
    ket0 = (fock.fock_ket(cfg, 0, level) + fock.fock_ket(cfg, 4, level)) / np.sqrt(2)
    ket1 = fock.fock_ket(cfg, 2, level)
    return ket0, ket1


def error_words(cfg: HilbertConfig, level: int = 0) -> tuple[np.ndarray, np.ndarray]:
    return fock.fock_ket(cfg, 3, level), fock.fock_ket(cfg, 1, level)


@dataclass(frozen=True)
class DeformationParams:
    """No-jump deformation of the code words after time t.

    tan(theta) = exp(-2 kappa t) with theta = pi/4 at t = 0; phi4 is the
    residual |4> phase (zero in the matched frame) and phi2 the
    deterministic Kerr phase of the |2> code word.
    """

    theta: float
    phi2: float
    phi4: float
    t: float


def _nojump_kraus(cfg: HilbertConfig, dev: DeviceParams, noise: NoiseParams,
                  t: float) -> np.ndarray:
    """Loss-only conditional propagator exp(-i H_kerr t - kappa n t / 2).

    Gate targets deliberately use the bare-loss no-jump map; thermal-gain
    corrections to the deformation are part of the residual intrinsic error.
    """
    h = fock.kerr_hamiltonian(cfg, dev, frame="four_matched")
    c_ops = [np.sqrt(noise.kappa_s) * fock.destroy(cfg)]
    return dynamics.nojump_propagator(h, c_ops, t)


def compute_deformation(dev: DeviceParams, noise: NoiseParams, t: float,
                        n_max: int = 12) -> DeformationParams:
    cfg = HilbertConfig(n_max)
    k = _nojump_kraus(cfg, dev, noise, t)
    ket0, ket1 = code_words(cfg)
    v0 = k @ ket0
    c0, c4 = v0[cfg.index(0)], v0[cfg.index(4)]
    v1 = k @ ket1
    theta = float(np.arctan2(abs(c4), abs(c0)))
    phi4 = float(np.angle(c4 / c0))
    phi2 = float(np.angle(v1[cfg.index(2)]))
    return DeformationParams(theta=theta, phi2=phi2, phi4=phi4, t=t)


def deformed_code_words(cfg: HilbertConfig, par: DeformationParams,
                        level: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Normalized deformed pair; carries the deterministic |2> Kerr phase."""
    ket0 = (np.cos(par.theta) * fock.fock_ket(cfg, 0, level)
            + np.sin(par.theta) * np.exp(1j * par.phi4) * fock.fock_ket(cfg, 4, level))
    ket1 = np.exp(1j * par.phi2) * fock.fock_ket(cfg, 2, level)
    return ket0, ket1


def error_space_phase(dev: DeviceParams, noise: NoiseParams,
                      t_start: float, t_end: float) -> float:
    """Mean relative phase of the |3> vs |1> error components at t_end.

    For a single loss at time s in [t_start, t_end] the two components pick
    up Kerr phases from the pre-jump (|4>, |2>) and post-jump (|3>, |1>)
    levels.  The deterministic part is the phase of the jump-time-averaged
    coherence, with the loss-weighted measure exp(-3 kappa s - 2 kappa (T-s));
    the remaining spread is the intrinsic Kerr dephasing of the odd branch.
    """
    kerr = fock.kerr_hamiltonian(HilbertConfig(6), dev, frame="four_matched")
    w = np.real(np.diag(kerr))  # angular energies
    kappa = noise.kappa_s
    # integrand exp(i phi(s)) * weight(s) with
    # phi(s) = -(w4 - w2) s - (w3 - w1)(T - s)
    c = 1j * (-(w[4] - w[2]) + (w[3] - w[1])) - 3 * kappa + 2 * kappa
    const = -1j * (w[3] - w[1]) * t_end - 2 * kappa * t_end
    # integral of exp(const + c s) ds over [t_start, t_end]
    if abs(c) < 1e-30:
        val = np.exp(const) * (t_end - t_start)
    else:
        val = np.exp(const) * (np.exp(c * t_end) - np.exp(c * t_start)) / c
    return float(np.angle(val))


def _gram_schmidt_complete(vectors: list[np.ndarray], dim: int) -> np.ndarray:
    """Extend an orthonormal set to a full basis, sweeping canonical vectors
    in ascending index order.  Returns a (dim, dim) matrix of columns."""
    basis = [v.astype(complex) for v in vectors]
    for i in range(dim):
        if len(basis) == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[i] = 1.0
        for b in basis:
            v -= b * (b.conj() @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-7:
            basis.append(v / nrm)
    if len(basis) != dim:
        raise NonOrthogonalInput("could not complete basis")
    return np.stack(basis, axis=1)


def _check_orthonormal(vectors) -> None:
    g = np.array([[u.conj() @ v for v in vectors] for u in vectors])
    if np.max(np.abs(g - np.eye(len(vectors)))) > ORTHONORMAL_ATOL:
        raise NonOrthogonalInput(
            f"vector set fails orthonormality by {np.max(np.abs(g - np.eye(len(vectors)))):.2e}"
        )


def build_isometry(pairs, dim: int) -> np.ndarray:
    """Unitary sending each source ket to its target ket.

    Both sets must be orthonormal; the orthogonal complements are paired in
    ascending canonical order, which makes the completion deterministic.
    """
    sources = [p[0] for p in pairs]
    targets = [p[1] for p in pairs]
    _check_orthonormal(sources)
    _check_orthonormal(targets)
    bs = _gram_schmidt_complete(sources, dim)
    bt = _gram_schmidt_complete(targets, dim)
    u = bt @ bs.conj().T
    fock.assert_unitary(u)
    return u


def _linearized(par: DeformationParams, noise: NoiseParams) -> DeformationParams:
    """First-order-in-kappa-t form of the deformation angle."""
    kt = noise.kappa_s * par.t
    return DeformationParams(theta=np.pi / 4 - kt, phi2=par.phi2,
                             phi4=par.phi4, t=par.t)


@dataclass(frozen=True)
class RecoveryGates:
    """Instantaneous recovery unitaries of one correction layer.

    u1: per-step deformation unwind (detect-and-correct protocol).
    u2: odd branch at step k < N, error space -> deformed code space, so the
        corrected branch rejoins the no-jump branch of the same wall time.
    u3: final even branch, depth-N deformed pair -> code words.
    u4: final odd branch, error space -> code words.
    """

    u1: np.ndarray
    u2: tuple
    u3: np.ndarray
    u4: np.ndarray


def recovery_gates(cfg: HilbertConfig, dev: DeviceParams, noise: NoiseParams,
                   t_wait: float, n_steps: int = 2,
                   recovery: str = "deformed") -> RecoveryGates:
    """Build the recovery set for an n_steps bottom layer with spacing t_wait.

    recovery='deformed' unwinds the exact no-jump deformation angle;
    'linearized' keeps only the first-order angle.  Either way the recovery
    is unitary, so the non-unitary part of the no-jump backaction is
    corrected only to first order in kappa t_wait.
    """
    if recovery not in ("deformed", "linearized"):
        raise ValueError(f"unknown recovery flavor {recovery!r}")
    ket0, ket1 = code_words(cfg)
    e3, e1 = error_words(cfg)
    dim = cfg.dim

    def deform(t):
        par = compute_deformation(dev, noise, t, n_max=cfg.n_max)
        if recovery == "linearized":
            par = _linearized(par, noise)
        return par

    par_step = deform(t_wait)
    def0_step, def1_step = deformed_code_words(cfg, par_step)
    par_full = deform(n_steps * t_wait)
    def0_full, def1_full = deformed_code_words(cfg, par_full)

    u1 = build_isometry([(def0_step, ket0), (def1_step, ket1)], dim)
    u2 = []
    for k in range(1, n_steps):
        phi3 = error_space_phase(dev, noise, (k - 1) * t_wait, k * t_wait)
        par_k = deform(k * t_wait)
        d0, d1 = deformed_code_words(cfg, par_k)
        u2.append(build_isometry([(np.exp(1j * phi3) * e3, d0), (e1, d1)], dim))
    u3 = build_isometry([(def0_full, ket0), (def1_full, ket1)], dim)
    phi3_last = error_space_phase(dev, noise, (n_steps - 1) * t_wait, n_steps * t_wait)
    u4 = build_isometry([(np.exp(1j * phi3_last) * e3, ket0), (e1, ket1)], dim)
    return RecoveryGates(u1=u1, u2=tuple(u2), u3=u3, u4=u4)


def protocol1_recovery(cfg: HilbertConfig, dev: DeviceParams, noise: NoiseParams,
                       t_wait: float, recovery: str = "deformed") -> tuple[np.ndarray, np.ndarray]:
    """Detect-and-correct gates: (u1, u2) with both branches -> code words."""
    gates = recovery_gates(cfg, dev, noise, t_wait, n_steps=1, recovery=recovery)
    return gates.u1, gates.u4


def logical_unitary(cfg: HilbertConfig, u2x2: np.ndarray,
                    basis: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Embed a 2x2 unitary on the code space, identity on the complement."""
    if basis is None:
        basis = code_words(cfg)
    b0, b1 = basis
    p = np.outer(b0, b0.conj()) + np.outer(b1, b1.conj())
    u = np.eye(cfg.dim, dtype=complex) - p
    for i, bi in enumerate((b0, b1)):
        for j, bj in enumerate((b0, b1)):
            u += u2x2[i, j] * np.outer(bi, bj.conj())
    return u


# --- single-qubit Clifford group -------------------------------------------

_H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S2 = np.array([[1, 0], [0, 1j]], dtype=complex)
T_GATE = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _canonical_phase(u: np.ndarray) -> np.ndarray:
    flat = u.reshape(-1)
    k = int(np.argmax(np.abs(flat) > 1e-9))
    return u * np.exp(-1j * np.angle(flat[k]))


def _key(u: np.ndarray) -> tuple:
    return tuple(np.round(_canonical_phase(u).reshape(-1), 9))


def clifford_group() -> list[np.ndarray]:
    """The 24 single-qubit Cliffords, generated from H and S, phase-canonical."""
    seen = {}
    frontier = [np.eye(2, dtype=complex)]
    seen[_key(frontier[0])] = _canonical_phase(frontier[0])
    while frontier:
        nxt = []
        for u in frontier:
            for g in (_H2, _S2):
                v = _canonical_phase(g @ u)
                k = _key(v)
                if k not in seen:
                    seen[k] = v
                    nxt.append(v)
        frontier = nxt
    group = list(seen.values())
    assert len(group) == 24
    return group


def clifford_inverse_index(group: list[np.ndarray], u: np.ndarray) -> int:
    """Index of the group element equal to u^-1 up to phase."""
    target = _key(u.conj().T)
    for i, g in enumerate(group):
        if _key(g) == target:
            return i
    raise ValueError("inverse not found; input is not a group element")


def rotation_2x2(axis_angle: float, rotation_angle: float = np.pi / 2) -> np.ndarray:
    """Rotation about the equatorial axis at azimuth axis_angle."""
    sx, sy = PAULIS["X"], PAULIS["Y"]
    gen = np.cos(axis_angle) * sx + np.sin(axis_angle) * sy
    return (np.cos(rotation_angle / 2) * np.eye(2)
            - 1j * np.sin(rotation_angle / 2) * gen)


# --- encode / decode on the joint space -------------------------------------

def encode_unitary(cfg: HilbertConfig) -> np.ndarray:
    """|g,0> -> |g,0L>, |e,0> -> |g,1L>: ancilla state into the code space."""
    fock._require_ancilla(cfg)
    ket0, ket1 = code_words(cfg, level=0)
    pairs = [
        (fock.fock_ket(cfg, 0, 0), ket0),
        (fock.fock_ket(cfg, 0, 1), ket1),
    ]
    return build_isometry(pairs, cfg.dim)


def decode_unitary(cfg: HilbertConfig) -> np.ndarray:
    """Code space back onto the ancilla: |g,0L> -> |g,0>, |g,1L> -> |e,0>."""
    fock._require_ancilla(cfg)
    ket0, ket1 = code_words(cfg, level=0)
    pairs = [
        (ket0, fock.fock_ket(cfg, 0, 0)),
        (ket1, fock.fock_ket(cfg, 0, 1)),
    ]
    return build_isometry(pairs, cfg.dim)
