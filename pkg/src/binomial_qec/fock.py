"""Truncated Fock space of the storage oscillator, optionally with ancilla.

Operators are dense complex numpy arrays.  With the ancilla included the
basis ordering is ancilla-major: index = level * (n_max + 1) + n, i.e. all
Fock states with the ancilla in g first, then the e block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from .params import DeviceParams

ATOL_HERMITIAN = 1e-12
ATOL_UNITARY = 1e-10
ATOL_KET_NORM = 1e-10
ATOL_TRACE = 1e-9


class TruncationWarning(UserWarning):
    """The truncated space is too small for the requested operation."""


class DimensionMismatch(ValueError):
    """Operands do not live in the same truncated space."""


@dataclass(frozen=True)
class HilbertConfig:
    n_max: int = 12
    include_ancilla: bool = False

    @property
    def n_fock(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return self.n_fock * (2 if self.include_ancilla else 1)

    def index(self, n: int, level: int = 0) -> int:
        if not 0 <= n <= self.n_max:
            raise DimensionMismatch(f"Fock index {n} outside 0..{self.n_max}")
        if level and not self.include_ancilla:
            raise DimensionMismatch("no ancilla in this space")
        return level * self.n_fock + n


def _lift(cfg: HilbertConfig, osc_op: np.ndarray) -> np.ndarray:
    if cfg.include_ancilla:
        return np.kron(np.eye(2), osc_op)
    return osc_op


def destroy(cfg: HilbertConfig) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, cfg.n_fock, dtype=float)), k=1)
    return _lift(cfg, a.astype(complex))


def create(cfg: HilbertConfig) -> np.ndarray:
    return destroy(cfg).conj().T


def number(cfg: HilbertConfig) -> np.ndarray:
    return _lift(cfg, np.diag(np.arange(cfg.n_fock, dtype=complex)))


def identity(cfg: HilbertConfig) -> np.ndarray:
    return np.eye(cfg.dim, dtype=complex)


def parity_op(cfg: HilbertConfig) -> np.ndarray:
    """Photon-number parity of the oscillator, identity on the ancilla."""
    return _lift(cfg, np.diag((-1.0 + 0j) ** np.arange(cfg.n_fock)))


def parity_projectors(cfg: HilbertConfig) -> tuple[np.ndarray, np.ndarray]:
    p = parity_op(cfg)
    even = 0.5 * (identity(cfg) + p)
    return even, 0.5 * (identity(cfg) - p)


def fock_ket(cfg: HilbertConfig, n: int, level: int = 0) -> np.ndarray:
    ket = np.zeros(cfg.dim, dtype=complex)
    ket[cfg.index(n, level)] = 1.0
    return ket


def _require_ancilla(cfg: HilbertConfig) -> None:
    if not cfg.include_ancilla:
        raise DimensionMismatch("ancilla operator requested in oscillator-only space")


def _anc_op(cfg: HilbertConfig, m: np.ndarray) -> np.ndarray:
    _require_ancilla(cfg)
    return np.kron(m.astype(complex), np.eye(cfg.n_fock))


def sigma_minus(cfg: HilbertConfig) -> np.ndarray:
    return _anc_op(cfg, np.array([[0, 1], [0, 0]]))


def sigma_plus(cfg: HilbertConfig) -> np.ndarray:
    return _anc_op(cfg, np.array([[0, 0], [1, 0]]))


def sigma_x(cfg: HilbertConfig) -> np.ndarray:
    return _anc_op(cfg, np.array([[0, 1], [1, 0]]))


def sigma_y(cfg: HilbertConfig) -> np.ndarray:
    return _anc_op(cfg, np.array([[0, -1j], [1j, 0]]))


def sigma_z(cfg: HilbertConfig) -> np.ndarray:
    # |g> is the zero-excitation level, so sigma_z = |g><g| - |e><e|.
    return _anc_op(cfg, np.array([[1, 0], [0, -1]]))


def excited_projector(cfg: HilbertConfig) -> np.ndarray:
    return _anc_op(cfg, np.array([[0, 0], [0, 1]]))


def displacement(cfg: HilbertConfig, alpha: complex) -> np.ndarray:
    """D(alpha) = exp(alpha a+ - alpha* a) on the truncated space.

    The matrix is exactly unitary (anti-Hermitian generator), but truncation
    distorts it: the coherent state it should produce carries Poisson weight
    above n_max.  That escaped mass exceeding 1e-3 triggers a
    TruncationWarning; keeping |alpha|^2 below n_max / 4 stays well inside
    that regime.
    """
    a = destroy(cfg)
    d = scipy.linalg.expm(alpha * a.conj().T - np.conj(alpha) * a)
    lam = abs(alpha) ** 2
    terms = np.exp(-lam + np.arange(cfg.n_fock) * np.log(lam + 1e-300)
                   - scipy.special.gammaln(np.arange(cfg.n_fock) + 1))
    defect = 1.0 - float(np.sum(terms))
    if defect > 1e-3:
        warnings.warn(
            f"displacement({alpha!r}) leaves Poisson mass {defect:.2e} "
            f"beyond n_max={cfg.n_max}",
            TruncationWarning,
        )
    return d


def kerr_hamiltonian(cfg: HilbertConfig, dev: DeviceParams,
                     frame: str = "four_matched") -> np.ndarray:
    """Storage self-Kerr Hamiltonian (angular units, rad/s).

    In the oscillator rotating frame ('omega_s') the diagonal reads
    -2pi [ (k_s/2) n(n-1) + (k_s'/6) n(n-1)(n-2) ].  The 'four_matched'
    frame additionally rotates at one quarter of the |4> Kerr shift so the
    |0> and |4> code-word components stay degenerate and only |2> carries a
    deterministic phase.
    """
    n = np.arange(cfg.n_fock, dtype=float)
    e_n = -(dev.k_s / 2) * n * (n - 1) - (dev.k_s_prime / 6) * n * (n - 1) * (n - 2)
    if frame == "four_matched":
        e_n = e_n - (n / 4.0) * e_n[4]
    elif frame != "omega_s":
        raise ValueError(f"unknown frame {frame!r}")
    return _lift(cfg, np.diag(2 * np.pi * e_n).astype(complex))


def dispersive_hamiltonian(cfg: HilbertConfig, dev: DeviceParams) -> np.ndarray:
    """-2pi chi_qs a+a |e><e| (angular units)."""
    _require_ancilla(cfg)
    return -2 * np.pi * dev.chi_qs * (number(cfg) @ excited_projector(cfg))


def hamiltonian_interaction(cfg: HilbertConfig, dev: DeviceParams,
                            frame: str = "four_matched") -> np.ndarray:
    """Idling interaction Hamiltonian: storage Kerr plus dispersive shift."""
    h = kerr_hamiltonian(cfg, dev, frame=frame)
    if cfg.include_ancilla:
        h = h + dispersive_hamiltonian(cfg, dev)
    return h


def expm_hamiltonian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, via eigendecomposition."""
    assert_hermitian(h)
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def expm(m: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(m)


def assert_hermitian(op: np.ndarray, atol: float = None) -> None:
    atol = ATOL_HERMITIAN if atol is None else atol
    defect = np.max(np.abs(op - op.conj().T))
    scale = max(1.0, np.max(np.abs(op)))
    if defect > atol * scale:
        raise ValueError(f"operator not Hermitian (defect {defect:.2e})")


def assert_unitary(op: np.ndarray, atol: float = ATOL_UNITARY) -> None:
    defect = np.max(np.abs(op @ op.conj().T - np.eye(op.shape[0])))
    if defect > atol:
        raise ValueError(f"operator not unitary (defect {defect:.2e})")


def check_ket(ket: np.ndarray, atol: float = ATOL_KET_NORM) -> np.ndarray:
    nrm = np.linalg.norm(ket)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"ket norm {nrm} deviates from 1")
    return ket


def check_density(rho: np.ndarray, atol: float = ATOL_TRACE) -> np.ndarray:
    if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
        raise ValueError(f"density trace {np.trace(rho)} deviates from 1")
    assert_hermitian(rho, atol=atol)
    return rho


def ket_to_density(ket: np.ndarray) -> np.ndarray:
    return np.outer(ket, ket.conj())
