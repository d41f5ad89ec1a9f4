"""Qubit process tomography in the {I, X, Y, Z} chi-matrix representation."""

from __future__ import annotations

import numpy as np

from .code import PAULIS

_P = [PAULIS[k] for k in ("I", "X", "Y", "Z")]

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_P = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_M = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_PI = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_MI = np.array([1, -1j], dtype=complex) / np.sqrt(2)

INPUT_SETS = {
    4: (KET0, KET1, KET_P, KET_PI),
    6: (KET0, KET1, KET_P, KET_M, KET_PI, KET_MI),
}


class IllConditionedInversion(ValueError):
    """The tomography input set does not invert stably."""


def _pauli_coeffs(rho: np.ndarray) -> np.ndarray:
    return np.array([0.5 * np.trace(p @ rho) for p in _P])


# chi is defined through E(rho) = sum_mn chi[m,n] P_m rho P_n.  The fixed
# change-of-basis tensor maps chi onto the operator images E(P_j).
_BASIS_TENSOR = np.zeros((16, 16), dtype=complex)
for _j in range(4):
    for _i in range(4):
        for _m in range(4):
            for _n in range(4):
                _BASIS_TENSOR[_j * 4 + _i, _m * 4 + _n] = 0.5 * np.trace(
                    _P[_i] @ _P[_m] @ _P[_j] @ _P[_n]
                )
_BASIS_INV = np.linalg.inv(_BASIS_TENSOR)


def chi_from_channel(channel, n_inputs: int = 4,
                     input_kets=None) -> np.ndarray:
    """Reconstruct chi by direct linear inversion from input-state images.

    channel maps a 2x2 density matrix to a 2x2 (possibly trace-decreasing)
    output.  The default four-state input set {0, 1, +, +i} is the minimal
    informationally complete choice; 6 uses the full cardinal set.
    """
    if input_kets is None:
        input_kets = INPUT_SETS[n_inputs]
    inputs = [np.outer(k, k.conj()) for k in input_kets]
    outputs = [channel(rho) for rho in inputs]
    return chi_from_io(inputs, outputs)


def chi_from_io(inputs, outputs) -> np.ndarray:
    """Chi matrix from explicit (input, output) density-matrix pairs."""
    coeffs = np.array([_pauli_coeffs(rho) for rho in inputs])
    cond = np.linalg.cond(coeffs.conj().T @ coeffs)
    if not np.isfinite(cond) or cond > 1e8:
        raise IllConditionedInversion(f"input set condition number {cond:.2e}")
    out = np.array([np.asarray(o).reshape(-1) for o in outputs])
    # Least-squares image of each Pauli under the channel.
    images, *_ = np.linalg.lstsq(coeffs, out, rcond=None)
    r = np.array([[0.5 * np.trace(_P[i] @ images[j].reshape(2, 2))
                   for i in range(4)] for j in range(4)])
    chi = (_BASIS_INV @ r.reshape(-1)).reshape(4, 4)
    return chi


def chi_ideal(u2x2: np.ndarray) -> np.ndarray:
    """chi matrix of a 2x2 unitary: chi_mn = u_m conj(u_n)."""
    u = np.array([0.5 * np.trace(p @ u2x2) for p in _P])
    return np.outer(u, u.conj())


def process_fidelity(chi_measured: np.ndarray, chi_target: np.ndarray) -> float:
    return float(np.real(np.trace(chi_measured @ chi_target)))


def normalize_fidelity(f_chi: float) -> float:
    """Rescale so the depolarized floor 1/4 maps to 0 and identity to 1."""
    return (f_chi - 0.25) / 0.75


def logical_channel(apply_fn, basis: tuple[np.ndarray, np.ndarray],
                    leak: str = "mixed"):
    """Reduce an oscillator-space map to a logical-qubit channel.

    apply_fn maps a full-space density matrix to one (not necessarily trace
    preserving); the result is sandwiched in the code basis.  Population
    that left the code space is booked as fully mixed logical weight
    ('mixed', default) or discarded ('drop').
    """
    b0, b1 = basis

    def channel(rho2: np.ndarray) -> np.ndarray:
        dim = b0.shape[0]
        rho = np.zeros((dim, dim), dtype=complex)
        for i, bi in enumerate((b0, b1)):
            for j, bj in enumerate((b0, b1)):
                rho += rho2[i, j] * np.outer(bi, bj.conj())
        out = apply_fn(rho)
        block = np.array([[b0.conj() @ out @ b0, b0.conj() @ out @ b1],
                          [b1.conj() @ out @ b0, b1.conj() @ out @ b1]])
        if leak == "mixed":
            w = np.real(np.trace(out) - np.trace(block))
            block = block + 0.5 * max(w, 0.0) * np.eye(2)
        elif leak != "drop":
            raise ValueError(f"unknown leak handling {leak!r}")
        return block

    return channel
