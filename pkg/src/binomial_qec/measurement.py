"""Parity-syndrome measurement models.

Three layers, from cheapest to most detailed:

- ``parity_fidelity_model``: closed-form detection fidelities F0/F1, linear in
  the ancilla decoherence rates.
- ``measure_parity`` in scalar mode: projective parity plus classical outcome
  flips and a demolition parity flip, the workhorse of the protocol runner.
- ``measure_parity`` in microscopic mode: the actual Ramsey sequence (pi/2
  rotation, dispersive wait of half a period 1/(2 chi_qs), closing rotation,
  mid-readout projection, feedback pi pulse) as a two-outcome instrument on
  the joint ancilla-oscillator space.  Used to validate the scalar layer, not
  wired into the protocol loop.

``qnd_parity_decay`` drives the repeated-parity-monitoring calibration of a
decaying coherent state and recovers the demolition probability from the
repetition-interval dependence of the fitted parity lifetime.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import comb, factorial

from . import dynamics, fitting, fock
from .params import DeviceParams, MeasurementModel, NoiseParams


def parity_fidelity_model(c0: float, c1: float, chi_qs: float,
                          t1: float, t_phi: float,
                          t_bm: float, t_am: float) -> tuple[float, float]:
    """Detection fidelities (F0, F1) for even / odd parity eigenstates.

    chi_qs is an ordinary frequency in Hz; the parity mapping holds the
    ancilla in superposition for 1/(2 chi_qs), so decay and dephasing each
    cost half that window.  The odd branch additionally keeps the ancilla
    excited for t_bm + t_am (readout plus feedback latency) before the reset
    pulse fires.
    """
    t_half = 1.0 / (4.0 * chi_qs)  # half the dispersive wait
    f0 = c0 - t_half / t1 - t_half / t_phi
    f1 = c1 - t_half / t1 - (t_bm + t_am) / t1 - t_half / t_phi
    return f0, f1


def detection_fidelities(meas: MeasurementModel, dev: DeviceParams,
                         noise: NoiseParams) -> tuple[float, float]:
    """parity_fidelity_model evaluated on housed parameter sets."""
    return parity_fidelity_model(meas.c0, meas.c1, dev.chi_qs,
                                 noise.t1, noise.t_phi, meas.t_bm, meas.t_am)


@dataclass
class ParityOutcome:
    """One branch of a parity measurement.

    outcome is the reported parity (0 even, 1 odd); true_parity the projective
    parity before assignment errors.  state is the normalized post-measurement
    density matrix (oscillator-only in scalar mode, joint in microscopic
    mode).  ancilla_excited marks odd reports whose feedback pulse has not
    fired yet, so the caller can book the pending excited-state exposure.
    """

    outcome: int
    true_parity: int
    probability: float
    state: np.ndarray
    ancilla_excited: bool = False


def parity_flip(cfg: fock.HilbertConfig, rho: np.ndarray) -> np.ndarray:
    """Normalized single-photon jump; the demolition channel of a measurement."""
    a = fock.destroy(cfg)
    out = a @ rho @ a.conj().T
    w = np.real(np.trace(out))
    if w < 1e-14:  # nothing to lose: excite instead (vacuum edge case)
        out = a.conj().T @ rho @ a
        w = np.real(np.trace(out))
    return out / w


def _scalar_branches(state: np.ndarray, model: MeasurementModel,
                     cfg: fock.HilbertConfig) -> list[ParityOutcome]:
    p_even, p_odd = fock.parity_projectors(cfg)
    branches = []
    for true, proj, keep in ((0, p_even, model.p_e), (1, p_odd, model.p_o)):
        blk = proj @ state @ proj
        prob = float(np.real(np.trace(blk)))
        if prob < 1e-14:
            continue
        post = blk / prob
        if model.p_d > 0:
            post = (1 - model.p_d) * post + model.p_d * parity_flip(cfg, post)
        for reported, w in ((true, keep), (1 - true, 1 - keep)):
            if w <= 0:
                continue
            branches.append(ParityOutcome(outcome=reported, true_parity=true,
                                          probability=prob * w, state=post,
                                          ancilla_excited=reported == 1))
    branches.sort(key=lambda b: (b.outcome, b.true_parity))
    return branches


def _rotation_y(cfg: fock.HilbertConfig, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return fock._anc_op(cfg, np.array([[c, -s], [s, c]], dtype=complex))


@functools.lru_cache(maxsize=8)
def _ramsey_instrument(cfg: fock.HilbertConfig, dev: DeviceParams,
                       noise: NoiseParams, model: MeasurementModel,
                       include_oscillator_noise: bool):
    """Superoperators of the Ramsey parity sequence up to the projection,
    plus the post-projection feedback segment.

    The odd-report segment is split into the ancilla-decay-free part and the
    part containing at least one decay before the reset pulse; the latter
    corrupts the subsequent correction exactly like a misassignment and is
    booked as an effective outcome flip, matching the scalar model's P_o.
    """
    h = fock.hamiltonian_interaction(cfg, dev)
    c_ops = dynamics.collapse_ops(cfg, noise,
                                  oscillator=include_oscillator_noise,
                                  ancilla=True)
    t_wait = 1.0 / (2.0 * dev.chi_qs)

    def usup(u):
        return np.kron(u, u.conj())

    pre = usup(_rotation_y(cfg, -np.pi / 2))
    pre = pre @ dynamics.propagator(h, c_ops, t_wait)
    pre = pre @ usup(_rotation_y(cfg, np.pi / 2))
    pre = dynamics.propagator(h, c_ops, model.t_bm) @ pre

    gen = dynamics.liouvillian(h, c_ops)
    decay = next(op for op, lbl in zip(c_ops.ops, c_ops.labels)
                 if lbl == "ancilla_decay")
    feed = np.kron(decay, decay.conj())
    full = scipy.linalg.expm(gen * model.t_am)
    no_decay = scipy.linalg.expm((gen - feed) * model.t_am)
    reset = usup(fock.sigma_x(cfg))
    post_g = full
    post_e_kept = reset @ no_decay
    post_e_flip = reset @ (full - no_decay)
    ground = fock.identity(cfg) - fock.excited_projector(cfg)
    proj = (usup(ground), usup(fock.excited_projector(cfg)))
    return pre, proj, post_g, post_e_kept, post_e_flip


def _microscopic_branches(state: np.ndarray, model: MeasurementModel,
                          cfg: fock.HilbertConfig, dev: DeviceParams,
                          noise: NoiseParams,
                          include_oscillator_noise: bool) -> list[ParityOutcome]:
    pre, proj, post_g, post_e_kept, post_e_flip = _ramsey_instrument(
        cfg, dev, noise, model, include_oscillator_noise)
    d = cfg.dim
    v = pre @ state.reshape(-1)
    raw = []
    for detected, p_sup in enumerate(proj):
        blk = p_sup @ v
        prob = float(np.real(blk.reshape(d, d).trace()))
        if prob < 1e-14:
            continue
        keep = model.c0 if detected == 0 else model.c1
        for reported, w in ((detected, keep), (1 - detected, 1 - keep)):
            if w <= 0:
                continue
            if reported == 0:
                raw.append((0, detected, w, post_g @ blk))
            else:
                raw.append((1, detected, w, post_e_kept @ blk))
                raw.append((0, detected, w, post_e_flip @ blk))
    branches = []
    for outcome, detected, w, vec in raw:
        rho = vec.reshape(d, d)
        prob = w * float(np.real(rho.trace()))
        if prob < 1e-14:
            continue
        branches.append(ParityOutcome(outcome=outcome, true_parity=detected,
                                      probability=prob,
                                      state=rho / np.real(rho.trace()),
                                      ancilla_excited=False))
    branches.sort(key=lambda b: (b.outcome, b.true_parity))
    return branches


def measure_parity(state: np.ndarray, model: MeasurementModel,
                   mode: str = "scalar", *,
                   cfg: fock.HilbertConfig | None = None,
                   dev: DeviceParams | None = None,
                   noise: NoiseParams | None = None,
                   rng: np.random.Generator | None = None,
                   include_oscillator_noise: bool = False):
    """Parity measurement as a branching instrument.

    Returns the list of (true parity, reported outcome) branches with
    probabilities and normalized post-states; with an rng, samples one branch
    instead.  Scalar mode acts on an oscillator density matrix; microscopic
    mode on a joint ancilla-oscillator one (the feedback pi pulse is included
    in the odd-report branch, so its post-states carry a reset ancilla).
    """
    d = state.shape[0]
    if mode == "scalar":
        if cfg is None:
            cfg = fock.HilbertConfig(n_max=d - 1)
        branches = _scalar_branches(state, model, cfg)
    elif mode == "microscopic":
        if dev is None or noise is None:
            raise ValueError("microscopic mode needs dev and noise parameters")
        if cfg is None:
            cfg = fock.HilbertConfig(n_max=d // 2 - 1, include_ancilla=True)
        branches = _microscopic_branches(state, model, cfg, dev, noise,
                                         include_oscillator_noise)
    else:
        raise ValueError(f"unknown measurement mode {mode!r}")
    if rng is None:
        return branches
    probs = np.array([b.probability for b in branches])
    pick = rng.choice(len(branches), p=probs / probs.sum())
    return branches[pick]


def _ideal_branch_ket(cfg, dev, model, detected: int, psi_in: np.ndarray):
    """Noiseless reference output of the Ramsey instrument for a parity
    eigenstate input; pure by construction."""
    clean_noise = NoiseParams(tau_s=1e6, n_th_s=0.0, t1=1e6, t_phi=1e6,
                              n_th_q=0.0)
    clean_model = MeasurementModel(p_e=1.0, p_o=1.0, p_d=0.0, c0=1.0, c1=1.0,
                                   t_bm=model.t_bm, t_am=model.t_am,
                                   latency=model.latency)
    rho = fock.ket_to_density(psi_in)
    branches = _microscopic_branches(rho, clean_model, cfg, dev, clean_noise,
                                     include_oscillator_noise=False)
    match = [b for b in branches if b.outcome == detected]
    if len(match) != 1 or abs(match[0].probability - 1.0) > 1e-9:
        raise ValueError("input is not a parity eigenstate of the instrument")
    evals, evecs = np.linalg.eigh(match[0].state)
    return evecs[:, -1]


def microscopic_detection_fidelities(dev: DeviceParams, noise: NoiseParams,
                                     model: MeasurementModel,
                                     n_max: int = 12) -> tuple[float, float]:
    """F0/F1 from the microscopic instrument.

    Fidelity of the correctly-reported branch against the noiseless reference
    output, unnormalized (so misassigned weight counts as loss), for an even
    code superposition and an odd error-space superposition.
    """
    cfg = fock.HilbertConfig(n_max=n_max, include_ancilla=True)
    out = []
    for parity, kets in ((0, (0, 4, 2)), (1, (3, 1))):
        psi = np.zeros(cfg.dim, dtype=complex)
        if parity == 0:  # (|0_L> + |1_L>)/sqrt(2)
            psi[cfg.index(0)] = 0.5
            psi[cfg.index(4)] = 0.5
            psi[cfg.index(2)] = 1 / math.sqrt(2)
        else:            # (|3> + |1>)/sqrt(2)
            psi[cfg.index(3)] = 1 / math.sqrt(2)
            psi[cfg.index(1)] = 1 / math.sqrt(2)
        ref = _ideal_branch_ket(cfg, dev, model, parity, psi)
        branches = measure_parity(fock.ket_to_density(psi), model,
                                  mode="microscopic", cfg=cfg, dev=dev,
                                  noise=noise)
        fid = 0.0
        for b in branches:
            if b.outcome == parity:
                fid += b.probability * float(
                    np.real(ref.conj() @ b.state @ ref))
        out.append(fid)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Repeated parity monitoring of a decaying coherent state.


def _population_chain(n_max: int, noise: NoiseParams) -> np.ndarray:
    """Generator of the photon-number birth-death process (populations only;
    parity monitoring never interrogates coherences between number states)."""
    n = np.arange(n_max + 1, dtype=float)
    down = noise.kappa_s * (1 + noise.n_th_s) * n
    up = noise.kappa_s * noise.n_th_s * (n + 1)
    gen = np.zeros((n_max + 1, n_max + 1))
    gen[np.arange(n_max), np.arange(1, n_max + 1)] = down[1:]
    gen[np.arange(1, n_max + 1), np.arange(n_max)] = up[:-1]
    gen -= np.diag(down + np.append(up[:-1], 0.0))
    return gen


def _demolition_matrix(n_max: int, p_d: float) -> np.ndarray:
    """Per-measurement photon survival channel: each photon is lost with
    probability p_d, which adds p_d / tau_rep to the effective decay rate."""
    eta = 1.0 - p_d
    mat = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for k in range(n + 1):
            mat[k, n] = comb(n, k) * eta ** k * (1 - eta) ** (n - k)
    return mat


@dataclass
class QndDecay:
    """One monitored-parity decay curve and its fit."""

    t: np.ndarray
    parity: np.ndarray
    alpha_sq: float
    tau_rep: float
    p_e: float
    p_o: float
    tau_tot: float
    n_th: float


def qnd_parity_decay(alpha: complex, tau_rep: float, model: MeasurementModel,
                     noise: NoiseParams, t_max: float = 400e-6,
                     n_max: int = 24, n_shots: int | None = None,
                     rng: np.random.Generator | None = None,
                     fit_n_th: bool = False) -> QndDecay:
    """Repeated parity measurements of a decaying coherent state.

    Between measurements the photon populations follow the thermal
    birth-death chain; each measurement reports parity through the
    (p_e, p_o) assignment model and demolishes each photon with probability
    p_d.  With n_shots the reported parity carries binomial shot noise.
    Returns the curve together with the fitted monitored-parity model.
    """
    if abs(alpha) == 0:
        raise ValueError("coherent amplitude must be nonzero")
    alpha_sq = abs(alpha) ** 2
    n = np.arange(n_max + 1, dtype=float)
    pops = np.exp(-alpha_sq) * alpha_sq ** n / factorial(n)
    pops /= pops.sum()

    step = scipy.linalg.expm(_population_chain(n_max, noise) * tau_rep)
    demolish = _demolition_matrix(n_max, model.p_d)
    signs = (-1.0) ** np.arange(n_max + 1)

    n_meas = int(np.ceil(t_max / tau_rep)) + 1
    times = np.arange(n_meas) * tau_rep
    parity = np.empty(n_meas)
    for i in range(n_meas):
        true = float(signs @ pops)
        q_even = 0.5 * (1 + true) * model.p_e + 0.5 * (1 - true) * (1 - model.p_o)
        if n_shots is not None:
            if rng is None:
                raise ValueError("shot noise requires an rng")
            q_even = rng.binomial(n_shots, min(max(q_even, 0.0), 1.0)) / n_shots
        parity[i] = 2 * q_even - 1
        pops = step @ (demolish @ pops)

    p_e, p_o, tau_tot, n_th = fitting.fit_parity_monitor(
        times, parity, alpha_sq, noise.n_th_s, fit_n_th=fit_n_th)
    return QndDecay(t=times, parity=parity, alpha_sq=alpha_sq,
                    tau_rep=tau_rep, p_e=p_e, p_o=p_o, tau_tot=tau_tot,
                    n_th=n_th)


@dataclass
class QndSweep:
    """Demolition calibration from a repetition-interval sweep."""

    curves: list
    p_d: float
    tau_s: float


def qnd_demolition_sweep(alpha: complex, tau_reps, model: MeasurementModel,
                         noise: NoiseParams, t_max: float = 400e-6,
                         n_shots: int | None = None,
                         seed: int | None = None) -> QndSweep:
    """Monitored-parity decay at several repetition intervals.

    The fitted rates follow 1/tau_tot = 1/tau_s + p_d/tau_rep, so a linear
    fit of 1/tau_tot against 1/tau_rep separates the demolition probability
    (slope) from the intrinsic lifetime (intercept).
    """
    rng = np.random.default_rng(seed) if n_shots is not None else None
    curves = [qnd_parity_decay(alpha, tr, model, noise, t_max=t_max,
                               n_shots=n_shots, rng=rng)
              for tr in tau_reps]
    inv_rep = np.array([1.0 / c.tau_rep for c in curves])
    inv_tot = np.array([1.0 / c.tau_tot for c in curves])
    slope, intercept = fitting.fit_linear(inv_rep, inv_tot)
    if intercept <= 0:
        raise fitting.FitDiverged(f"nonpositive intrinsic rate {intercept}")
    return QndSweep(curves=curves, p_d=float(slope), tau_s=float(1.0 / intercept))
