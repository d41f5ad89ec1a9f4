"""Repetitive error-correction runs and the companion logical-qubit experiments.

Three execution modes share one round definition.  'scalar' multiplies
closed-form branch factors (no Hilbert space); 'density' propagates the four
tomography inputs through the oscillator master equation with syndrome
branching; 'trajectory' samples Monte-Carlo wavefunction shots.

Imperfections use one bookkeeping rule: an operation of normalized process
fidelity f replaces the state, with probability 1 - f, by a parity-balanced
low-Fock junk mixture.  Junk decodes to the fully mixed logical qubit and
stays input-independent under any further processing, so it contributes
exactly the 1/4 floor to the process fidelity -- each replacement multiplies
the normalized fidelity by exactly f, reproducing the branch-factor model --
while feeding realistic extra odd-parity weight into the detection record.
Measurement assignment errors and thermal inversions of the parity mapping
flip the classical record only; their state damage is already inside the
detection fidelities F0/F1 and the per-round thermal factor.

The simulated rounds are wall-faithful: photon loss continues through the
detection-and-feedback overhead, so each free-evolution window spans
t_wait + step_overhead and the recovery gates are calibrated for that
spacing.  The closed-form scalar model keeps its published t_wait windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import code, dynamics, fitting, fock, measurement, model, tomography
from .params import Config

JUNK_N_MAX = 5  # junk mixture support |0> .. |JUNK_N_MAX>: parity-balanced


# ---------------------------------------------------------------------------
# Shared helpers.


def _junk_density(cfg: fock.HilbertConfig) -> np.ndarray:
    rho = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for n in range(JUNK_N_MAX + 1):
        rho[n, n] = 1.0 / (JUNK_N_MAX + 1)
    return rho


def _junk_ket(cfg: fock.HilbertConfig, rng: np.random.Generator) -> np.ndarray:
    return fock.fock_ket(cfg, int(rng.integers(0, JUNK_N_MAX + 1)))


def _embed(basis, rho2: np.ndarray) -> np.ndarray:
    b0, b1 = basis
    dim = b0.shape[0]
    rho = np.zeros((dim, dim), dtype=complex)
    for i, bi in enumerate((b0, b1)):
        for j, bj in enumerate((b0, b1)):
            rho += rho2[i, j] * np.outer(bi, bj.conj())
    return rho


def _embed_ket(basis, ket2: np.ndarray) -> np.ndarray:
    return ket2[0] * basis[0] + ket2[1] * basis[1]


def _logical_block(basis, rho: np.ndarray) -> np.ndarray:
    """2x2 code block with leaked weight booked as mixed logical."""
    b0, b1 = basis
    block = np.array([[b0.conj() @ rho @ b0, b0.conj() @ rho @ b1],
                      [b1.conj() @ rho @ b0, b1.conj() @ rho @ b1]])
    w = float(np.real(np.trace(rho) - np.trace(block)))
    return block + 0.5 * max(w, 0.0) * np.eye(2)


def _ket_block(basis, psi: np.ndarray) -> np.ndarray:
    b0, b1 = basis
    v = np.array([b0.conj() @ psi, b1.conj() @ psi])
    block = np.outer(v, v.conj())
    w = 1.0 - float(np.real(np.trace(block)))
    return block + 0.5 * max(w, 0.0) * np.eye(2)


def _depolarize2(rho2: np.ndarray, f: float) -> np.ndarray:
    return f * rho2 + (1.0 - f) * 0.5 * np.trace(rho2) * np.eye(2)


def _fchi_series(outputs_per_round, f_decode: float) -> np.ndarray:
    """Raw chi-matrix fidelity per round from 2x2 output snapshots."""
    inputs = [np.outer(k, k.conj()) for k in tomography.INPUT_SETS[4]]
    fchi = np.empty(len(outputs_per_round))
    for m, outs in enumerate(outputs_per_round):
        outs = [_depolarize2(o, f_decode) for o in outs]
        chi = tomography.chi_from_io(inputs, outs)
        fchi[m] = float(np.real(chi[0, 0]))
    return fchi


def _fit_lifetimes(times_wall, times_wait, fchi):
    if len(fchi) < 3:   # nothing to fit, e.g. a bare round-trip run
        return math.nan, math.nan
    _, tau_wall, _ = fitting.fit_exponential(times_wall, fchi, offset=0.25)
    _, tau_wait, _ = fitting.fit_exponential(times_wait, fchi, offset=0.25)
    return tau_wall, tau_wait


@dataclass
class QecRun:
    """One repetitive-correction run: fidelity series and detection record.

    reported / true hold outcome weights indexed (round, step, outcome);
    fchi includes the 1/4 floor and starts at the zero-round point.
    """

    mode: str
    n_rounds: int
    times_wall: np.ndarray
    times_wait: np.ndarray
    fchi: np.ndarray
    reported: np.ndarray
    true: np.ndarray
    tau_wall: float
    tau_wait: float

    def detection_fraction(self, step: int, outcome: int,
                           round_index: int | None = None,
                           which: str = "reported") -> float:
        """Outcome frequency of one detection slot.

        round_index None pools every round's record (shot-weighted).
        """
        rec = self.reported if which == "reported" else self.true
        sel = rec[round_index, step] if round_index is not None \
            else rec[:, step].sum(axis=0)
        return float(sel[outcome] / sel.sum())

    def lifetime(self, time_axis: str) -> float:
        return self.tau_wall if time_axis == "wall" else self.tau_wait


def _round_times(config: Config) -> tuple[np.ndarray, np.ndarray]:
    cfg = config.protocol
    m = np.arange(cfg.n_rounds + 1)
    return m * cfg.round_wall_time, m * cfg.round_wait_time


def run_qec(config: Config) -> QecRun:
    cfg = config.protocol
    if cfg.mode == "scalar":
        return _run_scalar(config)
    if cfg.mode == "density":
        return _run_density(config)
    if cfg.mode == "trajectory":
        return _run_trajectory(config)
    raise ValueError(f"unknown execution mode {cfg.mode!r}")


# ---------------------------------------------------------------------------
# Scalar mode: branch-factor arithmetic on the intrinsic table.


def _run_scalar(config: Config) -> QecRun:
    cfg, noise, dev = config.protocol, config.noise, config.device
    table = model.compute_intrinsic_table(dev, noise, cfg.n_steps,
                                          [cfg.t_wait], n_max=cfg.n_max,
                                          recovery=cfg.recovery)
    f_round = model.protocol_model(config.fidelity, table, cfg.t_wait, dev,
                                   noise, config.measurement,
                                   t_round=cfg.round_wall_time)
    ende = config.gates.encode_decode ** 2
    times_wall, times_wait = _round_times(config)
    m = np.arange(cfg.n_rounds + 1)
    fchi = 0.25 + 0.75 * ende * f_round ** m

    # Detection record from the fresh-state table; every round identical.
    true = np.zeros((cfg.n_rounds, cfg.n_steps, 2))
    for rec in table.records():
        w = table.branch_weight(rec, cfg.t_wait)
        for k, outcome in enumerate(rec):
            true[:, k, outcome] += w
    reported = _reported_record(true, config)

    tau_wall, tau_wait = _fit_lifetimes(times_wall, times_wait, fchi)
    return QecRun(mode="scalar", n_rounds=cfg.n_rounds, times_wall=times_wall,
                  times_wait=times_wait, fchi=fchi, reported=reported,
                  true=true, tau_wall=tau_wall, tau_wait=tau_wait)


def _assignment_probs(config: Config) -> tuple[float, float]:
    """Latched-record fidelities of the parity readout, per true parity.

    The record flips through readout infidelity, decoherence of the ancilla
    superposition during the mapping (half the lost weight lands on the
    wrong side), and decay inside the readout integration window.  Ancilla
    decay after the latch damages the state but not the record, so these
    sit above the detection fidelities F0/F1 that the fidelity model uses.
    """
    meas, noise, dev = config.measurement, config.noise, config.device
    t_half = 1.0 / (4.0 * dev.chi_qs)
    blur = 0.5 * t_half * (1.0 / noise.t1 + 1.0 / noise.t_phi)
    a_e = meas.c0 - blur
    a_o = meas.c1 - blur - 0.5 * meas.t_bm / noise.t1
    return a_e, a_o


def _reported_record(true: np.ndarray, config: Config) -> np.ndarray:
    """Classical record from the true parity record.

    Besides per-slot assignment flips, an ancilla in |e> at map time inverts
    the outcome wholesale.  That happens when it re-thermalized since the
    last detection, when an odd parity was misread as even so no reset
    fired, or when the reset pi pulse failed; the leftover excitation then
    has one window to relax before the next map.
    """
    noise, cfg = config.noise, config.protocol
    a_e, a_o = _assignment_probs(config)
    t_win = cfg.t_wait + cfg.step_overhead
    eps_th = noise.n_th_q * (1 - math.exp(-t_win / noise.t1))
    survive = math.exp(-t_win / noise.t1)
    miss_reset = 1.0 - a_o
    fail_reset = 0.5 * (1.0 - config.fidelity.f_pi)
    reported = np.empty_like(true)
    prev_true_odd = prev_rep_odd = 0.0  # encoding hands over a ground ancilla
    for m in range(true.shape[0]):
        for k in range(true.shape[1]):
            t = true[m, k]
            tot = t.sum()
            r_e = t[0] * a_e + t[1] * (1 - a_o)
            r_o = t[1] * a_o + t[0] * (1 - a_e)
            eps = eps_th + survive * (miss_reset * prev_true_odd
                                      + fail_reset * prev_rep_odd)
            reported[m, k, 0] = (1 - eps) * r_e + eps * r_o
            reported[m, k, 1] = (1 - eps) * r_o + eps * r_e
            if tot > 0:
                prev_true_odd = t[1] / tot
                prev_rep_odd = reported[m, k, 1] / tot
    return reported


# ---------------------------------------------------------------------------
# Density mode: exact branching of the oscillator master equation.


class _RoundMachine:
    """Precomputed operators for one correction round (oscillator only)."""

    def __init__(self, config: Config):
        cfg = config.protocol
        self.config = config
        self.hcfg = fock.HilbertConfig(n_max=cfg.n_max)
        self.basis = code.code_words(self.hcfg)
        self.h = fock.kerr_hamiltonian(self.hcfg, config.device)
        self.c_ops = dynamics.collapse_ops(self.hcfg, config.noise,
                                           oscillator=True, ancilla=False)
        # loss continues through detection and feedback, so the physical
        # window between parity maps is the wait plus the step overhead
        self.t_win = cfg.t_wait + cfg.step_overhead
        self.window = dynamics.propagator(self.h, self.c_ops, self.t_win)
        self.p_even, self.p_odd = fock.parity_projectors(self.hcfg)
        gates = code.recovery_gates(self.hcfg, config.device, config.noise,
                                    self.t_win, n_steps=cfg.n_steps,
                                    recovery=cfg.recovery)
        # one-step rounds use the U1/U4 pair and book no pi pulse
        self.final_even = gates.u3 if cfg.n_steps > 1 else gates.u1
        self.final_odd = gates.u4
        self.f_final_even = "u3" if cfg.n_steps > 1 else "u1"
        self.f_final_odd = "u4" if cfg.n_steps > 1 else "u2"
        self.u2 = gates.u2
        self.junk = _junk_density(self.hcfg)
        noise, fid = config.noise, config.fidelity
        self.f0, self.f1 = measurement.detection_fidelities(
            config.measurement, config.device, noise)
        self.fu = {"u1": fid.f_u1(noise), "u2": fid.f_u2(noise),
                   "u3": fid.f_u3(noise), "u4": fid.f_u4(noise)}
        self.f_pi = fid.f_pi if cfg.n_steps > 1 else 1.0
        self.p_th = noise.n_th_q * (1 - math.exp(-cfg.round_wall_time
                                                 / noise.t1))

    def evolve(self, rho: np.ndarray) -> np.ndarray:
        return dynamics.apply_propagator(self.window, rho)

    def junk_mix(self, rho: np.ndarray, f: float) -> np.ndarray:
        return f * rho + (1.0 - f) * np.real(np.trace(rho)) * self.junk

    def run_round(self, rho: np.ndarray, stats_true: np.ndarray) -> np.ndarray:
        """One correction round; accumulates true outcome weights per step."""
        cfg = self.config.protocol
        p_d = self.config.measurement.p_d
        for k in range(cfg.n_steps):
            rho = self.evolve(rho)
            branches = []
            for outcome, proj in ((0, self.p_even), (1, self.p_odd)):
                blk = proj @ rho @ proj
                w = float(np.real(np.trace(blk)))
                stats_true[k, outcome] += w
                if w < 1e-300:
                    continue
                if p_d > 0:  # demolition flips the state after the latch
                    blk = ((1 - p_d) * blk
                           + p_d * w * measurement.parity_flip(self.hcfg, blk))
                blk = self.junk_mix(blk, self.f0 if outcome == 0 else self.f1)
                last = k == cfg.n_steps - 1
                if outcome == 1:
                    blk = self.junk_mix(blk, self.f_pi)
                    gate = self.final_odd if last else self.u2[k]
                    f_g = self.fu[self.f_final_odd if last else "u2"]
                    blk = self.junk_mix(gate @ blk @ gate.conj().T, f_g)
                elif last:
                    gate = self.final_even
                    blk = self.junk_mix(gate @ blk @ gate.conj().T,
                                        self.fu[self.f_final_even])
                branches.append(blk)
            rho = sum(branches)
        return self.junk_mix(rho, 1.0 - self.p_th)


def _run_density(config: Config) -> QecRun:
    cfg = config.protocol
    machine = _RoundMachine(config)
    f_en = f_de = config.gates.encode_decode
    inputs = tomography.INPUT_SETS[4]
    states = [machine.junk_mix(_embed(machine.basis, np.outer(k, k.conj())),
                               f_en) for k in inputs]

    true = np.zeros((cfg.n_rounds, cfg.n_steps, 2))
    outputs = [[_logical_block(machine.basis, rho) for rho in states]]
    for m in range(cfg.n_rounds):
        st = np.zeros((cfg.n_steps, 2))
        states = [machine.run_round(rho, st) for rho in states]
        true[m] = st / len(states)
        outputs.append([_logical_block(machine.basis, rho) for rho in states])

    fchi = _fchi_series(outputs, f_de)
    reported = _reported_record(true, config)
    times_wall, times_wait = _round_times(config)
    tau_wall, tau_wait = _fit_lifetimes(times_wall, times_wait, fchi)
    return QecRun(mode="density", n_rounds=cfg.n_rounds, times_wall=times_wall,
                  times_wait=times_wait, fchi=fchi, reported=reported,
                  true=true, tau_wall=tau_wall, tau_wait=tau_wait)


# ---------------------------------------------------------------------------
# Trajectory mode: Monte-Carlo wavefunction sampling of the same round.


def _run_trajectory(config: Config) -> QecRun:
    cfg = config.protocol
    machine = _RoundMachine(config)
    hcfg = machine.hcfg
    f_en = f_de = config.gates.encode_decode
    inputs = tomography.INPUT_SETS[4]
    kets = [_embed_ket(machine.basis, k) for k in inputs]
    segment = dynamics.Segment(h=machine.h, c_ops=machine.c_ops,
                               duration=machine.t_win)
    p_d = config.measurement.p_d

    acc = np.zeros((cfg.n_rounds + 1, len(inputs), 2, 2), dtype=complex)
    counts = np.zeros(len(inputs))
    true = np.zeros((cfg.n_rounds, cfg.n_steps, 2))

    for shot in range(cfg.n_trajectories):
        j = shot % len(inputs)
        rng = dynamics.trajectory_seed(cfg.seed, shot)
        psi = kets[j]
        if rng.uniform() > f_en:
            psi = _junk_ket(hcfg, rng)
        counts[j] += 1
        acc[0, j] += _ket_block(machine.basis, psi)
        for m in range(cfg.n_rounds):
            for k in range(cfg.n_steps):
                psi = dynamics.trajectory_run(psi, [segment], rng).final_state
                p_even = float(np.real(psi.conj() @ (machine.p_even @ psi)))
                outcome = 0 if rng.uniform() < p_even else 1
                proj = machine.p_even if outcome == 0 else machine.p_odd
                psi = proj @ psi
                psi = psi / np.linalg.norm(psi)
                true[m, k, outcome] += 1.0
                if p_d > 0 and rng.uniform() < p_d:
                    psi = _flip_ket(hcfg, psi)
                f_det = machine.f0 if outcome == 0 else machine.f1
                if rng.uniform() > f_det:
                    psi = _junk_ket(hcfg, rng)
                last = k == cfg.n_steps - 1
                if outcome == 1:
                    if rng.uniform() > machine.f_pi:
                        psi = _junk_ket(hcfg, rng)
                    gate = machine.final_odd if last else machine.u2[k]
                    f_g = machine.fu[machine.f_final_odd if last else "u2"]
                    psi = gate @ psi
                    if rng.uniform() > f_g:
                        psi = _junk_ket(hcfg, rng)
                elif last:
                    psi = machine.final_even @ psi
                    if rng.uniform() > machine.fu[machine.f_final_even]:
                        psi = _junk_ket(hcfg, rng)
            if rng.uniform() < machine.p_th:
                psi = _junk_ket(hcfg, rng)
            acc[m + 1, j] += _ket_block(machine.basis, psi)

    outputs = [[acc[m, j] / counts[j] for j in range(len(inputs))]
               for m in range(cfg.n_rounds + 1)]
    fchi = _fchi_series(outputs, f_de)
    reported = _reported_record(true, config)
    times_wall, times_wait = _round_times(config)
    tau_wall, tau_wait = _fit_lifetimes(times_wall, times_wait, fchi)
    return QecRun(mode="trajectory", n_rounds=cfg.n_rounds,
                  times_wall=times_wall, times_wait=times_wait, fchi=fchi,
                  reported=reported, true=true, tau_wall=tau_wall,
                  tau_wait=tau_wait)


def _flip_ket(cfg: fock.HilbertConfig, psi: np.ndarray) -> np.ndarray:
    out = fock.destroy(cfg) @ psi
    nrm = np.linalg.norm(out)
    if nrm < 1e-9:  # vacuum cannot lose a photon; feed one instead
        out = fock.create(cfg) @ psi
        nrm = np.linalg.norm(out)
    return out / nrm


# ---------------------------------------------------------------------------
# Uncorrected baselines.


def run_uncorrected(config: Config, encoding: str = "binomial") -> QecRun:
    """Free-decay baseline sampled on the correction-round time grid.

    'binomial' keeps the code words but never corrects (encode/decode gate
    errors included); 'fock01' uses the two lowest Fock states with ideal
    state transfer; 'transmon' is the bare ancilla qubit.  Deterministic
    Kerr phases are unwound at each snapshot, as calibrated decoding does.
    """
    cfg = config.protocol
    times_wall, times_wait = _round_times(config)
    if encoding == "transmon":
        fchi = _transmon_series(config, times_wall)
    else:
        hcfg = fock.HilbertConfig(n_max=cfg.n_max)
        if encoding == "binomial":
            basis = code.code_words(hcfg)
            f_en = f_de = config.gates.encode_decode
        elif encoding == "fock01":
            basis = (fock.fock_ket(hcfg, 0), fock.fock_ket(hcfg, 1))
            f_en = f_de = 1.0
        else:
            raise ValueError(f"unknown encoding {encoding!r}")
        h = fock.kerr_hamiltonian(hcfg, config.device)
        c_ops = dynamics.collapse_ops(hcfg, config.noise, oscillator=True,
                                      ancilla=False)
        step = dynamics.propagator(h, c_ops, cfg.round_wall_time)
        unwind = fock.expm_hamiltonian(h, -cfg.round_wall_time)
        inputs = tomography.INPUT_SETS[4]
        junk = _junk_density(hcfg)
        states = [f_en * _embed(basis, np.outer(k, k.conj()))
                  + (1 - f_en) * junk for k in inputs]
        outputs = [[_logical_block(basis, rho) for rho in states]]
        u = np.eye(hcfg.dim, dtype=complex)
        for _ in range(cfg.n_rounds):
            states = [dynamics.apply_propagator(step, rho) for rho in states]
            u = unwind @ u
            snap = [u @ rho @ u.conj().T for rho in states]
            outputs.append([_logical_block(basis, rho) for rho in snap])
        fchi = _fchi_series(outputs, f_de)

    tau_wall, tau_wait = _fit_lifetimes(times_wall, times_wait, fchi)
    empty = np.zeros((cfg.n_rounds, cfg.n_steps, 2))
    return QecRun(mode=f"uncorrected-{encoding}", n_rounds=cfg.n_rounds,
                  times_wall=times_wall, times_wait=times_wait, fchi=fchi,
                  reported=empty, true=empty.copy(), tau_wall=tau_wall,
                  tau_wait=tau_wait)


def _transmon_series(config: Config, times: np.ndarray) -> np.ndarray:
    noise = config.noise
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    c_ops = [math.sqrt(1.0 / noise.t1) * sm,
             math.sqrt(noise.gamma_up) * sm.conj().T,
             math.sqrt(0.5 / noise.t_phi) * sz]
    h = np.zeros((2, 2), dtype=complex)
    basis = (tomography.KET0, tomography.KET1)
    inputs = [np.outer(k, k.conj()) for k in tomography.INPUT_SETS[4]]
    fchi = np.empty(len(times))
    for i, t in enumerate(times):
        sup = dynamics.propagator(h, c_ops, t)
        outs = [_logical_block(basis, dynamics.apply_propagator(sup, rho))
                for rho in inputs]
        fchi[i] = float(np.real(tomography.chi_from_io(inputs, outs)[0, 0]))
    return fchi


# ---------------------------------------------------------------------------
# Ramsey interferometry on the logical qubit.


@dataclass
class RamseyResult:
    protected: bool
    t: np.ndarray
    signal: np.ndarray
    frequency: float
    tau: float


def ramsey_logical(config: Config, protected: bool,
                   n_points: int | None = None) -> RamseyResult:
    """Logical-qubit Ramsey fringe sampled once per correction-round time.

    Unprotected, the fringe is the bare self-Kerr rotation of the |2>
    component (the |4> phase reference is stationary in the matched rotating
    frame) read along a fixed axis.  Protected, the recovery gates unwind
    the deterministic phase, so the readout axis is swept by pi/4 per round
    and the envelope is the correction decay.
    """
    cfg = config.protocol
    if n_points is None:
        n_points = cfg.n_rounds + 1
    machine = _RoundMachine(config)
    f_en = f_de = config.gates.encode_decode
    plus = tomography.KET_P
    rho = machine.junk_mix(_embed(machine.basis, np.outer(plus, plus.conj())),
                           f_en)
    t = np.arange(n_points) * cfg.round_wall_time
    signal = np.empty(n_points)
    dummy = np.zeros((cfg.n_steps, 2))
    for m in range(n_points):
        if protected:  # analysis direction swept around the equator
            phase = np.exp(1j * m * math.pi / 4.0)
            target = np.array([1.0, phase]) / math.sqrt(2.0)
        else:
            target = plus
        block = _depolarize2(_logical_block(machine.basis, rho), f_de)
        signal[m] = float(np.real(target.conj() @ block @ target))
        if m == n_points - 1:
            break
        if protected:
            rho = machine.run_round(rho, dummy)
        else:
            for _ in range(cfg.n_steps):
                rho = machine.evolve(rho)
    if protected:
        freq_guess = 1.0 / (8.0 * cfg.round_wall_time)
    else:
        # fringe frequency: matched-frame Kerr splitting of |2> vs |0>, |4>
        freq_guess = abs(float(np.real(machine.h[2, 2]))) / (2.0 * math.pi)
    _, tau, freq, _, _ = fitting.fit_damped_cosine(t, signal,
                                                   freq_guess=freq_guess)
    return RamseyResult(protected=protected, t=t, signal=signal,
                        frequency=freq, tau=tau)


# ---------------------------------------------------------------------------
# Randomized benchmarking and gate repetition on the logical qubit.


@dataclass
class RBResult:
    lengths: np.ndarray
    survival: np.ndarray
    decay: float
    r_gate: float


def randomized_benchmarking(config: Config,
                            lengths=(1, 2, 4, 8, 12, 20, 30),
                            n_seq: int = 60,
                            seed: int | None = None,
                            interleaved: np.ndarray | None = None) -> RBResult:
    """Clifford sequence decay of the calibrated logical gate set.

    Gates act on the decoded qubit as ideal 2x2 unitaries followed by
    depolarizing noise of strength clifford_depol; survival is the
    ground-state population after the inverting Clifford.  With a gate
    interleaved, r_gate measures the per-step (Clifford + gate) error.
    """
    gcal = config.gates
    group = code.clifford_group()
    q = gcal.clifford_depol
    rng = np.random.default_rng(config.protocol.seed if seed is None else seed)
    ket0 = tomography.KET0
    survival = np.empty(len(lengths))
    for i, m in enumerate(lengths):
        tot = 0.0
        for _ in range(n_seq):
            rho = np.outer(ket0, ket0.conj())
            rho = _depolarize2(rho, gcal.encode_decode)
            acc = np.eye(2, dtype=complex)
            for _ in range(m):
                g = group[int(rng.integers(len(group)))]
                rho = _depolarize2(g @ rho @ g.conj().T, 1 - q)
                acc = g @ acc
                if interleaved is not None:
                    rho = _depolarize2(
                        interleaved @ rho @ interleaved.conj().T, 1 - q)
                    acc = interleaved @ acc
            inv = group[code.clifford_inverse_index(group, acc)]
            rho = _depolarize2(inv @ rho @ inv.conj().T, 1 - q)
            rho = _depolarize2(rho, gcal.encode_decode)
            tot += float(np.real(ket0.conj() @ rho @ ket0))
        survival[i] = tot / n_seq
    _, p, _ = fitting.fit_rb_decay(np.asarray(lengths, float), survival)
    return RBResult(lengths=np.asarray(lengths, float), survival=survival,
                    decay=p, r_gate=(1.0 - p) / 2.0)


@dataclass
class TGateResult:
    n: np.ndarray
    fchi: np.ndarray
    intercept: float
    per_repetition: float


def t_gate_repetition(config: Config, max_reps: int = 20) -> TGateResult:
    """Process fidelity of repeated T gates on the logical qubit.

    The encode-decode round trip sets the zero-repetition intercept; each
    repetition multiplies the normalized fidelity by the calibrated factor.
    """
    gcal = config.gates
    in_rhos = [np.outer(k, k.conj()) for k in tomography.INPUT_SETS[4]]
    n = np.arange(max_reps + 1)
    fchi = np.empty(len(n))
    ende = gcal.encode_decode ** 2
    for i, reps in enumerate(n):
        target = np.linalg.matrix_power(code.T_GATE, int(reps))
        outs = []
        for rho in in_rhos:
            out = _depolarize2(rho, ende)
            for _ in range(int(reps)):
                out = _depolarize2(code.T_GATE @ out @ code.T_GATE.conj().T,
                                   gcal.t_gate)
            outs.append(out)
        chi = tomography.chi_from_io(in_rhos, outs)
        fchi[i] = tomography.process_fidelity(chi, tomography.chi_ideal(target))
    _, tau, _ = fitting.fit_exponential(n.astype(float), fchi, offset=0.25)
    return TGateResult(n=n, fchi=fchi, intercept=float(fchi[0]),
                       per_repetition=float(math.exp(-1.0 / tau)))
