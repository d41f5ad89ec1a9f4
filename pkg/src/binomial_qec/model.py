"""Round-fidelity models, intrinsic-error tables, error budget and sweeps.

The repeated-correction round is modeled as a product of independent factors
per measurement branch: an intrinsic factor from a density-matrix simulation
of the oscillator alone (photon loss, thermal feed, self-Kerr, ideal
projections and instantaneous recovery unitaries), times scalar detection /
pi-pulse / recovery-gate fidelities, times an ancilla thermal-flip factor.
The intrinsic tables are the expensive inner loop and are cached per
parameter set; everything on top is closed-form arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import code, dynamics, fitting, fock, measurement, tomography
from .params import (Config, DeviceParams, FidelityModel, MeasurementModel,
                     NoiseParams, ProtocolConfig)


class DomainError(ValueError):
    """Round fidelity outside (0, 1); no decay time exists."""


def lifetime_from_round_fidelity(f: float, t_round: float) -> float:
    """Decay time of an exponential that loses a factor f every t_round."""
    if not 0.0 < f < 1.0:
        raise DomainError(f"round fidelity {f} outside (0, 1)")
    return -t_round / math.log(f)


def thermal_flip_factor(noise: NoiseParams, t_round: float) -> float:
    """Probability that the ancilla stays in |g> over one round."""
    return 1.0 - noise.n_th_q * (1.0 - math.exp(-t_round / noise.t1))


def predict_cross_kerr(k_p: float, k_p_prime: float) -> float:
    """Cross-Kerr between two modes from their self-Kerrs, -2 sqrt(Kp Kp')."""
    if k_p < 0 or k_p_prime < 0:
        raise ValueError("self-Kerr magnitudes must be non-negative")
    return -2.0 * math.sqrt(k_p * k_p_prime)


# ---------------------------------------------------------------------------
# Intrinsic errors: oscillator-only branch channels.


@dataclass
class IntrinsicErrorTable:
    """Branch probabilities and intrinsic process fidelities on a t_w grid.

    weights[s] is the probability (for the representative input state
    (|0_L> + |1_L>)/sqrt(2)) of the detection record s, a tuple of per-step
    parities (0 even, 1 odd); fidelities[s] is the normalized process
    fidelity of that branch with ideal detections and recovery unitaries, so
    it isolates photon-loss and Kerr effects.
    """

    n_steps: int
    t_w: np.ndarray
    weights: dict = field(default_factory=dict)
    fidelities: dict = field(default_factory=dict)

    def _interp(self, table: dict, record: tuple, t_w: float) -> float:
        lo, hi = self.t_w[0], self.t_w[-1]
        if not lo - 1e-12 <= t_w <= hi + 1e-12:
            raise ValueError(f"t_w={t_w} outside tabulated range [{lo}, {hi}]")
        return float(np.interp(t_w, self.t_w, table[record]))

    def branch_weight(self, record: tuple, t_w: float) -> float:
        return self._interp(self.weights, record, t_w)

    def branch_fidelity(self, record: tuple, t_w: float) -> float:
        return self._interp(self.fidelities, record, t_w)

    def records(self):
        return sorted(self.weights)

    def p0(self, t_w: float) -> float:
        """No-error probability of the first detection."""
        return sum(self.branch_weight(s, t_w) for s in self.records()
                   if s[0] == 0)

    def p00(self, t_w: float) -> float:
        """Second-detection no-error probability given a clean first."""
        if self.n_steps != 2:
            raise ValueError("p00 is defined for the two-step table")
        return self.branch_weight((0, 0), t_w) / self.p0(t_w)

    def p10(self, t_w: float) -> float:
        """Second-detection no-error probability given an error first."""
        if self.n_steps != 2:
            raise ValueError("p10 is defined for the two-step table")
        return self.branch_weight((1, 0), t_w) / (1.0 - self.p0(t_w))


def _branch_superoperators(cfg: fock.HilbertConfig, dev: DeviceParams,
                           noise: NoiseParams, t_w: float, n_steps: int,
                           recovery: str) -> dict:
    """Map detection record -> unnormalized branch superoperator."""
    h = fock.kerr_hamiltonian(cfg, dev)
    c_ops = dynamics.collapse_ops(cfg, noise, oscillator=True, ancilla=False)
    window = dynamics.propagator(h, c_ops, t_w)
    p_even, p_odd = fock.parity_projectors(cfg)
    proj = (np.kron(p_even, p_even.conj()), np.kron(p_odd, p_odd.conj()))
    gates = code.recovery_gates(cfg, dev, noise, t_w, n_steps=n_steps,
                                recovery=recovery)

    def usup(u):
        return np.kron(u, u.conj())

    final_even = usup(gates.u3 if n_steps > 1 else gates.u1)
    final_odd = usup(gates.u4)
    out = {}
    for rec in itertools.product((0, 1), repeat=n_steps):
        sup = np.eye(cfg.dim ** 2, dtype=complex)
        for k, outcome in enumerate(rec):
            sup = proj[outcome] @ window @ sup
            last = k == n_steps - 1
            if last:
                sup = (final_odd if outcome else final_even) @ sup
            elif outcome:
                sup = usup(gates.u2[k]) @ sup
        out[rec] = sup
    return out


def _representative_state(cfg: fock.HilbertConfig) -> np.ndarray:
    k0, k1 = code.code_words(cfg)
    return (k0 + k1) / math.sqrt(2)


_INTRINSIC_CACHE: dict = {}


def compute_intrinsic_table(dev: DeviceParams, noise: NoiseParams,
                            n_steps: int, t_w_grid,
                            n_max: int = 12,
                            recovery: str = "deformed") -> IntrinsicErrorTable:
    """Simulate the oscillator-only correction round branch by branch.

    Only photon loss, thermal feed and self-Kerr act; parity projections and
    recovery unitaries are ideal, so the no-jump backaction and its
    first-order-only correction are included.  Each tomography input is
    conditioned on the detection record separately (post-selection, as the
    record-resolved experiment does); leakage out of the code space is booked
    as half-weight identity (fully depolarized).  Branch probabilities are
    quoted for the representative state (|0_L> + |1_L>)/sqrt(2).
    """
    grid = tuple(float(t) for t in np.atleast_1d(t_w_grid))
    key = (dev, noise, n_steps, grid, n_max, recovery)
    if key in _INTRINSIC_CACHE:
        return _INTRINSIC_CACHE[key]

    cfg = fock.HilbertConfig(n_max=n_max)
    basis = code.code_words(cfg)
    rho_rep = fock.ket_to_density(_representative_state(cfg))
    records = list(itertools.product((0, 1), repeat=n_steps))
    weights = {rec: np.empty(len(grid)) for rec in records}
    fids = {rec: np.empty(len(grid)) for rec in records}

    for i, t_w in enumerate(grid):
        sups = _branch_superoperators(cfg, dev, noise, t_w, n_steps, recovery)
        for rec, sup in sups.items():
            out = (sup @ rho_rep.reshape(-1)).reshape(cfg.dim, cfg.dim)
            prob = float(np.real(np.trace(out)))
            weights[rec][i] = prob
            if prob < 1e-14:
                fids[rec][i] = 1.0  # zero-weight branch: clean limit
                continue

            def apply(rho, _sup=sup):
                out = (_sup @ rho.reshape(-1)).reshape(cfg.dim, cfg.dim)
                return out / np.real(np.trace(out))

            channel = tomography.logical_channel(apply, basis, leak="mixed")
            chi = tomography.chi_from_channel(channel)
            fids[rec][i] = tomography.normalize_fidelity(float(np.real(chi[0, 0])))

    table = IntrinsicErrorTable(n_steps=n_steps, t_w=np.array(grid),
                                weights=weights, fidelities=fids)
    _INTRINSIC_CACHE[key] = table
    return table


# ---------------------------------------------------------------------------
# Closed-form round models on top of the intrinsic table.


def _branch_scalar_factors(record: tuple, f0: float, f1: float, f_pi: float,
                           fu: dict) -> float:
    """Detection and gate fidelity product of one branch.

    Intermediate detections contribute F0 (even) or F1 * F_pi * F_U2 (odd);
    the final one adds the unwind gate, F_U3 (even) or F_U4 (odd).  The
    single-step round uses its own gate pair U1/U2 and books no pi pulse.
    """
    n = len(record)
    fac = 1.0
    for k, outcome in enumerate(record):
        last = k == n - 1
        if outcome == 0:
            fac *= f0
            if last:
                fac *= fu["u3"] if n > 1 else fu["u1"]
        else:
            fac *= f1
            if n > 1:
                fac *= f_pi
            if last:
                fac *= fu["u4"] if n > 1 else fu["u2"]
            else:
                fac *= fu["u2"]
    return fac


def _fu_factors(fid: FidelityModel, noise: NoiseParams) -> dict:
    return {"u1": fid.f_u1(noise), "u2": fid.f_u2(noise),
            "u3": fid.f_u3(noise), "u4": fid.f_u4(noise)}


def protocol_model(fid: FidelityModel, intrinsic: IntrinsicErrorTable,
                   t_w: float, dev: DeviceParams, noise: NoiseParams,
                   meas: MeasurementModel, t_round: float | None = None) -> float:
    """Round process fidelity: branch-weighted product of error factors."""
    f0, f1 = measurement.detection_fidelities(meas, dev, noise)
    fu = _fu_factors(fid, noise)
    if t_round is None:
        t_round = intrinsic.n_steps * t_w
    total = 0.0
    for rec in intrinsic.records():
        total += (intrinsic.branch_weight(rec, t_w)
                  * intrinsic.branch_fidelity(rec, t_w)
                  * _branch_scalar_factors(rec, f0, f1, fid.f_pi, fu))
    return total * thermal_flip_factor(noise, t_round)


def protocol1_model(fid: FidelityModel, intrinsic: IntrinsicErrorTable,
                    t_w: float, dev: DeviceParams, noise: NoiseParams,
                    meas: MeasurementModel, t_round: float | None = None) -> float:
    """Single-detection round: p0 Fi0 F0 FU1 + (1-p0) Fi1 F1 FU2, with the
    ancilla thermal-flip factor."""
    if intrinsic.n_steps != 1:
        raise ValueError("protocol1_model needs a one-step intrinsic table")
    return protocol_model(fid, intrinsic, t_w, dev, noise, meas, t_round)


def protocol2_model(fid: FidelityModel, intrinsic: IntrinsicErrorTable,
                    t_w: float, dev: DeviceParams, noise: NoiseParams,
                    meas: MeasurementModel, t_round: float | None = None) -> float:
    """Two-detection round over the four branch records 00/01/10/11."""
    if intrinsic.n_steps != 2:
        raise ValueError("protocol2_model needs a two-step intrinsic table")
    return protocol_model(fid, intrinsic, t_w, dev, noise, meas, t_round)


# ---------------------------------------------------------------------------
# Error budget.


@dataclass
class ErrorBudget:
    """Per-branch loss decomposition of the two-detection round.

    rows map source name -> per-branch loss (1 - fidelity factor); the total
    row composes the enabled sources multiplicatively, the convention in
    which per-source losses and totals are quoted.  The pi-pulse factor is
    excluded from the detection/recovery rows (it is booked separately in
    the round model).
    """

    branches: list
    weights: np.ndarray
    rows: dict
    weighted: dict
    t_round: float
    tau_wall: float
    tau_waits: float


_BUDGET_SOURCES = ("intrinsic", "detection", "recovery", "thermal")


def error_budget(dev: DeviceParams, noise: NoiseParams, fid: FidelityModel,
                 cfg: ProtocolConfig, meas: MeasurementModel | None = None,
                 sources=_BUDGET_SOURCES) -> ErrorBudget:
    """Branch-resolved loss table for the two-detection round."""
    if meas is None:
        meas = MeasurementModel()
    table = compute_intrinsic_table(dev, noise, cfg.n_steps, [cfg.t_wait],
                                    n_max=cfg.n_max, recovery=cfg.recovery)
    f0, f1 = measurement.detection_fidelities(meas, dev, noise)
    fu = _fu_factors(fid, noise)
    records = table.records()
    weights = np.array([table.branch_weight(s, cfg.t_wait) for s in records])

    rows = {src: np.zeros(len(records)) for src in _BUDGET_SOURCES}
    for i, rec in enumerate(records):
        rows["intrinsic"][i] = 1.0 - table.branch_fidelity(rec, cfg.t_wait)
        det = rec_gates = 1.0
        for k, outcome in enumerate(rec):
            last = k == len(rec) - 1
            det *= f0 if outcome == 0 else f1
            if outcome and not last:
                rec_gates *= fu["u2"]
            if last:
                if outcome:
                    rec_gates *= fu["u4"] if len(rec) > 1 else fu["u2"]
                else:
                    rec_gates *= fu["u3"] if len(rec) > 1 else fu["u1"]
        rows["detection"][i] = 1.0 - det
        rows["recovery"][i] = 1.0 - rec_gates
    rows["thermal"][:] = 1.0 - thermal_flip_factor(noise, cfg.round_wall_time)

    total = np.ones(len(records))
    for src in sources:
        if src not in _BUDGET_SOURCES:
            raise ValueError(f"unknown error source {src!r}")
        total *= 1.0 - rows[src]
    rows = dict(rows)
    rows["total"] = 1.0 - total

    weighted = {name: float(weights @ row) for name, row in rows.items()}
    f_round = 1.0 - weighted["total"]
    tau_wall = (lifetime_from_round_fidelity(f_round, cfg.round_wall_time)
                if 0 < f_round < 1 else math.inf)
    tau_waits = (lifetime_from_round_fidelity(f_round, cfg.round_wait_time)
                 if 0 < f_round < 1 else math.inf)
    return ErrorBudget(branches=records, weights=weights, rows=rows,
                       weighted=weighted, t_round=cfg.round_wall_time,
                       tau_wall=tau_wall, tau_waits=tau_waits)


# ---------------------------------------------------------------------------
# Sweeps.


@dataclass
class SweepPoint:
    x: object
    t_w_opt: float
    tau: float
    curve_t_w: np.ndarray
    curve_tau: np.ndarray


@dataclass
class SweepResult:
    vary: str
    points: list


_DEFAULT_TW_GRID = tuple(np.linspace(6e-6, 36e-6, 11))


def _tau_of_tw(fid, dev, noise, meas, cfg, t_w_grid, n_steps=None,
               fu_override=None, time_axis=None) -> tuple[np.ndarray, np.ndarray]:
    n_steps = cfg.n_steps if n_steps is None else n_steps
    axis = cfg.time_axis if time_axis is None else time_axis
    table = compute_intrinsic_table(dev, noise, n_steps, t_w_grid,
                                    n_max=cfg.n_max, recovery=cfg.recovery)
    if fu_override is not None:
        fid = FidelityModel(c0=fid.c0, c1=fid.c1, f_pi=fid.f_pi,
                            fu1_coef=(fu_override, 0.0, 0.0),
                            fu2_coef=(fu_override, 0.0, 0.0),
                            fu3_coef=(fu_override, 0.0, 0.0),
                            fu4_coef=(fu_override, 0.0, 0.0))
    taus = np.empty(len(t_w_grid))
    for i, t_w in enumerate(t_w_grid):
        t_round = n_steps * (t_w + (cfg.step_overhead if axis == "wall" else 0.0))
        f = protocol_model(fid, table, t_w, dev, noise, meas, t_round=t_round)
        taus[i] = (lifetime_from_round_fidelity(f, t_round)
                   if 0 < f < 1 else math.inf)
    return np.asarray(t_w_grid, float), taus


def sweep_lifetime(vary: str, grid, dev: DeviceParams, noise: NoiseParams,
                   fid: FidelityModel, meas: MeasurementModel,
                   cfg: ProtocolConfig,
                   t_w_grid=_DEFAULT_TW_GRID) -> SweepResult:
    """Lifetime curves against one varied quantity.

    vary='tw' sweeps the wait time itself; 'fu' sets all recovery-gate
    fidelities to each grid value; 't1tphi' takes (T1, T_phi) pairs at the
    configured wait time; 'steps' varies the number of detections per round,
    optimizing the wait time on the internal grid.  Each point reports the
    best wait time and the lifetime there.
    """
    points = []
    if vary == "tw":
        ts, taus = _tau_of_tw(fid, dev, noise, meas, cfg, tuple(grid))
        k = int(np.argmax(taus))
        points.append(SweepPoint(x=None, t_w_opt=float(ts[k]),
                                 tau=float(taus[k]), curve_t_w=ts,
                                 curve_tau=taus))
    elif vary == "fu":
        for fu in grid:
            ts, taus = _tau_of_tw(fid, dev, noise, meas, cfg, t_w_grid,
                                  fu_override=float(fu))
            k = int(np.argmax(taus))
            points.append(SweepPoint(x=float(fu), t_w_opt=float(ts[k]),
                                     tau=float(taus[k]), curve_t_w=ts,
                                     curve_tau=taus))
    elif vary == "t1tphi":
        for t1, t_phi in grid:
            noise_i = NoiseParams(tau_s=noise.tau_s, n_th_s=noise.n_th_s,
                                  t1=float(t1), t_phi=float(t_phi),
                                  n_th_q=noise.n_th_q)
            ts, taus = _tau_of_tw(fid, dev, noise_i, meas, cfg,
                                  (cfg.t_wait,))
            points.append(SweepPoint(x=(float(t1), float(t_phi)),
                                     t_w_opt=float(cfg.t_wait),
                                     tau=float(taus[0]), curve_t_w=ts,
                                     curve_tau=taus))
    elif vary == "steps":
        for n in grid:
            ts, taus = _tau_of_tw(fid, dev, noise, meas, cfg, t_w_grid,
                                  n_steps=int(n))
            k = int(np.argmax(taus))
            points.append(SweepPoint(x=int(n), t_w_opt=float(ts[k]),
                                     tau=float(taus[k]), curve_t_w=ts,
                                     curve_tau=taus))
    else:
        raise ValueError(f"unknown sweep axis {vary!r}")
    return SweepResult(vary=vary, points=points)


# ---------------------------------------------------------------------------
# Kerr calibration fringes.


@dataclass
class KerrFringe:
    label: str
    t: np.ndarray
    signal: np.ndarray
    frequency: float


@dataclass
class KerrCalibration:
    k_s: float
    k_s_prime: float
    fringes: list


def kerr_fringe(which: str, dev: DeviceParams, noise: NoiseParams,
                times=None, detuning: float = 0.0, alpha: complex | None = None,
                n_max: int = 20) -> KerrFringe:
    """Phase-alternated displaced-parity fringe of (|0> + |m>)/sqrt(2).

    Prepares the superposition (m = 2 or 4), lets it evolve in the bare
    oscillator frame (optionally with an extra detuning on the number
    operator), then displaces and reads mean parity.  Photon jumps feed a
    slowly drifting phase-independent background that pulls a plain
    damped-cosine fit, so the probe is read at displacement phases phi and
    phi + pi/m (which flips only the 0-m fringe) and the half-difference is
    fitted.  A detuning (>= 0) advances the frame in the same sense as the
    Kerr rotation, so the fitted frequency is the beat plus m times the
    detuning; the fit cannot tell the sign of a frequency, which is why the
    opposite sense is not supported.
    """
    m = {"02": 2, "04": 4}[which]
    if alpha is None:
        alpha = (0.7 if m == 2 else 0.9) * math.sqrt(2)
    if times is None:
        times = np.linspace(0.0, 120e-6, 241) if m == 4 else \
            np.linspace(0.0, 400e-6, 401)
    times = np.asarray(times, float)
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt):
        raise ValueError("time schedule must be uniform")

    if detuning < 0:
        raise DomainError("detuning must co-rotate with the Kerr phase (>= 0)")
    cfg = fock.HilbertConfig(n_max=n_max)
    h = fock.kerr_hamiltonian(cfg, dev, frame="omega_s")
    h = h - 2 * np.pi * detuning * fock.number(cfg)
    c_ops = dynamics.collapse_ops(cfg, noise, oscillator=True, ancilla=False)
    step = dynamics.propagator(h, c_ops, dt)

    probe_vecs = []
    for phase in (1.0, np.exp(1j * math.pi / m)):
        disp = fock.displacement(cfg, alpha * phase)
        probe = disp.conj().T @ fock.parity_op(cfg) @ disp
        # tr(M rho) = vec(M*) . vec(rho) for Hermitian M, row-major vec
        probe_vecs.append(probe.conj().reshape(-1))

    psi = (fock.fock_ket(cfg, 0) + fock.fock_ket(cfg, m)) / math.sqrt(2)
    rho = fock.ket_to_density(psi).reshape(-1)
    signal = np.empty(len(times))
    for i in range(len(times)):
        signal[i] = 0.5 * float(np.real((probe_vecs[0] - probe_vecs[1]) @ rho))
        rho = step @ rho
    _, _, freq, _, _ = fitting.fit_damped_cosine(times, signal)
    return KerrFringe(label=which, t=times, signal=signal, frequency=freq)


def kerr_calibration(dev: DeviceParams, noise: NoiseParams,
                     times=None, detuning: float = 0.0,
                     n_max: int = 20) -> KerrCalibration:
    """Recover (K_s, K_s') from the 0-2 and 0-4 superposition fringes.

    The 0-2 beat is K_s itself; the 0-4 beat is 6 K_s + 4 K_s', so the
    second fringe yields K_s' once the first fixes K_s.  A known detuning
    enters each fringe m-fold and is subtracted accordingly.
    """
    f02 = kerr_fringe("02", dev, noise, times=times, detuning=detuning,
                      n_max=n_max)
    f04 = kerr_fringe("04", dev, noise, times=times, detuning=detuning,
                      n_max=n_max)
    k_s = f02.frequency - 2.0 * detuning
    k_s_prime = (f04.frequency - 4.0 * detuning - 6.0 * k_s) / 4.0
    return KerrCalibration(k_s=float(k_s), k_s_prime=float(k_s_prime),
                           fringes=[f02, f04])


def process_tomography(channel, n_inputs: int = 4, input_kets=None):
    """Chi matrix of a logical channel; see tomography.chi_from_channel."""
    return tomography.chi_from_channel(channel, n_inputs=n_inputs,
                                       input_kets=input_kets)
