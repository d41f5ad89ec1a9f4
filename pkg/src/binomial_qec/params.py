"""Device, noise, measurement and gate-fidelity parameter sets.

Unit conventions, stated once and used everywhere: frequencies (chi, Kerr,
mode frequencies) are stored as ordinary frequencies in Hz, i.e. the value of
omega/2pi; they are multiplied by 2*pi where Hamiltonians are assembled.
Times and rates are SI (seconds, 1/seconds).
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class DeviceParams:
    """Calibrated mode frequencies and nonlinearities (all in Hz, /2pi)."""

    chi_qs: float = 1.90e6        # ancilla-storage dispersive shift
    chi_qr: float = 3.65e6        # ancilla-readout dispersive shift
    chi_sr: float = 15.6e3        # storage-readout cross-Kerr (predicted)
    k_q: float = 232e6            # ancilla anharmonicity
    k_r: float = 14.4e3           # readout self-Kerr
    k_s: float = 4.23e3           # storage self-Kerr
    k_s_prime: float = 454.0      # second-order storage Kerr correction
    omega_q: float = 5.692e9
    omega_s: float = 7.634e9
    omega_r: float = 8.610e9


@dataclass(frozen=True)
class NoiseParams:
    """Coherence parameters of the storage oscillator and the ancilla."""

    tau_s: float = 143e-6         # storage single-photon lifetime
    n_th_s: float = 0.006         # storage thermal occupation
    t1: float = 30e-6             # ancilla relaxation time
    t_phi: float = 120e-6         # ancilla pure dephasing time
    n_th_q: float = 0.008         # ancilla thermal occupation

    @property
    def kappa_s(self) -> float:
        return 1.0 / self.tau_s

    @property
    def gamma_up(self) -> float:
        """Ancilla thermal excitation rate n_th_q / T1."""
        return self.n_th_q / self.t1

    @property
    def t2(self) -> float:
        """Ancilla coherence time from 1/T2 = 1/(2 T1) + 1/T_phi."""
        return 1.0 / (0.5 / self.t1 + 1.0 / self.t_phi)


# Decoherence-free parity-map control fidelities (even / odd input).  Shared
# between the scalar measurement model and the analytic fidelity model so the
# two layers cannot drift apart.
_C0 = 0.988
_C1 = 0.987


@dataclass(frozen=True)
class MeasurementModel:
    """Scalar parity-measurement model.

    p_e / p_o are the probabilities that an even / odd parity eigenstate is
    assigned the correct outcome.  p_d is the per-measurement demolition
    probability (measurement-induced parity flip of the photon state).
    c0 / c1 bound the parity-map control errors alone (no ancilla
    decoherence); readout_g / readout_e are the bare single-shot assignment
    fidelities.  t_bm is the readout time before the projection point (half
    the readout pulse), t_am the time after it, including feedback latency.
    """

    p_e: float = 0.983
    p_o: float = 0.960
    p_d: float = 8e-4
    c0: float = _C0
    c1: float = _C1
    t_bm: float = 160e-9
    t_am: float = 496e-9
    latency: float = 336e-9
    readout_g: float = 0.999
    readout_e: float = 0.989

    @property
    def t_detection(self) -> float:
        """Excited-ancilla exposure window entering the odd-branch fidelity."""
        return self.t_bm + self.t_am


# Linear coefficients (offset, per-1/T1, per-1/Tphi with times in seconds) of
# the recovery-gate fidelity model.  The offsets and the slopes divided by
# 1e-6 match the microsecond-unit form used in gate calibration.
_FU3_COEF = (0.978, 0.233e-6, 0.181e-6)
_FU24_COEF = (0.976, 0.173e-6, 0.188e-6)


@dataclass(frozen=True)
class FidelityModel:
    """Scalar fidelity factors entering the round-fidelity models.

    c0 / c1 are the decoherence-free parity fidelities for even / odd inputs;
    the detection fidelities F0 / F1 follow from them and the ancilla
    coherence (see measurement.parity_fidelity_model).  f_pi is the ancilla
    pi-pulse fidelity applied on every odd branch.  Recovery-gate fidelities
    are linear in 1/T1 and 1/Tphi with the housed coefficients.
    """

    c0: float = _C0
    c1: float = _C1
    f_pi: float = 0.984
    fu1_coef: tuple = _FU3_COEF   # same gate family as U3 (deformation unwind)
    fu2_coef: tuple = _FU24_COEF
    fu3_coef: tuple = _FU3_COEF
    fu4_coef: tuple = _FU24_COEF

    @staticmethod
    def _linear(coef: tuple, noise: NoiseParams) -> float:
        a, b1, bphi = coef
        return a - b1 / noise.t1 - bphi / noise.t_phi

    def f_u1(self, noise: NoiseParams) -> float:
        return self._linear(self.fu1_coef, noise)

    def f_u2(self, noise: NoiseParams) -> float:
        return self._linear(self.fu2_coef, noise)

    def f_u3(self, noise: NoiseParams) -> float:
        return self._linear(self.fu3_coef, noise)

    def f_u4(self, noise: NoiseParams) -> float:
        return self._linear(self.fu4_coef, noise)


@dataclass(frozen=True)
class GateCalibration:
    """Depolarizing strengths of the scalar gate realizations.

    Normalized-process-fidelity convention: a gate of fidelity f composes as
    an ideal unitary followed by a logical depolarizing channel that keeps
    the state with probability f.  encode_decode is calibrated so that the
    bare encode-decode round trip gives a chi-matrix fidelity of 0.931;
    clifford_rb is quoted in the randomized-benchmarking convention
    (error per Clifford r = (1 - f_rb), full-depolarization q = 2 r).
    """

    encode_decode: float = math.sqrt((0.931 - 0.25) / 0.75)
    clifford_rb: float = 0.969
    t_gate: float = 0.974
    gate_time: float = 528e-9

    @property
    def clifford_depol(self) -> float:
        return 2.0 * (1.0 - self.clifford_rb)


@dataclass(frozen=True)
class ProtocolConfig:
    """Timing and execution settings of the repeated-correction protocol."""

    n_steps: int = 2              # bottom-layer parity checks per round
    t_wait: float = 17.895e-6     # free evolution between checks
    step_overhead: float = 491e-9 # per-step measurement + feedback wall time
    variant: str = "II"           # 'I' detect-and-correct, 'II' deferred
    n_rounds: int = 19
    mode: str = "density"         # 'scalar' | 'density' | 'trajectory'
    n_trajectories: int = 2000
    seed: int = 2024
    recovery: str = "deformed"    # 'deformed' | 'linearized'
    time_axis: str = "wall"       # 'wall' includes overhead, 'waits' does not
    n_max: int = 12

    @property
    def round_wall_time(self) -> float:
        return self.n_steps * (self.t_wait + self.step_overhead)

    @property
    def round_wait_time(self) -> float:
        return self.n_steps * self.t_wait

    def round_duration(self) -> float:
        if self.time_axis == "wall":
            return self.round_wall_time
        if self.time_axis == "waits":
            return self.round_wait_time
        raise ValueError(f"unknown time_axis {self.time_axis!r}")


_SECTION_TYPES = {
    "device": DeviceParams,
    "noise": NoiseParams,
    "measurement": MeasurementModel,
    "fidelity": FidelityModel,
    "gates": GateCalibration,
    "protocol": ProtocolConfig,
}

_SKIP_KEYS = {("fidelity", k) for k in ("fu1_coef", "fu2_coef", "fu3_coef", "fu4_coef")}


@dataclass
class Config:
    device: DeviceParams
    noise: NoiseParams
    measurement: MeasurementModel
    fidelity: FidelityModel
    gates: GateCalibration
    protocol: ProtocolConfig

    @classmethod
    def default(cls) -> "Config":
        return cls(DeviceParams(), NoiseParams(), MeasurementModel(),
                   FidelityModel(), GateCalibration(), ProtocolConfig())


def _coerce(field: dataclasses.Field, raw: str):
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("float", float):
        return float(raw)
    if field.type in ("str", str):
        return raw
    raise ValueError(f"cannot parse config field {field.name!r}")


def load_config(path: str | None = None, text: str | None = None) -> Config:
    """Read a sectioned key = value config file; absent keys keep defaults."""
    parser = configparser.ConfigParser()
    if text is not None:
        parser.read_string(text)
    elif path is not None:
        with open(path) as fh:
            parser.read_file(fh)
    cfg = {}
    for section, cls in _SECTION_TYPES.items():
        kwargs = {}
        if parser.has_section(section):
            fields = {f.name: f for f in dataclasses.fields(cls)}
            for key, raw in parser.items(section):
                if key not in fields:
                    raise KeyError(f"unknown key {key!r} in section [{section}]")
                kwargs[key] = _coerce(fields[key], raw)
        cfg[section] = cls(**kwargs)
    return Config(**cfg)


def dump_config(config: Config) -> str:
    """Serialize a Config to the sectioned text format (canonical order)."""
    parser = configparser.ConfigParser()
    for section, cls in _SECTION_TYPES.items():
        obj = getattr(config, section)
        parser.add_section(section)
        for f in dataclasses.fields(cls):
            if (section, f.name) in _SKIP_KEYS:
                continue
            value = getattr(obj, f.name)
            text = value if isinstance(value, str) else repr(value)
            parser.set(section, f.name, text)
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()


def config_hash(config: Config) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()[:16]
