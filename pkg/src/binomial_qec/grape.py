"""Piecewise-constant GRAPE synthesis of ancilla-oscillator control pulses.

Pulses are sampled on the 2 ns DAC grid with four quadrature channels
(ancilla I/Q, oscillator I/Q) driving sigma_x / sigma_y and a + a+ /
i(a - a+) on top of the dispersive-plus-Kerr drift.  The step propagators
and their exact control derivatives share one eigendecomposition per slice,
so the exact gradient costs little more than the propagation itself; a
first-order derivative (-i dt H_j U_k) is available as a fast fallback and
is exact only when the slice Hamiltonian commutes with the control.

Fidelity is the subspace gate overlap |tr(P V+ U P)|^2 / d^2 for a target
partial isometry V on d source kets, so global phases of U and V drop out.
The optimizer is projected gradient ascent with a backtracking line search
on the penalized objective (fidelity minus a small smoothness penalty on
normalized sample differences), which makes the accepted trace monotone.

The amplitude bounds (2pi x 30 MHz ancilla, 2pi x 3 MHz oscillator) are not
device-table numbers; they are hardware-class defaults chosen to keep
single-slice rotations well below the sampling Nyquist limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics, fock
from .fock import HilbertConfig
from .params import DeviceParams, NoiseParams

DT_DAC = 2e-9
PULSE_DURATION = 528e-9
QUBIT_BOUND = 2 * np.pi * 30e6
CAVITY_BOUND = 2 * np.pi * 3e6
DEFAULT_BOUNDS = (QUBIT_BOUND, QUBIT_BOUND, CAVITY_BOUND, CAVITY_BOUND)
CHANNEL_LABELS = ("qubit_i", "qubit_q", "cavity_i", "cavity_q")

_CSV_HEADER = "time," + ",".join(CHANNEL_LABELS)


class Stalled(RuntimeError):
    """Line search found no improving step within the patience window."""


@dataclass
class PulseSet:
    """Piecewise-constant control amplitudes, one row per channel (rad/s)."""

    samples: np.ndarray
    dt: float = DT_DAC
    bounds: tuple = DEFAULT_BOUNDS

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[0] != len(self.bounds):
            raise ValueError(
                f"expected ({len(self.bounds)}, n) samples, got {self.samples.shape}")
        b = np.asarray(self.bounds, dtype=float)[:, None]
        if np.any(np.abs(self.samples) > b * (1 + 1e-12)):
            raise ValueError("pulse samples exceed channel amplitude bounds")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def replace(self, samples: np.ndarray) -> "PulseSet":
        return PulseSet(samples, dt=self.dt, bounds=self.bounds)

    def clipped(self, samples: np.ndarray) -> "PulseSet":
        b = np.asarray(self.bounds, dtype=float)[:, None]
        return self.replace(np.clip(samples, -b, b))

    def to_csv(self, path) -> None:
        data = np.column_stack([self.times, self.samples.T])
        np.savetxt(path, data, delimiter=",", header=_CSV_HEADER, comments="")

    @classmethod
    def from_csv(cls, path, bounds: tuple = DEFAULT_BOUNDS) -> "PulseSet":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = float(t[1] - t[0]) if len(t) > 1 else DT_DAC
        return cls(data[:, 1:].T, dt=dt, bounds=bounds)


def _n_slices(duration: float, dt: float) -> int:
    n = round(duration / dt)
    if abs(n * dt - duration) > 1e-15 + 1e-9 * dt:
        raise ValueError(f"duration {duration} is not a multiple of dt {dt}")
    return int(n)


def zero_pulses(duration: float = PULSE_DURATION, dt: float = DT_DAC,
                bounds: tuple = DEFAULT_BOUNDS) -> PulseSet:
    return PulseSet(np.zeros((len(bounds), _n_slices(duration, dt))),
                    dt=dt, bounds=bounds)


def random_pulses(scale: float = 0.05, seed: int = 0,
                  duration: float = PULSE_DURATION, dt: float = DT_DAC,
                  bounds: tuple = DEFAULT_BOUNDS, n_modes: int = 8) -> PulseSet:
    """Smooth random start: a few low-frequency Fourier modes per channel."""
    rng = np.random.default_rng(seed)
    n = _n_slices(duration, dt)
    t = np.arange(n) / n
    samples = np.zeros((len(bounds), n))
    for j, bound in enumerate(bounds):
        coeff = rng.standard_normal((n_modes, 2)) / np.sqrt(n_modes)
        for k in range(n_modes):
            samples[j] += coeff[k, 0] * np.sin(2 * np.pi * (k + 1) * t)
            samples[j] += coeff[k, 1] * np.cos(2 * np.pi * (k + 1) * t)
        samples[j] *= scale * bound
    b = np.asarray(bounds, dtype=float)[:, None]
    return PulseSet(np.clip(samples, -b, b), dt=dt, bounds=bounds)


@dataclass(frozen=True)
class ControlProblem:
    """Drift + control operators and a target partial isometry on kets.

    sources/targets list the ket pairs |s_i> -> |t_i> the pulse must realize;
    the subspace projector and isometry matrix follow from them.
    """

    drift: np.ndarray
    controls: tuple
    sources: tuple
    targets: tuple
    cfg: HilbertConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        fock.assert_hermitian(self.drift, atol=1e-9)
        for h_c in self.controls:
            fock.assert_hermitian(h_c, atol=1e-9)
        s = np.column_stack(self.sources)
        t = np.column_stack(self.targets)
        eye = np.eye(s.shape[1])
        if not np.allclose(s.conj().T @ s, eye, atol=1e-9):
            raise ValueError("source kets are not orthonormal")
        if not np.allclose(t.conj().T @ t, eye, atol=1e-9):
            raise ValueError("target kets are not orthonormal")

    @property
    def d(self) -> int:
        return len(self.sources)

    @property
    def source_matrix(self) -> np.ndarray:
        return np.column_stack(self.sources)

    @property
    def target_matrix(self) -> np.ndarray:
        return np.column_stack(self.targets)

    @property
    def projector(self) -> np.ndarray:
        s = self.source_matrix
        return s @ s.conj().T

    @property
    def isometry(self) -> np.ndarray:
        return self.target_matrix @ self.source_matrix.conj().T


def control_operators(cfg: HilbertConfig) -> tuple:
    """(sigma_x, sigma_y, a + a+, i(a - a+)) drive operators."""
    a = fock.destroy(cfg)
    return (fock.sigma_x(cfg), fock.sigma_y(cfg),
            a + a.conj().T, 1j * (a - a.conj().T))


def encode_problem(dev: DeviceParams, n_max: int = 6) -> ControlProblem:
    """Map the ancilla state onto the code words: |g,0> -> |g,0L>, |e,0> -> |g,1L>."""
    from . import code

    cfg = HilbertConfig(n_max=n_max, include_ancilla=True)
    drift = fock.hamiltonian_interaction(cfg, dev, frame="omega_s")
    word0, word1 = code.code_words(HilbertConfig(n_max=n_max, include_ancilla=False))
    ground = np.array([1.0, 0.0])
    excited = np.array([0.0, 1.0])
    vac = np.zeros(cfg.n_fock)
    vac[0] = 1.0
    sources = (np.kron(ground, vac), np.kron(excited, vac))
    targets = (np.kron(ground, word0), np.kron(ground, word1))
    return ControlProblem(drift, control_operators(cfg), sources, targets, cfg=cfg)


def _slice_hamiltonians(problem: ControlProblem, pulses: PulseSet) -> np.ndarray:
    u = pulses.samples
    h = np.broadcast_to(problem.drift, (u.shape[1],) + problem.drift.shape).copy()
    for j, h_c in enumerate(problem.controls):
        h += u[j][:, None, None] * h_c
    return h


def propagate(problem: ControlProblem, pulses: PulseSet) -> np.ndarray:
    """Total propagator of the piecewise-constant pulse, earliest slice rightmost."""
    hams = _slice_hamiltonians(problem, pulses)
    vals, vecs = np.linalg.eigh(hams)
    props = (vecs * np.exp(-1j * vals * pulses.dt)[:, None, :]) \
        @ vecs.conj().transpose(0, 2, 1)
    u_tot = np.eye(problem.drift.shape[0], dtype=complex)
    for u_k in props:
        u_tot = u_k @ u_tot
    fock.assert_unitary(u_tot, atol=1e-9)
    return u_tot


def fidelity(problem: ControlProblem, pulses: PulseSet) -> float:
    return _overlap_fidelity(problem, propagate(problem, pulses))


def _overlap_fidelity(problem: ControlProblem, u_tot: np.ndarray) -> float:
    g = np.trace(problem.target_matrix.conj().T @ u_tot @ problem.source_matrix)
    return float(abs(g) ** 2) / problem.d ** 2


def _loewner_batch(vals: np.ndarray, dt: float) -> np.ndarray:
    """Divided differences of exp(-i dt x) on each slice's eigenvalue grid."""
    e = np.exp(-1j * vals * dt)
    dl = vals[..., :, None] - vals[..., None, :]
    de = e[..., :, None] - e[..., None, :]
    small = np.abs(dl) < 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    rep = np.broadcast_to((-1j * dt * e)[..., :, None], dl.shape)
    return np.where(small, rep, de / np.where(small, 1.0, dl))


def fidelity_and_gradient(problem: ControlProblem, pulses: PulseSet,
                          mode: str = "exact"):
    """Gate fidelity and dF/du (same shape as samples), forward/backward scheme.

    All slices are eigendecomposed in one batched call; the step propagators
    and (in exact mode) their control derivatives reuse that decomposition.
    """
    if mode not in ("exact", "first_order"):
        raise ValueError(f"unknown gradient mode {mode!r}")
    dt = pulses.dt
    n = pulses.n_samples
    hams = _slice_hamiltonians(problem, pulses)
    vals, vecs = np.linalg.eigh(hams)                      # (n, D), (n, D, D)
    vecs_h = vecs.conj().transpose(0, 2, 1)
    props = (vecs * np.exp(-1j * vals * dt)[:, None, :]) @ vecs_h

    # forward[k] = U_k ... U_1 S (forward[0] = S); backward[k] = (U_N ... U_{k+1})+ T
    forward = np.empty((n + 1,) + problem.source_matrix.shape, dtype=complex)
    forward[0] = problem.source_matrix
    for k in range(n):
        forward[k + 1] = props[k] @ forward[k]
    backward = np.empty_like(forward)
    backward[n] = problem.target_matrix
    for k in range(n - 1, -1, -1):
        backward[k] = props[k].conj().T @ backward[k + 1]

    g = complex(np.trace(problem.target_matrix.conj().T @ forward[n]))
    grad = np.empty((len(problem.controls), n))
    if mode == "exact":
        loew = _loewner_batch(vals, dt)                    # (n, D, D)
        phi_e = vecs_h @ forward[:n]
        psi_e = vecs_h @ backward[1:]
        for j, h_c in enumerate(problem.controls):
            m_j = vecs_h @ h_c @ vecs
            dg = np.sum(psi_e.conj() * ((loew * m_j) @ phi_e), axis=(1, 2))
            grad[j] = 2.0 * np.real(np.conj(g) * dg) / problem.d ** 2
    else:
        u_phi = props @ forward[:n]
        psi = backward[1:]
        for j, h_c in enumerate(problem.controls):
            dg = np.sum(psi.conj() * (-1j * dt * (h_c @ u_phi)), axis=(1, 2))
            grad[j] = 2.0 * np.real(np.conj(g) * dg) / problem.d ** 2
    return float(abs(g) ** 2) / problem.d ** 2, grad


def _smoothness(pulses: PulseSet) -> tuple[float, np.ndarray]:
    """Mean squared normalized sample difference and its gradient."""
    b = np.asarray(pulses.bounds, dtype=float)[:, None]
    v = pulses.samples / b
    diff = np.diff(v, axis=1)
    n_diff = max(diff.size, 1)
    penalty = float(np.sum(diff ** 2)) / n_diff
    grad = np.zeros_like(v)
    grad[:, :-1] -= 2.0 * diff / n_diff
    grad[:, 1:] += 2.0 * diff / n_diff
    return penalty, grad / b


@dataclass
class GrapeResult:
    pulses: PulseSet
    fidelity: float
    trace: np.ndarray
    iterations: int
    converged: bool


_LBFGS_MEMORY = 20


def _lbfgs_direction(grad: np.ndarray,
                     mem: list[tuple[np.ndarray, np.ndarray, float]]) -> np.ndarray:
    """Two-loop recursion: apply the inverse-Hessian estimate to `grad`.

    `mem` holds (step, gradient-decrease, 1/curvature) triples, newest last;
    with an empty memory this is the identity (plain gradient ascent).
    """
    q = grad.ravel().copy()
    coefs = []
    for s, y, rho in reversed(mem):
        a = rho * (s @ q)
        coefs.append(a)
        q -= a * y
    if mem:
        s, y, _ = mem[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(mem, reversed(coefs)):
        q += (a - rho * (y @ q)) * s
    return q.reshape(grad.shape)


def optimize(problem: ControlProblem, pulses: PulseSet | None = None,
             target: float = 0.999, max_iters: int = 5000,
             learning_rate: float = 0.3, smoothness: float = 1e-4,
             patience: int = 80, seed: int | None = None) -> GrapeResult:
    """Quasi-Newton ascent with backtracking; the trace is monotone.

    Steps are taken on bound-normalized controls so all four channels move
    on comparable scales, along an L-BFGS direction (plain gradient ascent
    is far too slow on these stiff landscapes); candidates are clipped to
    the amplitude bounds before evaluation, so acceptance is always by
    objective comparison.  Raises Stalled when no improving step is found
    for `patience` consecutive iterations before the target is reached.
    """
    if pulses is None:
        pulses = (random_pulses(seed=seed) if seed is not None else zero_pulses())
    b = np.asarray(pulses.bounds, dtype=float)[:, None]
    dt, bounds = pulses.dt, pulses.bounds

    def objective(v: np.ndarray):
        p = PulseSet(v * b, dt=dt, bounds=bounds)
        f, grad_f = fidelity_and_gradient(problem, p)
        pen, grad_pen = _smoothness(p)
        return p, f, f - smoothness * pen, (grad_f - smoothness * grad_pen) * b

    def line_search(v, obj, d, a0):
        """Backtrack from a0, then expand while improving; None if flat."""
        a = a0
        while a > 1e-12:
            v_c = np.clip(v + a * d, -1.0, 1.0)
            cand = objective(v_c)
            if cand[2] > obj:
                while a < 1e3:
                    v_w = np.clip(v + 2 * a * d, -1.0, 1.0)
                    wide = objective(v_w)
                    if wide[2] <= cand[2]:
                        break
                    v_c, cand = v_w, wide
                    a *= 2
                return v_c, cand, a
            a *= 0.5
        return None

    v = pulses.samples / b
    pulses, fid, obj, grad = objective(v)
    trace = [obj]
    mem: list[tuple[np.ndarray, np.ndarray, float]] = []
    alpha = learning_rate
    stall = 0
    it = 0
    while fid < target and it < max_iters:
        it += 1
        d = _lbfgs_direction(grad, mem)
        if float(np.sum(d * grad)) <= 0.0:
            # curvature memory stopped modelling the landscape; start over
            mem.clear()
            d = grad
        hit = line_search(v, obj, d, 1.0 if mem else alpha)
        if hit is None and mem:
            # quasi-Newton step failed; restart from the bare gradient
            mem.clear()
            hit = line_search(v, obj, grad, alpha)
        if hit is None:
            # the search is deterministic, so a fully failed backtrack is final
            raise Stalled(f"line search exhausted at F={fid:.6f}")
        v_c, (cand, fid_c, obj_c, grad_c), a = hit
        gain = obj_c - obj
        s = (v_c - v).ravel()
        y = (grad - grad_c).ravel()
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            mem.append((s, y, 1.0 / sy))
            del mem[:-_LBFGS_MEMORY]
        v, pulses, fid, obj, grad = v_c, cand, fid_c, obj_c, grad_c
        if not mem:
            alpha = a
        trace.append(obj)
        stall = stall + 1 if gain < 1e-12 else 0
        if stall >= patience:
            raise Stalled(
                f"no measurable improvement for {patience} iterations at F={fid:.6f}")
    return GrapeResult(pulses=pulses, fidelity=fid, trace=np.array(trace),
                       iterations=it, converged=fid >= target)


def simulate_pulse(problem: ControlProblem, pulses: PulseSet,
                   rho0: np.ndarray, noise: NoiseParams | None = None,
                   ancilla_only: bool = True) -> np.ndarray:
    """Play the pulse on a density matrix, optionally with decoherence.

    With noise, each 2 ns slice is integrated under the Lindblad generator of
    its constant Hamiltonian; by default only the ancilla channels are open
    (the oscillator loss over 528 ns is negligible next to them).
    """
    if noise is None:
        u_tot = propagate(problem, pulses)
        return u_tot @ rho0 @ u_tot.conj().T
    if problem.cfg is None:
        raise ValueError("noisy playback needs the problem's HilbertConfig")
    c_ops = dynamics.collapse_ops(problem.cfg, noise,
                                  oscillator=not ancilla_only, ancilla=True)
    rho = rho0.astype(complex)
    for h_k in _slice_hamiltonians(problem, pulses):
        rho = dynamics.lindblad_evolve(rho, h_k, c_ops, pulses.dt, dt=pulses.dt)
    return rho
