"""Curve-fit wrappers with deterministic seeding used across the experiments."""

from __future__ import annotations

import numpy as np
import scipy.optimize


class FitDiverged(RuntimeError):
    """Least-squares fit failed to converge or returned unusable parameters."""


def _curve_fit(model, x, y, p0, bounds=(-np.inf, np.inf), maxfev=20000):
    try:
        popt, pcov = scipy.optimize.curve_fit(model, x, y, p0=p0, bounds=bounds,
                                              maxfev=maxfev)
    except (RuntimeError, ValueError, TypeError) as exc:
        # scipy signals fewer points than parameters with a TypeError
        raise FitDiverged(str(exc)) from exc
    if not np.all(np.isfinite(popt)):
        raise FitDiverged(f"non-finite fit parameters {popt}")
    return popt, pcov


def fit_exponential(t, y, offset: float | None = None):
    """Fit y = a exp(-t / tau) + c; c may be frozen (e.g. the 1/4 floor).

    Returns (a, tau, c).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < (2 if offset is not None else 3):
        raise FitDiverged(f"{len(t)} points cannot determine an exponential")
    c0 = float(offset) if offset is not None else float(min(y.min(), y[-1]))
    resid = np.clip(y - c0, 1e-12, None)
    span = max(t[-1] - t[0], np.finfo(float).tiny)
    with np.errstate(divide="ignore"):
        slope = (np.log(resid[0]) - np.log(resid[-1])) / span
    tau0 = 1.0 / slope if slope > 0 else span
    a0 = max(resid[0], 1e-6)
    if offset is not None:
        model = lambda t_, a, tau: a * np.exp(-t_ / tau) + offset
        popt, _ = _curve_fit(model, t, y, p0=[a0, tau0],
                             bounds=([0, span * 1e-4], [np.inf, np.inf]))
        a, tau = popt
        c = offset
    else:
        model = lambda t_, a, tau, c_: a * np.exp(-t_ / tau) + c_
        popt, _ = _curve_fit(model, t, y, p0=[a0, tau0, c0],
                             bounds=([0, span * 1e-4, -np.inf], [np.inf, np.inf, np.inf]))
        a, tau, c = popt
    if tau <= 0:
        raise FitDiverged(f"nonpositive decay time {tau}")
    return float(a), float(tau), float(c)


def _freq_guess(t, y):
    y0 = y - y.mean()
    dt = t[1] - t[0]
    spec = np.abs(np.fft.rfft(y0))
    freqs = np.fft.rfftfreq(len(t), d=dt)
    k = int(np.argmax(spec[1:])) + 1
    return max(freqs[k], 0.25 / (t[-1] - t[0]))


def fit_damped_cosine(t, y, freq_guess: float | None = None):
    """Fit y = a exp(-t/tau) cos(2 pi f t + phi) + c.

    Returns (a, tau, f, phi, c).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 5:
        raise FitDiverged(f"{len(t)} points cannot determine a damped cosine")
    f0 = freq_guess if freq_guess is not None else _freq_guess(t, y)
    span = t[-1] - t[0]

    def model(t_, a, tau, f, phi, c):
        return a * np.exp(-t_ / tau) * np.cos(2 * np.pi * f * t_ + phi) + c

    amp0 = 0.5 * (y.max() - y.min())
    best, best_cost = None, np.inf
    for phi0 in (0.0, np.pi / 2, np.pi, -np.pi / 2):
        try:
            popt, _ = _curve_fit(model, t, y, p0=[amp0, span, f0, phi0, y.mean()],
                                 bounds=([0, span * 1e-3, f0 * 0.2, -2 * np.pi, -np.inf],
                                         [np.inf, np.inf, f0 * 5.0, 2 * np.pi, np.inf]))
        except FitDiverged:
            continue
        cost = float(np.sum((model(t, *popt) - y) ** 2))
        if cost < best_cost:
            best, best_cost = popt, cost
    if best is None:
        raise FitDiverged("damped cosine fit failed for all phase seeds")
    a, tau, f, phi, c = best
    return float(a), float(tau), float(f), float(phi), float(c)


def fit_rb_decay(m, y):
    """Fit the benchmarking curve y = A p^m + B; returns (A, p, B)."""
    m = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(m) < 3:
        raise FitDiverged(f"{len(m)} points cannot determine the decay")
    b0 = 0.5
    a0 = max(y[0] - b0, 0.1)
    model = lambda m_, a, p, b: a * p ** m_ + b
    popt, _ = _curve_fit(model, m, y, p0=[a0, 0.97, b0],
                         bounds=([0, 0.0, 0.0], [1.5, 1.0, 1.0]))
    a, p, b = popt
    return float(a), float(p), float(b)


def fit_linear(x, y):
    """Least-squares line; returns (slope, intercept)."""
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)


def parity_monitor_model(t, p_e, p_o, tau_tot, alpha_sq, n_th):
    """Mean measured parity of a monitored decaying coherent state.

    The ideal-parity weight is p0 = exp(-2 |alpha|^2 exp(-t/tau_tot)
    / (1 + 2 n_th)) / (1 + 2 n_th); outcome fidelities p_e / p_o mix it into
    the measured expectation.
    """
    p0 = np.exp(-2 * alpha_sq * np.exp(-np.asarray(t, float) / tau_tot)
                / (1 + 2 * n_th)) / (1 + 2 * n_th)
    return 0.5 * (1 + p0) * (2 * p_e - 1) + 0.5 * (1 - p0) * (1 - 2 * p_o)


def fit_parity_monitor(t, p_meas, alpha_sq: float, n_th: float,
                       fit_n_th: bool = False):
    """Fit the monitored-parity curve; returns (p_e, p_o, tau_tot, n_th).

    With fit_n_th the thermal population is a fourth free parameter (the
    passed n_th seeds it); otherwise it is held fixed and echoed back.
    """
    t = np.asarray(t, dtype=float)
    p_meas = np.asarray(p_meas, dtype=float)
    tau0 = max(t[-1] / 3.0, t[1])
    if fit_n_th:
        model = lambda t_, pe, po, tau, nth: parity_monitor_model(
            t_, pe, po, tau, alpha_sq, nth)
        popt, _ = _curve_fit(model, t, p_meas,
                             p0=[0.98, 0.97, tau0, max(n_th, 1e-4)],
                             bounds=([0.5, 0.5, t[1] * 0.1, 0.0],
                                     [1.0, 1.0, np.inf, 0.2]))
        pe, po, tau, nth = popt
    else:
        model = lambda t_, pe, po, tau: parity_monitor_model(
            t_, pe, po, tau, alpha_sq, n_th)
        popt, _ = _curve_fit(model, t, p_meas, p0=[0.98, 0.97, tau0],
                             bounds=([0.5, 0.5, t[1] * 0.1], [1.0, 1.0, np.inf]))
        pe, po, tau = popt
        nth = n_th
    return float(pe), float(po), float(tau), float(nth)
