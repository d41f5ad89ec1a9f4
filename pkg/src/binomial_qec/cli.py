"""Command-line experiment driver.

Each subcommand runs one experiment and emits fixed-format artifacts into
--out: a CSV per curve, a JSON summary with the headline numbers, and a
run manifest (manifest.json) listing every file the run produced.  CSV
bytes are identical across reruns with the same (config, seed); wall time
and versions live only in the manifest.

Configs are sectioned ``key = value`` text files (params.load_config); all
frequencies are /2pi values in Hz and times are seconds.  When --config is
not given, the path is taken from the BQEC_CONFIG environment variable, and
built-in defaults apply if that is unset too.

Exit codes: 0 success, 2 config or argument error, 3 fit/convergence failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np
import scipy

from . import __version__, fitting, grape, measurement, model, protocol
from .params import Config, config_hash, load_config


class ConfigError(ValueError):
    """Configuration rejected before any computation started."""


# ---------------------------------------------------------------------------
# Config loading and validation.


def _validate(config: Config) -> None:
    noise, proto, meas = config.noise, config.protocol, config.measurement
    checks = [
        (config.device.chi_qs > 0, "device.chi_qs must be positive"),
        (config.device.k_s > 0, "device.k_s must be positive"),
        (noise.tau_s > 0, "noise.tau_s must be positive"),
        (noise.t1 > 0 and noise.t_phi > 0, "ancilla T1 and Tphi must be positive"),
        (0.0 <= noise.n_th_s < 1.0, "noise.n_th_s must lie in [0, 1)"),
        (0.0 <= noise.n_th_q < 1.0, "noise.n_th_q must lie in [0, 1)"),
        (proto.n_steps >= 1, "protocol.n_steps must be at least 1"),
        (proto.t_wait > 0, "protocol.t_wait must be positive"),
        (proto.n_rounds >= 0, "protocol.n_rounds must be non-negative"),
        (proto.variant in ("I", "II"), "protocol.variant must be 'I' or 'II'"),
        (proto.mode in ("scalar", "density", "trajectory"),
         "protocol.mode must be scalar, density or trajectory"),
        (proto.time_axis in ("wall", "waits"),
         "protocol.time_axis must be 'wall' or 'waits'"),
        (proto.n_max >= 6, "protocol.n_max must be at least 6"),
        (all(0.0 < f <= 1.0 for f in
             (meas.p_e, meas.p_o, meas.c0, meas.c1)),
         "measurement fidelities must lie in (0, 1]"),
        (0.0 <= meas.p_d < 1.0, "measurement.p_d must lie in [0, 1)"),
    ]
    bad = [msg for ok, msg in checks if not ok]
    if bad:
        raise ConfigError("; ".join(bad))


def _load(args: argparse.Namespace) -> Config:
    path = args.config or os.environ.get("BQEC_CONFIG")
    try:
        config = load_config(path)
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    _validate(config)
    return config


# ---------------------------------------------------------------------------
# Artifact writers.


def _num(x) -> float | None:
    x = float(x)
    return None if (math.isnan(x) or math.isinf(x)) else x


def _write_csv(out: str, name: str, header: str, columns) -> str:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(os.path.join(out, name), data, fmt="%.12g", delimiter=",",
               header=header, comments="")
    return name


def _write_rows(out: str, name: str, header: str, rows) -> str:
    """CSV with mixed string/number cells, fixed %.12g float format."""
    lines = [header]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else format(float(c), ".12g")
                              for c in row))
    with open(os.path.join(out, name), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return name


def _write_json(out: str, name: str, payload: dict) -> str:
    body = {"manifest": "manifest.json", **payload}
    with open(os.path.join(out, name), "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return name


def _write_manifest(out: str, command: str, config: Config,
                    seed: int | None, paths: list[str], t0: float) -> None:
    payload = {
        "command": command,
        "config_hash": config_hash(config),
        "seed": seed,
        "versions": {"binomial_qec": __version__,
                     "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "outputs": sorted(paths),
        "wall_time_s": round(time.time() - t0, 3),
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Argument helpers.


def _protocol_arg(text: str) -> dict:
    if text in ("1", "I"):
        return {"variant": "I"}
    if text in ("2", "II"):
        return {"variant": "II", "n_steps": 2}
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--protocol takes 1, 2 or a step count, not {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("step count must be at least 1")
    return {"variant": "II", "n_steps": n}


def _parse_grid(text: str, vary: str):
    try:
        if vary == "t1tphi":
            # pairs like 30e-6/120e-6;60e-6/240e-6
            return [tuple(float(v) for v in tok.split("/"))
                    for tok in text.split(";")]
        if ":" in text:
            lo, hi, num = text.split(":")
            vals = np.linspace(float(lo), float(hi), int(num))
        else:
            vals = np.array([float(tok) for tok in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad --grid {text!r}: {exc}") from exc
    if vary == "steps":
        return [int(round(v)) for v in vals]
    return [float(v) for v in vals]


def _with_protocol(config: Config, **updates) -> Config:
    proto = dataclasses.replace(config.protocol, **updates)
    return dataclasses.replace(config, protocol=proto)


# ---------------------------------------------------------------------------
# Subcommands.  Each returns the list of artifact basenames it wrote.


def cmd_qec_lifetime(config: Config, args, out: str) -> list[str]:
    upd = dict(args.protocol)
    if args.tw is not None:
        upd["t_wait"] = args.tw
    if args.rounds is not None:
        upd["n_rounds"] = args.rounds
    if args.mode is not None:
        upd["mode"] = args.mode
    if args.trajectories is not None:
        upd["n_trajectories"] = args.trajectories
    if args.seed is not None:
        upd["seed"] = args.seed
    config = _with_protocol(config, **upd)
    args.seed = config.protocol.seed

    run = protocol.run_qec(config)
    paths = [
        _write_csv(out, "qec_lifetime.csv", "round,t_wall_s,t_wait_s,fchi",
                   [np.arange(run.n_rounds + 1), run.times_wall,
                    run.times_wait, run.fchi]),
        _write_json(out, "qec_lifetime.json", {
            "mode": run.mode,
            "variant": config.protocol.variant,
            "n_steps": config.protocol.n_steps,
            "rounds": run.n_rounds,
            "t_wait_s": config.protocol.t_wait,
            "fchi_round0": float(run.fchi[0]),
            "tau_wall_s": _num(run.tau_wall),
            "tau_wait_s": _num(run.tau_wait),
        }),
    ]
    return paths


def cmd_sweep(config: Config, args, out: str) -> list[str]:
    grid = _parse_grid(args.grid, args.vary)
    res = model.sweep_lifetime(args.vary, grid, config.device, config.noise,
                               config.fidelity, config.measurement,
                               config.protocol)
    paths = []
    rows = []
    points = []
    for i, pt in enumerate(res.points):
        name = f"sweep_{res.vary}_point{i:02d}.csv"
        paths.append(_write_csv(out, name, "t_w_s,tau_s",
                                [pt.curve_t_w, pt.curve_tau]))
        label = ("" if pt.x is None
                 else "/".join(format(v, ".12g") for v in pt.x)
                 if isinstance(pt.x, tuple) else format(pt.x, ".12g"))
        rows.append((label, pt.t_w_opt, pt.tau))
        points.append({"x": pt.x, "t_w_opt_s": pt.t_w_opt, "tau_s": pt.tau,
                       "curve": name})
    paths.append(_write_rows(out, f"sweep_{res.vary}.csv",
                             "x,t_w_opt_s,tau_s", rows))
    paths.append(_write_json(out, f"sweep_{res.vary}.json",
                             {"vary": res.vary, "points": points}))
    return paths


def cmd_budget(config: Config, args, out: str) -> list[str]:
    res = model.error_budget(config.device, config.noise, config.fidelity,
                             config.protocol, config.measurement)
    labels = ["".join(str(o) for o in rec) for rec in res.branches]
    rows = []
    for name, row in res.rows.items():
        for label, weight, loss in zip(labels, res.weights, row):
            rows.append((name, label, weight, loss))
    paths = [
        _write_rows(out, "budget.csv", "source,branch,weight,loss", rows),
        _write_json(out, "budget.json", {
            "weighted_loss": {k: float(v) for k, v in res.weighted.items()},
            "t_round_s": res.t_round,
            "tau_wall_s": _num(res.tau_wall),
            "tau_waits_s": _num(res.tau_waits),
        }),
    ]
    return paths


def cmd_ramsey(config: Config, args, out: str) -> list[str]:
    if args.rounds is not None:
        config = _with_protocol(config, n_rounds=args.rounds)
    runs = {"unprotected": protocol.ramsey_logical(config, protected=False),
            "protected": protocol.ramsey_logical(config, protected=True)}
    paths = []
    summary = {}
    for label, res in runs.items():
        paths.append(_write_csv(out, f"ramsey_{label}.csv", "t_s,signal",
                                [res.t, res.signal]))
        summary[label] = {"tau_s": _num(res.tau),
                          "frequency_hz": _num(res.frequency)}
    summary["ratio"] = _num(runs["protected"].tau / runs["unprotected"].tau)
    paths.append(_write_json(out, "ramsey.json", summary))
    return paths


def cmd_rb(config: Config, args, out: str) -> list[str]:
    if args.seed is None:
        args.seed = config.protocol.seed
    interleaved = None
    if args.interleave is not None:
        from . import code
        group = code.clifford_group()
        if not 0 <= args.interleave < len(group):
            raise ConfigError(f"--interleave must index the {len(group)}"
                              " single-qubit Cliffords")
        interleaved = group[args.interleave]
    res = protocol.randomized_benchmarking(config, seed=args.seed,
                                           interleaved=interleaved)
    paths = [
        _write_csv(out, "rb.csv", "length,survival",
                   [res.lengths, res.survival]),
        _write_json(out, "rb.json", {
            "decay_p": _num(res.decay),
            "r_gate": _num(res.r_gate),
            "interleaved": args.interleave,
        }),
    ]
    return paths


def cmd_tgate(config: Config, args, out: str) -> list[str]:
    res = protocol.t_gate_repetition(config, max_reps=args.reps)
    paths = [
        _write_csv(out, "tgate.csv", "repetitions,fchi", [res.n, res.fchi]),
        _write_json(out, "tgate.json", {
            "per_repetition": _num(res.per_repetition),
            "intercept": _num(res.intercept),
        }),
    ]
    return paths


def cmd_kerr_cal(config: Config, args, out: str) -> list[str]:
    res = model.kerr_calibration(config.device, config.noise,
                                 detuning=args.detuning)
    rows = []
    for fr in res.fringes:
        rows.extend((fr.label, t, s) for t, s in zip(fr.t, fr.signal))
    dev = config.device
    paths = [
        _write_rows(out, "kerr_cal.csv", "fringe,t_s,parity", rows),
        _write_json(out, "kerr_cal.json", {
            "k_s_hz": res.k_s,
            "k_s_prime_hz": res.k_s_prime,
            "configured_k_s_hz": dev.k_s,
            "configured_k_s_prime_hz": dev.k_s_prime,
            "rel_err_k_s": abs(res.k_s - dev.k_s) / dev.k_s,
            "rel_err_k_s_prime": abs(res.k_s_prime - dev.k_s_prime)
                                 / dev.k_s_prime,
        }),
    ]
    return paths


def cmd_qnd_parity(config: Config, args, out: str) -> list[str]:
    intervals = _parse_grid(args.intervals, "tw")
    if args.shots is not None and args.seed is None:
        args.seed = config.protocol.seed
    res = measurement.qnd_demolition_sweep(
        math.sqrt(args.nbar), intervals, config.measurement, config.noise,
        n_shots=args.shots, seed=args.seed)
    paths = []
    for i, curve in enumerate(res.curves):
        paths.append(_write_csv(out, f"qnd_parity_curve{i:02d}.csv",
                                "t_s,parity", [curve.t, curve.parity]))
    paths.append(_write_csv(out, "qnd_parity.csv", "tau_rep_s,tau_tot_s",
                            [[c.tau_rep for c in res.curves],
                             [c.tau_tot for c in res.curves]]))
    paths.append(_write_json(out, "qnd_parity.json", {
        "p_d": _num(res.p_d),
        "tau_s_s": _num(res.tau_s),
        "nbar": args.nbar,
    }))
    return paths


def cmd_grape(config: Config, args, out: str) -> list[str]:
    problem = grape.encode_problem(config.device, n_max=args.n_max)
    init = grape.random_pulses(scale=args.scale, seed=args.seed)
    res = grape.optimize(problem, init, target=args.target,
                         max_iters=args.max_iters)
    res.pulses.to_csv(os.path.join(out, "grape_pulse.csv"))
    paths = [
        "grape_pulse.csv",
        _write_csv(out, "grape_trace.csv", "iteration,objective",
                   [np.arange(len(res.trace)), res.trace]),
        _write_json(out, "grape.json", {
            "fidelity": _num(res.fidelity),
            "iterations": res.iterations,
            "converged": res.converged,
            "target": args.target,
            "n_max": args.n_max,
        }),
    ]
    return paths


# ---------------------------------------------------------------------------
# Parser assembly and entry point.


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bqec",
        description="Binomial bosonic-code QEC experiment driver")
    parser.add_argument("--config", default=None,
                        help="config path (default: $BQEC_CONFIG or built-ins)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", default=None,
                       help=f"output directory (default ./bqec_out/{name})")
        return p

    p = add("qec-lifetime", cmd_qec_lifetime,
            "repeated-correction run: per-round fidelity and lifetime")
    p.add_argument("--protocol", type=_protocol_arg, default="2",
                   help="1 (detect+correct), 2 (deferred), or a step count N")
    p.add_argument("--tw", type=float, default=None,
                   help="wait time between parity checks [s]")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--mode", choices=("scalar", "density", "trajectory"),
                   default=None)
    p.add_argument("--trajectories", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = add("sweep", cmd_sweep, "lifetime against a swept quantity")
    p.add_argument("--vary", required=True,
                   choices=("tw", "fu", "t1tphi", "steps"))
    p.add_argument("--grid", required=True,
                   help="comma list or lo:hi:num; t1/tphi pairs à la "
                        "30e-6/120e-6;60e-6/240e-6 for t1tphi")

    add("budget", cmd_budget, "per-branch error budget of one round")

    p = add("ramsey", cmd_ramsey,
            "logical Ramsey fringes with and without correction")
    p.add_argument("--rounds", type=int, default=None)

    p = add("rb", cmd_rb, "logical-gate randomized benchmarking")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--interleave", type=int, default=None,
                   help="Clifford-group index to interleave")

    p = add("tgate", cmd_tgate, "repeated logical T-gate fidelity")
    p.add_argument("--reps", type=int, default=20)

    p = add("kerr-cal", cmd_kerr_cal,
            "self-Kerr calibration from two-component fringes")
    p.add_argument("--detuning", type=float, default=0.0,
                   help="known drive detuning subtracted from the fits [Hz]")

    p = add("qnd-parity", cmd_qnd_parity,
            "monitored parity decay against repetition interval")
    p.add_argument("--nbar", type=float, default=2.0,
                   help="mean photon number of the probe coherent state")
    p.add_argument("--intervals", default="1e-6,2e-6,5e-6,10e-6,20e-6,30e-6")
    p.add_argument("--shots", type=int, default=None,
                   help="sampled shots per point (default: exact curves)")
    p.add_argument("--seed", type=int, default=None)

    p = add("grape", cmd_grape, "synthesize the encode pulse")
    p.add_argument("--target", type=float, default=0.999)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--scale", type=float, default=0.1,
                   help="initial random pulse amplitude, fraction of bounds")
    p.add_argument("--seed", type=int, default=42)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    t0 = time.time()
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or os.path.join("bqec_out", args.command)
    os.makedirs(out, exist_ok=True)
    try:
        paths = args.func(config, args, out)
    except (ConfigError, model.DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (fitting.FitDiverged, grape.Stalled) as exc:
        print(f"fit failure: {exc}", file=sys.stderr)
        return 3
    _write_manifest(out, args.command, config, getattr(args, "seed", None),
                    paths, t0)
    print(f"{args.command}: wrote {len(paths) + 1} files to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
