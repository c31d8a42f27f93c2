"""Batch front end: run scenarios, export CSV, print analysis reports.

Exit codes: 0 success, 2 config or mode-list parse error, 3 numerical abort.
The environment variable FLYCAP_SEED overrides `noise.seed` from the config.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, sim
from .config import ConfigError, load_config
from .converter import derive_inputs, mode_table
from .luenberger import certify_gains, default_gains, energy_weights
from .observability import format_z_report, observability_matrix, z_observability_check
from .sim import ScenarioConfig, SimulationOverflowError
from .switching import trajectory_from_modes, trajectory_from_pwm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ModeListError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _load(path: str) -> ScenarioConfig:
    cfg = load_config(path)
    seed = os.environ.get("FLYCAP_SEED")
    if seed is not None:
        try:
            cfg = replace(cfg, noise=replace(cfg.noise, seed=int(seed, 0)))
        except ValueError:
            raise ConfigError(f"FLYCAP_SEED must be an integer, got {seed!r}",
                              path=path) from None
    return cfg


def _observers(cfg: ScenarioConfig, choice: str):
    if choice == "both":
        return ("sosml", "luenberger")
    if choice == "luenberger":
        return ("luenberger",)
    if choice == "sosml":
        return ("sosml",)
    return None  # auto: sosml, plus luenberger when gains are configured


def _gains_report(cfg: ScenarioConfig) -> str:
    lines = []
    cond = analysis.check_gain_condition(cfg.sosml)
    lines.append("gain inequality 4*alpha0*k_alpha0 > 8*k_lambda0^2*alpha0 "
                 "+ 9*lambda0^2*k_lambda0^2")
    lines.append(f"  margin = {_fmt(cond.margin)}  "
                 f"verdict = {'PASS' if cond.satisfied else 'FAIL'}")
    mats = analysis.build_matrices(cfg.sosml)
    for name, M in (("P", mats.P), ("Omega1", mats.Omega1), ("Omega2", mats.Omega2)):
        eigs = np.linalg.eigvalsh(M)
        lines.append(f"  eig({name}) = " + ", ".join(_fmt(v) for v in eigs))
    lines.append(f"  gamma1 = {_fmt(mats.gamma1)}  gamma3 = {_fmt(mats.gamma3)}  "
                 f"gamma4 = {_fmt(mats.gamma4)}")
    lines.append(f"  gamma2 = {_fmt(mats.gamma2_per_bound)} per unit disturbance bound")

    period = cfg.pwm.period
    traj = trajectory_from_pwm(cfg.pwm, 0.0, period, cfg.params.p,
                               step=min(cfg.dt, period / 40.0))
    scale = cfg.sosml.kappa / cfg.params.L
    pe = analysis.pe_check(traj, window=period, scale=scale)
    lines.append("excitation over one carrier period "
                 f"(window {_fmt(period)} s, scale {_fmt(scale)} 1/s):")
    lines.append(f"  min eig of Gram integral = {_fmt(pe.min_eig)}  "
                 f"worst window start = {_fmt(pe.worst_start)}")

    if cfg.luenberger is not None:
        rep = certify_gains(cfg.luenberger, cfg.params, energy_weights(cfg.params))
        lines.append("luenberger certification with diag(L, c1, c2):")
        lines.append(f"  verdict = {'PASS' if rep.passed else 'FAIL'}")
        if rep.min_eigs:
            lines.append("  max eig per inequality = "
                         + ", ".join(_fmt(v) for v in rep.max_eigs))
        if rep.failure:
            lines.append(f"  detail: {rep.failure}")
    return "\n".join(lines) + "\n"


def _metrics_report(ts: sim.TimeSeries, cfg: ScenarioConfig,
                    settle_threshold: float = 0.5) -> str:
    lines = [f"settle threshold = {_fmt(settle_threshold)}"]
    stats = sim.metrics(ts, settle_threshold)
    for key in sorted(stats):
        ch = stats[key]
        if ch.convergence_time is None:
            lines.append(f"{key}: never settles below threshold")
        else:
            lines.append(
                f"{key}: convergence_time = {_fmt(ch.convergence_time)} s  "
                f"rmse = {_fmt(ch.rmse)}  max_post = {_fmt(ch.max_post)}"
            )
    t_from = 0.75 * cfg.t_end
    lines.append(f"steady-state window [{_fmt(t_from)}, {_fmt(cfg.t_end)}] s:")
    for key, val in sorted(sim.steady_state_rmse(ts, t_from).items()):
        lines.append(f"  rmse {key} = {_fmt(val)}")
    return "\n".join(lines) + "\n"


def _cmd_simulate(args) -> int:
    cfg = _load(args.config)
    observers = _observers(cfg, args.observer)
    if observers and "luenberger" in observers and cfg.luenberger is None:
        cfg = replace(cfg, luenberger=default_gains(cfg.params))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ts = sim.run_scenario(cfg, observers)
    with open(out / "timeseries.csv", "w", encoding="utf-8") as fh:
        sim.write_csv(ts, fh)
    with open(out / "metrics.txt", "w", encoding="utf-8") as fh:
        fh.write(_metrics_report(ts, cfg))
    with open(out / "gains_report.txt", "w", encoding="utf-8") as fh:
        fh.write(_gains_report(cfg))
    print(f"wrote {out / 'timeseries.csv'}, metrics.txt, gains_report.txt")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _load(args.config)
    if cfg.luenberger is None:
        cfg = replace(cfg, luenberger=default_gains(cfg.params))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ts = sim.run_scenario(cfg, ("sosml", "luenberger"))
    with open(out / "timeseries.csv", "w", encoding="utf-8") as fh:
        sim.write_csv(ts, fh)
    with open(out / "metrics.txt", "w", encoding="utf-8") as fh:
        fh.write(_metrics_report(ts, cfg))
    t_from = 0.75 * cfg.t_end
    rmse = sim.steady_state_rmse(ts, t_from)
    print(f"steady-state rmse over [{_fmt(t_from)}, {_fmt(cfg.t_end)}] s")
    print(f"{'observer':<12} {'e1 (A)':>14} {'e2 (V)':>14} {'e3 (V)':>14}")
    for name in ("sosml", "luenberger"):
        print(f"{name:<12} "
              f"{_fmt(rmse[f'{name}.e1']):>14} "
              f"{_fmt(rmse[f'{name}.e2']):>14} "
              f"{_fmt(rmse[f'{name}.e3']):>14}")
    return EXIT_OK


def _cmd_analyze_gains(args) -> int:
    cfg = _load(args.config)
    sys.stdout.write(_gains_report(cfg))
    return EXIT_OK


def _parse_mode_list(text: str):
    """Mode lists look like `[1,0,0];[1,1,0]` (whitespace and newlines allowed)."""
    vectors = []
    for chunk in text.replace("\n", ";").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not (chunk.startswith("[") and chunk.endswith("]")):
            raise ModeListError(f"expected a bracketed switch vector, got {chunk!r}")
        try:
            bits = tuple(int(b.strip()) for b in chunk[1:-1].split(","))
        except ValueError:
            raise ModeListError(f"non-integer switch entry in {chunk!r}") from None
        if any(b not in (0, 1) for b in bits):
            raise ModeListError(f"switch entries must be 0 or 1 in {chunk!r}")
        vectors.append(bits)
    if not vectors:
        raise ModeListError("empty mode list")
    if len({len(v) for v in vectors}) != 1:
        raise ModeListError("switch vectors have inconsistent lengths")
    return vectors


def _cmd_check_observability(args) -> int:
    cfg = _load(args.config)
    p = cfg.params.p
    if p == 3:
        print("per-mode observability (rank of [C; CA; CA^2]):")
        print(f"{'mode':<6}{'S':<10}{'u1':>4}{'u2':>4}  {'rank':>4}  observable")
        for row in mode_table(3):
            m = derive_inputs(row.S)
            rep = observability_matrix(m, cfg.params)
            bits = "".join(str(s) for s in row.S)
            print(f"{row.index:<6}{bits:<10}{row.u[0]:>4}{row.u[1]:>4}  "
                  f"{rep.rank:>4}  {', '.join(row.observable)}")
    if args.modes:
        with open(args.modes, "r", encoding="utf-8") as fh:
            vectors = _parse_mode_list(fh.read())
        if any(len(v) != p for v in vectors):
            raise ModeListError(
                f"switch vectors have {len(vectors[0])} entries, expected {p}"
            )
        traj = trajectory_from_modes(vectors)
        source = f"mode list {args.modes}"
    else:
        period = cfg.pwm.period
        traj = trajectory_from_pwm(cfg.pwm, 0.0, period, p,
                                   step=min(cfg.dt, period / 40.0))
        source = "one carrier period of the configured PWM"
    result = z_observability_check(traj, params=cfg.params)
    print(f"trajectory source: {source}")
    print(format_z_report(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flycap",
        description="Multi-cell converter simulation and capacitor-voltage "
                    "estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario and write CSV/reports")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--observer", choices=("sosml", "luenberger", "both", "auto"),
                       default="auto")
    p_sim.set_defaults(func=_cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run both observers and print the "
                                           "steady-state error table")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=_cmd_compare)

    p_gain = sub.add_parser("analyze-gains", help="certificate matrices, gain "
                                                  "inequality and excitation check")
    p_gain.add_argument("--config", required=True)
    p_gain.set_defaults(func=_cmd_analyze_gains)

    p_obs = sub.add_parser("check-observability", help="per-mode ranks and the "
                                                       "trajectory observability verdict")
    p_obs.add_argument("--config", required=True)
    p_obs.add_argument("--modes", help="path to a `[S1,S2,S3];[...]` mode list")
    p_obs.set_defaults(func=_cmd_check_observability)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModeListError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
