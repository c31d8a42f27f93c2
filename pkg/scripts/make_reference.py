#!/usr/bin/env python3
"""Regenerate the pinned reference numbers used by the test suite.

Runs the stock scenario at dt = 0.5 us for both observers, reports the
settling times frozen into the tests, and cross-checks the plant integrator
against the exact piecewise-affine solution.
"""

import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from flycap.converter import plant_rhs, system_matrices  # noqa: E402
from flycap.luenberger import default_gains  # noqa: E402
from flycap.sim import ScenarioConfig, metrics, run_scenario  # noqa: E402
from flycap.switching import trajectory_from_pwm  # noqa: E402


def expm(M):
    norm = np.abs(M).sum(axis=1).max()
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-30)))) + 1)
    A = M / (2.0 ** squarings)
    E = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, 18):
        term = term @ A / k
        E = E + term
    for _ in range(squarings):
        E = E @ E
    return E


def main():
    cfg = ScenarioConfig(luenberger=default_gains(ScenarioConfig().params))

    print("== stock scenario, dt = 0.5 us oracle ==")
    t0 = time.perf_counter()
    fine = run_scenario(replace(cfg, dt=5e-7), ("sosml", "luenberger"))
    print(f"   ({time.perf_counter() - t0:.1f} s)")
    stats = metrics(fine, settle_threshold=0.5)
    print(f"sosml conv e2 = {stats['sosml.e2'].convergence_time!r}")
    print(f"sosml conv e3 = {stats['sosml.e3'].convergence_time!r}")
    ev = np.sqrt(fine.luen.e2 ** 2 + fine.luen.e3 ** 2)
    above = ev >= 0.5
    last = np.nonzero(above)[0][-1]
    print(f"luenberger ||e_V|| settle = {fine.t[last + 1]!r}")

    print("== stock scenario, dt = 5 us ==")
    coarse = run_scenario(cfg, ("sosml", "luenberger"))
    stats5 = metrics(coarse, settle_threshold=0.5)
    print(f"sosml conv e2 = {stats5['sosml.e2'].convergence_time!r}")
    print(f"sosml conv e3 = {stats5['sosml.e3'].convergence_time!r}")
    print(f"l at end = {coarse.sosml.l[-1]!r}")

    print("== plant integrator vs exact piecewise-affine solution ==")
    traj = trajectory_from_pwm(cfg.pwm, 0.0, cfg.t_end, 3, step=cfg.dt)
    x = np.array([cfg.x0.I, *cfg.x0.Vc])
    for iv in traj.intervals:
        mats = system_matrices(iv.mode, cfg.params)
        aug = np.zeros((4, 4))
        aug[:3, :3] = mats.A
        aug[:3, 3] = mats.B
        E = expm(aug * iv.duration)
        x = E[:3, :3] @ x + E[:3, 3]
    print(f"exact final state: {x}")

    def euler(dt):
        I, Vc = cfg.x0.I, list(cfg.x0.Vc)
        idx = 0
        n = int(round(traj.span / dt))
        for i in range(n):
            t = i * dt
            while idx + 1 < len(traj.intervals) and t >= traj.intervals[idx].t_end - 1e-15:
                idx += 1
            dI, dVc = plant_rhs(I, Vc, traj.intervals[idx].mode.u, cfg.params)
            I += dt * dI
            for j in range(2):
                Vc[j] += dt * dVc[j]
        return np.array([I, *Vc])

    for dt in (5e-6, 2.5e-6, 1.25e-6):
        err = np.linalg.norm(euler(dt) - x)
        print(f"euler dt = {dt:g}: |error| = {err:.4f} "
              f"({err / np.linalg.norm(x) * 100:.2f}%)")

    a = np.array([coarse.I[-1], *coarse.Vc[-1]])
    half = run_scenario(replace(cfg, dt=2.5e-6), ("sosml",))
    b = np.array([half.I[-1], *half.Vc[-1]])
    print(f"coupled dt-halving final-state change: "
          f"{np.linalg.norm(a - b) / np.linalg.norm(a) * 100:.2f}%")


if __name__ == "__main__":
    main()
