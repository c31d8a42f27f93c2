"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
line (run with -s to see them).

Pinned reference values come from scripts/make_reference.py, which rebuilds
the dt = 0.5 us oracle runs and the exact piecewise-affine solution used to
cross-check the integrator.
"""

import io
import math
import time
from dataclasses import replace

import numpy as np

from flycap.analysis import build_matrices, check_gain_condition, is_positive_definite, pe_check
from flycap.converter import all_switch_vectors, derive_inputs, mode_table
from flycap.observability import observability_matrix, z_observability_check
from flycap.sim import (
    LoadVariation,
    NoiseConfig,
    ScenarioConfig,
    metrics,
    run_scenario,
    write_csv,
)
from flycap.sosml import SosmlParams, certified_gains, nominal_gains
from flycap.switching import PwmConfig, trajectory_from_modes, trajectory_from_pwm

PERIOD = 200e-6

# dt = 0.5 us oracle, stock scenario: first time |e2| (resp. |e3|) drops
# below 0.5 V for good.
T_E2_ORACLE = 0.028729
T_E3_ORACLE = 0.0285715


def report(num, ok, text):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {text}")
    assert ok, f"criterion {num} failed: {text}"


def test_criterion_1_rank_deficiency(params):
    modes = [derive_inputs(S) for S in all_switch_vectors(3)]
    ranks = [observability_matrix(m, params).rank for m in modes]  # warmup
    t0 = time.perf_counter()
    ranks = [observability_matrix(m, params).rank for m in modes]
    elapsed = time.perf_counter() - t0
    ok = all(r <= 2 for r in ranks) and ranks[2] == 2 and ranks[5] == 2 \
        and elapsed < 1e-3
    report(1, ok, f"ranks {ranks}, 8 modes in {elapsed * 1e3:.3f} ms")


def test_criterion_2_mode_table():
    expected = [
        ((0, 0, 0), (0, 0), ("I",)),
        ((0, 0, 1), (0, 1), ("I", "Vc2")),
        ((0, 1, 0), (1, -1), ("I", "Vc1", "Vc2")),
        ((0, 1, 1), (1, 0), ("I", "Vc1")),
        ((1, 0, 0), (-1, 0), ("I", "Vc1")),
        ((1, 0, 1), (-1, 1), ("I", "Vc1", "Vc2")),
        ((1, 1, 0), (0, -1), ("I", "Vc2")),
        ((1, 1, 1), (0, 0), ("I",)),
    ]
    rows = mode_table(3)
    ok = len(rows) == 8 and all(
        (r.S, r.u, r.observable) == e for r, e in zip(rows, expected)
    )
    report(2, ok, "eight switching modes with observable-state labels")


def test_criterion_3_trajectory_verdicts(params):
    good = z_observability_check(
        trajectory_from_modes([(1, 0, 0), (1, 1, 0)]), params=params).passed
    bad0 = z_observability_check(
        trajectory_from_modes([(0, 0, 0)]), params=params).passed
    bad7 = z_observability_check(
        trajectory_from_modes([(1, 1, 1)]), params=params).passed
    ok = good and not bad0 and not bad7
    report(3, ok, f"[100],[110] -> {good}; [000] -> {bad0}; [111] -> {bad7}")


def test_criterion_4_nominal_convergence(nominal_cfg):
    t0 = time.perf_counter()
    ts = run_scenario(nominal_cfg, ("sosml",))
    elapsed = time.perf_counter() - t0
    stats = metrics(ts, settle_threshold=0.5)
    t2, t3 = stats["sosml.e2"].convergence_time, stats["sosml.e3"].convergence_time
    ok = (
        t2 is not None and t3 is not None
        and abs(t2 - T_E2_ORACLE) <= 0.10 * T_E2_ORACLE
        and abs(t3 - T_E3_ORACLE) <= 0.10 * T_E3_ORACLE
        and stats["sosml.e2"].max_post < 0.5
        and stats["sosml.e3"].max_post < 0.5
        and elapsed < 5.0
    )
    report(4, ok, f"conv times ({t2:.6f}, {t3:.6f}) s vs oracle "
                  f"({T_E2_ORACLE}, {T_E3_ORACLE}), 20000 steps in {elapsed:.2f} s")


def test_criterion_5_sliding_regime(nominal_run, nominal_cfg):
    s = nominal_run.sosml
    t = nominal_run.t
    eps = nominal_cfg.sosml.eps_dz
    outside = np.abs(s.e1) > 2 * eps
    ok_enter = outside.any() and not outside[-1]
    t_enter = t[np.nonzero(outside)[0][-1] + 1] if ok_enter else None
    growing = np.nonzero(np.diff(s.l) > 0)[0]
    t_freeze = t[growing[-1] + 1] if growing.size else 0.0
    t_slide = max(t_enter, t_freeze) if ok_enter else None
    ok = (
        ok_enter
        and t_slide < nominal_cfg.t_end
        and np.all(np.abs(s.e1[t >= t_slide]) <= 2 * eps)
        and np.all(s.l[t >= t_slide] == s.l[-1])
    )
    report(5, ok, f"|e1| within 2*eps and l frozen at {s.l[-1]:g} from "
                  f"t = {t_slide if t_slide is not None else float('nan'):.6f} s")


def test_criterion_6_robustness_ordering(luen_gains):
    wins = []
    for seed in range(10):
        cfg = ScenarioConfig(
            luenberger=luen_gains,
            noise=NoiseConfig(kind="uniform", amplitude=0.02, seed=seed),
            load=LoadVariation(t_switch=0.05, factor=1.5),
        )
        ts = run_scenario(cfg, ("sosml", "luenberger"))
        # post-convergence window: 10 ms after the load step, by which the
        # sliding observer has re-converged; voltage error taken as the
        # (e2, e3) vector norm
        w = ts.t >= cfg.load.t_switch + 0.01
        ev_s = math.sqrt(float(np.mean(ts.sosml.e2[w] ** 2 + ts.sosml.e3[w] ** 2)))
        ev_l = math.sqrt(float(np.mean(ts.luen.e2[w] ** 2 + ts.luen.e3[w] ** 2)))
        wins.append(ev_s < ev_l)
    ok = all(wins)
    report(6, ok, f"sliding observer beats the baseline on {sum(wins)}/10 seeds")


def test_criterion_7_gain_condition_checker():
    stock = check_gain_condition(nominal_gains())
    compliant = check_gain_condition(certified_gains())
    ok = (stock.margin == -105.0 and not stock.satisfied
          and compliant.satisfied and compliant.margin == 303.0)
    report(7, ok, f"stock margin {stock.margin}, certified preset margin "
                  f"{compliant.margin}")


def test_criterion_8_certificate_positivity():
    rng = np.random.default_rng(2024)
    good = 0
    tried = 0
    while good < 1000:
        tried += 1
        prm = SosmlParams(
            lambda0=float(rng.uniform(0.05, 5.0)),
            alpha0=float(rng.uniform(0.05, 5.0)),
            k_lambda0=float(rng.uniform(0.02, 2.0)),
            k_alpha0=float(rng.uniform(0.05, 5.0)),
        )
        if not prm.gain_condition_ok:
            continue
        mats = build_matrices(prm)
        assert is_positive_definite(mats.P), prm
        assert is_positive_definite(mats.Omega1), prm
        assert is_positive_definite(mats.Omega2), prm
        good += 1
    report(8, True, f"P, Omega1, Omega2 positive definite for {good}/1000 "
                    f"compliant tuples ({tried} sampled)")


def test_criterion_9_persistence_of_excitation(nominal_cfg):
    scale = nominal_cfg.sosml.kappa / nominal_cfg.params.L
    traj = trajectory_from_pwm(PwmConfig(), 0.0, PERIOD, 3)
    excited = pe_check(traj, window=PERIOD, scale=scale).min_eig
    silent = pe_check(trajectory_from_modes([(0, 0, 0)], dwell=PERIOD),
                      window=PERIOD, scale=scale).min_eig
    ok = excited > 0.0 and silent == 0.0
    report(9, ok, f"Gram min eig {excited:.6g} over one carrier period; "
                  f"exactly {silent} for the frozen mode")


def test_criterion_10_reduced_order_decay(nominal_run, nominal_cfg):
    s = nominal_run.sosml
    t = nominal_run.t
    eps = nominal_cfg.sosml.eps_dz
    outside = np.abs(s.e1) > 2 * eps
    growing = np.nonzero(np.diff(s.l) > 0)[0]
    t_slide = max(t[np.nonzero(outside)[0][-1] + 1], t[growing[-1] + 1])
    per = int(round(PERIOD / nominal_cfg.dt))
    k0 = int(np.ceil(t_slide / PERIOD))
    ev = np.sqrt(s.e2 ** 2 + s.e3 ** 2)[::per]
    tt = t[::per]
    # decay window: from sliding establishment until the error reaches 1 mV
    # (three decades below the settling threshold); past that it sits on the
    # dead-zone floor
    below = np.nonzero(ev[k0:] < 1e-3)[0]
    k1 = k0 + (int(below[0]) if below.size else len(ev[k0:]) - 1)
    window = ev[k0:k1 + 1]
    slope = np.polyfit(tt[k0:k1 + 1], np.log(window), 1)[0]
    ok = (
        window.size >= 10
        and np.all(np.diff(window) < 0)
        and slope < 0
        and np.all(ev[k1:] < 1e-2)
    )
    report(10, ok, f"||e_V|| per period decays {window[0]:.3g} -> "
                   f"{window[-1]:.3g} V, log-slope {slope:.1f} 1/s")


def test_criterion_11a_determinism(nominal_cfg, nominal_run):
    second = run_scenario(nominal_cfg, ("sosml",))
    a, b = io.StringIO(), io.StringIO()
    write_csv(nominal_run, a)
    write_csv(second, b)
    ok = a.getvalue() == b.getvalue()
    report("11a", ok, "identical config and seed give bit-identical CSV")


def test_criterion_11b_step_refinement(nominal_cfg, nominal_run):
    """Halving dt is required to move the plant's final state by < 1%.

    This does not hold for this plant at dt = 5 us over 0.1 s: the global
    first-order error of the explicit step is ~3-6% (verified against the
    exact piecewise-affine solution; see notes and
    test_plant_integration_first_order_consistency below, which confirms the
    O(dt) behavior the refinement is meant to witness).  The criterion is
    asserted as stated and is expected to fail.
    """
    fine = run_scenario(replace(nominal_cfg, dt=2.5e-6), ("sosml",))
    xa = np.array([nominal_run.I[-1], *nominal_run.Vc[-1]])
    xb = np.array([fine.I[-1], *fine.Vc[-1]])
    rel = float(np.linalg.norm(xa - xb) / np.linalg.norm(xa))
    ok = rel < 0.01
    report("11b", ok, f"plant final-state change on halving dt: {rel * 100:.2f}%")


def _expm(M):
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


def test_plant_integration_first_order_consistency(nominal_cfg, params):
    """Supplementary to 11b: the plant integrator is first-order consistent.

    Against the exact per-interval affine solution (augmented matrix
    exponential), the final-state error halves when dt halves.
    """
    from flycap.converter import plant_rhs, system_matrices

    traj = trajectory_from_pwm(nominal_cfg.pwm, 0.0, nominal_cfg.t_end, 3,
                               step=nominal_cfg.dt)
    x = np.array([nominal_cfg.x0.I, *nominal_cfg.x0.Vc])
    for iv in traj.intervals:
        mats = system_matrices(iv.mode, params)
        aug = np.zeros((4, 4))
        aug[:3, :3] = mats.A
        aug[:3, 3] = mats.B
        E = _expm(aug * iv.duration)
        x = E[:3, :3] @ x + E[:3, 3]

    def euler(dt):
        I, Vc = nominal_cfg.x0.I, list(nominal_cfg.x0.Vc)
        idx = 0
        n = int(round(traj.span / dt))
        for i in range(n):
            t = i * dt
            while idx + 1 < len(traj.intervals) and t >= traj.intervals[idx].t_end - 1e-15:
                idx += 1
            dI, dVc = plant_rhs(I, Vc, traj.intervals[idx].mode.u, params)
            I += dt * dI
            for j in range(2):
                Vc[j] += dt * dVc[j]
        return np.array([I, *Vc])

    err5 = np.linalg.norm(euler(5e-6) - x)
    err25 = np.linalg.norm(euler(2.5e-6) - x)
    ratio = err5 / err25
    assert 1.6 < ratio < 2.4, f"error ratio {ratio} is not first-order"
