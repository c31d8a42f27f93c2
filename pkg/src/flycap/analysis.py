"""Numerical stability certificates for the adaptive observer.

Three pieces of machinery:

* the quadratic certificate for the current-error subsystem in the scaled
  coordinates (sqrt(l)|e1|^(1/2)sign(e1), l e1, phi1), built from the four
  base gains (`build_matrices`, `check_gain_condition`);
* the Lyapunov value evaluated along a recorded simulation
  (`lyapunov_along_trajectory`);
* the persistence-of-excitation test on a switching trajectory: the Gram
  integral of Psi = sqrt(scale) * (u1, u2) over a sliding window must stay
  uniformly positive definite for the voltage errors to decay exponentially
  (`pe_check`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sosml import SosmlParams, sign
from .switching import HybridTimeTrajectory

__all__ = [
    "PD_TOLERANCE",
    "LyapunovMatrices",
    "GainConditionReport",
    "PeReport",
    "build_matrices",
    "check_gain_condition",
    "error_coordinates",
    "lyapunov_along_trajectory",
    "pe_check",
    "is_positive_definite",
    "write_certificate_csv",
]

# Positive definiteness threshold: min eigenvalue relative to max.
PD_TOLERANCE = 1e-10


@dataclass(frozen=True)
class GainConditionReport:
    """Verdict of the base-gain inequality 4 a0 ka0 > 8 kl0^2 a0 + 9 l0^2 kl0^2."""

    margin: float
    satisfied: bool


def check_gain_condition(prm: SosmlParams) -> GainConditionReport:
    margin = prm.gain_condition_margin
    return GainConditionReport(margin=margin, satisfied=margin > 0.0)


@dataclass(frozen=True)
class LyapunovMatrices:
    """Certificate matrices for the scaled error coordinates.

    P defines the Lyapunov function V = z' P z; Omega1/Omega2 bound its decay
    (both are positive definite exactly when the gain inequality holds; P is
    positive definite for any positive gains).  Q dominates the adaptation
    term.  gamma1/gamma3/gamma4 are the decay-rate constants; the constant
    multiplying the unknown disturbance bound is reported per unit bound as
    gamma2_per_bound, since the bound itself is not computable.
    """

    P: np.ndarray
    Omega1: np.ndarray
    Omega2: np.ndarray
    Q: np.ndarray
    gamma1: float
    gamma2_per_bound: float
    gamma3: float
    gamma4: float


def build_matrices(prm: SosmlParams) -> LyapunovMatrices:
    l0, a0 = prm.lambda0, prm.alpha0
    kl0, ka0 = prm.k_lambda0, prm.k_alpha0
    P = 0.5 * np.array([
        [4.0 * a0 + l0 ** 2, l0 * kl0, -l0],
        [l0 * kl0, kl0 ** 2 + 2.0 * ka0, -kl0],
        [-l0, -kl0, 2.0],
    ])
    Omega1 = (l0 / 2.0) * np.array([
        [l0 ** 2 + 2.0 * a0, 0.0, -l0],
        [0.0, 2.0 * ka0 + 5.0 * kl0 ** 2, -3.0 * kl0],
        [-l0, -3.0 * kl0, 1.0],
    ])
    Omega2 = kl0 * np.array([
        [a0 + 2.0 * l0 ** 2, 0.0, 0.0],
        [0.0, ka0 + kl0 ** 2, -kl0],
        [0.0, -kl0, 1.0],
    ])
    Q = np.diag([
        4.0 * a0 + l0 ** 2 + l0 * kl0 + l0 / 2.0,
        2.0 * ka0 * kl0 ** 2 + l0 * kl0 + kl0 / 2.0,
        (l0 + kl0) / 2.0,
    ])
    p_eigs = np.linalg.eigvalsh(P)
    o1_eigs = np.linalg.eigvalsh(Omega1)
    o2_eigs = np.linalg.eigvalsh(Omega2)
    q_norm = math.sqrt(l0 ** 2 + kl0 ** 2 + 4.0)
    return LyapunovMatrices(
        P=P,
        Omega1=Omega1,
        Omega2=Omega2,
        Q=Q,
        gamma1=float(o1_eigs[0] / math.sqrt(p_eigs[-1])),
        gamma2_per_bound=float(q_norm / math.sqrt(p_eigs[0])),
        gamma3=float(o2_eigs[0] / p_eigs[-1]),
        gamma4=float(np.max(Q) / (2.0 * p_eigs[0])),
    )


def is_positive_definite(M: np.ndarray, tolerance: float = PD_TOLERANCE) -> bool:
    eigs = np.linalg.eigvalsh(np.asarray(M, dtype=float))
    return bool(eigs[0] > tolerance * abs(eigs[-1]))


def error_coordinates(e1: float, l: float, phi1: float) -> np.ndarray:
    """Scaled coordinates (sqrt(l)|e1|^(1/2)sign(e1), l e1, phi1)."""
    if l <= 0:
        raise ValueError(f"the adaptive factor must be positive, got {l}")
    s = sign(e1)
    return np.array([math.sqrt(l) * math.sqrt(abs(e1)) * s, l * e1, phi1])


def lyapunov_along_trajectory(record, prm: SosmlParams) -> np.ndarray:
    """V = z' P z per recorded step; the convergence diagnostic for the observer.

    `record` must expose per-step arrays e1, l, sigma_sign and sigma_lin;
    phi1 is assembled as alpha(t) * sigma_sign + k_alpha(t) * sigma_lin with
    the gains at the recorded l.
    """
    for name in ("e1", "l", "sigma_sign", "sigma_lin"):
        if getattr(record, name, None) is None:
            raise ValueError(f"record lacks the per-step '{name}' series")
    e1 = np.asarray(record.e1, dtype=float)
    l = np.asarray(record.l, dtype=float)
    ss = np.asarray(record.sigma_sign, dtype=float)
    sl = np.asarray(record.sigma_lin, dtype=float)
    P = build_matrices(prm).P
    phi1 = prm.alpha0 * l * ss + prm.k_alpha0 * l ** 2 * sl
    z1 = np.sqrt(l) * np.sqrt(np.abs(e1)) * np.sign(e1)
    z2 = l * e1
    Z = np.stack([z1, z2, phi1], axis=1)
    return np.einsum("ni,ij,nj->n", Z, P, Z)


@dataclass(frozen=True)
class PeReport:
    """Worst-window Gram-integral statistics of the switching signal."""

    min_eig: float
    worst_start: float
    window: float
    scale: float


def _cumulative_gram(traj: HybridTimeTrajectory):
    """Breakpoints t_k and cumulative integral of (u1,u2)(u1,u2)' up to t_k."""
    bounds = [traj.intervals[0].t_start]
    cum = [np.zeros((2, 2))]
    for iv in traj.intervals:
        u = np.array([iv.mode.u[0], iv.mode.u[1]], dtype=float)
        cum.append(cum[-1] + np.outer(u, u) * iv.duration)
        bounds.append(iv.t_end)
    return np.array(bounds), np.array(cum)


def _gram_at(bounds, cum, traj, tau) -> np.ndarray:
    """Cumulative Gram integral from t_ini to tau (piecewise-linear in tau)."""
    idx = int(np.searchsorted(bounds, tau, side="right")) - 1
    idx = min(max(idx, 0), len(traj.intervals) - 1)
    iv = traj.intervals[idx]
    u = np.array([iv.mode.u[0], iv.mode.u[1]], dtype=float)
    return cum[idx] + np.outer(u, u) * (tau - bounds[idx])


def pe_check(
    traj: HybridTimeTrajectory,
    window: float,
    scale: float,
) -> PeReport:
    """Minimum eigenvalue of scale * Int_{t}^{t+window} (u1,u2)(u1,u2)' dtau over all t.

    Exact for the piecewise-constant switching signal: the Gram integral is
    linear in the window start between breakpoints and its least eigenvalue
    is concave along matrix lines, so scanning window starts at interval
    boundaries (and boundaries shifted back by the window) attains the true
    minimum.  `window` defaults to one carrier period at call sites; `scale`
    is the injection-over-inductance factor of the reduced voltage-error
    dynamics.
    """
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    t0, t1 = traj.t_ini, traj.t_end
    if window > t1 - t0 + 1e-15 * max(abs(t1), 1.0):
        raise ValueError(
            f"window {window} exceeds the trajectory span {t1 - t0}"
        )
    bounds, cum = _cumulative_gram(traj)
    starts = set()
    for b in bounds:
        for cand in (b, b - window):
            if t0 <= cand <= t1 - window:
                starts.add(float(cand))
    starts.add(t0)
    best_eig, best_start = math.inf, t0
    for s in sorted(starts):
        G = _gram_at(bounds, cum, traj, s + window) - _gram_at(bounds, cum, traj, s)
        eig = float(np.linalg.eigvalsh(G)[0])
        if eig < best_eig:
            best_eig, best_start = eig, s
    return PeReport(
        min_eig=scale * best_eig, worst_start=best_start, window=window, scale=scale
    )


def write_certificate_csv(prm: SosmlParams, fh, pe: PeReport | None = None) -> None:
    """Dump the certificate report as quantity,value CSV rows.

    Covers the gain-inequality margin, the entries and eigenvalues of P,
    Omega1, Omega2 and Q, the decay constants, and (optionally) the
    excitation statistics.
    """
    def put(name, value):
        fh.write(f"{name},{format(float(value), '.9g')}\n")

    fh.write("quantity,value\n")
    cond = check_gain_condition(prm)
    put("gain_condition_margin", cond.margin)
    fh.write(f"gain_condition_satisfied,{int(cond.satisfied)}\n")
    mats = build_matrices(prm)
    for name, M in (("P", mats.P), ("Omega1", mats.Omega1),
                    ("Omega2", mats.Omega2), ("Q", mats.Q)):
        for i in range(3):
            for j in range(3):
                put(f"{name}[{i}][{j}]", M[i, j])
        for k, eig in enumerate(np.linalg.eigvalsh(M)):
            put(f"eig({name})[{k}]", eig)
    put("gamma1", mats.gamma1)
    put("gamma2_per_bound", mats.gamma2_per_bound)
    put("gamma3", mats.gamma3)
    put("gamma4", mats.gamma4)
    if pe is not None:
        put("pe_min_eig", pe.min_eig)
        put("pe_window", pe.window)
        put("pe_scale", pe.scale)
        put("pe_worst_start", pe.worst_start)
