"""Phase-shifted carrier PWM and hybrid time trajectories.

Each cell j compares a rising sawtooth carrier against its duty ratio; the
carrier of cell j lags cell 0 by j * phase_shift carrier periods.  A hybrid
time trajectory is the resulting ordered list of maximal constant-mode
intervals, contiguous from t_ini to t_end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .converter import ModeVector, derive_inputs

__all__ = [
    "PwmConfig",
    "Interval",
    "HybridTimeTrajectory",
    "pwm_mode_at",
    "trajectory_from_pwm",
    "trajectory_from_modes",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class PwmConfig:
    """Carrier frequency (Hz), per-cell duty ratios, and inter-cell phase shift.

    phase_shift is a fraction of the carrier period; 1/p spreads the cells
    evenly, which is what makes every informative switching mode occur.
    """

    f_chop: float = 5000.0
    duty: tuple[float, ...] = (0.5, 0.5, 0.5)
    phase_shift: float = 1.0 / 3.0

    def __post_init__(self):
        object.__setattr__(self, "duty", tuple(float(d) for d in self.duty))
        if self.f_chop <= 0:
            raise ValueError(f"carrier frequency must be positive, got {self.f_chop}")
        if any(not (0.0 <= d <= 1.0) for d in self.duty):
            raise ValueError(f"duty ratios must lie in [0, 1], got {self.duty}")
        if not (0.0 <= self.phase_shift < 1.0):
            raise ValueError(f"phase shift must lie in [0, 1), got {self.phase_shift}")

    @property
    def period(self) -> float:
        return 1.0 / self.f_chop


def pwm_mode_at(t: float, cfg: PwmConfig, p: int) -> ModeVector:
    """Switch mode at time t: S_j = 1 iff cell j's carrier is strictly below its duty.

    Carrier j is the sawtooth frac(t * f_chop - j * phase_shift); ties
    resolve to switch-off.  The comparison carries a 1e-12 guard band so an
    analytic tie (carrier exactly at duty) lands on the off side regardless
    of how the instant was computed, keeping the sampled pattern exactly
    periodic.
    """
    if len(cfg.duty) != p:
        raise ValueError(f"config has {len(cfg.duty)} duty ratios, expected {p}")
    S = tuple(
        1 if (t * cfg.f_chop - j * cfg.phase_shift) % 1.0 < cfg.duty[j] - 1e-12 else 0
        for j in range(p)
    )
    return derive_inputs(S)


@dataclass(frozen=True)
class Interval:
    """Half-open time interval [t_start, t_end) with a constant mode."""

    t_start: float
    t_end: float
    mode: ModeVector

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(
                f"interval must have positive length, got [{self.t_start}, {self.t_end})"
            )

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class HybridTimeTrajectory:
    """Contiguous sequence of constant-mode intervals covering [t_ini, t_end]."""

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if not self.intervals:
            raise ValueError("a hybrid time trajectory needs at least one interval")
        for a, b in zip(self.intervals, self.intervals[1:]):
            if a.t_end != b.t_start:
                raise ValueError(
                    f"intervals not contiguous: [{a.t_start}, {a.t_end}) then "
                    f"[{b.t_start}, {b.t_end})"
                )

    @property
    def t_ini(self) -> float:
        return self.intervals[0].t_start

    @property
    def t_end(self) -> float:
        return self.intervals[-1].t_end

    @property
    def span(self) -> float:
        return self.t_end - self.t_ini

    def modes(self) -> list[ModeVector]:
        return [iv.mode for iv in self.intervals]


def trajectory_from_pwm(
    cfg: PwmConfig,
    t_ini: float,
    t_end: float,
    p: int,
    step: float = 5e-6,
) -> HybridTimeTrajectory:
    """Maximal constant-mode segments of the PWM pattern over [t_ini, t_end].

    The pattern is sampled on the simulation grid rather than solving carrier
    crossings analytically; with >= 40 samples per carrier period the mode
    sequence is exact for the default configuration (edges land on the grid
    to within one step).
    """
    if not t_ini < t_end:
        raise ValueError(f"degenerate window [{t_ini}, {t_end}]")
    if step <= 0:
        raise ValueError(f"sampling step must be positive, got {step}")
    # Fix the sample count up front; comparing accumulated floats against
    # t_end would occasionally emit a one-sample sliver at the far boundary.
    n = int(math.ceil((t_end - t_ini) / step - 1e-9))
    intervals = []
    start = t_ini
    current = pwm_mode_at(t_ini, cfg, p)
    for i in range(1, n):
        t = t_ini + i * step
        m = pwm_mode_at(t, cfg, p)
        if m != current:
            intervals.append(Interval(start, t, current))
            start, current = t, m
    intervals.append(Interval(start, t_end, current))
    return HybridTimeTrajectory(tuple(intervals))


def trajectory_from_modes(switch_vectors, dwell: float = 1.0) -> HybridTimeTrajectory:
    """Build a synthetic trajectory from a list of switch vectors, one interval each.

    Dwell times are arbitrary for observability checks, which only look at
    the ordered mode sequence.
    """
    if not switch_vectors:
        raise ValueError("empty mode list")
    intervals = []
    t = 0.0
    for S in switch_vectors:
        m = derive_inputs(S)
        intervals.append(Interval(t, t + dwell, m))
        t += dwell
    return HybridTimeTrajectory(tuple(intervals))


def write_trajectory_csv(traj: HybridTimeTrajectory, fh) -> None:
    """Dump a trajectory as CSV rows (t_start, t_end, S bits, u values)."""
    p = traj.intervals[0].mode.p
    s_cols = ",".join(f"S{j + 1}" for j in range(p))
    u_cols = ",".join(f"u{j + 1}" for j in range(p))
    fh.write(f"t_start,t_end,{s_cols},{u_cols}\n")
    for iv in traj.intervals:
        bits = ",".join(str(s) for s in iv.mode.S)
        us = ",".join(str(v) for v in iv.mode.u)
        fh.write(f"{iv.t_start:.9g},{iv.t_end:.9g},{bits},{us}\n")
