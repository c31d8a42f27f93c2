"""Observability analysis: classical rank test and the trajectory-wise check.

The classical observability matrix [C; CA; ...; CA^(p-1)] of any single mode
is rank deficient (rank <= 2 for the 3-cell converter), so the capacitor
voltages are never recoverable from one mode alone.  Over a hybrid time
trajectory they can be: each interval exposes the voltages whose input is
active (u_j != 0), and if the union of exposed coordinates covers the target
vector while the unexposed ones stay constant (automatic here, since
dVcj/dt = 0 exactly when u_j = 0), the whole vector is observable along the
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .converter import ConverterParams, ModeVector, system_matrices
from .switching import HybridTimeTrajectory

__all__ = [
    "RANK_TOLERANCE",
    "ObservabilityReport",
    "IntervalWitness",
    "ZObservabilityResult",
    "observability_matrix",
    "observable_caps",
    "z_observability_check",
    "format_z_report",
]

# Relative singular-value threshold for rank decisions.  Matrix entries span
# ~10 orders of magnitude (1/(L*c) ~ 2.5e6), so an absolute cutoff is useless.
RANK_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ObservabilityReport:
    """Observability matrix of one mode with its numerical rank."""

    O: np.ndarray
    rank: int
    observable_subspace_dim: int
    tolerance: float


def observability_matrix(
    m, params: ConverterParams, tolerance: float = RANK_TOLERANCE
) -> ObservabilityReport:
    """Stack C, CA, ..., CA^(p-1) for A = A(u) and rank it via singular values.

    Accepts a ModeVector or a bare input vector u.
    """
    mats = system_matrices(m, params)
    rows = [mats.C]
    for _ in range(params.p - 1):
        rows.append(rows[-1] @ mats.A)
    O = np.vstack(rows)
    sv = np.linalg.svd(O, compute_uv=False)
    rank = int(np.count_nonzero(sv > tolerance * sv[0])) if sv[0] > 0 else 0
    return ObservabilityReport(
        O=O, rank=rank, observable_subspace_dim=rank, tolerance=tolerance
    )


def observable_caps(m: ModeVector) -> tuple[int, ...]:
    """1-based indices j of the capacitor voltages with u_j != 0 in this mode."""
    return tuple(j + 1 for j in range(m.p - 1) if m.u[j] != 0)


@dataclass(frozen=True)
class IntervalWitness:
    """Per-interval record: active mode, exposed target coordinates, projection."""

    t_start: float
    t_end: float
    mode: ModeVector
    exposed: tuple[int, ...]
    projection: np.ndarray


@dataclass(frozen=True)
class ZObservabilityResult:
    """Verdict of the trajectory-wise observability check with its witnesses."""

    passed: bool
    target: tuple[int, ...]
    witnesses: tuple[IntervalWitness, ...]
    stacked_rank: int
    failure: str | None = None


def _projection(selected, target) -> np.ndarray:
    """0/1 selection matrix picking `selected` out of the target coordinates."""
    P = np.zeros((len(selected), len(target)))
    for row, j in enumerate(selected):
        P[row, target.index(j)] = 1.0
    return P


def z_observability_check(
    traj: HybridTimeTrajectory,
    z_spec=None,
    params: ConverterParams | None = None,
) -> ZObservabilityResult:
    """Check whether the capacitor voltages in z_spec are observable along traj.

    z_spec is a set of 1-based capacitor indices (default: all of them).
    Per interval, the exposed coordinates are those with u_j != 0; the check
    passes iff the stacked per-interval projections reach full rank.  The
    complement coordinates of each interval have zero dynamics by structure
    (dVcj/dt = 0 iff u_j = 0), which the check verifies rather than assumes.
    """
    p = traj.intervals[0].mode.p
    if params is not None and params.p != p:
        raise ValueError("trajectory and parameters disagree on cell count")
    if z_spec is None:
        target = tuple(range(1, p))
    else:
        target = tuple(sorted(set(int(j) for j in z_spec)))
        if any(j < 1 or j > p - 1 for j in target):
            bad = [j for j in target if j < 1 or j > p - 1]
            if any(j == 0 for j in bad):
                raise ValueError(
                    "the load current is measured directly and cannot be part "
                    "of the observability target; pick capacitor indices 1.."
                    f"{p - 1}"
                )
            raise ValueError(f"capacitor indices out of range 1..{p - 1}: {bad}")
        if not target:
            raise ValueError("empty observability target")

    witnesses = []
    covered: set[int] = set()
    for iv in traj.intervals:
        exposed = tuple(j for j in observable_caps(iv.mode) if j in target)
        # Unexposed target coordinates must be frozen inside the interval.
        for j in target:
            if j not in exposed and iv.mode.u[j - 1] != 0:
                return ZObservabilityResult(
                    passed=False,
                    target=target,
                    witnesses=tuple(witnesses),
                    stacked_rank=len(covered),
                    failure=(
                        f"coordinate Vc{j} varies in [{iv.t_start}, {iv.t_end}) "
                        "but is not covered by the interval projection"
                    ),
                )
        witnesses.append(
            IntervalWitness(
                t_start=iv.t_start,
                t_end=iv.t_end,
                mode=iv.mode,
                exposed=exposed,
                projection=_projection(exposed, target),
            )
        )
        covered.update(exposed)

    rank = len(covered)
    if rank < len(target):
        missing = sorted(set(target) - covered)
        return ZObservabilityResult(
            passed=False,
            target=target,
            witnesses=tuple(witnesses),
            stacked_rank=rank,
            failure=(
                f"stacked projections have rank {rank} < {len(target)}; "
                f"never exposed: {', '.join(f'Vc{j}' for j in missing)}"
            ),
        )
    return ZObservabilityResult(
        passed=True, target=target, witnesses=tuple(witnesses), stacked_rank=rank
    )


def format_z_report(result: ZObservabilityResult) -> str:
    """Human-readable per-interval report of an observability verdict."""
    lines = []
    names = ", ".join(f"Vc{j}" for j in result.target)
    lines.append(f"target z = [{names}]")
    for w in result.witnesses:
        bits = "".join(str(s) for s in w.mode.S)
        us = ",".join(f"{v:+d}" for v in w.mode.u)
        exposed = ", ".join(f"Vc{j}" for j in w.exposed) if w.exposed else "(none)"
        rows = (
            "; ".join("[" + " ".join(f"{x:.0f}" for x in row) + "]" for row in w.projection)
            if w.projection.size
            else "[]"
        )
        lines.append(
            f"  [{w.t_start:.9g}, {w.t_end:.9g})  S={bits}  u=({us})  "
            f"exposes {exposed}  P={rows}"
        )
    lines.append(f"stacked projection rank: {result.stacked_rank} / {len(result.target)}")
    if result.passed:
        lines.append("verdict: PASS")
    else:
        lines.append(f"verdict: FAIL ({result.failure})")
    return "\n".join(lines)
