"""Switched-affine model of a p-cell flying-capacitor converter on an RL load.

The converter chains p commutation cells; cell j is driven by a binary
switch signal S_j.  The continuous state is ordered

    x = [I, Vc1, ..., Vc(p-1)]

(load current first, then the p-1 flying-capacitor voltages) and every
matrix in this package assumes that ordering.  The physics:

    dI/dt    = -(R/L) I + (E/L) u_p - sum_j (Vcj/L) u_j
    dVcj/dt  = (I/c_j) u_j
    y        = I

with the derived inputs u_j = S_{j+1} - S_j for j < p and u_p = S_p.
For each fixed switch configuration this is affine, x' = A(u) x + B(u),
so the converter is a switched-affine hybrid system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConverterParams",
    "ModeVector",
    "PlantState",
    "SystemMatrices",
    "ModeTableRow",
    "nominal_params",
    "derive_inputs",
    "switches_from_inputs",
    "as_inputs",
    "dynamics",
    "plant_rhs",
    "system_matrices",
    "mode_table",
    "all_switch_vectors",
]


@dataclass(frozen=True)
class ConverterParams:
    """Physical constants of the converter and its RL load.

    E: source voltage (V), R: load resistance (ohm), L: load inductance (H),
    c: flying-capacitor values (F), one per internal node (length p-1),
    p: number of commutation cells.
    """

    E: float
    R: float
    L: float
    c: tuple[float, ...]
    p: int = 3

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"cell count p must be >= 2, got {self.p}")
        if self.E <= 0:
            raise ValueError(f"source voltage E must be positive, got {self.E}")
        if self.R <= 0:
            raise ValueError(f"load resistance R must be positive, got {self.R}")
        if self.L <= 0:
            raise ValueError(f"load inductance L must be positive, got {self.L}")
        object.__setattr__(self, "c", tuple(float(cj) for cj in self.c))
        if len(self.c) != self.p - 1:
            raise ValueError(
                f"need p-1 = {self.p - 1} capacitances, got {len(self.c)}"
            )
        if any(cj <= 0 for cj in self.c):
            raise ValueError(f"all capacitances must be positive, got {self.c}")


def nominal_params() -> ConverterParams:
    """Default 3-cell bench: 150 V source, 131 ohm / 10 mH load, 40 uF caps."""
    return ConverterParams(E=150.0, R=131.0, L=10e-3, c=(40e-6, 40e-6), p=3)


@dataclass(frozen=True)
class ModeVector:
    """Discrete mode: switch states S and the derived inputs u.

    u_j = S_{j+1} - S_j in {-1, 0, 1} for j < p, and u_p = S_p in {0, 1}.
    """

    S: tuple[int, ...]
    u: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(int(s) for s in self.S))
        object.__setattr__(self, "u", tuple(int(v) for v in self.u))
        p = len(self.S)
        if len(self.u) != p:
            raise ValueError("S and u must have equal length")
        if any(s not in (0, 1) for s in self.S):
            raise ValueError(f"switch states must be binary, got {self.S}")
        expected = tuple(self.S[j + 1] - self.S[j] for j in range(p - 1)) + (self.S[-1],)
        if self.u != expected:
            raise ValueError(f"inputs {self.u} inconsistent with switches {self.S}")

    @property
    def p(self) -> int:
        return len(self.S)


@dataclass(frozen=True)
class PlantState:
    """Continuous state [I, Vc1, ..., Vc(p-1)] at time t."""

    I: float
    Vc: tuple[float, ...]
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "Vc", tuple(float(v) for v in self.Vc))
        for name, val in (("I", self.I), ("t", self.t), *(("Vc", v) for v in self.Vc)):
            if not math.isfinite(val):
                raise ValueError(f"non-finite entry in PlantState.{name}: {val}")

    def as_array(self) -> np.ndarray:
        return np.array([self.I, *self.Vc], dtype=float)


@dataclass(frozen=True)
class SystemMatrices:
    """Affine representation x' = A x + B, y = C x for one fixed mode."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


def derive_inputs(S, p: int | None = None) -> ModeVector:
    """Map switch states S to the mode with inputs u_j = S_{j+1} - S_j, u_p = S_p."""
    S = tuple(int(s) for s in S)
    if p is not None and len(S) != p:
        raise ValueError(f"expected {p} switch states, got {len(S)}")
    if any(s not in (0, 1) for s in S):
        raise ValueError(f"switch states must be binary, got {S}")
    u = tuple(S[j + 1] - S[j] for j in range(len(S) - 1)) + (S[-1],)
    return ModeVector(S=S, u=u)


def switches_from_inputs(u) -> tuple[int, ...]:
    """Invert the input transform: recover S from u by back-substitution."""
    u = tuple(int(v) for v in u)
    p = len(u)
    S = [0] * p
    S[p - 1] = u[p - 1]
    for j in range(p - 2, -1, -1):
        S[j] = S[j + 1] - u[j]
    if any(s not in (0, 1) for s in S):
        raise ValueError(f"inputs {u} do not correspond to binary switches")
    return tuple(S)


def as_inputs(m, p: int | None = None) -> tuple[int, ...]:
    """Input vector of a ModeVector, or a validated bare input sequence.

    The affine model only depends on u, so analysis functions also accept
    input vectors that no switch configuration realizes.
    """
    if isinstance(m, ModeVector):
        u = m.u
    else:
        u = tuple(int(v) for v in m)
        if any(v not in (-1, 0, 1) for v in u[:-1]) or u[-1] not in (0, 1):
            raise ValueError(f"invalid input vector {u}")
    if p is not None and len(u) != p:
        raise ValueError(f"expected {p} inputs, got {len(u)}")
    return u


def plant_rhs(I: float, Vc, u, params: ConverterParams):
    """Right-hand side of the converter ODE for current state (I, Vc) and inputs u.

    Returns (dI/dt, tuple of dVcj/dt).  Scalar-only hot path used by the
    simulation loop; `dynamics` wraps it for array callers.
    """
    L = params.L
    dI = -(params.R / L) * I + (params.E / L) * u[-1]
    for j in range(params.p - 1):
        dI -= (Vc[j] / L) * u[j]
    dVc = tuple((I / params.c[j]) * u[j] for j in range(params.p - 1))
    return dI, dVc


def dynamics(x: PlantState, m, params: ConverterParams) -> np.ndarray:
    """Time derivative of the state vector [I, Vc...] for mode or input vector m."""
    if len(x.Vc) != params.p - 1:
        raise ValueError("state dimension inconsistent with cell count")
    u = as_inputs(m, params.p)
    dI, dVc = plant_rhs(x.I, x.Vc, u, params)
    return np.array([dI, *dVc], dtype=float)


def system_matrices(m, params: ConverterParams) -> SystemMatrices:
    """Dense (A, B, C) of the affine form for one mode; A is p x p."""
    u = as_inputs(m, params.p)
    p, L = params.p, params.L
    A = np.zeros((p, p))
    A[0, 0] = -params.R / L
    for j in range(p - 1):
        A[0, j + 1] = -u[j] / L
        A[j + 1, 0] = u[j] / params.c[j]
    B = np.zeros(p)
    B[0] = params.E * u[-1] / L
    C = np.zeros(p)
    C[0] = 1.0
    return SystemMatrices(A=A, B=B, C=C)


def all_switch_vectors(p: int):
    """All 2^p switch configurations in binary counting order."""
    return [
        tuple((k >> (p - 1 - j)) & 1 for j in range(p))
        for k in range(2 ** p)
    ]


@dataclass(frozen=True)
class ModeTableRow:
    """One row of the 3-cell mode table.

    `u` holds (u1, u2); `trends` gives the capacitor-voltage direction for
    positive load current ('up', 'down' or 'const'); `observable` lists the
    state names recoverable from the current measurement in this mode.
    """

    index: int
    S: tuple[int, int, int]
    u: tuple[int, int]
    trends: tuple[str, str]
    observable: tuple[str, ...]


_TREND = {1: "up", -1: "down", 0: "const"}


def mode_table(p: int = 3) -> list[ModeTableRow]:
    """The eight switching modes of the 3-cell converter with observability labels.

    A capacitor voltage Vcj is observable in a mode iff u_j != 0 (its value
    then enters the measured current dynamics); the load current is always
    measured directly.
    """
    if p != 3:
        raise ValueError(f"mode-table labels are defined for p = 3 only, got p = {p}")
    rows = []
    for k, S in enumerate(all_switch_vectors(p)):
        m = derive_inputs(S)
        u1, u2 = m.u[0], m.u[1]
        observable = ["I"]
        if u1 != 0:
            observable.append("Vc1")
        if u2 != 0:
            observable.append("Vc2")
        rows.append(
            ModeTableRow(
                index=k,
                S=S,
                u=(u1, u2),
                trends=(_TREND[u1], _TREND[u2]),
                observable=tuple(observable),
            )
        )
    return rows
