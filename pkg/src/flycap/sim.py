"""Fixed-step scenario engine: plant, PWM, observers, noise, load variation.

One scenario advances everything on a single explicit-Euler grid (the
right-hand sides are discontinuous across switch edges, so higher-order
steps buy nothing).  The plant integrates with the actual load resistance
(stepped by `load.factor` at `load.t_switch`), while the observers always
use the nominal value; together with the measurement noise this is exactly
the disturbance the sliding-mode observer is designed to reject.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .converter import ConverterParams, PlantState, nominal_params, plant_rhs
from .luenberger import LuenbergerGains, LuenbergerState, luenberger_step
from .sosml import SosmlParams, initial_state, observer_step
from .switching import PwmConfig, pwm_mode_at

__all__ = [
    "OVERFLOW_LIMIT",
    "NoiseConfig",
    "LoadVariation",
    "ObserverInit",
    "ScenarioConfig",
    "SosmlSeries",
    "LuenbergerSeries",
    "TimeSeries",
    "SimulationOverflowError",
    "ChannelMetrics",
    "run_scenario",
    "metrics",
    "steady_state_rmse",
    "write_csv",
]

# Any state magnitude beyond this aborts the run instead of producing garbage.
OVERFLOW_LIMIT = 1e9


class SimulationOverflowError(RuntimeError):
    """Raised when a state magnitude exceeds OVERFLOW_LIMIT mid-run."""

    def __init__(self, step: int, t: float, what: str, value: float):
        self.step = step
        self.t = t
        self.what = what
        self.value = value
        super().__init__(
            f"numerical overflow at step {step} (t = {t:.9g} s): "
            f"{what} = {value!r}"
        )


@dataclass(frozen=True)
class NoiseConfig:
    """Additive measurement noise on the load current.

    kind 'uniform' draws from [-amplitude, amplitude], 'gaussian' uses the
    amplitude as standard deviation, 'none' disables it.  The amplitude is a
    modeling choice, not a measured value; 0.02 A is about 2 percent of the
    nominal load current.
    """

    kind: str = "none"
    amplitude: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "gaussian"):
            raise ValueError(
                f"noise.kind must be none, uniform or gaussian, got {self.kind!r}"
            )
        if self.amplitude < 0:
            raise ValueError(f"noise.amplitude must be >= 0, got {self.amplitude}")


@dataclass(frozen=True)
class LoadVariation:
    """Step change of the actual load resistance at t_switch (factor 1 = none)."""

    t_switch: float = 0.0
    factor: float = 1.0

    def __post_init__(self):
        if self.factor <= 0:
            raise ValueError(f"load.factor must be positive, got {self.factor}")
        if self.t_switch < 0:
            raise ValueError(f"load.t_switch must be >= 0, got {self.t_switch}")


@dataclass(frozen=True)
class ObserverInit:
    I_hat: float = 0.0
    Vc_hat: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class ScenarioConfig:
    params: ConverterParams = field(default_factory=nominal_params)
    pwm: PwmConfig = field(default_factory=PwmConfig)
    sosml: SosmlParams = field(default_factory=SosmlParams)
    luenberger: LuenbergerGains | None = None
    t_end: float = 0.1
    dt: float = 5e-6
    x0: PlantState = PlantState(I=0.0, Vc=(5.0, 10.0))
    observer_x0: ObserverInit = ObserverInit()
    noise: NoiseConfig = NoiseConfig()
    load: LoadVariation = LoadVariation()

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"sim.dt must be positive, got {self.dt}")
        if self.t_end <= 0:
            raise ValueError(f"sim.t_end must be positive, got {self.t_end}")
        if self.t_end < self.dt:
            raise ValueError(
                f"sim.t_end = {self.t_end} is shorter than one step ({self.dt})"
            )
        if len(self.x0.Vc) != self.params.p - 1:
            raise ValueError(
                f"init.Vc has {len(self.x0.Vc)} entries, expected {self.params.p - 1}"
            )
        if len(self.pwm.duty) != self.params.p:
            raise ValueError(
                f"pwm.duty has {len(self.pwm.duty)} entries, expected {self.params.p}"
            )


@dataclass
class SosmlSeries:
    I_hat: np.ndarray
    Vc_hat: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    l: np.ndarray
    mu: np.ndarray
    sigma_sign: np.ndarray
    sigma_lin: np.ndarray
    V_lyap: np.ndarray


@dataclass
class LuenbergerSeries:
    I_hat: np.ndarray
    Vc_hat: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray


@dataclass
class TimeSeries:
    """Per-step records on the uniform grid t = 0, dt, ..., n*dt.

    Estimate/error/adaptation columns hold the value at the grid time; `mu`
    holds the correction applied over the step that starts there.
    """

    t: np.ndarray
    S: np.ndarray
    u: np.ndarray
    I: np.ndarray
    Vc: np.ndarray
    meas: np.ndarray
    dt: float
    sosml: SosmlSeries | None = None
    luen: LuenbergerSeries | None = None


def _noise_samples(noise: NoiseConfig, count: int) -> np.ndarray:
    if noise.kind == "none" or noise.amplitude == 0.0:
        return np.zeros(count)
    rng = np.random.default_rng(noise.seed)
    if noise.kind == "uniform":
        return rng.uniform(-noise.amplitude, noise.amplitude, count)
    return rng.normal(0.0, noise.amplitude, count)


def _check(value: float, step: int, t: float, what: str) -> float:
    if not (abs(value) < OVERFLOW_LIMIT):
        raise SimulationOverflowError(step, t, what, value)
    return value


def run_scenario(cfg: ScenarioConfig, observers=None) -> TimeSeries:
    """Run one scenario; deterministic for a fixed config and seed.

    `observers` selects which estimators run ('sosml', 'luenberger'); by
    default the sliding-mode observer runs and the Luenberger baseline is
    added when the config carries its gains.
    """
    if observers is None:
        observers = ("sosml",) + (("luenberger",) if cfg.luenberger else ())
    observers = tuple(observers)
    unknown = set(observers) - {"sosml", "luenberger"}
    if unknown:
        raise ValueError(f"unknown observers requested: {sorted(unknown)}")
    if "luenberger" in observers and cfg.luenberger is None:
        raise ValueError("luenberger observer requested but no gains configured")
    if observers and cfg.params.p != 3:
        raise ValueError("observers are implemented for the 3-cell converter only")

    prm = cfg.params
    p = prm.p
    dt = cfg.dt
    n = int(math.floor(cfg.t_end / dt + 1e-9))
    noise = _noise_samples(cfg.noise, n + 1)
    plant_nominal = prm
    plant_stepped = (
        prm if cfg.load.factor == 1.0
        else ConverterParams(E=prm.E, R=prm.R * cfg.load.factor, L=prm.L,
                             c=prm.c, p=prm.p)
    )

    I = cfg.x0.I
    Vc = list(cfg.x0.Vc)
    run_sosml = "sosml" in observers
    run_luen = "luenberger" in observers
    so = initial_state(cfg.sosml, cfg.observer_x0.I_hat, cfg.observer_x0.Vc_hat)
    lu = LuenbergerState(cfg.observer_x0.I_hat, tuple(cfg.observer_x0.Vc_hat))

    t_col = np.empty(n + 1)
    S_col = np.empty((n + 1, p), dtype=np.int8)
    u_col = np.empty((n + 1, p), dtype=np.int8)
    I_col = np.empty(n + 1)
    Vc_col = np.empty((n + 1, p - 1))
    meas_col = np.empty(n + 1)
    if run_sosml:
        ss = SosmlSeries(
            I_hat=np.empty(n + 1), Vc_hat=np.empty((n + 1, 2)),
            e1=np.empty(n + 1), e2=np.empty(n + 1), e3=np.empty(n + 1),
            l=np.empty(n + 1), mu=np.empty(n + 1),
            sigma_sign=np.empty(n + 1), sigma_lin=np.empty(n + 1),
            V_lyap=np.empty(n + 1),
        )
    if run_luen:
        ls = LuenbergerSeries(
            I_hat=np.empty(n + 1), Vc_hat=np.empty((n + 1, 2)),
            e1=np.empty(n + 1), e2=np.empty(n + 1), e3=np.empty(n + 1),
        )

    for i in range(n + 1):
        t = i * dt
        mode = pwm_mode_at(t, cfg.pwm, p)
        meas = float(I + noise[i])

        t_col[i] = t
        S_col[i] = mode.S
        u_col[i] = mode.u
        I_col[i] = I
        Vc_col[i] = Vc
        meas_col[i] = meas

        if run_sosml:
            ss.I_hat[i] = so.I_hat
            ss.Vc_hat[i] = so.Vc_hat
            ss.e1[i] = meas - so.I_hat
            ss.e2[i] = Vc[0] - so.Vc_hat[0]
            ss.e3[i] = Vc[1] - so.Vc_hat[1]
            ss.l[i] = so.l
            ss.sigma_sign[i] = so.sigma_sign
            ss.sigma_lin[i] = so.sigma_lin
            new_so = observer_step(so, meas, mode, prm, cfg.sosml, dt)
            ss.mu[i] = new_so.last_mu
            if i < n:
                so = new_so
                _check(so.I_hat, i, t, "sosml I_hat")
                _check(so.Vc_hat[0], i, t, "sosml Vc1_hat")
                _check(so.Vc_hat[1], i, t, "sosml Vc2_hat")

        if run_luen:
            ls.I_hat[i] = lu.I_hat
            ls.Vc_hat[i] = lu.Vc_hat
            ls.e1[i] = meas - lu.I_hat
            ls.e2[i] = Vc[0] - lu.Vc_hat[0]
            ls.e3[i] = Vc[1] - lu.Vc_hat[1]
            if i < n:
                lu = luenberger_step(lu, meas, mode, prm, cfg.luenberger, dt)
                _check(lu.I_hat, i, t, "luenberger I_hat")
                _check(lu.Vc_hat[0], i, t, "luenberger Vc1_hat")
                _check(lu.Vc_hat[1], i, t, "luenberger Vc2_hat")

        if i < n:
            plant = plant_stepped if t >= cfg.load.t_switch else plant_nominal
            dI, dVc = plant_rhs(I, Vc, mode.u, plant)
            I = _check(I + dt * dI, i, t, "plant I")
            for j in range(p - 1):
                Vc[j] = _check(Vc[j] + dt * dVc[j], i, t, f"plant Vc{j + 1}")

    ts = TimeSeries(
        t=t_col, S=S_col, u=u_col, I=I_col, Vc=Vc_col, meas=meas_col, dt=dt,
        sosml=ss if run_sosml else None,
        luen=ls if run_luen else None,
    )
    if run_sosml:
        ss.V_lyap = analysis.lyapunov_along_trajectory(ss, cfg.sosml)
    return ts


@dataclass(frozen=True)
class ChannelMetrics:
    """Settling statistics of one error channel.

    convergence_time is the first grid time after which |e| stays below the
    threshold through the end, or None if the channel never settles; rmse
    and max_post are taken over that post-convergence window.
    """

    convergence_time: float | None
    rmse: float | None
    max_post: float | None


def _channel_metrics(t: np.ndarray, e: np.ndarray, threshold: float) -> ChannelMetrics:
    above = np.abs(e) >= threshold
    if not above.any():
        idx = 0
    else:
        last = int(np.nonzero(above)[0][-1])
        if last == len(e) - 1:
            return ChannelMetrics(None, None, None)
        idx = last + 1
    tail = e[idx:]
    return ChannelMetrics(
        convergence_time=float(t[idx]),
        rmse=float(np.sqrt(np.mean(tail ** 2))),
        max_post=float(np.max(np.abs(tail))),
    )


def metrics(ts: TimeSeries, settle_threshold: float = 0.5) -> dict:
    """Per-channel settling metrics, keyed '<observer>.<channel>'."""
    if ts.t.size == 0:
        raise ValueError("empty time series")
    out = {}
    for name, series in (("sosml", ts.sosml), ("luenberger", ts.luen)):
        if series is None:
            continue
        for ch in ("e1", "e2", "e3"):
            out[f"{name}.{ch}"] = _channel_metrics(
                ts.t, getattr(series, ch), settle_threshold
            )
    return out


def steady_state_rmse(ts: TimeSeries, t_from: float) -> dict:
    """RMSE of each error channel over the fixed window [t_from, t_end].

    Gives both observers a common evaluation window, which keeps comparisons
    meaningful even when a channel never meets a settling threshold.
    """
    sel = ts.t >= t_from
    if not sel.any():
        raise ValueError(f"no samples at or after t = {t_from}")
    out = {}
    for name, series in (("sosml", ts.sosml), ("luenberger", ts.luen)):
        if series is None:
            continue
        for ch in ("e1", "e2", "e3"):
            e = getattr(series, ch)[sel]
            out[f"{name}.{ch}"] = float(np.sqrt(np.mean(e ** 2)))
    return out


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_csv(ts: TimeSeries, fh) -> None:
    """Serialize a run to CSV with 9 significant digits.

    Single-observer runs use unsuffixed estimate columns; when both
    observers are present their blocks are suffixed _sosml and _luen.
    """
    p = ts.S.shape[1]
    cols = ["t"]
    cols += [f"S{j + 1}" for j in range(p)]
    cols += [f"u{j + 1}" for j in range(p)]
    cols += ["I"] + [f"Vc{j + 1}" for j in range(p - 1)]
    both = ts.sosml is not None and ts.luen is not None
    sosml_cols = ["Ihat", "Vc1hat", "Vc2hat", "e1", "e2", "e3", "l", "mu", "V_lyap"]
    luen_cols = ["Ihat", "Vc1hat", "Vc2hat", "e1", "e2", "e3"]
    if ts.sosml is not None:
        cols += [c + "_sosml" for c in sosml_cols] if both else sosml_cols
    if ts.luen is not None:
        cols += [c + "_luen" for c in luen_cols] if both else luen_cols
    fh.write(",".join(cols) + "\n")

    for i in range(ts.t.size):
        parts = [_fmt(ts.t[i])]
        parts += [str(int(s)) for s in ts.S[i]]
        parts += [str(int(v)) for v in ts.u[i]]
        parts.append(_fmt(ts.I[i]))
        parts += [_fmt(v) for v in ts.Vc[i]]
        if ts.sosml is not None:
            s = ts.sosml
            parts += [_fmt(s.I_hat[i]), _fmt(s.Vc_hat[i, 0]), _fmt(s.Vc_hat[i, 1]),
                      _fmt(s.e1[i]), _fmt(s.e2[i]), _fmt(s.e3[i]),
                      _fmt(s.l[i]), _fmt(s.mu[i]), _fmt(s.V_lyap[i])]
        if ts.luen is not None:
            s = ts.luen
            parts += [_fmt(s.I_hat[i]), _fmt(s.Vc_hat[i, 0]), _fmt(s.Vc_hat[i, 1]),
                      _fmt(s.e1[i]), _fmt(s.e2[i]), _fmt(s.e3[i])]
        fh.write(",".join(parts) + "\n")
