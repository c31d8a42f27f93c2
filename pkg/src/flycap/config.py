"""Line-oriented `key = value` scenario configs with dotted keys.

Example::

    plant.E = 150.0
    plant.R = 131.0
    pwm.f_chop = 5000
    sosml.lambda0 = 2.0
    noise.kind = uniform
    noise.seed = 42

Blank lines and `#` comments are ignored.  Unknown keys are errors, as are
invariant violations in the assembled configuration; both report the
offending line number.
"""

from __future__ import annotations

from .converter import ConverterParams, PlantState
from .luenberger import LuenbergerGains
from .sim import LoadVariation, NoiseConfig, ObserverInit, ScenarioConfig
from .sosml import SosmlParams
from .switching import PwmConfig

__all__ = ["ConfigError", "parse_config", "load_config", "format_config"]


class ConfigError(ValueError):
    """Config rejection, carrying the source line that caused it."""

    def __init__(self, message: str, line: int | None = None, path: str = "<config>"):
        self.line = line
        self.path = path
        where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text, 0)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_choice(*choices: str):
    def parse(text: str) -> str:
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text
    return parse


_SCHEMA = {
    "plant.E": _parse_float,
    "plant.R": _parse_float,
    "plant.L": _parse_float,
    "plant.c": _parse_floats,
    "plant.p": _parse_int,
    "pwm.f_chop": _parse_float,
    "pwm.duty": _parse_floats,
    "pwm.phase_shift": _parse_float,
    "sim.t_end": _parse_float,
    "sim.dt": _parse_float,
    "init.I": _parse_float,
    "init.Vc": _parse_floats,
    "init.I_hat": _parse_float,
    "init.Vc_hat": _parse_floats,
    "sosml.lambda0": _parse_float,
    "sosml.alpha0": _parse_float,
    "sosml.k_lambda0": _parse_float,
    "sosml.k_alpha0": _parse_float,
    "sosml.k": _parse_float,
    "sosml.kappa": _parse_float,
    "sosml.l_init": _parse_float,
    "sosml.eps_dz": _parse_float,
    "luenberger.kappa0": _parse_float,
    "luenberger.kappa1": _parse_float,
    "luenberger.kappa2": _parse_float,
    "luenberger.kappa3": _parse_float,
    "luenberger.kappa4": _parse_float,
    "luenberger.kappa5": _parse_float,
    "luenberger.kappa6": _parse_float,
    "noise.kind": _parse_choice("none", "uniform", "gaussian"),
    "noise.amplitude": _parse_float,
    "noise.seed": _parse_int,
    "load.t_switch": _parse_float,
    "load.factor": _parse_float,
}


def _broadcast(values, count, what, line, path):
    if len(values) == 1:
        return tuple(values) * count
    if len(values) != count:
        raise ConfigError(
            f"{what} needs 1 or {count} comma-separated values, got {len(values)}",
            line, path,
        )
    return tuple(values)


def parse_config(text: str, path: str = "<config>") -> ScenarioConfig:
    """Parse config text into a ScenarioConfig, applying defaults per section."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              lineno, path)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if not val:
            raise ConfigError(f"missing value for {key!r}", lineno, path)
        try:
            values[key] = _SCHEMA[key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path) from None
        lines[key] = lineno

    def get(key, default):
        return values.get(key, default)

    def line_of(*keys):
        for key in keys:
            if key in lines:
                return lines[key]
        return None

    p = int(get("plant.p", 3))
    try:
        caps = get("plant.c", (40e-6,))
        caps = _broadcast(caps, p - 1, "plant.c", line_of("plant.c"), path)
        params = ConverterParams(
            E=get("plant.E", 150.0),
            R=get("plant.R", 131.0),
            L=get("plant.L", 10e-3),
            c=caps,
            p=p,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), line_of("plant.E", "plant.R", "plant.L",
                                            "plant.c", "plant.p"), path) from None

    try:
        duty = _broadcast(get("pwm.duty", (0.5,)), p, "pwm.duty",
                          line_of("pwm.duty"), path)
        pwm = PwmConfig(
            f_chop=get("pwm.f_chop", 5000.0),
            duty=duty,
            phase_shift=get("pwm.phase_shift", 1.0 / p),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), line_of("pwm.f_chop", "pwm.duty",
                                            "pwm.phase_shift"), path) from None

    try:
        sosml = SosmlParams(
            lambda0=get("sosml.lambda0", 2.0),
            alpha0=get("sosml.alpha0", 4.0),
            k_lambda0=get("sosml.k_lambda0", 2.5),
            k_alpha0=get("sosml.k_alpha0", 20.0),
            k=get("sosml.k", 6e5),
            kappa=get("sosml.kappa", 20.0),
            l_init=get("sosml.l_init", 1.0),
            eps_dz=get("sosml.eps_dz", 1e-3),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), line_of(*(k for k in _SCHEMA
                                              if k.startswith("sosml."))),
                          path) from None

    luen = None
    if any(k.startswith("luenberger.") for k in values):
        if "luenberger.kappa0" not in values:
            raise ConfigError("luenberger gains present but luenberger.kappa0 missing",
                              line_of(*(k for k in _SCHEMA
                                        if k.startswith("luenberger."))), path)
        try:
            luen = LuenbergerGains(
                kappa0=values["luenberger.kappa0"],
                kappa1=get("luenberger.kappa1", 0.0),
                kappa2=get("luenberger.kappa2", 0.0),
                kappa3=get("luenberger.kappa3", 0.0),
                kappa4=get("luenberger.kappa4", 0.0),
                kappa5=get("luenberger.kappa5", 0.0),
                kappa6=get("luenberger.kappa6", 0.0),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), line_of("luenberger.kappa0"), path) from None

    try:
        vc0 = _broadcast(get("init.Vc", (5.0, 10.0)) if p == 3
                         else get("init.Vc", (0.0,)), p - 1,
                         "init.Vc", line_of("init.Vc"), path)
        x0 = PlantState(I=get("init.I", 0.0), Vc=vc0)
        vch = get("init.Vc_hat", (0.0, 0.0))
        if len(vch) == 1:
            vch = vch * 2
        observer_x0 = ObserverInit(I_hat=get("init.I_hat", 0.0), Vc_hat=tuple(vch))
        noise = NoiseConfig(
            kind=get("noise.kind", "none"),
            amplitude=get("noise.amplitude", 0.02),
            seed=int(get("noise.seed", 0)),
        )
        load = LoadVariation(
            t_switch=get("load.t_switch", 0.0),
            factor=get("load.factor", 1.0),
        )
        return ScenarioConfig(
            params=params,
            pwm=pwm,
            sosml=sosml,
            luenberger=luen,
            t_end=get("sim.t_end", 0.1),
            dt=get("sim.dt", 5e-6),
            x0=x0,
            observer_x0=observer_x0,
            noise=noise,
            load=load,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        key_hint = line_of("init.I", "init.Vc", "noise.kind", "noise.amplitude",
                           "load.t_switch", "load.factor", "sim.t_end", "sim.dt")
        raise ConfigError(str(exc), key_hint, path) from None


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), path=str(path))


def format_config(cfg: ScenarioConfig) -> str:
    """Render a ScenarioConfig back to config-file text (all keys explicit)."""
    lines = [
        f"plant.E = {cfg.params.E!r}",
        f"plant.R = {cfg.params.R!r}",
        f"plant.L = {cfg.params.L!r}",
        "plant.c = " + ",".join(repr(c) for c in cfg.params.c),
        f"plant.p = {cfg.params.p}",
        f"pwm.f_chop = {cfg.pwm.f_chop!r}",
        "pwm.duty = " + ",".join(repr(d) for d in cfg.pwm.duty),
        f"pwm.phase_shift = {cfg.pwm.phase_shift!r}",
        f"sim.t_end = {cfg.t_end!r}",
        f"sim.dt = {cfg.dt!r}",
        f"init.I = {cfg.x0.I!r}",
        "init.Vc = " + ",".join(repr(v) for v in cfg.x0.Vc),
        f"init.I_hat = {cfg.observer_x0.I_hat!r}",
        "init.Vc_hat = " + ",".join(repr(v) for v in cfg.observer_x0.Vc_hat),
        f"sosml.lambda0 = {cfg.sosml.lambda0!r}",
        f"sosml.alpha0 = {cfg.sosml.alpha0!r}",
        f"sosml.k_lambda0 = {cfg.sosml.k_lambda0!r}",
        f"sosml.k_alpha0 = {cfg.sosml.k_alpha0!r}",
        f"sosml.k = {cfg.sosml.k!r}",
        f"sosml.kappa = {cfg.sosml.kappa!r}",
        f"sosml.l_init = {cfg.sosml.l_init!r}",
        f"sosml.eps_dz = {cfg.sosml.eps_dz!r}",
        f"noise.kind = {cfg.noise.kind}",
        f"noise.amplitude = {cfg.noise.amplitude!r}",
        f"noise.seed = {cfg.noise.seed}",
        f"load.t_switch = {cfg.load.t_switch!r}",
        f"load.factor = {cfg.load.factor!r}",
    ]
    if cfg.luenberger is not None:
        for i, v in enumerate(cfg.luenberger.as_tuple()):
            lines.append(f"luenberger.kappa{i} = {v!r}")
    return "\n".join(lines) + "\n"
