"""flycap: simulation and sensorless capacitor-voltage estimation for
multi-cell (flying-capacitor) power converters.

Subpackages: `converter` (switched-affine plant model), `switching`
(phase-shifted PWM, hybrid time trajectories), `observability` (rank test,
trajectory-wise observability), `sosml` (adaptive super-twisting observer),
`luenberger` (switched baseline observer), `analysis` (stability
certificates, excitation check), `sim` (scenario engine), `config` and
`cli` (file format and command line).
"""

from .converter import (
    ConverterParams,
    ModeVector,
    PlantState,
    SystemMatrices,
    derive_inputs,
    dynamics,
    mode_table,
    nominal_params,
    system_matrices,
)
from .switching import HybridTimeTrajectory, Interval, PwmConfig, pwm_mode_at, trajectory_from_pwm
from .observability import observability_matrix, z_observability_check
from .sosml import SosmlParams, SosmlState, certified_gains, nominal_gains, observer_step
from .luenberger import LuenbergerGains, LuenbergerState, certify_gains, default_gains, luenberger_step
from .analysis import build_matrices, check_gain_condition, pe_check
from .sim import ScenarioConfig, TimeSeries, metrics, run_scenario, write_csv
from .config import ConfigError, load_config, parse_config

__version__ = "0.1.0"
