"""Two-muscle Hill-model plant with backstepping tracking and unknown-input observers."""
from .muscle import (
    MuscleParams, TendonCurve, tendon_force, tendon_force_inverse, tendon_force_refit,
    tendon_force_verbatim, parallel_force, force_length, hill_velocity, hill_velocity_inverse,
    activation_from,
)
from .plant import PlantState, VirtualInput, Uncertainty, Measurement, derivatives, measure
from .controller import ControllerGains, ReferenceSpec, control, allocate
from .observers import HgoParams, SmoParams, AsmoParams, recover_activation
from .simkit import (
    ScenarioConfig, NoiseSpec, UncertaintySpec, Bounds, TrajectoryLog, MetricsReport,
    run_scenario, compute_metrics, rk4_step, ConfigError, SimulationHalted,
)
from .config import load_config, loads_config, dumps_config, apply_overrides

__version__ = "0.1.0"
