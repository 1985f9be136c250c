"""magdock: deterministic simulator and experiment harness for
electromagnet-assisted tether charging of quadrotors."""

from .autonomy import (
    CircleTrajectory,
    ControllerGains,
    MissionConfig,
    TrackingController,
    TrackingMetrics,
    TrapezoidalProfile,
    compute_metrics,
    plan_trapezoid,
    reference,
)
from .bodies import TetherConfig, TetherHeadState, VehicleSpec, VehicleState
from .config import ConfigError, ScenarioConfig, build_scenario, load_config
from .core import Scenario, SimClock, SimulationError, Simulator, WorldState
from .magnetics import (
    BUILTIN_MAGNETS,
    CalibrationError,
    EmFieldModel,
    MagnetSpec,
    calibrate_field,
    capture_radius,
    magnetic_force,
)
from .power import (
    BatterySpec,
    BatteryState,
    ChargerSpec,
    ChargerState,
    LowBatteryMonitor,
    PowerModel,
    charge_step,
    discharge_step,
    flight_power,
    low_battery,
)
from .station import StationControllerState, StationSpec, station_tick

__version__ = "0.1.0"
