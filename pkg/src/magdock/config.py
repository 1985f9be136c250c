"""Scenario configuration: unit-suffixed YAML, strict validation, presets.

Every numeric key carries an explicit unit suffix (mass_g, length_m,
capacity_mah, ...) so mixed-unit parameter sets cannot be mis-read silently.
Unknown keys, wrong types, and invariant violations fail the load with the
offending key path and source line. Loading returns the raw (unit-suffixed)
mapping with defaults filled; ``build_scenario`` resolves it into SI spec
objects, running the magnet-field and power calibrations.
"""

from __future__ import annotations

import copy
import difflib
import math
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path

import yaml

from .autonomy import ControllerGains, MissionConfig
from .bodies import TetherConfig, VehicleSpec
from .core import Scenario, TrajectorySpec
from .magnetics import (
    BUILTIN_MAGNETS,
    GRAM_FORCE_N,
    GRAVITY,
    EmFieldModel,
    MagnetSpec,
    calibrate_field,
    capture_radius,
)
from .power import BatterySpec, ChargerSpec, PowerModel, calibrate_thrust_coeff
from .station import StationSpec


class ConfigError(ValueError):
    """Configuration load/validation failure, with key path and line."""


# A schema leaf: (python type, default, extra validation tag)
#   type "num" accepts int or float; "vec3"/"vec2" are fixed-length lists;
#   None default with required=True must be supplied by the file.
@dataclass(frozen=True)
class _Field:
    kind: str
    default: object = None
    required: bool = False
    choices: tuple | None = None
    positive: bool = False


_F = _Field

SCHEMA: dict[str, dict[str, _Field]] = {
    "sim": {
        "dt_s": _F("num", 0.001, positive=True),
        "control_rate_hz": _F("num", 500.0, positive=True),
        "log_interval_s": _F("num", 0.01, positive=True),
        "duration_s": _F("num", 600.0, positive=True),
        "seed": _F("int", 1),
    },
    "vehicle": {
        "name": _F("str", "SD2S"),
        "mass_g": _F("num", 250.0, positive=True),
        "inertia_kgm2": _F("vec3", (1.2e-4, 1.2e-4, 2.0e-4)),
        "max_thrust_n": _F("num", 6.0, positive=True),
        "tau_max_xy_nm": _F("num", 0.12, positive=True),
        "tau_max_z_nm": _F("num", 0.02, positive=True),
        "attach_offset_m": _F("vec3", (0.0, 0.0, -0.03)),
        "estimate_rate_hz": _F("num", 100.0, positive=True),
    },
    "battery": {
        "cells": _F("int", 2),
        "capacity_mah": _F("num", 910.0, positive=True),
        "mass_g": _F("num", 47.0, positive=True),
        "full_voltage_v": _F("num", 7.4, positive=True),
        "empty_per_cell_v": _F("num", 3.30, positive=True),
        "internal_resistance_ohm": _F("num", 0.05, positive=True),
    },
    "charger": {
        "set_current_c_rate": _F("num", 1.0, positive=True),
        "cutoff_c_rate": _F("num", 0.05, positive=True),
        "t_protect_degc": _F("num", 60.0),
        "t_resume_degc": _F("num", 45.0),
        "ambient_degc": _F("num", 25.0),
        "heat_coeff_degc_per_s": _F("num", 0.0166, positive=True),
        "cool_tau_s": _F("num", 1500.0, positive=True),
    },
    "power": {
        "idle_power_w": _F("num", 23.0, positive=True),
        "baseline_flight_time_s": _F("num", 360.0, positive=True),
        "calib_radius_m": _F("num", 1.0, positive=True),
        "calib_speed_mps": _F("num", 2.0, positive=True),
        "thrust_coeff_w_per_n32": _F("num", None),
    },
    "tether": {
        "length_m": _F("num", 0.5, positive=True),
        "magnet": _F("magnet", "CeraL"),
        "wire_density_kg_per_m": _F("num", 0.033, positive=True),
        "hardware_mass_g": _F("num", 10.0, positive=True),
        "spring_n_per_m": _F("num", 2000.0, positive=True),
        "damping_ns_per_m": _F("num", 5.0),
        "head_drag_ns_per_m": _F("num", 0.01),
    },
    "magnetics": {
        "em_boost": _F("num", 2.0, positive=True),
        "capture_threshold_n": _F("num", 1.0, positive=True),
        "residual_hold_n": _F("num", 2.0, positive=True),
        "baseline_radius_m": _F("num", 0.01, positive=True),
        "target_ratio": _F("num", 5.0, positive=True),
        "contact_tolerance_m": _F("num", 0.005, positive=True),
        "capture_damping_ns_per_m": _F("num", 3.0),
    },
    "station": {
        "connector_pos_m": _F("vec3", (0.0, 0.0, 0.06)),
        "top_half_x_m": _F("num", 0.075, positive=True),
        "top_half_y_m": _F("num", 0.05, positive=True),
        "top_z_m": _F("num", 0.06, positive=True),
        "current_threshold_a": _F("num", 0.1, positive=True),
        "rearm_delay_s": _F("num", 3.0, positive=True),
        "mass_kg": _F("num", 0.56, positive=True),
    },
    "mission": {
        "mode": _F("str", "full", choices=("track_only", "full", "dock_cycles")),
        "low_battery_v": _F("num", 6.6, positive=True),
        "debounce_s": _F("num", 0.5),
        "dock_timeout_s": _F("num", 30.0, positive=True),
        "approach_v_mps": _F("num", 1.0, positive=True),
        "approach_a_mps2": _F("num", 1.5, positive=True),
        "hover_slack_m": _F("num", 0.02, positive=True),
        "staging_clearance_m": _F("num", 0.25, positive=True),
        "land_offset_m": _F("vec2", (0.3, 0.0)),
        "pad_radius_m": _F("num", 0.2, positive=True),
        "resume_altitude_m": _F("num", 0.8, positive=True),
        "arrival_tol_m": _F("num", 0.08, positive=True),
        "retry_offset_m": _F("num", 0.05),
        "n_cycles": _F("int", 0),
        "cycle_hold_s": _F("num", 1.0),
        "charge_exit_soc": _F("num", None),
        "watchdog_s": _F("num", 7200.0, positive=True),
    },
    "trajectory": {
        "kind": _F("str", "circle", choices=("circle", "box_patrol", "hold", "waypoints")),
        "center_m": _F("vec2", (0.0, 0.0)),
        "radius_m": _F("num", 1.0, positive=True),
        "speed_mps": _F("num", 2.0, positive=True),
        "altitude_m": _F("num", 1.0, positive=True),
        "bounds_lo_m": _F("vec3", (-1.4, -1.4, 0.8)),
        "bounds_hi_m": _F("vec3", (1.4, 1.4, 1.5)),
        "v_max_mps": _F("num", 1.2, positive=True),
        "a_max_mps2": _F("num", 1.5, positive=True),
        "hold_point_m": _F("vec3", (0.9, 0.0, 0.8)),
        "waypoints_m": _F("veclist", ()),
    },
    "noise": {
        "profile": _F("str", "none", choices=("indoor", "outdoor", "none")),
        "disturbance_force_n": _F("num", 0.0),
    },
    "start": {
        "initial_soc": _F("num", 1.0),
        "on_trajectory": _F("bool", True),
    },
    "gains": {
        "kp_xy": _F("num", 40.0, positive=True),
        "kp_z": _F("num", 45.0, positive=True),
        "kd_xy": _F("num", 12.0, positive=True),
        "kd_z": _F("num", 14.0, positive=True),
        "ki": _F("num", 6.0),
        "i_accel_max": _F("num", 2.0),
        "kr": _F("num", 400.0, positive=True),
        "kw": _F("num", 36.0, positive=True),
    },
}

# Sections that may be null in the file ("tether: null" means no tether at all).
_NULLABLE_SECTIONS = ("tether",)

NOISE_PROFILES = {
    # profile -> (position sigma [m], estimate rate [Hz])
    "indoor": (0.002, 100.0),
    "outdoor": (0.02, 500.0),
}


def _compose_line_map(text: str) -> dict[tuple, int]:
    lines: dict[tuple, int] = {}
    root = yaml.compose(text, Loader=yaml.SafeLoader)

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key_node, val_node in node.value:
                p = path + (str(key_node.value),)
                lines[p] = key_node.start_mark.line + 1
                walk(val_node, p)

    if root is not None:
        walk(root, ())
    return lines


def _err(path: tuple, line_map: dict, msg: str) -> ConfigError:
    loc = ".".join(path)
    line = line_map.get(path)
    suffix = f" (line {line})" if line else ""
    return ConfigError(f"{loc}: {msg}{suffix}")


def _check_value(path, fs: _Field, value, line_map):
    if value is None:
        if fs.default is None and not fs.required:
            return None
        raise _err(path, line_map, "value may not be null")
    if fs.kind == "num":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _err(path, line_map, f"expected a number, got {type(value).__name__}")
        if fs.positive and value <= 0:
            raise _err(path, line_map, f"must be > 0, got {value}")
        return float(value)
    if fs.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise _err(path, line_map, f"expected an integer, got {value!r}")
        return value
    if fs.kind == "bool":
        if not isinstance(value, bool):
            raise _err(path, line_map, f"expected a boolean, got {value!r}")
        return value
    if fs.kind == "str":
        if not isinstance(value, str):
            raise _err(path, line_map, f"expected a string, got {value!r}")
        if fs.choices and value not in fs.choices:
            raise _err(path, line_map, f"must be one of {fs.choices}, got {value!r}")
        return value
    if fs.kind in ("vec2", "vec3"):
        n = 2 if fs.kind == "vec2" else 3
        if not isinstance(value, (list, tuple)) or len(value) != n:
            raise _err(path, line_map, f"expected a list of {n} numbers")
        if any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in value):
            raise _err(path, line_map, f"expected a list of {n} numbers")
        return tuple(float(x) for x in value)
    if fs.kind == "veclist":
        if not isinstance(value, (list, tuple)):
            raise _err(path, line_map, "expected a list of 3-vectors")
        out = []
        for i, item in enumerate(value):
            if not isinstance(item, (list, tuple)) or len(item) != 3:
                raise _err(path + (str(i),), line_map, "expected a 3-vector")
            out.append(tuple(float(x) for x in item))
        return tuple(out)
    if fs.kind == "magnet":
        if isinstance(value, str):
            if value not in BUILTIN_MAGNETS:
                raise _err(path, line_map,
                           f"unknown magnet {value!r}; catalog: {sorted(BUILTIN_MAGNETS)}")
            return value
        if isinstance(value, dict):
            extra = set(value) - {"name", "mass_g", "pull_gram_force"}
            if extra:
                raise _err(path, line_map, f"unknown magnet keys {sorted(extra)}")
            for req in ("name", "mass_g", "pull_gram_force"):
                if req not in value:
                    raise _err(path, line_map, f"inline magnet missing {req!r}")
            if value["mass_g"] <= 0 or value["pull_gram_force"] <= 0:
                raise _err(path, line_map, "magnet mass and pull force must be > 0")
            return dict(value)
        raise _err(path, line_map, "magnet must be a catalog name or an inline mapping")
    raise AssertionError(f"unhandled schema kind {fs.kind}")


def validate_config(data: dict, line_map: dict | None = None) -> dict:
    """Validate a raw mapping against the schema; returns a defaults-filled copy."""
    line_map = line_map or {}
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a mapping")
    unknown = set(data) - set(SCHEMA) - {"name"}
    if unknown:
        key = sorted(unknown)[0]
        hint = difflib.get_close_matches(key, SCHEMA.keys(), n=1)
        hint_s = f"; did you mean {hint[0]!r}?" if hint else ""
        raise _err((key,), line_map, f"unknown section{hint_s}")

    out: dict = {"name": data.get("name", "scenario")}
    if not isinstance(out["name"], str):
        raise _err(("name",), line_map, "scenario name must be a string")

    for section, fields in SCHEMA.items():
        raw = data.get(section)
        if raw is None:
            if section in _NULLABLE_SECTIONS and section in data:
                out[section] = None
                continue
            raw = {}
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise _err((section,), line_map, "expected a mapping")
        unknown = set(raw) - set(fields)
        if unknown:
            key = sorted(unknown)[0]
            hint = difflib.get_close_matches(key, fields.keys(), n=1)
            hint_s = f"; did you mean {hint[0]!r}?" if hint else ""
            raise _err((section, key), line_map, f"unknown key{hint_s}")
        sec_out = {}
        for key, fs in fields.items():
            if key in raw:
                sec_out[key] = _check_value((section, key), fs, raw[key], line_map)
            else:
                if fs.required:
                    raise _err((section, key), line_map, "required key missing")
                sec_out[key] = copy.deepcopy(fs.default)
        out[section] = sec_out

    # "tether" omitted entirely means the default tether; explicit null means none.
    if "tether" in data and data["tether"] is None:
        out["tether"] = None
    return out


@dataclass
class ScenarioConfig:
    """Validated, defaults-filled configuration in its original units."""

    name: str
    data: dict
    source: str | None = None

    def copy(self) -> "ScenarioConfig":
        return ScenarioConfig(self.name, copy.deepcopy(self.data), self.source)


def preset_names() -> list[str]:
    root = importlib_resources.files("magdock") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(path_or_name: str | Path) -> ScenarioConfig:
    """Load and validate a scenario file, or a shipped preset by name."""
    p = Path(path_or_name)
    if p.suffix in (".yaml", ".yml") or p.exists():
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text()
        source = str(p)
    else:
        res = importlib_resources.files("magdock") / "presets" / f"{path_or_name}.yaml"
        if not res.is_file():
            raise ConfigError(
                f"no such file or preset {path_or_name!r}; presets: {preset_names()}"
            )
        text = res.read_text()
        source = f"preset:{path_or_name}"
    try:
        data = yaml.safe_load(text) or {}
        line_map = _compose_line_map(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {source}: {exc}") from exc
    out = validate_config(data, line_map)
    return ScenarioConfig(out["name"], out, source)


def echo_config(cfg: ScenarioConfig, path: Path):
    """Write the fully-resolved config (defaults included) for reproducibility."""
    def plain(obj):
        if isinstance(obj, dict):
            return {k: plain(v) for k, v in obj.items()}
        if isinstance(obj, tuple):
            return [plain(v) for v in obj]
        if isinstance(obj, list):
            return [plain(v) for v in obj]
        return obj

    path.write_text(yaml.safe_dump(plain(cfg.data), sort_keys=True))


# ---------------------------------------------------------------------------
# Variants and overrides
# ---------------------------------------------------------------------------

SWEEP_VARIANTS = ("Def", "NeodS", "CeraM", "CeraL")


def apply_variant(cfg: ScenarioConfig, variant: str) -> ScenarioConfig:
    """Return a copy configured with one tether variant; Def removes the tether."""
    out = cfg.copy()
    out.name = f"{cfg.name}_{variant}"
    out.data["name"] = out.name
    if variant == "Def":
        out.data["tether"] = None
        return out
    if variant not in BUILTIN_MAGNETS:
        raise ConfigError(f"unknown variant {variant!r}; expected one of {SWEEP_VARIANTS}")
    tether = out.data.get("tether")
    if tether is None:
        tether = {key: copy.deepcopy(fs.default) for key, fs in SCHEMA["tether"].items()}
    tether["magnet"] = variant
    out.data["tether"] = tether
    return out


def apply_overrides(cfg: ScenarioConfig, seed=None, dt=None, duration=None,
                    n_cycles=None, mode=None) -> ScenarioConfig:
    out = cfg.copy()
    if seed is not None:
        out.data["sim"]["seed"] = int(seed)
    if dt is not None:
        out.data["sim"]["dt_s"] = float(dt)
    if duration is not None:
        out.data["sim"]["duration_s"] = float(duration)
    if n_cycles is not None:
        out.data["mission"]["n_cycles"] = int(n_cycles)
    if mode is not None:
        out.data["mission"]["mode"] = mode
    return out


# ---------------------------------------------------------------------------
# Build: resolved SI scenario with calibrations
# ---------------------------------------------------------------------------

def _resolve_magnet(value) -> MagnetSpec:
    if isinstance(value, str):
        return BUILTIN_MAGNETS[value]
    return MagnetSpec(value["name"], value["mass_g"] * 1e-3,
                      value["pull_gram_force"] * GRAM_FORCE_N)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    d = cfg.data
    sim = d["sim"]
    veh = d["vehicle"]
    bat = d["battery"]
    chg = d["charger"]
    pwr = d["power"]
    mag = d["magnetics"]
    stn = d["station"]
    mis = d["mission"]
    trj = d["trajectory"]
    noi = d["noise"]
    sta = d["start"]
    gns = d["gains"]

    vehicle = VehicleSpec(
        name=veh["name"],
        mass_kg=veh["mass_g"] * 1e-3,
        inertia_kgm2=veh["inertia_kgm2"],
        max_thrust_n=veh["max_thrust_n"],
        tau_max_xy_nm=veh["tau_max_xy_nm"],
        tau_max_z_nm=veh["tau_max_z_nm"],
        attach_offset_m=veh["attach_offset_m"],
        estimate_rate_hz=veh["estimate_rate_hz"],
    )
    battery = BatterySpec(
        cells=bat["cells"],
        capacity_ah=bat["capacity_mah"] * 1e-3,
        mass_kg=bat["mass_g"] * 1e-3,
        full_voltage_v=bat["full_voltage_v"],
        empty_per_cell_v=bat["empty_per_cell_v"],
        internal_resistance_ohm=bat["internal_resistance_ohm"],
    )
    charger = ChargerSpec(
        set_current_a=chg["set_current_c_rate"] * battery.capacity_ah,
        cutoff_a=chg["cutoff_c_rate"] * battery.capacity_ah,
        t_protect_c=chg["t_protect_degc"],
        t_resume_c=chg["t_resume_degc"],
        ambient_c=chg["ambient_degc"],
        heat_coeff=chg["heat_coeff_degc_per_s"],
        cool_coeff=1.0 / chg["cool_tau_s"],
    )
    station_spec = StationSpec(
        connector_pos=stn["connector_pos_m"],
        top_half_x=stn["top_half_x_m"],
        top_half_y=stn["top_half_y_m"],
        top_z=stn["top_z_m"],
        current_threshold_a=stn["current_threshold_a"],
        rearm_delay_s=stn["rearm_delay_s"],
        mass_kg=stn["mass_kg"],
    )

    tether = None
    field_model = None
    if d.get("tether") is not None:
        tet = d["tether"]
        magnet = _resolve_magnet(tet["magnet"])
        tether = TetherConfig(
            length_m=tet["length_m"],
            magnet=magnet,
            wire_density_kg_per_m=tet["wire_density_kg_per_m"],
            hardware_mass_kg=tet["hardware_mass_g"] * 1e-3,
            spring_n_per_m=tet["spring_n_per_m"],
            damping_ns_per_m=tet["damping_ns_per_m"],
            head_drag_ns_per_m=tet["head_drag_ns_per_m"],
        )
        models = calibrate_field(
            list(BUILTIN_MAGNETS.values()),
            target_ratio=mag["target_ratio"],
            baseline_radius=mag["baseline_radius_m"],
            em_boost=mag["em_boost"],
            capture_threshold_n=mag["capture_threshold_n"],
            residual_hold_n=mag["residual_hold_n"],
        )
        if magnet.name in models:
            field_model = models[magnet.name]
        else:
            shared = next(iter(models.values()))
            field_model = EmFieldModel(
                f0_n=mag["em_boost"] * magnet.contact_pull_n,
                d0_m=shared.d0_m,
                n=shared.n,
                capture_threshold_n=mag["capture_threshold_n"],
                residual_hold_n=mag["residual_hold_n"],
            )

    if pwr["thrust_coeff_w_per_n32"] is not None:
        power_model = PowerModel(pwr["idle_power_w"], pwr["thrust_coeff_w_per_n32"])
    else:
        a_c = pwr["calib_speed_mps"] ** 2 / pwr["calib_radius_m"]
        hover = vehicle.mass_kg * math.sqrt(GRAVITY * GRAVITY + a_c * a_c)
        coeff = calibrate_thrust_coeff(
            battery, pwr["idle_power_w"], hover,
            pwr["baseline_flight_time_s"], mis["low_battery_v"],
        )
        power_model = PowerModel(pwr["idle_power_w"], coeff)

    exit_soc = mis["charge_exit_soc"]
    mission = MissionConfig(
        mode=mis["mode"],
        low_battery_v=mis["low_battery_v"],
        debounce_s=mis["debounce_s"],
        dock_timeout_s=mis["dock_timeout_s"],
        approach_v=mis["approach_v_mps"],
        approach_a=mis["approach_a_mps2"],
        hover_slack_m=mis["hover_slack_m"],
        staging_clearance_m=mis["staging_clearance_m"],
        land_offset_m=mis["land_offset_m"],
        pad_radius_m=mis["pad_radius_m"],
        resume_altitude_m=mis["resume_altitude_m"],
        arrival_tol_m=mis["arrival_tol_m"],
        retry_offset_m=mis["retry_offset_m"],
        n_cycles=mis["n_cycles"],
        cycle_hold_s=mis["cycle_hold_s"],
        charge_exit_soc=exit_soc,
        watchdog_s=mis["watchdog_s"],
    )

    trajectory = TrajectorySpec(
        kind=trj["kind"],
        center=trj["center_m"],
        radius_m=trj["radius_m"],
        speed_mps=trj["speed_mps"],
        altitude_m=trj["altitude_m"],
        bounds_lo=trj["bounds_lo_m"],
        bounds_hi=trj["bounds_hi_m"],
        v_max_mps=trj["v_max_mps"],
        a_max_mps2=trj["a_max_mps2"],
        hold_point=trj["hold_point_m"],
        waypoints=trj["waypoints_m"],
    )

    if noi["profile"] == "none":
        sigma, est_rate = 0.0, vehicle.estimate_rate_hz
    else:
        sigma, est_rate = NOISE_PROFILES[noi["profile"]]

    gains = ControllerGains(
        kp_xy=gns["kp_xy"], kp_z=gns["kp_z"], kd_xy=gns["kd_xy"], kd_z=gns["kd_z"],
        ki=gns["ki"], i_accel_max=gns["i_accel_max"], kr=gns["kr"], kw=gns["kw"],
    )

    scenario = Scenario(
        name=cfg.name,
        vehicle=vehicle,
        battery=battery,
        charger=charger,
        station_spec=station_spec,
        power_model=power_model,
        mission=mission,
        trajectory=trajectory,
        tether=tether,
        field_model=field_model,
        gains=gains,
        dt=sim["dt_s"],
        control_rate_hz=sim["control_rate_hz"],
        log_interval_s=sim["log_interval_s"],
        duration_s=sim["duration_s"],
        seed=sim["seed"],
        noise_sigma_m=sigma,
        estimate_rate_hz=est_rate,
        disturbance_n=noi["disturbance_force_n"],
        initial_soc=sta["initial_soc"],
        contact_tol_m=mag["contact_tolerance_m"],
        capture_damping=mag["capture_damping_ns_per_m"],
        start_on_trajectory=sta["on_trajectory"],
    )
    _cross_validate(scenario)
    return scenario


def _cross_validate(sc: Scenario):
    """Inter-field constraints that only make sense on the resolved scenario."""
    dt = sc.dt
    for label, rate in (("control_rate_hz", sc.control_rate_hz),
                        ("estimate_rate_hz", sc.estimate_rate_hz)):
        div = 1.0 / (rate * dt)
        if abs(div - round(div)) > 1e-6 or round(div) < 1:
            raise ConfigError(
                f"{label} {rate} must divide the physics rate {1.0 / dt:.0f} Hz"
            )
    div = sc.log_interval_s / dt
    if abs(div - round(div)) > 1e-6 or round(div) < 1:
        raise ConfigError("log_interval_s must be an integer multiple of dt_s")

    lift = sc.vehicle.mass_kg + (
        sc.tether.head_mass_kg + sc.tether.vehicle_extra_mass_kg if sc.tether else 0.0
    )
    if sc.vehicle.max_thrust_n < 1.25 * lift * GRAVITY:
        raise ConfigError(
            f"vehicle.max_thrust_n {sc.vehicle.max_thrust_n} leaves under 25% margin over "
            f"the {lift:.3f} kg all-up weight"
        )

    if sc.tether is not None and sc.mission.mode in ("full", "dock_cycles"):
        if sc.station_spec.current_threshold_a >= sc.charger.cutoff_a:
            raise ConfigError(
                f"station.current_threshold_a {sc.station_spec.current_threshold_a} A must be "
                f"below the charger cutoff {sc.charger.cutoff_a:.4f} A, otherwise the EM "
                "re-arms during the CV taper and the docked head can never break away"
            )
        if sc.station_spec.current_threshold_a >= sc.charger.set_current_a:
            raise ConfigError("station current threshold must be below the charge current")
        radius = capture_radius(sc.field_model)
        if sc.contact_tol_m >= radius:
            raise ConfigError(
                f"contact tolerance {sc.contact_tol_m} m must be below the capture radius "
                f"{radius:.4f} m"
            )
        # The EM must stay off long enough for a departing head to leave the envelope.
        exit_time = 1.0 + radius / 0.2
        if sc.station_spec.rearm_delay_s < exit_time:
            raise ConfigError(
                f"station.rearm_delay_s {sc.station_spec.rearm_delay_s} s is shorter than the "
                f"~{exit_time:.2f} s a departing head needs to clear the capture envelope; "
                "the EM could recapture it"
            )
