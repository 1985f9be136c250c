"""World state and the fixed-step simulation loop.

One canonical per-tick update order (1 kHz physics by default):

    estimator sample -> station FSM -> mission FSM -> flight controller ->
    magnetics (capture/dock/breakaway) -> tether forces -> battery/charger ->
    integrate bodies -> ground resolve -> log.

Controller, estimator and mission run on decimated ticks; everything is a
pure function of (scenario, seed), so two runs with the same inputs produce
byte-identical logs. While the vehicle sits landed and docked with motors
off, the pose is provably static and the loop takes a reduced path that only
advances the electrical and station state -- hour-scale charge phases cost
little wall time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import autonomy, bodies, power, station
from .autonomy import (
    BoxPatrol,
    CircleTrajectory,
    ControllerGains,
    HoldTrajectory,
    MissionConfig,
    MissionState,
    TrackingController,
    WaypointPath,
    dock_hover_point,
    mission_reference,
    mission_tick,
)
from .bodies import (
    CAPTURED,
    DOCKED,
    SLACK,
    TAUT,
    TetherConfig,
    TetherHeadState,
    VehicleSpec,
    VehicleState,
    head_floor_z,
    tether_force,
    vehicle_derivatives,
)
from .magnetics import GRAVITY, EmFieldModel, capture_radius, force_magnitude
from .mathutil import quat_integrate, quat_rotate
from .power import (
    BatterySpec,
    ChargerSpec,
    ChargerState,
    LowBatteryMonitor,
    PowerModel,
    charge_step,
    discharge_step,
    flight_power,
    fresh_battery,
    pack_ocv,
)
from .station import StationControllerState, StationSpec, station_tick

TIMESERIES_COLUMNS = (
    "t", "x", "y", "z", "vx", "vy", "vz", "battery_v", "battery_soc",
    "charger_current", "em_active", "mission_phase", "station_state",
    "tether_tension", "rmse_instant",
)


class SimulationError(RuntimeError):
    """Fatal simulation diagnostic (non-finite state, deadlock, ...)."""


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str                                   # circle | box_patrol | hold | waypoints
    center: tuple[float, float] = (0.0, 0.0)
    radius_m: float = 1.0
    speed_mps: float = 2.0
    altitude_m: float = 1.0
    bounds_lo: tuple[float, float, float] = (-1.5, -1.5, 0.8)
    bounds_hi: tuple[float, float, float] = (1.5, 1.5, 1.6)
    v_max_mps: float = 1.2
    a_max_mps2: float = 1.5
    hold_point: tuple[float, float, float] = (0.0, 0.0, 1.0)
    waypoints: tuple[tuple[float, float, float], ...] = ()


@dataclass(frozen=True)
class Scenario:
    """Fully resolved run description: every spec object plus run parameters."""

    name: str
    vehicle: VehicleSpec
    battery: BatterySpec
    charger: ChargerSpec
    station_spec: StationSpec
    power_model: PowerModel
    mission: MissionConfig
    trajectory: TrajectorySpec
    tether: TetherConfig | None = None
    field_model: EmFieldModel | None = None
    gains: ControllerGains = field(default_factory=ControllerGains)
    dt: float = 0.001
    control_rate_hz: float = 500.0
    log_interval_s: float = 0.01
    duration_s: float = 60.0
    seed: int = 1
    noise_sigma_m: float = 0.0
    estimate_rate_hz: float = 100.0
    disturbance_n: float = 0.0
    initial_soc: float = 1.0
    contact_tol_m: float = 0.005
    capture_damping: float = 3.0
    start_on_trajectory: bool = True
    ground_enabled: bool = True
    em_override: bool | None = None   # test hook only: force the EM on/off

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.initial_soc <= 1.0:
            raise ValueError("initial soc must lie in [0, 1]")


class SimClock:
    """Simulated time derived from the integer tick so t never drifts."""

    __slots__ = ("tick", "dt")

    def __init__(self, dt: float):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self.tick = 0
        self.dt = dt

    @property
    def t(self) -> float:
        return self.tick * self.dt


class WorldState:
    """Bundle of every mutable sub-state advanced by the simulator."""

    __slots__ = ("clock", "vehicle", "head", "battery", "charger", "station",
                 "mission", "rng_seed")

    def __init__(self, clock, vehicle, head, battery, charger, st, mission, rng_seed):
        self.clock = clock
        self.vehicle = vehicle
        self.head = head
        self.battery = battery
        self.charger = charger
        self.station = st
        self.mission = mission
        self.rng_seed = rng_seed

    def snapshot(self) -> dict:
        """Deterministically ordered dump of all state scalars (full precision)."""
        v = self.vehicle
        out = {
            "tick": self.clock.tick,
            "t": self.clock.t,
            "rng_seed": self.rng_seed,
            "vehicle": {
                "pos": [v.px, v.py, v.pz],
                "vel": [v.vx, v.vy, v.vz],
                "quat": [v.qw, v.qx, v.qy, v.qz],
                "omega": [v.wx, v.wy, v.wz],
                "thrust": v.thrust_n,
                "torque": [v.tau_x, v.tau_y, v.tau_z],
                "grounded": v.grounded,
            },
            "battery": {
                "soc": self.battery.soc,
                "terminal_v": self.battery.terminal_v,
                "current_a": self.battery.current_a,
            },
            "charger": {
                "phase": self.charger.phase,
                "current_a": self.charger.current_a,
                "temp_c": self.charger.temp_c,
            },
            "station": {
                "state": self.station.state,
                "em_active": self.station.em_active,
                "rearm_timer_s": self.station.rearm_timer_s,
            },
            "mission": {
                "phase": self.mission.phase,
                "cycles_done": self.mission.cycles_done,
                "retries": self.mission.retries,
            },
        }
        if self.head is not None:
            out["head"] = {
                "pos": [self.head.px, self.head.py, self.head.pz],
                "vel": [self.head.vx, self.head.vy, self.head.vz],
                "mode": self.head.mode,
            }
        return out

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


class Simulator:
    """Owns a WorldState and advances it tick by tick per the fixed pipeline."""

    def __init__(self, scenario: Scenario, timeseries_path=None):
        self.scenario = scenario
        sc = scenario
        self.dt = sc.dt
        self.clock = SimClock(sc.dt)

        # Decimation dividers (rates must divide the physics rate).
        self.ctrl_div = max(1, round(1.0 / (sc.control_rate_hz * sc.dt)))
        self.est_div = max(1, round(1.0 / (sc.estimate_rate_hz * sc.dt)))
        self.log_div = max(1, round(sc.log_interval_s / sc.dt))
        self.dt_ctrl = self.ctrl_div * sc.dt

        seq = np.random.SeedSequence(sc.seed)
        noise_seed, traj_seed = seq.spawn(2)
        self.rng = np.random.Generator(np.random.PCG64(noise_seed))
        self._traj_rng = np.random.Generator(np.random.PCG64(traj_seed))

        # Specs and derived constants, flattened for the hot loop.
        self.vehicle_spec = sc.vehicle
        self.station_spec = sc.station_spec
        self.tether = sc.tether
        self.field_model = sc.field_model
        self.battery_spec = sc.battery
        self.charger_spec = sc.charger
        self.power_model = sc.power_model
        self.mission_cfg = sc.mission
        self._mv = sc.vehicle.mass_kg + (sc.tether.vehicle_extra_mass_kg if sc.tether else 0.0)
        self._mh = sc.tether.head_mass_kg if sc.tether else 0.0
        self._capture_radius = capture_radius(sc.field_model) if sc.field_model else 0.0
        self._contact_tol = sc.contact_tol_m
        self._pad_center = (
            sc.station_spec.connector_pos[0] + sc.mission.land_offset_m[0],
            sc.station_spec.connector_pos[1] + sc.mission.land_offset_m[1],
        )
        self.dock_hover = (
            dock_hover_point(sc.vehicle, sc.tether, sc.station_spec, sc.mission.hover_slack_m)
            if sc.tether
            else sc.station_spec.connector_pos
        )

        # Mutable state.
        self.scenario_traj = self._build_trajectory()
        ref0 = self.scenario_traj.sample(0.0)
        if sc.start_on_trajectory:
            self.vehicle = VehicleState(pos=ref0[0], vel=ref0[1])
        else:
            self.vehicle = VehicleState(pos=ref0[0])
        if sc.tether:
            ax, ay, az = self.vehicle.attach_point(sc.vehicle)
            self.head = TetherHeadState(
                pos=(ax, ay, az - sc.tether.length_m), vel=self.vehicle.velocity
            )
        else:
            self.head = None
        self.battery = fresh_battery(sc.battery, sc.initial_soc, sc.charger.ambient_c)
        self.charger = ChargerState(sc.charger.ambient_c)
        self.station = StationControllerState()
        self.mission = MissionState(autonomy.TRACKING, 0.0)
        self.low_monitor = LowBatteryMonitor(sc.mission.low_battery_v, sc.mission.debounce_s)
        self.controller = TrackingController(sc.gains, self._mv + self._mh, sc.vehicle)
        self.world = WorldState(
            self.clock, self.vehicle, self.head, self.battery, self.charger,
            self.station, self.mission, sc.seed,
        )

        # Controller/estimator working values.
        self._est_pos = self.vehicle.position
        self._ref = ref0
        self._dist_force = (0.0, 0.0, 0.0)
        self._tension = 0.0

        # Events, logging, metric accumulators.
        self.events: list[tuple[float, str, dict]] = []
        self._battery_empty = False
        self._ts_file = open(timeseries_path, "w", newline="") if timeseries_path else None
        self.timeseries: list[str] = []
        header = ",".join(TIMESERIES_COLUMNS)
        self._write_row(header)
        self.rmse_sum = 0.0
        self.rmse_n = 0
        self.min_tension = 0.0
        self.em_overlap_ticks = 0
        self.cycle_log: list[dict] = []
        self._cycle_started_t = 0.0

        self._log_state()   # row at t = 0

    # -- construction helpers ------------------------------------------------

    def _build_trajectory(self):
        ts = self.scenario.trajectory
        if ts.kind == "circle":
            return CircleTrajectory(ts.center, ts.radius_m, ts.speed_mps, ts.altitude_m)
        if ts.kind == "box_patrol":
            start = (
                0.5 * (ts.bounds_lo[0] + ts.bounds_hi[0]),
                0.5 * (ts.bounds_lo[1] + ts.bounds_hi[1]),
                0.5 * (ts.bounds_lo[2] + ts.bounds_hi[2]),
            )
            return BoxPatrol(ts.bounds_lo, ts.bounds_hi, ts.v_max_mps, ts.a_max_mps2,
                             self._traj_rng, start)
        if ts.kind == "hold":
            return HoldTrajectory(ts.hold_point)
        if ts.kind == "waypoints":
            return WaypointPath(list(ts.waypoints), ts.v_max_mps, ts.a_max_mps2)
        raise ValueError(f"unknown trajectory kind {ts.kind!r}")

    # -- mission hooks -------------------------------------------------------

    @property
    def t(self) -> float:
        return self.clock.t

    def emit(self, kind: str, payload: dict | None = None):
        self.events.append((self.t, kind, payload or {}))

    def scenario_rejoin_point(self):
        if isinstance(self.scenario_traj, BoxPatrol):
            v = self.vehicle
            lo, hi = self.scenario_traj.lo, self.scenario_traj.hi
            z = min(max(self.mission_cfg.resume_altitude_m, lo[2]), hi[2])
            return (v.px, v.py, z)
        if isinstance(self.scenario_traj, HoldTrajectory):
            return self.scenario_traj.point
        return self.scenario_traj.sample(self.t)[0]

    def on_cycle_complete(self):
        if isinstance(self.scenario_traj, BoxPatrol):
            self.scenario_traj.replan_from(self.vehicle.position, self.t)

    # -- sensing -------------------------------------------------------------

    def _head_settled(self) -> bool:
        return (
            self.head is not None
            and self.head.mode == DOCKED
            and self.head.docked_tick < self.clock.tick
        )

    def sensed_current(self) -> float:
        """Current through the battery connector as the station senses it now:
        the charger's prospective output while a settled head is docked, else 0."""
        if not self._head_settled():
            return 0.0
        ch, cs, bs = self.charger, self.charger_spec, self.battery_spec
        if ch.phase == power.CHG_COMPLETE:
            return 0.0
        limit = cs.set_current_a * (0.5 if ch.throttled else 1.0)
        ocv = pack_ocv(bs, self.battery.soc)
        r = bs.internal_resistance_ohm
        if ocv + limit * r >= bs.full_voltage_v:
            i = max(0.0, (bs.full_voltage_v - ocv) / r)
            if not ch.throttled and i < cs.cutoff_a:
                return 0.0
            return min(i, limit)
        return limit

    # -- main loop -----------------------------------------------------------

    def step(self):
        """Advance exactly one physics tick through the fixed pipeline."""
        if self._fast_charging_eligible():
            self._fast_tick()
            return
        tick = self.clock.tick
        dt = self.dt
        v = self.vehicle
        mission = self.mission
        ctrl_tick = tick % self.ctrl_div == 0

        # 1. estimator (pauses while parked with motors off: nothing to estimate)
        sampling = not (v.grounded and not mission.motors_on)
        if sampling and tick % self.est_div == 0:
            sig = self.scenario.noise_sigma_m
            if sig > 0.0:
                r = self.rng
                self._est_pos = (
                    v.px + sig * r.standard_normal(),
                    v.py + sig * r.standard_normal(),
                    v.pz + sig * r.standard_normal(),
                )
            else:
                self._est_pos = (v.px, v.py, v.pz)

        # 2. station FSM
        ev = station_tick(self.station, self.sensed_current(), self.station_spec, dt)
        if ev:
            self.emit(ev)
        if self.scenario.em_override is not None:
            self.station.em_active = self.scenario.em_override

        # 3 + 4. mission FSM and flight controller on control ticks
        if ctrl_tick:
            mission_tick(mission, self)
            self._ref = mission_reference(mission, self)
            if mission.motors_on and not v.grounded:
                v.thrust_n, (v.tau_x, v.tau_y, v.tau_z) = self.controller.track(
                    self._est_pos, v.velocity, v.quaternion,
                    (v.wx, v.wy, v.wz), self._ref, self.dt_ctrl,
                )
            elif mission.motors_on and v.grounded:
                # Takeoff: command against the reference until thrust beats weight.
                v.thrust_n, (v.tau_x, v.tau_y, v.tau_z) = self.controller.track(
                    self._est_pos, v.velocity, v.quaternion,
                    (v.wx, v.wy, v.wz), self._ref, self.dt_ctrl,
                )
                if v.thrust_n > 1.05 * self._mv * GRAVITY:
                    v.grounded = False
            else:
                v.thrust_n = 0.0
                v.tau_x = v.tau_y = v.tau_z = 0.0
            if mission.phase == autonomy.TRACKING:
                ex = v.px - self._ref[0][0]
                ey = v.py - self._ref[0][1]
                ez = v.pz - self._ref[0][2]
                self.rmse_sum += ex * ex + ey * ey + ez * ez
                self.rmse_n += 1
            sig_f = self.scenario.disturbance_n
            if sig_f > 0.0:
                r = self.rng
                self._dist_force = (
                    sig_f * r.standard_normal(),
                    sig_f * r.standard_normal(),
                    sig_f * r.standard_normal(),
                )

        # 5. magnetics: capture, reel-in, dock, breakaway
        field_force = (0.0, 0.0, 0.0)
        head = self.head
        if head is not None and self.field_model is not None:
            field_force = self._magnetics_stage(head)

        # 6. tether forces
        f_vehicle = (0.0, 0.0, 0.0)
        tension = 0.0
        if head is not None:
            anchor = v.attach_point(self.vehicle_spec)
            anchor_vel = self._anchor_velocity()
            f_vehicle, f_head, tension = tether_force(
                anchor, anchor_vel, head.position,
                (head.vx, head.vy, head.vz), self.tether,
            )
            if head.mode == DOCKED:
                f_head = (0.0, 0.0, 0.0)   # pin absorbs the cable pull
            if head.mode in (SLACK, TAUT) and head.mode != DOCKED:
                head.mode = TAUT if tension > 0.0 else SLACK
        else:
            f_head = (0.0, 0.0, 0.0)
            anchor = None
        self._tension = tension
        if tension < self.min_tension:
            self.min_tension = tension

        # 7. battery / charger
        self._power_stage(dt)

        # 8 + 9. integrate and resolve contacts
        self._integrate(dt, f_vehicle, f_head, field_force, anchor)

        # 10. bookkeeping, log
        if self.station.em_active and self.charger.current_a >= self.station_spec.current_threshold_a:
            self.em_overlap_ticks += 1
        self.clock.tick = tick + 1
        self._check_finite()
        if self.clock.tick % self.log_div == 0:
            self._log_state()

    # -- pipeline stages -----------------------------------------------------

    def _magnetics_stage(self, head):
        st = self.station
        conn = self.station_spec.connector_pos
        dx = conn[0] - head.px
        dy = conn[1] - head.py
        dz = conn[2] - head.pz
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        mode = head.mode

        if mode in (SLACK, TAUT):
            if st.em_active and d <= self._capture_radius:
                head.mode = mode = CAPTURED
                self.emit("CAPTURE", {"separation_m": d})

        if mode == CAPTURED:
            if not st.em_active:
                head.mode = SLACK
                return (0.0, 0.0, 0.0)
            if d <= self._contact_tol:
                head.mode = DOCKED
                head.docked_tick = self.clock.tick
                head.px, head.py, head.pz = conn
                head.vx = head.vy = head.vz = 0.0
                self.emit("DOCKED", {})
                return (0.0, 0.0, 0.0)
            f = force_magnitude(self.field_model, d)
            c = self.scenario.capture_damping
            if d > 1e-12:
                s = f / d
                return (
                    s * dx - c * head.vx,
                    s * dy - c * head.vy,
                    s * dz - c * head.vz,
                )
            return (0.0, 0.0, 0.0)

        if mode == DOCKED:
            anchor = self.vehicle.attach_point(self.vehicle_spec)
            _, _, tension = tether_force(
                anchor, self._anchor_velocity(), head.position, (0.0, 0.0, 0.0), self.tether
            )
            hold = self.field_model.f0_n if st.em_active else self.field_model.residual_hold_n
            if tension > hold:
                head.mode = SLACK
                self.emit("DETACH", {"tension_n": tension})
        return (0.0, 0.0, 0.0)

    def _anchor_velocity(self):
        # Attach-point velocity: v + omega x r, with omega rotated to world.
        v = self.vehicle
        r = quat_rotate(v.quaternion, self.vehicle_spec.attach_offset_m)
        w = quat_rotate(v.quaternion, (v.wx, v.wy, v.wz))
        return (
            v.vx + w[1] * r[2] - w[2] * r[1],
            v.vy + w[2] * r[0] - w[0] * r[2],
            v.vz + w[0] * r[1] - w[1] * r[0],
        )

    def _power_stage(self, dt):
        connected = self._head_settled()
        # Charger always ticks so its thermal state keeps integrating between visits.
        for ev in charge_step(
            self.battery, self.battery_spec, self.charger, self.charger_spec, dt, connected
        ):
            self.emit(ev)
        if not connected:
            p = flight_power(self.vehicle.thrust_n, self.power_model)
            if discharge_step(self.battery, self.battery_spec, p, dt):
                if not self._battery_empty:
                    self._battery_empty = True
                    self.emit("BATTERY_EMPTY", {})
        if self.low_monitor.update(self.battery.terminal_v, dt):
            self.emit("LOW_BATTERY", {"terminal_v": self.battery.terminal_v})

    def _integrate(self, dt, f_vehicle, f_head, field_force, anchor):
        v = self.vehicle
        spec = self.vehicle_spec

        if not v.grounded and not v.kinematic_hold:
            ext_f = (
                f_vehicle[0] + self._dist_force[0],
                f_vehicle[1] + self._dist_force[1],
                f_vehicle[2] + self._dist_force[2],
            )
            if anchor is not None and (f_vehicle[0] or f_vehicle[1] or f_vehicle[2]):
                rx = anchor[0] - v.px
                ry = anchor[1] - v.py
                rz = anchor[2] - v.pz
                ext_tau_w = (
                    ry * f_vehicle[2] - rz * f_vehicle[1],
                    rz * f_vehicle[0] - rx * f_vehicle[2],
                    rx * f_vehicle[1] - ry * f_vehicle[0],
                )
                # world torque -> body frame (rotate by inverse quaternion)
                qi = (v.qw, -v.qx, -v.qy, -v.qz)
                ext_tau = quat_rotate(qi, ext_tau_w)
            else:
                ext_tau = (0.0, 0.0, 0.0)
            (ax, ay, az), (dwx, dwy, dwz) = vehicle_derivatives(
                v, spec, self._mv, ext_f, ext_tau
            )
            nvx = v.vx + ax * dt
            nvy = v.vy + ay * dt
            nvz = v.vz + az * dt
            v.px += 0.5 * (v.vx + nvx) * dt
            v.py += 0.5 * (v.vy + nvy) * dt
            v.pz += 0.5 * (v.vz + nvz) * dt
            v.vx, v.vy, v.vz = nvx, nvy, nvz
            v.wx += dwx * dt
            v.wy += dwy * dt
            v.wz += dwz * dt
            v.qw, v.qx, v.qy, v.qz = quat_integrate(
                v.quaternion, (v.wx, v.wy, v.wz), dt
            )
            if self.scenario.ground_enabled and v.pz <= 0.0:
                self._resolve_vehicle_ground()

        head = self.head
        if head is not None and head.mode != DOCKED:
            mh = self._mh
            drag = self.tether.head_drag_ns_per_m
            axh = (f_head[0] + field_force[0] - drag * head.vx) / mh
            ayh = (f_head[1] + field_force[1] - drag * head.vy) / mh
            azh = (f_head[2] + field_force[2] - drag * head.vz) / mh - GRAVITY
            nvx = head.vx + axh * dt
            nvy = head.vy + ayh * dt
            nvz = head.vz + azh * dt
            head.px += 0.5 * (head.vx + nvx) * dt
            head.py += 0.5 * (head.vy + nvy) * dt
            head.pz += 0.5 * (head.vz + nvz) * dt
            head.vx, head.vy, head.vz = nvx, nvy, nvz
            if self.scenario.ground_enabled:
                floor = head_floor_z(head.px, head.py, self.station_spec)
                if head.pz < floor:
                    head.pz = floor
                    if head.vz < 0.0:
                        head.vz = 0.0
                    damp = math.exp(-20.0 * dt)
                    head.vx *= damp
                    head.vy *= damp

    def _resolve_vehicle_ground(self):
        v = self.vehicle
        v.pz = 0.0
        dxp = v.px - self._pad_center[0]
        dyp = v.py - self._pad_center[1]
        on_pad = dxp * dxp + dyp * dyp <= self.mission_cfg.pad_radius_m ** 2
        speed = math.sqrt(v.vx * v.vx + v.vy * v.vy + v.vz * v.vz)
        if on_pad and speed <= 0.5 and v.vz <= 0.0:
            # Inelastic touchdown on the landing pad: latch at rest, level.
            v.vx = v.vy = v.vz = 0.0
            v.wx = v.wy = v.wz = 0.0
            v.qw, v.qx, v.qy, v.qz = 1.0, 0.0, 0.0, 0.0
            v.grounded = True
            self.controller.reset_integrator()
        else:
            # Stiff inelastic floor elsewhere: kill the downward component.
            if v.vz < 0.0:
                v.vz = 0.0

    # -- fast path for landed charging ----------------------------------------

    def _fast_charging_eligible(self) -> bool:
        v = self.vehicle
        head = self.head
        if not (
            self.mission.phase == autonomy.CHARGING
            and v.grounded
            and not self.mission.motors_on
            and head is not None
            and head.mode == DOCKED
            and v.thrust_n == 0.0
        ):
            return False
        # Cable must be slack so no breakaway check is needed while static.
        ax, ay, az = v.attach_point(self.vehicle_spec)
        dx = head.px - ax
        dy = head.py - ay
        dz = head.pz - az
        return dx * dx + dy * dy + dz * dz < (self.tether.length_m - 1e-6) ** 2

    def _fast_tick(self):
        """Reduced pipeline while parked, docked, and slack: the pose is static,
        so only the station FSM, charger/battery, mission exit checks, and the
        log advance. Arithmetic is identical to the full path for these stages."""
        dt = self.dt
        tick = self.clock.tick
        ev = station_tick(self.station, self.sensed_current(), self.station_spec, dt)
        if ev:
            self.emit(ev)
        if tick % self.ctrl_div == 0:
            mission_tick(self.mission, self)
        self._power_stage(dt)
        self._tension = 0.0
        if self.station.em_active and self.charger.current_a >= self.station_spec.current_threshold_a:
            self.em_overlap_ticks += 1
        self.clock.tick = tick + 1
        b = self.battery
        if not math.isfinite(b.soc + b.terminal_v + self.charger.temp_c):
            self._check_finite()
        if self.clock.tick % self.log_div == 0:
            self._log_state()

    # -- diagnostics, metrics, output -----------------------------------------

    def _check_finite(self):
        v = self.vehicle
        probe = (
            v.px + v.py + v.pz + v.vx + v.vy + v.vz
            + v.qw + v.qx + v.qy + v.qz + v.wx + v.wy + v.wz
            + v.thrust_n + self.battery.soc + self.battery.terminal_v
            + self.charger.temp_c
        )
        if self.head is not None:
            probe += self.head.px + self.head.py + self.head.pz
            probe += self.head.vx + self.head.vy + self.head.vz
        if math.isfinite(probe):
            return
        named = dict(
            px=v.px, py=v.py, pz=v.pz, vx=v.vx, vy=v.vy, vz=v.vz,
            qw=v.qw, qx=v.qx, qy=v.qy, qz=v.qz, wx=v.wx, wy=v.wy, wz=v.wz,
            thrust_n=v.thrust_n, soc=self.battery.soc,
            terminal_v=self.battery.terminal_v, charger_temp=self.charger.temp_c,
        )
        if self.head is not None:
            named.update(head_px=self.head.px, head_py=self.head.py, head_pz=self.head.pz,
                         head_vx=self.head.vx, head_vy=self.head.vy, head_vz=self.head.vz)
        for name, val in named.items():
            if not math.isfinite(val):
                raise SimulationError(
                    f"non-finite state: field {name!r} = {val} at tick {self.clock.tick}"
                )
        raise SimulationError(f"non-finite state detected at tick {self.clock.tick}")

    def _write_row(self, line: str):
        if self._ts_file is not None:
            self._ts_file.write(line + "\n")
        else:
            self.timeseries.append(line)

    def _log_state(self):
        v = self.vehicle
        ref = self._ref
        ex = v.px - ref[0][0]
        ey = v.py - ref[0][1]
        ez = v.pz - ref[0][2]
        rmse_inst = math.sqrt(ex * ex + ey * ey + ez * ez)
        row = ",".join((
            _fmt(self.t), _fmt(v.px), _fmt(v.py), _fmt(v.pz),
            _fmt(v.vx), _fmt(v.vy), _fmt(v.vz),
            _fmt(self.battery.terminal_v), _fmt(self.battery.soc),
            _fmt(self.charger.current_a),
            "1" if self.station.em_active else "0",
            self.mission.phase, self.station.state,
            _fmt(self._tension), _fmt(rmse_inst),
        ))
        self._write_row(row)

    def tracking_rmse(self) -> float:
        if self.rmse_n == 0:
            raise autonomy.MetricsError("no tracking-phase control samples")
        return math.sqrt(self.rmse_sum / self.rmse_n)

    def event_times(self, kind: str) -> list[float]:
        return [t for t, k, _ in self.events if k == kind]

    def count_events(self, kind: str) -> int:
        return sum(1 for _, k, _ in self.events if k == kind)

    def run_until(self, stop, t_max: float):
        """Step until ``stop(sim)`` holds or t_max is reached (TIMEOUT event)."""
        if t_max <= 0.0:
            raise ValueError("t_max must be positive")
        while True:
            self.step()
            if stop is not None and stop(self):
                return self.world
            if self.t >= t_max - 0.5 * self.dt:
                if stop is not None:
                    self.emit("TIMEOUT", {"t_max": t_max})
                return self.world

    def run(self, duration_s: float | None = None):
        return self.run_until(None, duration_s if duration_s is not None else self.scenario.duration_s)

    def close(self):
        if self._ts_file is not None:
            self._ts_file.close()
            self._ts_file = None

    def write_events_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,kind,payload\n")
            for t, kind, payload in self.events:
                fh.write(f"{_fmt(t)},{kind},{json.dumps(payload, sort_keys=True)}\n")


def step(sim: Simulator) -> WorldState:
    """Advance one tick; module-level alias for the per-tick operation."""
    sim.step()
    return sim.world


def run_until(sim: Simulator, stop, t_max: float):
    world = sim.run_until(stop, t_max)
    return world, sim.events
