"""Vehicle-side intelligence: trajectory generation, tracking control, and the
docking mission state machine.

Point-to-point motion uses trapezoidal velocity profiles (triangular when the
leg is too short to reach cruise speed). The tracking controller is a
cascaded nonlinear design: position PID with acceleration feedforward
produces a desired thrust vector, which fixes the desired attitude; an
attitude PD with gyroscopic feedforward produces body torques. The
controller mass includes the tether head so the steady cable load is fed
forward rather than fought.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .magnetics import GRAVITY
from .mathutil import (
    mat_transpose_mul,
    quat_to_matrix,
    vee_antisym,
)

# Mission phases, in cycle order
TRACKING = "TRACKING"
APPROACH = "APPROACH"
DOCK_WAIT = "DOCK_WAIT"
CHARGING = "CHARGING"
TAKEOFF_DETACH = "TAKEOFF_DETACH"
RESUME = "RESUME"

PHASE_CYCLE = (TRACKING, APPROACH, DOCK_WAIT, CHARGING, TAKEOFF_DETACH, RESUME)


class MetricsError(ValueError):
    """Raised when metrics are requested over an empty sample set."""


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

class TrapezoidalProfile:
    """Rest-to-rest straight-line leg under speed and acceleration caps."""

    __slots__ = ("p0", "p1", "v_max", "a_max", "u", "distance",
                 "t_acc", "t_cruise", "v_peak", "duration")

    def __init__(self, p0, p1, v_max: float, a_max: float):
        if v_max <= 0.0 or a_max <= 0.0:
            raise ValueError("v_max and a_max must be positive")
        self.p0 = tuple(p0)
        self.p1 = tuple(p1)
        self.v_max = v_max
        self.a_max = a_max
        dx = self.p1[0] - self.p0[0]
        dy = self.p1[1] - self.p0[1]
        dz = self.p1[2] - self.p0[2]
        d = math.sqrt(dx * dx + dy * dy + dz * dz)
        self.distance = d
        if d < 1e-12:
            self.u = (0.0, 0.0, 0.0)
            self.t_acc = 0.0
            self.t_cruise = 0.0
            self.v_peak = 0.0
            self.duration = 0.0
            return
        self.u = (dx / d, dy / d, dz / d)
        v_peak = min(v_max, math.sqrt(a_max * d))
        self.v_peak = v_peak
        self.t_acc = v_peak / a_max
        d_acc = 0.5 * a_max * self.t_acc * self.t_acc
        self.t_cruise = max(0.0, (d - 2.0 * d_acc) / v_peak)
        self.duration = 2.0 * self.t_acc + self.t_cruise

    def sample(self, t: float):
        """Position, velocity, acceleration at local time t; holds the endpoint."""
        if t >= self.duration or self.distance < 1e-12:
            return self.p1, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        if t <= 0.0:
            return self.p0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        a = self.a_max
        if t < self.t_acc:
            s = 0.5 * a * t * t
            v = a * t
            acc = a
        elif t < self.t_acc + self.t_cruise:
            s = 0.5 * a * self.t_acc ** 2 + self.v_peak * (t - self.t_acc)
            v = self.v_peak
            acc = 0.0
        else:
            td = self.duration - t
            s = self.distance - 0.5 * a * td * td
            v = a * td
            acc = -a
        ux, uy, uz = self.u
        return (
            (self.p0[0] + s * ux, self.p0[1] + s * uy, self.p0[2] + s * uz),
            (v * ux, v * uy, v * uz),
            (acc * ux, acc * uy, acc * uz),
        )


def plan_trapezoid(p_from, p_to, v_max: float, a_max: float) -> TrapezoidalProfile:
    return TrapezoidalProfile(p_from, p_to, v_max, a_max)


class WaypointPath:
    """Chained trapezoidal legs with a rest at every waypoint (C1 overall)."""

    __slots__ = ("legs", "starts", "duration")

    def __init__(self, waypoints, v_max: float, a_max: float):
        pts = [tuple(p) for p in waypoints]
        if len(pts) < 2:
            raise ValueError("need at least two waypoints")
        self.legs = [TrapezoidalProfile(a, b, v_max, a_max) for a, b in zip(pts, pts[1:])]
        self.starts = []
        t = 0.0
        for leg in self.legs:
            self.starts.append(t)
            t += leg.duration
        self.duration = t

    def sample(self, t: float):
        if t >= self.duration:
            last = self.legs[-1]
            return last.p1, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        for start, leg in zip(reversed(self.starts), reversed(self.legs)):
            if t >= start:
                return leg.sample(t - start)
        return self.legs[0].sample(t)


class CircleTrajectory:
    """Constant-speed circle at fixed altitude, parameterized by time."""

    __slots__ = ("cx", "cy", "radius", "speed", "altitude", "omega", "phase0")

    def __init__(self, center, radius: float, speed: float, altitude: float, phase0: float = 0.0):
        if radius <= 0.0 or speed <= 0.0:
            raise ValueError("circle radius and speed must be positive")
        self.cx, self.cy = center[0], center[1]
        self.radius = radius
        self.speed = speed
        self.altitude = altitude
        self.omega = speed / radius
        self.phase0 = phase0

    def sample(self, t: float):
        th = self.phase0 + self.omega * t
        c, s = math.cos(th), math.sin(th)
        r, w = self.radius, self.omega
        v = self.speed
        return (
            (self.cx + r * c, self.cy + r * s, self.altitude),
            (-v * s, v * c, 0.0),
            (-v * w * c, -v * w * s, 0.0),
        )


class HoldTrajectory:
    __slots__ = ("point",)

    def __init__(self, point):
        self.point = tuple(point)

    def sample(self, t: float):
        return self.point, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)


class BoxPatrol:
    """Endless seeded sequence of trapezoidal legs between random waypoints in a box.

    Legs are generated lazily in order, so the waypoint stream is a pure
    function of the seed regardless of how far the mission gets.
    """

    __slots__ = ("lo", "hi", "v_max", "a_max", "rng", "t0", "leg")

    def __init__(self, bounds_lo, bounds_hi, v_max: float, a_max: float, rng, start_pos):
        self.lo = tuple(bounds_lo)
        self.hi = tuple(bounds_hi)
        self.v_max = v_max
        self.a_max = a_max
        self.rng = rng
        self.t0 = 0.0
        self.leg = TrapezoidalProfile(start_pos, self._draw(), v_max, a_max)

    def _draw(self):
        return tuple(
            self.lo[i] + (self.hi[i] - self.lo[i]) * self.rng.random() for i in range(3)
        )

    def replan_from(self, pos, t: float):
        """Restart toward a fresh waypoint from an off-path position (post-charge)."""
        self.t0 = t
        self.leg = TrapezoidalProfile(pos, self._draw(), self.v_max, self.a_max)

    def sample(self, t: float):
        local = t - self.t0
        while local >= self.leg.duration:
            self.t0 += self.leg.duration
            local = t - self.t0
            self.leg = TrapezoidalProfile(self.leg.p1, self._draw(), self.v_max, self.a_max)
        return self.leg.sample(local)


def reference(traj, t: float):
    """Sample any trajectory object: returns (position, velocity, acceleration)."""
    if t < 0.0:
        raise ValueError(f"reference time must be >= 0, got {t}")
    return traj.sample(t)


# ---------------------------------------------------------------------------
# Tracking controller
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControllerGains:
    kp_xy: float = 40.0
    kp_z: float = 45.0
    kd_xy: float = 12.0
    kd_z: float = 14.0
    ki: float = 6.0
    i_accel_max: float = 2.0       # clamp on the integral's acceleration authority
    kr: float = 400.0              # attitude stiffness, 1/s^2
    kw: float = 36.0               # attitude damping, 1/s


class TrackingController:
    """Cascaded position/attitude controller; outputs saturated to vehicle limits."""

    __slots__ = ("gains", "mass", "spec", "ix", "iy", "iz")

    def __init__(self, gains: ControllerGains, control_mass_kg: float, vehicle_spec):
        self.gains = gains
        self.mass = control_mass_kg
        self.spec = vehicle_spec
        self.ix = self.iy = self.iz = 0.0

    def reset_integrator(self):
        self.ix = self.iy = self.iz = 0.0

    def track(self, est_pos, est_vel, quat, omega, ref, dt: float):
        """One control step. ``ref`` is (pos, vel, acc); returns (thrust, torque)."""
        g = self.gains
        rp, rv, ra = ref
        ex = rp[0] - est_pos[0]
        ey = rp[1] - est_pos[1]
        ez = rp[2] - est_pos[2]
        evx = rv[0] - est_vel[0]
        evy = rv[1] - est_vel[1]
        evz = rv[2] - est_vel[2]

        lim = g.i_accel_max / g.ki if g.ki > 0.0 else 0.0
        self.ix = min(lim, max(-lim, self.ix + ex * dt))
        self.iy = min(lim, max(-lim, self.iy + ey * dt))
        self.iz = min(lim, max(-lim, self.iz + ez * dt))

        ax = ra[0] + g.kp_xy * ex + g.kd_xy * evx + g.ki * self.ix
        ay = ra[1] + g.kp_xy * ey + g.kd_xy * evy + g.ki * self.iy
        az = ra[2] + g.kp_z * ez + g.kd_z * evz + g.ki * self.iz

        m = self.mass
        fx = m * ax
        fy = m * ay
        fz = m * (az + GRAVITY)

        rot = quat_to_matrix(quat)
        # Thrust is the force component along the current body z axis.
        thrust = fx * rot[2] + fy * rot[5] + fz * rot[8]
        thrust = min(self.spec.max_thrust_n, max(0.0, thrust))

        # Desired attitude: body z along the force vector, yaw held at zero.
        fn = math.sqrt(fx * fx + fy * fy + fz * fz)
        if fn < 1e-9:
            zdx, zdy, zdz = 0.0, 0.0, 1.0
        else:
            zdx, zdy, zdz = fx / fn, fy / fn, fz / fn
        # y_des = z_des x x_yaw, x_yaw = (1,0,0)
        ydx, ydy, ydz = 0.0, zdz, -zdy
        yn = math.sqrt(ydx * ydx + ydy * ydy + ydz * ydz)
        if yn < 1e-9:
            ydx, ydy, ydz = 0.0, 1.0, 0.0
        else:
            ydx, ydy, ydz = ydx / yn, ydy / yn, ydz / yn
        xdx = ydy * zdz - ydz * zdy
        xdy = ydz * zdx - ydx * zdz
        xdz = ydx * zdy - ydy * zdx
        rot_des = (xdx, ydx, zdx, xdy, ydy, zdy, xdz, ydz, zdz)

        m_err = mat_transpose_mul(rot_des, rot)
        er = vee_antisym(m_err)

        jx, jy, jz = self.spec.inertia_kgm2
        wx, wy, wz = omega
        tx = jx * (-g.kr * er[0] - g.kw * wx) + (wy * jz * wz - wz * jy * wy)
        ty = jy * (-g.kr * er[1] - g.kw * wy) + (wz * jx * wx - wx * jz * wz)
        tz = jz * (-g.kr * er[2] - g.kw * wz) + (wx * jy * wy - wy * jx * wx)
        lim_xy = self.spec.tau_max_xy_nm
        lim_z = self.spec.tau_max_z_nm
        tx = min(lim_xy, max(-lim_xy, tx))
        ty = min(lim_xy, max(-lim_xy, ty))
        tz = min(lim_z, max(-lim_z, tz))
        return thrust, (tx, ty, tz)


# ---------------------------------------------------------------------------
# Mission state machine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MissionConfig:
    mode: str = "full"                    # track_only | full | dock_cycles
    low_battery_v: float = 6.6
    debounce_s: float = 0.5
    dock_timeout_s: float = 30.0
    approach_v: float = 1.0
    approach_a: float = 1.5
    hover_slack_m: float = 0.02
    staging_clearance_m: float = 0.25
    land_offset_m: tuple[float, float] = (0.3, 0.0)
    pad_radius_m: float = 0.2
    resume_altitude_m: float = 0.8
    arrival_tol_m: float = 0.08
    retry_offset_m: float = 0.05
    n_cycles: int = 0                     # dock_cycles mode
    cycle_hold_s: float = 1.0
    charge_exit_soc: float | None = None  # None: wait for charger COMPLETE
    watchdog_s: float = 7200.0

    def __post_init__(self):
        if self.mode not in ("track_only", "full", "dock_cycles"):
            raise ValueError(f"unknown mission mode {self.mode!r}")


class MissionState:
    __slots__ = (
        "phase", "entry_t", "last_change_t", "cycles_done", "retries",
        "path", "motors_on", "retry_sign", "was_docked",
    )

    def __init__(self, start_phase: str = TRACKING, t: float = 0.0):
        self.phase = start_phase
        self.entry_t = t
        self.last_change_t = t
        self.cycles_done = 0
        self.retries = 0
        self.path = None          # active mission-owned path (approach/land/climb)
        self.motors_on = True
        self.retry_sign = 1.0
        self.was_docked = False


def dock_hover_point(vehicle_spec, tether_cfg, station_spec, slack_m: float):
    """Hover point above the connector that leaves the cable slack by ``slack_m``
    once the head is seated, so the EM reels the head in unopposed."""
    cx, cy, cz = station_spec.connector_pos
    drop = -vehicle_spec.attach_offset_m[2] + tether_cfg.length_m
    return (cx, cy, cz + drop - slack_m)


def _change_phase(mission: MissionState, sim, phase: str):
    mission.phase = phase
    mission.entry_t = sim.t
    mission.last_change_t = sim.t
    sim.emit("MISSION_PHASE", {"phase": phase})


def _plan_approach(mission: MissionState, sim, lateral_offset: float = 0.0):
    hover = sim.dock_hover
    hover = (hover[0] + lateral_offset, hover[1], hover[2])
    staging = (hover[0], hover[1], hover[2] + sim.mission_cfg.staging_clearance_m)
    pos = sim.vehicle.position
    cfg = sim.mission_cfg
    mission.path = WaypointPath([pos, staging, hover], cfg.approach_v, cfg.approach_a)
    mission.entry_t = sim.t


def mission_tick(mission: MissionState, sim) -> None:
    """Advance the mission state machine one control step.

    Transition sources: the debounced low-battery monitor, the head mode
    (capture/dock/detach progress), the charger phase, and completion of the
    mission-owned approach/landing/climb paths. The active reference the
    controller follows is the mission path outside TRACKING and the scenario
    trajectory inside it.
    """
    cfg = sim.mission_cfg
    phase = mission.phase
    t = sim.t

    if phase == TRACKING:
        mission.motors_on = True
        if cfg.mode == "full":
            if sim.low_monitor.fired:
                _change_phase(mission, sim, APPROACH)
                _plan_approach(mission, sim)
        elif cfg.mode == "dock_cycles":
            if mission.cycles_done < cfg.n_cycles and t - mission.entry_t >= cfg.cycle_hold_s:
                _change_phase(mission, sim, APPROACH)
                _plan_approach(mission, sim)

    elif phase == APPROACH:
        local = t - mission.entry_t
        if local >= mission.path.duration:
            px, py, pz = sim.vehicle.position
            hx, hy, hz = mission.path.legs[-1].p1
            err = math.sqrt((px - hx) ** 2 + (py - hy) ** 2 + (pz - hz) ** 2)
            if err <= cfg.arrival_tol_m:
                _change_phase(mission, sim, DOCK_WAIT)
                mission.path = HoldTrajectory((hx, hy, hz))

    elif phase == DOCK_WAIT:
        if sim.head.mode == "DOCKED":
            _change_phase(mission, sim, CHARGING)
            lx, ly = cfg.land_offset_m
            sx, sy, _ = sim.station_spec.connector_pos
            pad = (sx + lx, sy + ly)
            pos = sim.vehicle.position
            mission.path = WaypointPath(
                [pos, (pad[0], pad[1], 0.25), (pad[0], pad[1], 0.0)],
                cfg.approach_v,
                cfg.approach_a,
            )
        elif t - mission.entry_t > cfg.dock_timeout_s:
            mission.retries += 1
            mission.retry_sign = -mission.retry_sign
            sim.emit("DOCK_RETRY", {"retries": mission.retries})
            _change_phase(mission, sim, APPROACH)
            _plan_approach(mission, sim, lateral_offset=mission.retry_sign * cfg.retry_offset_m)

    elif phase == CHARGING:
        mission.motors_on = not sim.vehicle.grounded
        done = (
            sim.charger.phase == "COMPLETE"
            if cfg.charge_exit_soc is None
            else sim.battery.soc >= cfg.charge_exit_soc
        )
        if done:
            _change_phase(mission, sim, TAKEOFF_DETACH)
            mission.motors_on = True
            px, py, _ = sim.vehicle.position
            mission.path = WaypointPath(
                [(px, py, 0.0), (px, py, cfg.resume_altitude_m)],
                cfg.approach_v,
                cfg.approach_a,
            )
            sim.low_monitor.reset()

    elif phase == TAKEOFF_DETACH:
        if sim.head.mode != "DOCKED":
            _change_phase(mission, sim, RESUME)
            rejoin = sim.scenario_rejoin_point()
            mission.path = WaypointPath(
                [sim.vehicle.position, rejoin], cfg.approach_v, cfg.approach_a
            )

    elif phase == RESUME:
        local = t - mission.entry_t
        if local >= mission.path.duration:
            mission.cycles_done += 1
            sim.on_cycle_complete()
            _change_phase(mission, sim, TRACKING)
            mission.path = None

    if t - mission.last_change_t > cfg.watchdog_s:
        raise RuntimeError(
            f"mission watchdog: no phase change for {cfg.watchdog_s} s "
            f"(stuck in {mission.phase} since t={mission.last_change_t:.3f})"
        )


def mission_reference(mission: MissionState, sim):
    """Active (pos, vel, acc) reference for the controller at the current time."""
    if mission.phase == TRACKING or mission.path is None:
        return sim.scenario_traj.sample(sim.t)
    return mission.path.sample(sim.t - mission.entry_t)


# ---------------------------------------------------------------------------
# Tracking metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrackingMetrics:
    rmse_m: float
    samples: int
    flight_time_s: float | None   # scenario start to the low-battery trigger

    def __post_init__(self):
        if self.rmse_m < 0.0:
            raise ValueError("rmse must be non-negative")


def compute_metrics(samples, events=()) -> TrackingMetrics:
    """RMSE over tracking-phase control samples plus flight time from events.

    ``samples`` yields (phase, position, reference_position) triples, one per
    control iteration. ``events`` is the run's event list; the flight time is
    the timestamp of the first LOW_BATTERY event, if any.
    """
    n = 0
    ssq = 0.0
    for phase, pos, ref in samples:
        if phase != TRACKING:
            continue
        ex = pos[0] - ref[0]
        ey = pos[1] - ref[1]
        ez = pos[2] - ref[2]
        ssq += ex * ex + ey * ey + ez * ez
        n += 1
    if n == 0:
        raise MetricsError("no tracking-phase samples in log")
    flight_time = None
    for ev in events:
        if ev[1] == "LOW_BATTERY":
            flight_time = ev[0]
            break
    return TrackingMetrics(rmse_m=math.sqrt(ssq / n), samples=n, flight_time_s=flight_time)
