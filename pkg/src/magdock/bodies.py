"""Quadrotor rigid body plus the dangling charging tether.

The tether is a lumped model: the connector head is a point mass on a
massless unilateral spring-damper cable (tension only, never compression).
The wire's distributed mass is split half onto the head and half onto the
airframe. Head modes: SLACK/TAUT while dangling, CAPTURED once the EM field
has grabbed it, DOCKED while pinned to the station connector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .magnetics import GRAVITY, MagnetSpec
from .mathutil import quat_rotate

# Head modes
SLACK = "SLACK"
TAUT = "TAUT"
CAPTURED = "CAPTURED"
DOCKED = "DOCKED"


@dataclass(frozen=True)
class VehicleSpec:
    name: str
    mass_kg: float                       # airframe + battery, without tether
    inertia_kgm2: tuple[float, float, float]
    max_thrust_n: float
    tau_max_xy_nm: float
    tau_max_z_nm: float
    attach_offset_m: tuple[float, float, float] = (0.0, 0.0, -0.03)
    estimate_rate_hz: float = 100.0

    def __post_init__(self):
        if self.mass_kg <= 0.0:
            raise ValueError(f"vehicle {self.name!r}: mass must be > 0")
        if self.max_thrust_n <= self.mass_kg * GRAVITY:
            raise ValueError(
                f"vehicle {self.name!r}: max thrust {self.max_thrust_n} N cannot hover "
                f"{self.mass_kg} kg"
            )
        if self.attach_offset_m[2] >= 0.0:
            raise ValueError("tether attach point must sit below the frame (negative body z)")
        if any(j <= 0.0 for j in self.inertia_kgm2):
            raise ValueError("principal inertia must be positive")


@dataclass(frozen=True)
class TetherConfig:
    length_m: float
    magnet: MagnetSpec
    wire_density_kg_per_m: float = 0.033   # 20 AWG multi-core
    hardware_mass_kg: float = 0.010        # enclosure + pogo pins
    spring_n_per_m: float = 2000.0
    damping_ns_per_m: float = 5.0
    head_drag_ns_per_m: float = 0.01       # lumped aero drag on the connector head

    def __post_init__(self):
        if self.length_m <= 0.0:
            raise ValueError("tether length must be positive")

    @property
    def wire_mass_kg(self) -> float:
        return self.wire_density_kg_per_m * self.length_m

    @property
    def head_mass_kg(self) -> float:
        """Magnet + head hardware + half the wire (other half rides the frame)."""
        return self.magnet.mass_kg + self.hardware_mass_kg + 0.5 * self.wire_mass_kg

    @property
    def vehicle_extra_mass_kg(self) -> float:
        return 0.5 * self.wire_mass_kg


class VehicleState:
    __slots__ = (
        "px", "py", "pz", "vx", "vy", "vz",
        "qw", "qx", "qy", "qz", "wx", "wy", "wz",
        "thrust_n", "tau_x", "tau_y", "tau_z",
        "grounded", "kinematic_hold",
    )

    def __init__(self, pos=(0.0, 0.0, 0.0), vel=(0.0, 0.0, 0.0), yaw: float = 0.0):
        self.px, self.py, self.pz = pos
        self.vx, self.vy, self.vz = vel
        self.qw, self.qx, self.qy, self.qz = math.cos(0.5 * yaw), 0.0, 0.0, math.sin(0.5 * yaw)
        self.wx = self.wy = self.wz = 0.0
        self.thrust_n = 0.0
        self.tau_x = self.tau_y = self.tau_z = 0.0
        self.grounded = False
        self.kinematic_hold = False    # test hook: freeze the body in place

    @property
    def position(self):
        return (self.px, self.py, self.pz)

    @property
    def velocity(self):
        return (self.vx, self.vy, self.vz)

    @property
    def quaternion(self):
        return (self.qw, self.qx, self.qy, self.qz)

    def attach_point(self, spec: VehicleSpec):
        ox, oy, oz = quat_rotate(self.quaternion, spec.attach_offset_m)
        return (self.px + ox, self.py + oy, self.pz + oz)


class TetherHeadState:
    __slots__ = ("px", "py", "pz", "vx", "vy", "vz", "mode", "docked_tick")

    def __init__(self, pos=(0.0, 0.0, 0.0), vel=(0.0, 0.0, 0.0)):
        self.px, self.py, self.pz = pos
        self.vx, self.vy, self.vz = vel
        self.mode = SLACK
        self.docked_tick = -1

    @property
    def position(self):
        return (self.px, self.py, self.pz)


def vehicle_derivatives(
    state: VehicleState,
    spec: VehicleSpec,
    mass_kg: float,
    external_force,
    external_torque,
):
    """Newton-Euler accelerations under thrust, gravity and an external wrench.

    Returns (linear_acc, angular_acc). ``mass_kg`` is the flying mass (frame
    plus its share of the wire). Pure function, used directly by the
    integrator and by the dynamics test oracles.
    """
    tz = quat_rotate(state.quaternion, (0.0, 0.0, 1.0))
    t = state.thrust_n
    ax = (t * tz[0] + external_force[0]) / mass_kg
    ay = (t * tz[1] + external_force[1]) / mass_kg
    az = (t * tz[2] + external_force[2]) / mass_kg - GRAVITY

    jx, jy, jz = spec.inertia_kgm2
    wx, wy, wz = state.wx, state.wy, state.wz
    # tau - omega x (J omega), principal axes
    dwx = (state.tau_x + external_torque[0] - (wy * jz * wz - wz * jy * wy)) / jx
    dwy = (state.tau_y + external_torque[1] - (wz * jx * wx - wx * jz * wz)) / jy
    dwz = (state.tau_z + external_torque[2] - (wx * jy * wy - wy * jx * wx)) / jz
    return (ax, ay, az), (dwx, dwy, dwz)


def tether_force(anchor_pos, anchor_vel, head_pos, head_vel, cfg: TetherConfig):
    """Cable wrench between the attach point and the head.

    Returns (force_on_vehicle, force_on_head, tension). Zero while the
    anchor-head distance is under the cable length; beyond it a spring-damper
    pulls both ends together. Tension is clamped at zero from below -- a
    cable cannot push -- and the two forces are exact opposites.
    """
    dx = head_pos[0] - anchor_pos[0]
    dy = head_pos[1] - anchor_pos[1]
    dz = head_pos[2] - anchor_pos[2]
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if dist < cfg.length_m or dist < 1e-9:
        return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0
    ux, uy, uz = dx / dist, dy / dist, dz / dist
    stretch = dist - cfg.length_m
    rate = (
        (head_vel[0] - anchor_vel[0]) * ux
        + (head_vel[1] - anchor_vel[1]) * uy
        + (head_vel[2] - anchor_vel[2]) * uz
    )
    tension = cfg.spring_n_per_m * stretch + cfg.damping_ns_per_m * rate
    if tension <= 0.0:
        return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0
    fv = (tension * ux, tension * uy, tension * uz)
    fh = (-fv[0], -fv[1], -fv[2])
    return fv, fh, tension


def head_floor_z(head_x: float, head_y: float, station: "object | None") -> float:
    """Ground height under the head: the station top inside its footprint, else 0."""
    if station is not None:
        if (
            abs(head_x - station.connector_pos[0]) <= station.top_half_x
            and abs(head_y - station.connector_pos[1]) <= station.top_half_y
        ):
            return station.top_z
    return 0.0
