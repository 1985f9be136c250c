"""Ground-station relay circuit: EM switching from charge-current sensing.

Idle keeps the relay closed so the electromagnet pulls the tether head in.
Current through the battery connector means a vehicle attached: the relay
opens, killing the EM for the whole charging phase. When current stops
(charge finished and the vehicle departed), the relay re-closes after a
short delay so the next docking can happen. The controller cannot tell
"charge complete" from "vehicle left" -- both are just loss of current.
"""

from __future__ import annotations

from dataclasses import dataclass

IDLE_ARMED = "IDLE_ARMED"
CHARGING = "CHARGING"
REARM_DELAY = "REARM_DELAY"


@dataclass(frozen=True)
class StationSpec:
    connector_pos: tuple[float, float, float]
    top_half_x: float = 0.075      # solid-top footprint half extents
    top_half_y: float = 0.05
    top_z: float = 0.06            # station top surface height
    current_threshold_a: float = 0.1
    rearm_delay_s: float = 3.0
    mass_kg: float = 0.56

    def __post_init__(self):
        if self.current_threshold_a <= 0.0:
            raise ValueError("current threshold must be positive")
        if self.rearm_delay_s <= 0.0:
            raise ValueError("rearm delay must be positive")


class StationControllerState:
    __slots__ = ("state", "em_active", "sensed_current_a", "rearm_timer_s")

    def __init__(self):
        self.state = IDLE_ARMED
        self.em_active = True
        self.sensed_current_a = 0.0
        self.rearm_timer_s = 0.0


def station_tick(st: StationControllerState, sensed_current_a: float, spec: StationSpec, dt: float) -> str | None:
    """One controller step; returns \"EM_ON\"/\"EM_OFF\" on relay transitions."""
    if sensed_current_a < 0.0:
        raise ValueError(f"sensed current must be >= 0, got {sensed_current_a}")
    st.sensed_current_a = sensed_current_a

    if st.state == IDLE_ARMED:
        if sensed_current_a >= spec.current_threshold_a:
            st.state = CHARGING
            st.em_active = False
            return "EM_OFF"
    elif st.state == CHARGING:
        if sensed_current_a < spec.current_threshold_a:
            st.state = REARM_DELAY
            st.rearm_timer_s = spec.rearm_delay_s
    else:  # REARM_DELAY
        st.rearm_timer_s -= dt
        if st.rearm_timer_s <= 0.0:
            st.state = IDLE_ARMED
            st.rearm_timer_s = 0.0
            st.em_active = True
            return "EM_ON"
    return None
