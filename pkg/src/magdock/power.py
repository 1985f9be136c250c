"""Battery electrical model and the station's balance charger.

Discharge: coulomb counting against a piecewise-linear open-circuit-voltage
curve with ohmic sag. The per-cell OCV shape is the usual LiPo knee curve;
it is anchored at the configured empty and full per-cell voltages so packs
specified with non-standard full voltages keep a monotonic curve.

Charge: ideal balance charger, constant current until the per-cell terminal
voltage reaches full, then constant voltage with the current tapering until
it falls below the cutoff. Charger temperature integrates I^2 heating with
linear cooling; crossing the protection temperature halves the set current
until the resume temperature is reached, which shows up as small dips in the
terminal-voltage trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Canonical per-cell OCV knee shape; rescaled onto [empty, full] per pack.
_OCV_SHAPE = ((0.0, 3.30), (0.1, 3.55), (0.5, 3.72), (0.9, 3.95), (1.0, 4.20))

# Charger phases
CHG_IDLE = "IDLE"
CHG_CC = "CONSTANT_CURRENT"
CHG_CV = "CONSTANT_VOLTAGE"
CHG_THROTTLED = "THROTTLED"
CHG_COMPLETE = "COMPLETE"


@dataclass(frozen=True)
class BatterySpec:
    cells: int
    capacity_ah: float
    mass_kg: float
    full_voltage_v: float          # pack voltage at full charge
    empty_per_cell_v: float = 3.30
    internal_resistance_ohm: float = 0.05

    def __post_init__(self):
        if not 1 <= self.cells <= 8:
            raise ValueError(f"cell count out of range: {self.cells}")
        if self.capacity_ah <= 0.0:
            raise ValueError(f"capacity must be > 0, got {self.capacity_ah}")
        if self.full_voltage_v / self.cells <= self.empty_per_cell_v:
            raise ValueError("full per-cell voltage must exceed empty per-cell voltage")

    @property
    def full_per_cell_v(self) -> float:
        return self.full_voltage_v / self.cells

    def ocv_table(self) -> tuple[tuple[float, float], ...]:
        """Per-cell OCV breakpoints scaled onto [empty, full]."""
        lo, hi = _OCV_SHAPE[0][1], _OCV_SHAPE[-1][1]
        span = (self.full_per_cell_v - self.empty_per_cell_v) / (hi - lo)
        return tuple(
            (soc, self.empty_per_cell_v + (v - lo) * span) for soc, v in _OCV_SHAPE
        )


@dataclass(frozen=True)
class ChargerSpec:
    set_current_a: float
    cutoff_a: float
    t_protect_c: float = 60.0
    t_resume_c: float = 45.0
    ambient_c: float = 25.0
    heat_coeff: float = 0.0166     # deg C/s at full set current (scaled by (I/I_set)^2)
    cool_coeff: float = 1.0 / 1500.0  # 1/s toward ambient

    def __post_init__(self):
        if self.set_current_a <= 0.0 or self.cutoff_a <= 0.0:
            raise ValueError("charger currents must be positive")
        if self.t_resume_c >= self.t_protect_c:
            raise ValueError("resume temperature must be below protect temperature")


class BatteryState:
    __slots__ = ("soc", "terminal_v", "current_a", "temp_c")

    def __init__(self, soc: float, terminal_v: float, temp_c: float = 25.0):
        self.soc = soc
        self.terminal_v = terminal_v
        self.current_a = 0.0       # positive = discharging
        self.temp_c = temp_c


class ChargerState:
    __slots__ = ("phase", "current_a", "temp_c", "throttled")

    def __init__(self, ambient_c: float = 25.0):
        self.phase = CHG_IDLE
        self.current_a = 0.0
        self.temp_c = ambient_c
        self.throttled = False


def pack_ocv(spec: BatterySpec, soc: float) -> float:
    """Pack open-circuit voltage at a state of charge (clamped to [0, 1])."""
    table = spec.ocv_table()
    if soc <= 0.0:
        return table[0][1] * spec.cells
    if soc >= 1.0:
        return table[-1][1] * spec.cells
    for i in range(len(table) - 1):
        s0, v0 = table[i]
        s1, v1 = table[i + 1]
        if soc <= s1:
            return (v0 + (v1 - v0) * (soc - s0) / (s1 - s0)) * spec.cells
    return table[-1][1] * spec.cells


def fresh_battery(spec: BatterySpec, soc: float = 1.0, ambient_c: float = 25.0) -> BatteryState:
    return BatteryState(soc, pack_ocv(spec, soc), ambient_c)


def discharge_step(batt: BatteryState, spec: BatterySpec, power_w: float, dt: float) -> bool:
    """Drain the pack by one tick at an electrical load. Returns True on empty.

    The load current solves I = P / V against the sagged terminal voltage
    V = OCV - I*R in closed form (larger quadratic root), so the reported
    terminal voltage and current are self-consistent within the tick.
    """
    ocv = pack_ocv(spec, batt.soc)
    if power_w <= 0.0:
        batt.current_a = 0.0
        batt.terminal_v = ocv
        return False
    r = spec.internal_resistance_ohm
    disc = ocv * ocv - 4.0 * power_w * r
    if disc <= 0.0:
        # Load beyond the pack's deliverable power: current limited at V = OCV/2.
        v = 0.5 * ocv
    else:
        v = 0.5 * (ocv + math.sqrt(disc))
    i = power_w / v
    batt.current_a = i
    batt.terminal_v = ocv - i * r
    new_soc = batt.soc - i * dt / (3600.0 * spec.capacity_ah)
    if new_soc <= 0.0:
        batt.soc = 0.0
        return True
    batt.soc = new_soc
    return False


def charge_step(
    batt: BatteryState,
    spec: BatterySpec,
    charger: ChargerState,
    cspec: ChargerSpec,
    dt: float,
    connected: bool,
) -> list[str]:
    """Advance the charger and pack one tick; returns event names raised this tick.

    CC at the set current until the pack terminal voltage reaches full, then
    CV with taper, COMPLETE below the cutoff current. Thermal protection
    halves the set current between the protect and resume temperatures.
    """
    events: list[str] = []

    if not connected:
        if charger.phase not in (CHG_IDLE,):
            charger.phase = CHG_IDLE
            charger.throttled = False
        charger.current_a = 0.0
    else:
        if charger.phase == CHG_IDLE:
            charger.phase = CHG_CC
            events.append("CHARGE_START")

        if charger.phase not in (CHG_COMPLETE, CHG_IDLE):
            # Thermal protection with hysteresis.
            if not charger.throttled and charger.temp_c > cspec.t_protect_c:
                charger.throttled = True
                events.append("THERMAL_THROTTLE_ON")
            elif charger.throttled and charger.temp_c < cspec.t_resume_c:
                charger.throttled = False
                events.append("THERMAL_THROTTLE_OFF")

            limit = cspec.set_current_a * (0.5 if charger.throttled else 1.0)
            ocv = pack_ocv(spec, batt.soc)
            r = spec.internal_resistance_ohm
            i = limit
            if ocv + i * r >= spec.full_voltage_v:
                # CV: hold the pack at full voltage, current tapers.
                i = max(0.0, (spec.full_voltage_v - ocv) / r)
                if i > limit:
                    i = limit
                phase = CHG_CV
            else:
                phase = CHG_CC
            if charger.throttled:
                phase = CHG_THROTTLED
            charger.phase = phase

            if phase != CHG_CC and not charger.throttled and i < cspec.cutoff_a:
                charger.phase = CHG_COMPLETE
                charger.current_a = 0.0
                batt.current_a = 0.0
                batt.terminal_v = pack_ocv(spec, batt.soc)
                events.append("CHARGE_COMPLETE")
            else:
                charger.current_a = i
                batt.current_a = -i
                batt.terminal_v = ocv + i * r
                batt.soc = min(1.0, batt.soc + i * dt / (3600.0 * spec.capacity_ah))
        else:
            batt.current_a = 0.0
            batt.terminal_v = pack_ocv(spec, batt.soc)

    # Charger thermal state integrates regardless of connection.
    u = charger.current_a / cspec.set_current_a
    charger.temp_c += (
        cspec.heat_coeff * u * u - cspec.cool_coeff * (charger.temp_c - cspec.ambient_c)
    ) * dt
    return events


def low_battery(batt: BatteryState, threshold_v: float) -> bool:
    """Instantaneous check; use LowBatteryMonitor for the debounced trigger."""
    return batt.terminal_v <= threshold_v


class LowBatteryMonitor:
    """Debounced low-voltage trigger: fires once the terminal voltage stays at or
    below the threshold for the debounce window, ignoring shorter sag transients."""

    __slots__ = ("threshold_v", "debounce_s", "below_s", "fired")

    def __init__(self, threshold_v: float, debounce_s: float = 0.5):
        if threshold_v <= 0.0:
            raise ValueError("threshold must be positive")
        self.threshold_v = threshold_v
        self.debounce_s = debounce_s
        self.below_s = 0.0
        self.fired = False

    def update(self, terminal_v: float, dt: float) -> bool:
        """Advance one tick; returns True on the tick the trigger first fires."""
        if self.fired:
            return False
        if terminal_v <= self.threshold_v:
            self.below_s += dt
            if self.below_s >= self.debounce_s:
                self.fired = True
                return True
        else:
            self.below_s = 0.0
        return False

    def reset(self):
        self.below_s = 0.0
        self.fired = False


@dataclass(frozen=True)
class PowerModel:
    """Electrical draw in flight: fixed avionics/drive floor plus an induced
    term with the momentum-theory thrust exponent."""

    idle_w: float
    thrust_coeff: float  # W / N^1.5

    def __post_init__(self):
        if self.idle_w < 0.0 or self.thrust_coeff < 0.0:
            raise ValueError("power model coefficients must be non-negative")


def flight_power(thrust_n: float, model: PowerModel) -> float:
    if thrust_n < 0.0:
        raise ValueError(f"thrust must be >= 0, got {thrust_n}")
    return model.idle_w + model.thrust_coeff * thrust_n ** 1.5


def time_to_voltage(
    spec: BatterySpec,
    power_w: float,
    threshold_v: float,
    debounce_s: float = 0.5,
    dt: float = 0.05,
    t_max: float = 7200.0,
    soc0: float = 1.0,
) -> float:
    """Time for a constant electrical load to pull the pack down to a voltage
    trigger (debounced). Coarse-step integration; used as the calibration and
    test oracle for discharge endurance."""
    batt = fresh_battery(spec, soc0)
    monitor = LowBatteryMonitor(threshold_v, debounce_s)
    t = 0.0
    while t < t_max:
        empty = discharge_step(batt, spec, power_w, dt)
        t += dt
        if monitor.update(batt.terminal_v, dt) or empty:
            return t
    return t_max


def calibrate_thrust_coeff(
    spec: BatterySpec,
    idle_w: float,
    hover_thrust_n: float,
    baseline_flight_s: float,
    threshold_v: float,
    tol_s: float = 0.05,
) -> float:
    """Solve the induced-power coefficient so a constant hover-equivalent load
    drains the pack to the low-voltage trigger in the baseline flight time.

    Deterministic bisection; endurance is strictly decreasing in the
    coefficient, so the bracket [0, hi] always contains the root when the
    idle draw alone does not already drain the pack too fast.
    """
    if time_to_voltage(spec, idle_w, threshold_v) < baseline_flight_s:
        raise ValueError(
            f"idle draw {idle_w} W alone drains the pack before {baseline_flight_s} s; "
            "no non-negative thrust coefficient can match the baseline"
        )
    lo, hi = 0.0, 1.0
    while time_to_voltage(spec, idle_w + hi * hover_thrust_n ** 1.5, threshold_v) > baseline_flight_s:
        hi *= 2.0
        if hi > 1e4:
            raise ValueError("thrust coefficient bracket exploded; check battery/power config")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        t = time_to_voltage(spec, idle_w + mid * hover_thrust_n ** 1.5, threshold_v)
        if abs(t - baseline_flight_s) <= tol_s:
            return mid
        if t > baseline_flight_s:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
