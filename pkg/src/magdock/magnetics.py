"""Connector attraction model for the electromagnet-backed docking port.

The station's electromagnet boosts the permanent magnet in the tether head
while docking. We model the combined pull as a phenomenological decay law

    F(d) = F0 * (d0 / (d0 + d))**n

with F0 the boosted contact force, d the head/connector separation, and
(d0, n) shared decay parameters fitted so that the measured capture-radius
spread across magnet choices is reproduced. A physical dipole far-field law
cannot reproduce the observed radius ratios from contact forces alone, so
the decay shape is calibrated, not derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

GRAVITY = 9.81
# gram-force figure -> newtons
GRAM_FORCE_N = GRAVITY / 1000.0


class CalibrationError(ValueError):
    """Field calibration could not meet its targets; message carries the residual."""


@dataclass(frozen=True)
class MagnetSpec:
    """A male connector magnet: label, magnet mass, pull force at contact (EM off)."""

    name: str
    mass_kg: float
    contact_pull_n: float

    def __post_init__(self):
        if self.mass_kg <= 0.0:
            raise ValueError(f"magnet {self.name!r}: mass must be > 0, got {self.mass_kg}")
        if self.contact_pull_n <= 0.0:
            raise ValueError(f"magnet {self.name!r}: contact pull must be > 0, got {self.contact_pull_n}")


# Catalog of the three stock male connector magnets (mass, pull at contact).
BUILTIN_MAGNETS: dict[str, MagnetSpec] = {
    "NeodS": MagnetSpec("NeodS", 0.42e-3, 771.11 * GRAM_FORCE_N),
    "CeraM": MagnetSpec("CeraM", 17.5e-3, 2721.55 * GRAM_FORCE_N),
    "CeraL": MagnetSpec("CeraL", 34.7e-3, 4989.52 * GRAM_FORCE_N),
}


@dataclass(frozen=True)
class EmFieldModel:
    """Calibrated attraction field for one magnet choice (EM active)."""

    f0_n: float                 # combined EM + magnet force at contact
    d0_m: float                 # decay length scale
    n: float                    # decay exponent
    capture_threshold_n: float  # min force that can reel the head in
    residual_hold_n: float      # permanent-magnet hold at contact, EM off

    def __post_init__(self):
        if self.f0_n <= 0.0 or self.d0_m <= 0.0 or self.n <= 0.0:
            raise ValueError(f"field model parameters must be positive: {self}")
        if not (0.0 < self.residual_hold_n < self.f0_n):
            raise ValueError(
                f"residual hold force must lie in (0, f0): {self.residual_hold_n} vs f0 {self.f0_n}"
            )


def force_magnitude(model: EmFieldModel, d: float) -> float:
    """Attraction magnitude at separation d >= 0 with the EM active."""
    return model.f0_n * (model.d0_m / (model.d0_m + d)) ** model.n


def magnetic_force(head_pos, station_pos, model: EmFieldModel, em_active: bool):
    """Force on the head, pointing from head toward the connector. Zero with EM off."""
    if not em_active:
        return (0.0, 0.0, 0.0)
    dx = station_pos[0] - head_pos[0]
    dy = station_pos[1] - head_pos[1]
    dz = station_pos[2] - head_pos[2]
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d < 1e-12:
        return (0.0, 0.0, 0.0)
    f = force_magnitude(model, d) / d
    return (f * dx, f * dy, f * dz)


def capture_radius(model: EmFieldModel) -> float:
    """Largest separation at which the field still exceeds the capture threshold.

    Closed form of F(d) >= threshold; zero when the threshold exceeds the
    contact force. This radius bounds the docking success area.
    """
    if model.capture_threshold_n > model.f0_n:
        return 0.0
    return model.d0_m * ((model.f0_n / model.capture_threshold_n) ** (1.0 / model.n) - 1.0)


def _radius_ratio(n: float, f0_hi: float, f0_lo: float, threshold: float) -> float:
    hi = (f0_hi / threshold) ** (1.0 / n) - 1.0
    lo = (f0_lo / threshold) ** (1.0 / n) - 1.0
    return hi / lo


def calibrate_field(
    specs: list[MagnetSpec],
    target_ratio: float = 5.0,
    baseline_radius: float = 0.01,
    em_boost: float = 2.0,
    capture_threshold_n: float = 1.0,
    residual_hold_n: float = 2.0,
    tolerance: float = 0.05,
) -> dict[str, EmFieldModel]:
    """Fit shared (d0, n) so capture radii span the requested ratio.

    The weakest magnet is pinned to ``baseline_radius`` and the ratio
    strongest/weakest is driven to ``target_ratio`` by a 1-D root find on the
    decay exponent. Per-magnet contact force is the EM boost times the
    magnet's own pull. Raises CalibrationError with the residual when the
    targets are infeasible.
    """
    if not specs:
        raise ValueError("need at least one magnet spec to calibrate")
    if target_ratio < 1.0:
        raise ValueError(f"target_ratio must be >= 1, got {target_ratio}")

    f0 = {s.name: em_boost * s.contact_pull_n for s in specs}
    weakest = min(specs, key=lambda s: s.contact_pull_n)
    strongest = max(specs, key=lambda s: s.contact_pull_n)
    f_lo, f_hi = f0[weakest.name], f0[strongest.name]
    if f_lo <= capture_threshold_n:
        raise CalibrationError(
            f"capture threshold {capture_threshold_n} N exceeds weakest boosted force {f_lo:.3f} N"
        )

    if strongest.name == weakest.name or abs(target_ratio - 1.0) < 1e-12:
        # Degenerate: one magnet (or ratio 1) pins only the baseline radius.
        n = 1.2
    else:
        lo_n, hi_n = 0.05, 40.0
        # ratio(n) decreases from +inf to ln(f_hi/c)/ln(f_lo/c) as n grows
        limit = math.log(f_hi / capture_threshold_n) / math.log(f_lo / capture_threshold_n)
        if target_ratio <= limit:
            raise CalibrationError(
                f"target ratio {target_ratio} is below the large-n limit {limit:.3f} "
                f"for boosted forces {f_hi:.2f}/{f_lo:.2f} N; residual {limit - target_ratio:.3f}"
            )
        n = brentq(
            lambda x: _radius_ratio(x, f_hi, f_lo, capture_threshold_n) - target_ratio,
            lo_n,
            hi_n,
            xtol=1e-12,
        )

    d0 = baseline_radius / ((f_lo / capture_threshold_n) ** (1.0 / n) - 1.0)

    models = {
        s.name: EmFieldModel(
            f0_n=f0[s.name],
            d0_m=d0,
            n=n,
            capture_threshold_n=capture_threshold_n,
            residual_hold_n=residual_hold_n,
        )
        for s in specs
    }

    achieved = capture_radius(models[strongest.name]) / capture_radius(models[weakest.name])
    if strongest.name != weakest.name and abs(achieved - target_ratio) > tolerance * target_ratio:
        raise CalibrationError(
            f"calibration residual too large: achieved ratio {achieved:.4f} vs target {target_ratio}"
        )
    return models


def calibration_rows(models: dict[str, EmFieldModel]) -> list[dict]:
    """Report rows (one per magnet) for the calibration CSV."""
    return [
        {
            "name": name,
            "f0_n": m.f0_n,
            "d0_m": m.d0_m,
            "n": m.n,
            "capture_radius_m": capture_radius(m),
        }
        for name, m in sorted(models.items())
    ]
