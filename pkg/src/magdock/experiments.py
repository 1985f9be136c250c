"""Batch experiment runners: variant sweeps, dock-cycle endurance, perpetual
missions, and the report/invariant plumbing shared by all of them.

Every run writes one directory (echoed config, timeseries.csv, events.csv)
and each experiment writes a report.csv whose aggregate rows are recomputable
from its per-run rows. All outputs are a pure function of (config, seed).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .config import (
    ScenarioConfig,
    apply_overrides,
    apply_variant,
    build_scenario,
    echo_config,
)
from .core import SimulationError, Simulator
from .magnetics import capture_radius

REPORT_COLUMNS = (
    "row_type", "variant", "seed", "flight_time_s", "rmse_m", "captures",
    "docks", "detaches", "retries", "cycles", "charge_s", "throttle_events",
    "capture_radius_m", "note",
)

_NUMERIC_COLUMNS = (
    "flight_time_s", "rmse_m", "captures", "docks", "detaches", "retries",
    "cycles", "charge_s", "throttle_events", "capture_radius_m",
)


@dataclass
class RunResult:
    name: str
    variant: str
    seed: int
    flight_time_s: float | None = None
    rmse_m: float | None = None
    captures: int = 0
    docks: int = 0
    detaches: int = 0
    retries: int = 0
    cycles: int = 0
    capture_radius_m: float | None = None
    min_tension: float = 0.0
    em_overlap_ticks: int = 0
    battery_empty: bool = False
    final_voltage: float = 0.0
    events: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    out_dir: Path | None = None

    def row(self) -> dict:
        return {
            "row_type": "run",
            "variant": self.variant,
            "seed": self.seed,
            "flight_time_s": self.flight_time_s,
            "rmse_m": self.rmse_m,
            "captures": self.captures,
            "docks": self.docks,
            "detaches": self.detaches,
            "retries": self.retries,
            "cycles": self.cycles,
            "charge_s": None,
            "throttle_events": None,
            "capture_radius_m": self.capture_radius_m,
            "note": None,
        }


def check_invariants(sim: Simulator) -> list[str]:
    """Safety conditions every scenario log must satisfy; returns violations."""
    out = []
    if sim.min_tension < 0.0:
        out.append(f"negative tether tension {sim.min_tension}")
    if sim.em_overlap_ticks > 0:
        out.append(
            f"EM active while sensed current >= threshold for {sim.em_overlap_ticks} ticks"
        )
    docked_since_detach = False
    for _, kind, _ in sim.events:
        if kind == "DOCKED":
            docked_since_detach = True
        elif kind == "DETACH":
            docked_since_detach = False
        elif kind == "MISSION_PHASE":
            pass
    for t, kind, payload in sim.events:
        if kind == "MISSION_PHASE" and payload.get("phase") == "CHARGING":
            prior = [k for tt, k, _ in sim.events if tt <= t and k in ("DOCKED", "DETACH")]
            if not prior or prior[-1] != "DOCKED":
                out.append(f"CHARGING entered at t={t} without a preceding DOCKED")
    q = sim.vehicle
    qn = math.sqrt(q.qw ** 2 + q.qx ** 2 + q.qy ** 2 + q.qz ** 2)
    if abs(qn - 1.0) > 1e-9:
        out.append(f"quaternion norm drifted to {qn}")
    return out


def execute_run(
    cfg: ScenarioConfig,
    out_dir: Path | None = None,
    stop=None,
    t_max: float | None = None,
    variant: str = "",
) -> RunResult:
    """Build, run, close, and summarize one simulation."""
    scenario = build_scenario(cfg)
    ts_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        echo_config(cfg, out_dir / "config_echo.yaml")
        ts_path = out_dir / "timeseries.csv"
    sim = Simulator(scenario, ts_path)
    try:
        sim.run_until(stop, t_max if t_max is not None else scenario.duration_s)
    finally:
        sim.close()
    if out_dir is not None:
        sim.write_events_csv(out_dir / "events.csv")

    res = RunResult(name=cfg.name, variant=variant or cfg.name, seed=scenario.seed)
    low = sim.event_times("LOW_BATTERY")
    res.flight_time_s = low[0] if low else None
    res.rmse_m = sim.tracking_rmse() if sim.rmse_n else None
    res.captures = sim.count_events("CAPTURE")
    res.docks = sim.count_events("DOCKED")
    res.detaches = sim.count_events("DETACH")
    res.retries = sim.count_events("DOCK_RETRY")
    res.cycles = sim.mission.cycles_done
    res.capture_radius_m = (
        capture_radius(scenario.field_model) if scenario.field_model else None
    )
    res.min_tension = sim.min_tension
    res.em_overlap_ticks = sim.em_overlap_ticks
    res.battery_empty = sim.count_events("BATTERY_EMPTY") > 0
    res.final_voltage = sim.battery.terminal_v
    res.events = list(sim.events)
    res.violations = check_invariants(sim)
    res.out_dir = out_dir
    return res


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _mean(xs):
    return sum(xs) / len(xs)


def _std(xs):
    if len(xs) < 2:
        return 0.0
    m = _mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


@dataclass
class ExperimentReport:
    rows: list[dict] = field(default_factory=list)

    def add_run(self, res: RunResult):
        self.rows.append(res.row())

    def add_failure(self, variant: str, seed: int, message: str):
        row = {col: None for col in REPORT_COLUMNS}
        row.update(row_type="failure", variant=variant, seed=seed, note=message)
        self.rows.append(row)

    def run_rows(self, variant: str | None = None) -> list[dict]:
        return [
            r for r in self.rows
            if r["row_type"] == "run" and (variant is None or r["variant"] == variant)
        ]

    def aggregate(self):
        """Append mean/std rows per variant, recomputable from the run rows."""
        self.rows = [r for r in self.rows if r["row_type"] == "run" or r["row_type"] == "failure"]
        variants = []
        for r in self.rows:
            if r["row_type"] == "run" and r["variant"] not in variants:
                variants.append(r["variant"])
        agg = []
        for variant in variants:
            runs = self.run_rows(variant)
            for stat, fn in (("mean", _mean), ("std", _std)):
                row = {col: None for col in REPORT_COLUMNS}
                row.update(row_type="aggregate", variant=variant, seed=stat)
                for col in _NUMERIC_COLUMNS:
                    vals = [r[col] for r in runs if r.get(col) is not None]
                    row[col] = fn(vals) if vals else None
                agg.append(row)
        self.rows.extend(agg)

    def variant_stat(self, variant: str, column: str, stat: str = "mean"):
        for r in self.rows:
            if r["row_type"] == "aggregate" and r["variant"] == variant and r["seed"] == stat:
                return r[column]
        raise KeyError(f"no aggregate for {variant!r}; call aggregate() first")

    def write_csv(self, path: Path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in REPORT_COLUMNS})


# ---------------------------------------------------------------------------
# Canonical experiments
# ---------------------------------------------------------------------------

def run_sweep(
    base: ScenarioConfig,
    variants=("Def", "NeodS", "CeraM", "CeraL"),
    seeds=(1, 2, 3, 4, 5),
    out_root: Path | None = None,
) -> ExperimentReport:
    """Tether-variant study: fly the base scenario per (variant, seed) until the
    low-battery trigger; report flight time, tracking RMSE, capture radius."""
    if not variants:
        raise ValueError("variants must be non-empty")
    report = ExperimentReport()
    out_root = Path(out_root) if out_root is not None else None
    for variant in variants:
        vcfg = apply_variant(base, variant)
        for seed in seeds:
            cfg = apply_overrides(vcfg, seed=seed)
            rd = out_root / f"{variant}_seed{seed}" if out_root else None
            stop = (lambda sim: sim.low_monitor.fired or sim.count_events("BATTERY_EMPTY") > 0)
            try:
                res = execute_run(cfg, rd, stop=stop, variant=variant)
            except (SimulationError, RuntimeError) as exc:
                report.add_failure(variant, seed, str(exc))
                report.aggregate()
                if out_root:
                    report.write_csv(out_root / "report.csv")
                raise
            if res.violations:
                raise SimulationError(
                    f"invariant violations in {variant}/seed{seed}: {res.violations}"
                )
            report.add_run(res)
    report.aggregate()
    if out_root:
        out_root.mkdir(parents=True, exist_ok=True)
        report.write_csv(out_root / "report.csv")
    return report


def run_dock_cycles(
    cfg: ScenarioConfig,
    n: int,
    out_dir: Path | None = None,
    budget_per_cycle_s: float = 400.0,
) -> tuple[ExperimentReport, RunResult]:
    """Scripted attach/detach endurance: n dock/charge/un-dock cycles."""
    if n < 1:
        raise ValueError("n must be >= 1")
    run_cfg = apply_overrides(cfg, n_cycles=n, mode="dock_cycles")
    t_max = 120.0 + budget_per_cycle_s * n
    res = execute_run(
        run_cfg, out_dir,
        stop=lambda sim: sim.mission.cycles_done >= n,
        t_max=t_max,
    )
    report = ExperimentReport()
    report.add_run(res)
    if res.cycles < n:
        report.add_failure(res.variant, res.seed,
                           f"only {res.cycles}/{n} cycles completed in {t_max} s")
    report.aggregate()
    if out_dir is not None:
        report.write_csv(Path(out_dir) / "report.csv")
    return report, res


def run_perpetual(
    cfg: ScenarioConfig,
    horizon_s: float,
    out_dir: Path | None = None,
) -> tuple[ExperimentReport, RunResult]:
    """Full mission loop for a long horizon; emits the voltage-vs-time trace
    and per-cycle flight/charge durations."""
    if horizon_s <= 0.0:
        raise ValueError("horizon must be positive")
    run_cfg = apply_overrides(cfg, duration=horizon_s)
    res = execute_run(run_cfg, out_dir, stop=None, t_max=horizon_s)

    report = ExperimentReport()
    report.add_run(res)
    # Per-cycle rows from the event stream: flight leg ends at the low-battery
    # trigger; the charge leg spans CHARGE_START .. CHARGE_COMPLETE.
    lows = [t for t, k, _ in res.events if k == "LOW_BATTERY"]
    starts = [t for t, k, _ in res.events if k == "CHARGE_START"]
    completes = [t for t, k, _ in res.events if k == "CHARGE_COMPLETE"]
    throttle_ts = [t for t, k, _ in res.events if k == "THERMAL_THROTTLE_ON"]
    prev_end = 0.0
    for i, t_low in enumerate(lows):
        row = {col: None for col in REPORT_COLUMNS}
        row.update(row_type="cycle", variant=f"cycle{i + 1}", seed=res.seed,
                   flight_time_s=t_low - prev_end)
        if i < len(starts) and i < len(completes):
            row["charge_s"] = completes[i] - starts[i]
            row["throttle_events"] = sum(
                1 for t in throttle_ts if starts[i] <= t <= completes[i]
            )
            prev_end = completes[i]
        report.rows.append(row)
    if out_dir is not None:
        out = Path(out_dir)
        report.write_csv(out / "report.csv")
        write_voltage_trace(out / "timeseries.csv", out / "voltage.csv")
    return report, res


def write_voltage_trace(timeseries_path: Path, out_path: Path, stride_s: float = 1.0):
    """Extract (t, battery_v) from a timeseries log, decimated for plotting."""
    last_emitted = -1e18
    with open(timeseries_path) as fh, open(out_path, "w", newline="") as out:
        reader = csv.DictReader(fh)
        out.write("t,battery_v\n")
        for row in reader:
            t = float(row["t"])
            if t - last_emitted >= stride_s - 1e-9:
                out.write(f"{row['t']},{row['battery_v']}\n")
                last_emitted = t
