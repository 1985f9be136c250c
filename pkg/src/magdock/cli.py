"""Batch experiment command line.

Verbs:
    run            one scenario to its configured duration
    sweep          tether-variant study over seeds
    dock-cycles    repeated attach/detach endurance
    perpetual      long-horizon full mission with voltage trace
    calibrate-magnets   fit the EM field model and print/export the radii

Exit code is 0 only when the run(s) finished with every safety invariant held.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import (
    ConfigError,
    apply_overrides,
    load_config,
    preset_names,
)
from .core import SimulationError
from .experiments import (
    execute_run,
    run_dock_cycles,
    run_perpetual,
    run_sweep,
)
from .magnetics import BUILTIN_MAGNETS, calibrate_field, calibration_rows


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("config", help=f"config path or preset name {preset_names()}")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--dt", type=float, default=None, help="override the physics step [s]")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magdock", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="run one scenario")
    _add_common(run_p)
    run_p.add_argument("--duration", type=float, default=None, help="override duration [s]")

    sweep_p = sub.add_parser("sweep", help="tether variant sweep")
    _add_common(sweep_p)
    sweep_p.add_argument("--variants", nargs="+",
                         default=["Def", "NeodS", "CeraM", "CeraL"])
    sweep_p.add_argument("--seeds", type=int, default=5,
                         help="number of seeds (1..N)")

    dock_p = sub.add_parser("dock-cycles", help="attach/detach endurance")
    _add_common(dock_p)
    dock_p.add_argument("--n", type=int, default=100, help="cycle count")

    perp_p = sub.add_parser("perpetual", help="long-horizon mission")
    _add_common(perp_p)
    perp_p.add_argument("--hours", type=float, default=10.0, help="simulated horizon [h]")

    cal_p = sub.add_parser("calibrate-magnets", help="fit and report the field model")
    _add_common(cal_p)
    return p


def _load(args) -> "ScenarioConfig":
    cfg = load_config(args.config)
    return apply_overrides(cfg, seed=args.seed, dt=args.dt)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = _load(args)
            if args.duration is not None:
                cfg = apply_overrides(cfg, duration=args.duration)
            res = execute_run(cfg, args.out)
            print(f"run {cfg.name}: t_final reached, events={len(res.events)}, "
                  f"rmse={res.rmse_m if res.rmse_m is not None else 'n/a'}")
            if res.violations:
                for v in res.violations:
                    print(f"INVARIANT VIOLATION: {v}", file=sys.stderr)
                return 1
            return 0

        if args.verb == "sweep":
            cfg = _load(args)
            seeds = list(range(1, args.seeds + 1))
            report = run_sweep(cfg, variants=args.variants, seeds=seeds, out_root=args.out)
            for variant in args.variants:
                ft = report.variant_stat(variant, "flight_time_s")
                rm = report.variant_stat(variant, "rmse_m")
                print(f"{variant}: flight_time={ft and round(ft, 1)} s  "
                      f"rmse={rm and round(rm, 4)} m")
            return 0

        if args.verb == "dock-cycles":
            cfg = _load(args)
            report, res = run_dock_cycles(cfg, args.n, args.out)
            ok = res.cycles >= args.n and res.docks >= args.n and res.detaches >= args.n
            print(f"dock-cycles: {res.cycles}/{args.n} cycles, docks={res.docks}, "
                  f"detaches={res.detaches}, retries={res.retries}")
            if res.violations:
                for v in res.violations:
                    print(f"INVARIANT VIOLATION: {v}", file=sys.stderr)
                return 1
            return 0 if ok else 1

        if args.verb == "perpetual":
            cfg = _load(args)
            report, res = run_perpetual(cfg, args.hours * 3600.0, args.out)
            cycles = [r for r in report.rows if r["row_type"] == "cycle"]
            print(f"perpetual: {len(cycles)} discharge/charge cycles over "
                  f"{args.hours} h, retries={res.retries}, "
                  f"final_v={res.final_voltage:.3f}")
            if res.violations:
                for v in res.violations:
                    print(f"INVARIANT VIOLATION: {v}", file=sys.stderr)
                return 1
            return 0

        if args.verb == "calibrate-magnets":
            cfg = _load(args)
            mag = cfg.data["magnetics"]
            models = calibrate_field(
                list(BUILTIN_MAGNETS.values()),
                target_ratio=mag["target_ratio"],
                baseline_radius=mag["baseline_radius_m"],
                em_boost=mag["em_boost"],
                capture_threshold_n=mag["capture_threshold_n"],
                residual_hold_n=mag["residual_hold_n"],
            )
            rows = calibration_rows(models)
            for r in rows:
                print(f"{r['name']}: F0={r['f0_n']:.3f} N  d0={r['d0_m']:.5f} m  "
                      f"n={r['n']:.4f}  radius={r['capture_radius_m']:.4f} m")
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                path = args.out / "calibration.csv"
                with open(path, "w", newline="") as fh:
                    w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                    w.writeheader()
                    w.writerows(rows)
                print(f"wrote {path}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
