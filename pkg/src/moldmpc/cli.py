"""Command-line interface.

Subcommands: simulate (open-loop dataset), identify (fit + validate the
ARX models), run (closed loop, one variant), compare (all variants and the
indicator table), indicators (recompute from a run CSV).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import config as _config
from . import harness as _harness
from . import plant as _plant
from . import signals as _signals
from . import sysid as _sysid


def _add_common(parser):
    parser.add_argument("--config", default=None, help="scenario YAML (default: packaged)")
    parser.add_argument("--seed", type=int, default=None, help="override run seed")
    parser.add_argument("--out", default=".", help="output directory")


def _scenario(args) -> _config.Scenario:
    scenario = _config.load_scenario(args.config)
    if args.seed is not None:
        scenario.run.seed = args.seed
    return scenario


def _model_paths(out_dir):
    return (os.path.join(out_dir, "rom6.json"), os.path.join(out_dir, "rom14.json"))


def _load_or_identify(scenario, args):
    if getattr(args, "models", None):
        p6, p14 = _model_paths(args.models)
        return _sysid.ArxModel.load(p6), _sysid.ArxModel.load(p14)
    return _harness.identify_roms(scenario.plant, scenario.identification)


def cmd_simulate(args) -> int:
    scenario = _scenario(args)
    data = _harness.excitation_dataset(scenario.plant, scenario.identification)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dataset.csv")
    data.save_csv(path)
    print(f"wrote {data.n_samples} samples to {path}")
    return 0


def cmd_identify(args) -> int:
    scenario = _scenario(args)
    ident = scenario.identification
    if args.data:
        data = _sysid.IoDataset.load_csv(args.data)
    else:
        data = _harness.excitation_dataset(scenario.plant, ident)
    rom6, rom14 = _harness.identify_roms(scenario.plant, ident, data=data)
    os.makedirs(args.out, exist_ok=True)
    p6, p14 = _model_paths(args.out)
    rom6.save(p6)
    rom14.save(p14)
    print(f"ROM (6 outputs): residual RMS {np.max(rom6.residual_rms):.4f} C, "
          f"spectral radius {rom6.spectral_radius():.4f}")
    print(f"ROM (14 outputs): residual RMS {np.max(rom14.residual_rms):.4f} C, "
          f"spectral radius {rom14.spectral_radius():.4f}")

    # open-loop validation of the 6-output model against the variable-h plant
    id_plant = _harness.identification_plant_config(scenario.plant, ident)
    var_cfg = _plant.build_plant(
        dataclasses.replace(id_plant, convection_mode="variable"))
    n_val = int(round(20000.0 / ident.sample_period_s))
    rng = np.random.default_rng(ident.seed + 1)
    schedule = _signals.staircase_prbs_schedule(
        n_val, len(var_cfg.max_powers), var_cfg.max_powers, rng, hold=ident.prbs_hold)
    report = _sysid.validate_rom(rom6, var_cfg, schedule, ident.plant_dt_s,
                                 n_val * ident.sample_period_s,
                                 sample_period=ident.sample_period_s)
    print(report)
    print(f"wrote {p6} and {p14}")
    return 0


def cmd_run(args) -> int:
    scenario = _scenario(args)
    roms = _load_or_identify(scenario, args)
    profile = scenario.profile()
    plant_cfg = scenario.plant
    if scenario.run.profile == "molding":
        plant_cfg = dataclasses.replace(
            plant_cfg,
            curing=dataclasses.replace(plant_cfg.curing, enabled=True))
    record = _harness.run_closed_loop(
        plant_cfg, roms, profile, args.variant, seed=scenario.run.seed,
        mpc_settings=scenario.mpc, observer_settings=scenario.observer,
        plant_dt_s=scenario.run.plant_dt_s)
    paths = _harness.export_run(record, args.out)
    sensor_set = "control" if scenario.run.profile == "molding" else "all"
    report = _harness.indicators(record, t_i=scenario.run.t_i_s, sensor_set=sensor_set)
    print(report)
    print("wrote " + ", ".join(paths))
    return 0


def cmd_compare(args) -> int:
    scenario = _scenario(args)
    roms = _load_or_identify(scenario, args)
    records = {}
    table = _harness.compare_controllers(
        scenario.plant, roms, scenario.empty_mold_profile(),
        seed=scenario.run.seed, t_i=scenario.run.t_i_s,
        mpc_settings=scenario.mpc, observer_settings=scenario.observer,
        plant_dt_s=scenario.run.plant_dt_s,
        molding=not args.skip_molding,
        molding_profile=scenario.molding_profile(),
        records_out=records)
    os.makedirs(args.out, exist_ok=True)
    table_path = os.path.join(args.out, "comparison.csv")
    table.to_csv(table_path)
    for label, rec in records.items():
        rec.to_csv(os.path.join(args.out, f"run_{label}.csv"))
    print(table.to_text())
    print(f"wrote {table_path}")
    return 0


def cmd_indicators(args) -> int:
    record = _harness.RunRecord.from_csv(args.csv)
    report = _harness.indicators(record, t_i=args.t_i, t_f=args.t_f,
                                 sensor_set=args.sensors)
    print(report)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="moldmpc",
                                     description="Mold thermal MPC toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate an open-loop identification dataset")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="fit and validate the ARX models")
    _add_common(p)
    p.add_argument("--data", default=None, help="existing dataset CSV")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("run", help="closed-loop run with one controller variant")
    _add_common(p)
    p.add_argument("--variant", choices=_harness.VARIANTS, default="symmetric")
    p.add_argument("--models", default=None, help="directory with rom6/rom14 JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all variants and tabulate indicators")
    _add_common(p)
    p.add_argument("--models", default=None, help="directory with rom6/rom14 JSON")
    p.add_argument("--skip-molding", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("indicators", help="recompute indicators from a run CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--t-i", type=float, default=10000.0, dest="t_i")
    p.add_argument("--t-f", type=float, default=None, dest="t_f")
    p.add_argument("--sensors", choices=("all", "control"), default="all")
    p.set_defaults(func=cmd_indicators)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI contract: nonzero exit with a diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
