"""YAML scenario configuration: plant geometry/layout plus identification,
observer, controller and run settings.

The packaged ``configs/default.yaml`` records the standard mold (grid,
heater footprints, sensor coordinates, convection fits) so every run is
reproducible from one file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import yaml

from . import plant as _plant
from .harness import IdSettings, MpcSettings, ObserverSettings, ReferenceProfile


@dataclass
class RunSettings:
    plant_dt_s: float = 20.0
    seed: int = 0
    t_i_s: float = 10000.0
    profile: str = "empty_mold"
    molding_hold_120_until_s: float = 6000.0
    cure_temp_C: float = 185.0
    cure_hold_s: float = 7200.0


@dataclass
class Scenario:
    plant: _plant.PlantConfig
    identification: IdSettings = field(default_factory=IdSettings)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    mpc: MpcSettings = field(default_factory=MpcSettings)
    run: RunSettings = field(default_factory=RunSettings)
    symmetry_pairs: tuple = ()

    def empty_mold_profile(self) -> ReferenceProfile:
        return ReferenceProfile.empty_mold()

    def molding_profile(self) -> ReferenceProfile:
        return ReferenceProfile.molding(self.run.molding_hold_120_until_s,
                                        self.run.cure_temp_C,
                                        self.run.cure_hold_s)

    def profile(self) -> ReferenceProfile:
        if self.run.profile == "empty_mold":
            return self.empty_mold_profile()
        if self.run.profile == "molding":
            return self.molding_profile()
        raise ValueError(f"unknown profile {self.run.profile!r}")


def _heater_from_dict(entry: dict, nx: int, ny: int, nz: int) -> _plant.HeaterSpec:
    hid = int(entry["id"])
    power = float(entry["max_power"])
    if "cells" in entry:
        cells = tuple(tuple(int(v) for v in c) for c in entry["cells"])
    elif "box" in entry:
        box = entry["box"]
        xs, ys, zs = box["x"], box["y"], box["z"]
        cells = _plant._box_cells((xs[0], xs[1]), (ys[0], ys[1]), (zs[0], zs[1]))
    elif "face" in entry:
        cells = _plant._wall_cells(nx, ny, nz, entry["face"])
    else:
        raise _plant.ConfigurationError(
            f"heater {hid}: needs one of cells/box/face")
    return _plant.HeaterSpec(hid, cells, power)


def _convection_fit(entry: dict, clamp) -> _plant.ConvectionFit:
    return _plant.ConvectionFit(kind=entry["kind"], a=float(entry["a"]),
                                b=float(entry.get("b", 0.0)),
                                c=float(entry.get("c", 0.0)),
                                dT_min=float(clamp[0]), dT_max=float(clamp[1]))


def plant_config_from_dict(doc: dict) -> _plant.PlantConfig:
    p = doc["plant"]
    grid = p["grid"]
    nx, ny, nzb = int(grid["nx"]), int(grid["ny"]), int(grid["nz_block"])
    single = bool(p.get("single_block", False))
    nz = nzb if single else 2 * nzb
    mat = p["material"]
    material = _plant.MaterialProps(
        density=float(mat["density"]), specific_heat=float(mat["specific_heat"]),
        conductivity=float(mat["conductivity"]),
        conductivity_range=tuple(mat.get("conductivity_range", (33.0, 35.5))))
    ins = p["insulation"]
    conv = p["convection"]
    clamp = conv.get("clamp_dT_K", (2.0, 157.0))
    heaters = tuple(_heater_from_dict(h, nx, ny, nz) for h in p.get("heaters", ()))
    sens = p.get("sensors", {})
    sensors = _plant.SensorLayout(
        control=tuple(tuple(int(v) for v in s) for s in sens.get("control", ())),
        auxiliary=tuple(tuple(int(v) for v in s) for s in sens.get("auxiliary", ())))

    cur = doc.get("curing", {})
    kin = cur.get("kinetics", {})
    kinetics = _plant.CuringKinetics(
        a1=float(kin.get("a1", 5.0e4)), e1=float(kin.get("e1", 7.0e4)),
        a2=float(kin.get("a2", 5.0e6)), e2=float(kin.get("e2", 7.5e4)),
        m=float(kin.get("m", 1.0)), n=float(kin.get("n", 1.5)))
    cols = cur.get("resin_columns")
    if isinstance(cols, dict):
        resin = tuple((i, j)
                      for j in range(cols["y"][0], cols["y"][1] + 1)
                      for i in range(cols["x"][0], cols["x"][1] + 1))
    elif cols:
        resin = tuple(tuple(int(v) for v in c) for c in cols)
    else:
        resin = ()
    curing = _plant.CuringModel(
        enabled=bool(cur.get("enabled", False)), resin_columns=resin,
        kinetics=kinetics,
        total_heat_J_per_kg=float(cur.get("total_heat_J_per_kg", 3.0e5)),
        resin_density=float(cur.get("resin_density", 1200.0)),
        resin_conductivity=float(cur.get("resin_conductivity", 0.20)),
        injection_time_s=float(cur.get("injection_time_s", 0.0)))

    return _plant.PlantConfig(
        nx=nx, ny=ny, nz_block=nzb, single_block=single,
        block_size_m=tuple(p.get("block_size_m", (0.50, 0.40, 0.04))),
        material=material,
        insulation_top_bottom=_plant.InsulationSpec(
            float(ins["top_bottom"]["thickness_m"]),
            float(ins["top_bottom"]["conductivity"])),
        insulation_lateral=_plant.InsulationSpec(
            float(ins["lateral"]["thickness_m"]),
            float(ins["lateral"]["conductivity"])),
        conv_upper=_convection_fit(conv["upper"], clamp),
        conv_lower=_convection_fit(conv["lower"], clamp),
        conv_lateral=_convection_fit(conv["lateral"], clamp),
        convection_mode=conv.get("mode", "variable"),
        constant_h=float(conv.get("constant_h", 15.0)),
        cavity_gap_m=float(p.get("cavity", {}).get("gap_m", 0.003)),
        cavity_fill_conductivity=float(
            p.get("cavity", {}).get("fill_conductivity", 0.030)),
        ambient_C=float(p.get("ambient_C", 23.0)),
        heaters=heaters, sensors=sensors, curing=curing,
        sensor_noise_std_C=float(p.get("sensor_noise_std_C", 0.0)),
    )


def scenario_from_dict(doc: dict) -> Scenario:
    ident = doc.get("identification", {})
    obs = doc.get("observer", {})
    mpc = doc.get("mpc", {})
    run = doc.get("run", {})
    pairs = tuple(tuple(int(v) for v in pr)
                  for pr in mpc.get("symmetry_pairs", ()))
    return Scenario(
        plant=plant_config_from_dict(doc),
        identification=IdSettings(
            r=int(ident.get("r", 2)), s=int(ident.get("s", 1)),
            sample_period_s=float(ident.get("sample_period_s", 200.0)),
            duration_s=float(ident.get("duration_s", 60000.0)),
            plant_dt_s=float(ident.get("plant_dt_s", 25.0)),
            constant_h=float(ident.get("constant_h", 15.0)),
            seed=int(ident.get("seed", 1234)),
            prbs_hold=int(ident.get("prbs_hold", 3))),
        observer=ObserverSettings(
            cs_std_C=float(obs.get("cs_std_C", 0.1)),
            cq_state=float(obs.get("cq_state", 1e-6)),
            cq_perturbation=float(obs.get("cq_perturbation", 1e-2)),
            p0=float(obs.get("p0", 1.0))),
        mpc=MpcSettings(
            horizon=int(mpc.get("horizon", 6)),
            q_weight=float(mpc.get("q_weight", 1.0)),
            r_weight=float(mpc.get("r_weight", 0.01)),
            virtual_weight=(None if mpc.get("virtual_weight") is None
                            else float(mpc.get("virtual_weight"))),
            period_s=float(mpc.get("period_s", 200.0))),
        run=RunSettings(
            plant_dt_s=float(run.get("plant_dt_s", 20.0)),
            seed=int(run.get("seed", 0)),
            t_i_s=float(run.get("t_i_s", 10000.0)),
            profile=run.get("profile", "empty_mold"),
            molding_hold_120_until_s=float(run.get("molding_hold_120_until_s", 6000.0)),
            cure_temp_C=float(run.get("cure_temp_C", 185.0)),
            cure_hold_s=float(run.get("cure_hold_s", 7200.0))),
        symmetry_pairs=pairs,
    )


def load_scenario(path=None) -> Scenario:
    """Load a scenario YAML; with no path, the packaged default is used."""
    if path is None:
        text = resources.files("moldmpc").joinpath("configs/default.yaml").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return scenario_from_dict(yaml.safe_load(text))
