"""Closed-loop experiment runner: wires plant, observer and controller,
computes tracking/homogeneity indicators and persists run records.

A run advances in fixed controller periods (default 200 s). Each period:
measure the control sensors, advance the Kalman observer, solve the MPC
problem, then integrate the plant with the command held (zero-order hold).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import mpc as _mpc
from . import observer as _observer
from . import plant as _plant
from . import signals as _signals
from . import sysid as _sysid

KELVIN_OFFSET = _plant.KELVIN_OFFSET

RUN_CSV_COLUMNS = (
    ["time_s", "ref_C"]
    + [f"y{i+1}_C" for i in range(6)]
    + [f"aux{i+1}_C" for i in range(8)]
    + [f"vhat{i+1}_C" for i in range(8)]
    + [f"u{i+1}_W" for i in range(20)]
    + [f"p{i+1}_hat" for i in range(6)]
    + ["cost"]
)

VARIANTS = ("standard", "extended", "symmetric")


# ---------------------------------------------------------------------------
# reference profiles
# ---------------------------------------------------------------------------

@dataclass
class ReferenceProfile:
    """Piecewise ramp/hold reference. Segments are ("ramp", target_C,
    rate_C_per_min) or ("hold", until_s); each segment starts where the
    previous one ended."""

    segments: tuple
    start_C: float = 23.0

    def __post_init__(self):
        t, T = 0.0, float(self.start_C)
        times, temps = [t], [T]
        for seg in self.segments:
            kind = seg[0]
            if kind == "ramp":
                _, target, rate = seg
                if rate <= 0:
                    raise ValueError("ramp rate must be positive")
                t = t + abs(target - T) * 60.0 / rate
                T = float(target)
            elif kind == "hold":
                _, until = seg
                if until < t:
                    raise ValueError(f"hold until {until} s precedes t={t} s")
                t = float(until)
            else:
                raise ValueError(f"unknown segment kind {kind!r}")
            times.append(t)
            temps.append(T)
        self._times = np.array(times)
        self._temps = np.array(temps)

    @property
    def end_time(self) -> float:
        return float(self._times[-1])

    def value(self, t):
        """Reference temperature in C at time(s) t; held constant past the end."""
        return np.interp(t, self._times, self._temps)

    @classmethod
    def empty_mold(cls) -> "ReferenceProfile":
        return cls(segments=(("ramp", 120.0, 2.0), ("hold", 10000.0),
                             ("ramp", 180.0, 2.0), ("hold", 20000.0)))

    @classmethod
    def molding(cls, hold_120_until_s: float = 6000.0, cure_temp_C: float = 185.0,
                cure_hold_s: float = 7200.0) -> "ReferenceProfile":
        ramp_s = (cure_temp_C - 120.0) * 30.0
        t_end = hold_120_until_s + ramp_s + cure_hold_s
        return cls(segments=(("ramp", 120.0, 2.0), ("hold", hold_120_until_s),
                             ("ramp", cure_temp_C, 2.0), ("hold", t_end)))


# ---------------------------------------------------------------------------
# run records
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    """Per-controller-step log of a closed-loop run."""

    time: np.ndarray          # (N,)
    ref: np.ndarray           # (N,)
    y: np.ndarray             # (N, 6) measured control temps, C
    aux: np.ndarray           # (N, 8) true auxiliary temps, C
    vhat: np.ndarray          # (N, 8) virtual-node estimates, C (NaN if unused)
    u: np.ndarray             # (N, 20) commanded powers, W
    p_hat: np.ndarray         # (N, 6) perturbation estimates
    cost: np.ndarray          # (N,)
    variant: str = ""
    period_s: float = 200.0
    final_time_s: float = 0.0
    final_cure_min: float = float("nan")

    @property
    def n_steps(self) -> int:
        return len(self.time)

    def sensor_matrix(self, sensor_set: str = "all") -> np.ndarray:
        if sensor_set == "all":
            return np.hstack([self.y, self.aux])
        if sensor_set == "control":
            return self.y.copy()
        raise ValueError(f"unknown sensor set {sensor_set!r}")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(RUN_CSV_COLUMNS) + "\n")
            for k in range(self.n_steps):
                row = [self.time[k], self.ref[k], *self.y[k], *self.aux[k],
                       *self.vhat[k], *self.u[k], *self.p_hat[k], self.cost[k]]
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunRecord":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if header != RUN_CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected run CSV header")
            rows = [[float(v) for v in line.strip().split(",")]
                    for line in fh if line.strip()]
        data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
        period = float(data[1, 0] - data[0, 0]) if len(data) > 1 else 200.0
        return cls(
            time=data[:, 0], ref=data[:, 1], y=data[:, 2:8], aux=data[:, 8:16],
            vhat=data[:, 16:24], u=data[:, 24:44], p_hat=data[:, 44:50],
            cost=data[:, 50], period_s=period,
            final_time_s=float(data[-1, 0] + period) if len(data) else 0.0,
        )


@dataclass
class IndicatorReport:
    """The four tracking/homogeneity RMSE indicators in degrees C."""

    rmse_avg_stat: float
    rmse_ref_stat: float
    rmse_avg_global: float
    rmse_ref_global: float
    t_i: float
    t_f: float
    n_sensors: int

    def as_tuple(self):
        return (self.rmse_avg_stat, self.rmse_ref_stat,
                self.rmse_avg_global, self.rmse_ref_global)

    def __str__(self):
        return (f"RMSE_avg_stat={self.rmse_avg_stat:.3f} C, "
                f"RMSE_ref_stat={self.rmse_ref_stat:.3f} C, "
                f"RMSE_avg_global={self.rmse_avg_global:.3f} C, "
                f"RMSE_ref_global={self.rmse_ref_global:.3f} C "
                f"(n={self.n_sensors}, window [{self.t_i:.0f}, {self.t_f:.0f}] s)")


def indicators(record: RunRecord, t_i: float, t_f: float | None = None,
               sensor_set: str = "all") -> IndicatorReport:
    """Homogeneity (vs the sensor average) and tracking (vs the reference)
    RMSE, at the final sample (stat) and averaged over [t_i, t_f] (global)."""
    if t_f is None:
        t_f = float(record.time[-1]) if record.n_steps else 0.0
    if t_i >= t_f:
        raise ValueError("need t_i < t_f")
    T = record.sensor_matrix(sensor_set)
    mask = (record.time >= t_i) & (record.time <= t_f)
    if not np.any(mask):
        raise ValueError(f"no samples inside [{t_i}, {t_f}]")
    Tw = T[mask]
    ref_w = record.ref[mask]
    n = Tw.shape[1]

    T_last = Tw[-1]
    avg_last = float(np.mean(T_last))
    rmse_avg_stat = float(np.sqrt(np.mean((T_last - avg_last) ** 2)))
    rmse_ref_stat = float(np.sqrt(np.mean((T_last - ref_w[-1]) ** 2)))

    avg_t = np.mean(Tw, axis=1, keepdims=True)
    rmse_avg_global = float(np.sqrt(np.mean((Tw - avg_t) ** 2)))
    rmse_ref_global = float(np.sqrt(np.mean((Tw - ref_w[:, None]) ** 2)))

    return IndicatorReport(rmse_avg_stat, rmse_ref_stat,
                           rmse_avg_global, rmse_ref_global,
                           t_i=float(t_i), t_f=float(record.time[mask][-1]),
                           n_sensors=n)


# ---------------------------------------------------------------------------
# identification pipeline
# ---------------------------------------------------------------------------

@dataclass
class IdSettings:
    r: int = 2
    s: int = 1
    sample_period_s: float = 200.0
    duration_s: float = 60000.0
    plant_dt_s: float = 25.0
    constant_h: float = 15.0
    seed: int = 1234
    prbs_hold: int = 3


def identification_plant_config(plant_cfg: _plant.PlantConfig,
                                settings: IdSettings) -> _plant.PlantConfig:
    """Clone of the plant at constant film coefficient, curing off and
    noise-free sensors, matching the conditions the ROM is fit under."""
    return dataclasses.replace(
        plant_cfg,
        convection_mode="constant",
        constant_h=settings.constant_h,
        curing=dataclasses.replace(plant_cfg.curing, enabled=False),
        sensor_noise_std_C=0.0,
    )


def excitation_dataset(plant_cfg: _plant.PlantConfig,
                       settings: IdSettings) -> _sysid.IoDataset:
    """Open-loop staircase+PRBS run on the constant-h plant."""
    id_cfg = identification_plant_config(plant_cfg, settings)
    model = _plant.build_plant(id_cfg)
    n_samples = int(round(settings.duration_s / settings.sample_period_s))
    rng = np.random.default_rng(settings.seed)
    schedule = _signals.staircase_prbs_schedule(
        n_samples, len(model.max_powers), model.max_powers, rng,
        hold=settings.prbs_hold)
    return _plant.run_open_loop(model, schedule, settings.plant_dt_s,
                                settings.duration_s,
                                sample_period=settings.sample_period_s,
                                include_aux=True)


def identify_roms(plant_cfg: _plant.PlantConfig, settings: IdSettings,
                  data: _sysid.IoDataset | None = None):
    """Fit the 6-output and 14-output ARX models from one excitation run."""
    if data is None:
        data = excitation_dataset(plant_cfg, settings)
    rom6 = _sysid.fit_arx(data.control_only(), settings.r, settings.s,
                          baseline_temp=plant_cfg.ambient_C)
    rom14 = _sysid.fit_arx(data, settings.r, settings.s,
                           baseline_temp=plant_cfg.ambient_C)
    return rom6, rom14


# ---------------------------------------------------------------------------
# closed loop
# ---------------------------------------------------------------------------

@dataclass
class ObserverSettings:
    cs_std_C: float = 0.1
    cq_state: float = 1e-6
    cq_perturbation: float = 1e-2
    p0: float = 1.0


@dataclass
class MpcSettings:
    horizon: int = 6
    q_weight: float = 1.0
    r_weight: float = 0.01
    virtual_weight: float = None
    period_s: float = 200.0


def run_closed_loop(plant_cfg: _plant.PlantConfig, roms, profile: ReferenceProfile,
                    variant: str, seed: int = 0,
                    mpc_settings: MpcSettings | None = None,
                    observer_settings: ObserverSettings | None = None,
                    plant_dt_s: float = 20.0) -> RunRecord:
    """Run one controller variant against the nonlinear plant.

    `roms` is the (rom6, rom14) pair from `identify_roms`; the standard
    variant uses the 6-output model, the extended and symmetric variants the
    14-output model. Deterministic for a given seed. Raises RuntimeError with
    the offending step index if the loop produces non-finite temperatures.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    ms = mpc_settings or MpcSettings()
    os_ = observer_settings or ObserverSettings()
    rom6, rom14 = roms
    rom = rom6 if variant == "standard" else rom14

    aug = _sysid.augment_with_perturbations(_sysid.arx_to_statespace(rom))
    kcfg = _observer.default_kalman_config(
        aug, cs_std=os_.cs_std_C, cq_state=os_.cq_state,
        cq_perturbation=os_.cq_perturbation, p0=os_.p0, n_measured=6)
    obs = _observer.KalmanObserver(aug, kcfg, measured_rows=np.arange(6))

    model = _plant.build_plant(plant_cfg)
    pairs = _mpc.SYMMETRY_PAIRS if variant == "symmetric" else ()
    cfg = _mpc.MpcConfig(Np=ms.horizon, Q=ms.q_weight, R=ms.r_weight,
                         u_max=model.max_powers, symmetry_pairs=pairs,
                         extended_domain=(rom.m > 6),
                         virtual_weight=ms.virtual_weight)
    ctrl = _mpc.MpcController(aug, cfg, n_measured=6)

    state = model.initial_state()
    rng = np.random.default_rng(seed)
    period = ms.period_s
    n_steps = int(round(profile.end_time / period))
    n_sub = max(1, int(round(period / plant_dt_s)))
    dt_eff = period / n_sub
    baseline = rom.baseline_temp
    noise = plant_cfg.sensor_noise_std_C

    N = n_steps
    rec = RunRecord(
        time=np.zeros(N), ref=np.zeros(N), y=np.zeros((N, 6)),
        aux=np.zeros((N, 8)), vhat=np.full((N, 8), np.nan),
        u=np.zeros((N, 20)), p_hat=np.zeros((N, 6)), cost=np.zeros(N),
        variant=variant, period_s=period,
    )

    x_prev = obs.x_hat.copy()
    u_prev = np.zeros(model.heater_map.shape[1])
    horizon_offsets = period * np.arange(1, ms.horizon + 1)
    for k in range(n_steps):
        t_k = k * period
        y_true = state.temperatures[model.control_idx] - KELVIN_OFFSET
        aux_true = state.temperatures[model.aux_idx] - KELVIN_OFFSET
        z = y_true + (rng.normal(0.0, noise, size=6) if noise > 0 else 0.0)

        obs.step(u_prev, z - baseline)
        x_hat = obs.x_hat
        ref_window = profile.value(t_k + horizon_offsets) - baseline
        cmd = ctrl.compute_command(x_hat, x_prev, ref_window)

        rec.time[k] = t_k
        rec.ref[k] = profile.value(t_k)
        rec.y[k] = z
        rec.aux[k] = aux_true
        if rom.m > 6:
            rec.vhat[k] = baseline + obs.outputs()[6:]
        rec.u[k] = cmd.u
        rec.p_hat[k] = obs.perturbations()[:6]
        rec.cost[k] = cmd.cost_value

        x_prev = x_hat.copy()
        u_prev = cmd.u
        for _ in range(n_sub):
            state = _plant.step(model, state, cmd.u, dt_eff)
        if not np.all(np.isfinite(state.temperatures)):
            raise RuntimeError(f"non-finite plant temperature after control step {k}")

    rec.final_time_s = state.sim_time
    if len(state.cure_degree):
        rec.final_cure_min = float(np.min(state.cure_degree))
    return rec


# ---------------------------------------------------------------------------
# controller comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonTable:
    """Indicator table for the controller variants plus the molding run."""

    rows: list = field(default_factory=list)  # (label, IndicatorReport)

    def add(self, label: str, report: IndicatorReport):
        self.rows.append((label, report))

    def get(self, label: str) -> IndicatorReport:
        for lab, rep in self.rows:
            if lab == label:
                return rep
        raise KeyError(label)

    def to_text(self) -> str:
        head = (f"{'configuration':<22} {'RMSE_avg_stat':>13} {'RMSE_ref_stat':>13} "
                f"{'RMSE_avg_glob':>13} {'RMSE_ref_glob':>13}  n")
        lines = [head, "-" * len(head)]
        for label, rep in self.rows:
            a, b, c, d = rep.as_tuple()
            lines.append(f"{label:<22} {a:>13.3f} {b:>13.3f} {c:>13.3f} {d:>13.3f}  "
                         f"{rep.n_sensors}")
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("configuration,rmse_avg_stat,rmse_ref_stat,"
                     "rmse_avg_global,rmse_ref_global,n_sensors,t_i,t_f\n")
            for label, rep in self.rows:
                fh.write(",".join([label] + [repr(float(v)) for v in rep.as_tuple()]
                                  + [str(rep.n_sensors), repr(rep.t_i), repr(rep.t_f)])
                         + "\n")


def compare_controllers(plant_cfg: _plant.PlantConfig, roms,
                        profile: ReferenceProfile | None = None,
                        seed: int = 0, t_i: float = 10000.0,
                        mpc_settings: MpcSettings | None = None,
                        observer_settings: ObserverSettings | None = None,
                        plant_dt_s: float = 20.0,
                        molding: bool = True,
                        molding_plant_cfg: _plant.PlantConfig | None = None,
                        molding_profile: ReferenceProfile | None = None,
                        records_out: dict | None = None) -> ComparisonTable:
    """Run all variants on an identical plant and seed and tabulate the four
    indicators (14 sensors); optionally add the symmetric molding run
    (6 control sensors only)."""
    profile = profile or ReferenceProfile.empty_mold()
    table = ComparisonTable()
    for variant in VARIANTS:
        rec = run_closed_loop(plant_cfg, roms, profile, variant, seed=seed,
                              mpc_settings=mpc_settings,
                              observer_settings=observer_settings,
                              plant_dt_s=plant_dt_s)
        table.add(variant, indicators(rec, t_i=t_i, sensor_set="all"))
        if records_out is not None:
            records_out[variant] = rec
    if molding:
        m_cfg = molding_plant_cfg
        if m_cfg is None:
            m_cfg = dataclasses.replace(
                plant_cfg, curing=dataclasses.replace(plant_cfg.curing, enabled=True))
        m_profile = molding_profile or ReferenceProfile.molding()
        rec = run_closed_loop(m_cfg, roms, m_profile, "symmetric", seed=seed,
                              mpc_settings=mpc_settings,
                              observer_settings=observer_settings,
                              plant_dt_s=plant_dt_s)
        table.add("molding-symmetric", indicators(rec, t_i=t_i, sensor_set="control"))
        if records_out is not None:
            records_out["molding-symmetric"] = rec
    return table


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def export_run(record: RunRecord, out_dir) -> list:
    """Write the run CSV plus plot-data files (tracking, hold spread, power
    commands). Returns the written paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []

    run_path = os.path.join(out_dir, "run.csv")
    record.to_csv(run_path)
    paths.append(run_path)

    track_path = os.path.join(out_dir, "plot_tracking.csv")
    with open(track_path, "w") as fh:
        fh.write("time_s,ref_C,y_mean_C,y_min_C,y_max_C\n")
        for k in range(record.n_steps):
            y = record.y[k]
            fh.write(",".join(repr(float(v)) for v in
                              (record.time[k], record.ref[k],
                               np.mean(y), np.min(y), np.max(y))) + "\n")
    paths.append(track_path)

    spread_path = os.path.join(out_dir, "plot_hold_spread.csv")
    ref_final = record.ref[-1] if record.n_steps else 0.0
    hold = record.ref == ref_final
    with open(spread_path, "w") as fh:
        fh.write("time_s," + ",".join(f"y{i+1}_C" for i in range(6)) + ","
                 + ",".join(f"aux{i+1}_C" for i in range(8)) + "\n")
        for k in np.nonzero(hold)[0]:
            fh.write(",".join(repr(float(v)) for v in
                              (record.time[k], *record.y[k], *record.aux[k])) + "\n")
    paths.append(spread_path)

    power_path = os.path.join(out_dir, "plot_powers.csv")
    with open(power_path, "w") as fh:
        fh.write("time_s," + ",".join(f"u{i+1}_W" for i in range(20)) + "\n")
        for k in range(record.n_steps):
            fh.write(",".join(repr(float(v)) for v in
                              (record.time[k], *record.u[k])) + "\n")
    paths.append(power_path)
    return paths


def export(obj, path) -> list:
    """Persist a RunRecord (to a directory) or a ComparisonTable (to a CSV)."""
    if isinstance(obj, RunRecord):
        return export_run(obj, path)
    if isinstance(obj, ComparisonTable):
        obj.to_csv(path)
        return [path]
    raise TypeError(f"cannot export {type(obj).__name__}")
