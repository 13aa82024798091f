"""Finite-volume thermal simulator of the two-block heated mold.

The mold is modeled as two stacked steel blocks on a coarse structured grid
(global shape nx x ny x 2*nz_block; z runs bottom to top). The gap between
the blocks is the cavity: conduction across it goes through a thin air (or
resin) layer instead of steel. Exterior faces lose heat through insulation
panels in series with temperature-dependent convection. Cartridge heaters
and belt heaters deposit power over configured cell footprints, and an
optional exothermic curing source acts on the cavity interface.

Time integration is a backward (implicit) first-order step with the
convection coefficients lagged one step, so any dt is stable. The per-step
energy ledger closes exactly against the scheme's own fluxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dataset import IoDataset

GAS_CONSTANT = 8.314  # J/(mol K)
KELVIN_OFFSET = 273.15


class ConfigurationError(ValueError):
    """Raised for inconsistent plant configurations."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaterialProps:
    """Homogeneous isotropic solid: density kg/m3, specific heat J/(kg K),
    conductivity W/(m K). Conductivity must sit inside its declared band."""

    density: float = 7850.0
    specific_heat: float = 520.0
    conductivity: float = 34.0
    conductivity_range: tuple = (33.0, 35.5)

    def __post_init__(self):
        if min(self.density, self.specific_heat, self.conductivity) <= 0:
            raise ConfigurationError("material properties must be strictly positive")
        lo, hi = self.conductivity_range
        if not lo <= self.conductivity <= hi:
            raise ConfigurationError(
                f"conductivity {self.conductivity} outside band [{lo}, {hi}]")

    @property
    def volumetric_heat(self) -> float:
        return self.density * self.specific_heat


@dataclass(frozen=True)
class ConvectionFit:
    """Fitted film coefficient h(dT) in W/(m2 K) with dT in K.

    kind 'power-law':               h = a * max(dT - b, 0)**c
    kind 'saturating-exponential':  h = a * (b - exp(-c * dT))
    kind 'constant':                h = a
    dT is clamped to [dT_min, dT_max] before evaluation and h is floored at
    zero, so the fit is total, continuous and non-negative.
    """

    kind: str
    a: float
    b: float = 0.0
    c: float = 0.0
    dT_min: float = 2.0
    dT_max: float = 157.0

    def __post_init__(self):
        if self.kind not in ("power-law", "saturating-exponential", "constant"):
            raise ConfigurationError(f"unknown convection fit kind {self.kind!r}")
        if self.a < 0:
            raise ConfigurationError("convection coefficient a must be >= 0")
        if self.dT_min > self.dT_max:
            raise ConfigurationError("dT_min must not exceed dT_max")


def convection_h(fit: ConvectionFit, dT) -> np.ndarray | float:
    """Evaluate a convection fit at temperature difference(s) dT (K)."""
    scalar = np.isscalar(dT)
    dTc = np.clip(np.asarray(dT, dtype=float), fit.dT_min, fit.dT_max)
    if fit.kind == "power-law":
        h = fit.a * np.maximum(dTc - fit.b, 0.0) ** fit.c
    elif fit.kind == "saturating-exponential":
        h = fit.a * (fit.b - np.exp(-fit.c * dTc))
    else:
        h = np.full_like(dTc, fit.a)
    h = np.maximum(h, 0.0)
    return float(h) if scalar else h


@dataclass(frozen=True)
class InsulationSpec:
    thickness_m: float
    conductivity: float

    @property
    def resistance(self) -> float:
        """Areal thermal resistance (m2 K)/W of the panel."""
        return self.thickness_m / self.conductivity


@dataclass(frozen=True)
class HeaterSpec:
    """One heater: id 1..20, a set of grid cells it deposits power into, and
    its power limit in W."""

    id: int
    footprint: tuple  # tuple of (i, j, k) global cell indices
    max_power: float

    def __post_init__(self):
        if self.max_power <= 0:
            raise ConfigurationError(f"heater {self.id}: max_power must be positive")
        if len(self.footprint) == 0:
            raise ConfigurationError(f"heater {self.id}: empty footprint")


@dataclass(frozen=True)
class SensorLayout:
    control: tuple    # 6 (i, j, k) cells on the cavity surfaces
    auxiliary: tuple  # 8 (i, j, k) cells on the cavity surfaces

    def all_locations(self) -> tuple:
        return tuple(self.control) + tuple(self.auxiliary)


@dataclass(frozen=True)
class CuringKinetics:
    """Two-rate autocatalytic cure model with Arrhenius temperature
    dependence: da/dt = (k1 + k2 * a**m) * (1 - a)**n, ki = Ai*exp(-Ei/(R*T)).

    Default parameters are synthetic, chosen so the exotherm develops near
    the 180 C process window and a 185 C hold finishes the cure.
    """

    a1: float = 5.0e4
    e1: float = 7.0e4
    a2: float = 5.0e6
    e2: float = 7.5e4
    m: float = 1.0
    n: float = 1.5


@dataclass(frozen=True)
class CuringModel:
    """Resin layer at the cavity interface. resin_columns lists (i, j) cells
    of the cavity footprint; the layer thickness is the cavity gap."""

    enabled: bool = False
    resin_columns: tuple = ()
    kinetics: CuringKinetics = field(default_factory=CuringKinetics)
    total_heat_J_per_kg: float = 3.0e5
    resin_density: float = 1200.0
    resin_conductivity: float = 0.20
    injection_time_s: float = 0.0


def curing_rate(model: CuringModel, alpha, T):
    """Cure rate and volumetric heat release at degree of cure alpha and
    temperature T (K). Returns (da/dt in 1/s, q in W/m3)."""
    alpha_arr = np.asarray(alpha, dtype=float)
    if np.any(alpha_arr < 0.0) or np.any(alpha_arr > 1.0):
        raise ValueError("degree of cure must lie in [0, 1]")
    kin = model.kinetics
    T_arr = np.asarray(T, dtype=float)
    k1 = kin.a1 * np.exp(-kin.e1 / (GAS_CONSTANT * T_arr))
    k2 = kin.a2 * np.exp(-kin.e2 / (GAS_CONSTANT * T_arr))
    rate = (k1 + k2 * alpha_arr ** kin.m) * (1.0 - alpha_arr) ** kin.n
    q = model.resin_density * model.total_heat_J_per_kg * rate
    if np.isscalar(alpha) and np.isscalar(T):
        return float(rate), float(q)
    return rate, q


@dataclass(frozen=True)
class PlantConfig:
    """Full plant description; `default_plant_config` builds the standard
    two-block mold."""

    nx: int = 10
    ny: int = 8
    nz_block: int = 4
    block_size_m: tuple = (0.50, 0.40, 0.04)
    single_block: bool = False
    material: MaterialProps = field(default_factory=MaterialProps)
    insulation_top_bottom: InsulationSpec = InsulationSpec(0.006, 0.53)
    insulation_lateral: InsulationSpec = InsulationSpec(0.007, 0.26)
    conv_upper: ConvectionFit = ConvectionFit("power-law", 4.120, 23.567, 0.317)
    conv_lower: ConvectionFit = ConvectionFit("power-law", 0.942, 22.937, 0.533)
    conv_lateral: ConvectionFit = ConvectionFit("saturating-exponential",
                                                20.160, 0.395, 0.041)
    convection_mode: str = "variable"  # or "constant"
    constant_h: float = 15.0
    cavity_gap_m: float = 0.003
    cavity_fill_conductivity: float = 0.030  # air
    ambient_C: float = 23.0
    heaters: tuple = ()
    sensors: SensorLayout = None
    curing: CuringModel = field(default_factory=CuringModel)
    sensor_noise_std_C: float = 0.0

    @property
    def ambient_K(self) -> float:
        return self.ambient_C + KELVIN_OFFSET

    @property
    def nz_total(self) -> int:
        return self.nz_block if self.single_block else 2 * self.nz_block


@dataclass
class PlantState:
    """Temperatures per cell (K), cure degree per resin column, sim time."""

    temperatures: np.ndarray
    cure_degree: np.ndarray
    sim_time: float = 0.0
    energy_ledger: dict = None  # filled by step(): dE, heater_J, curing_J, convection_J


@dataclass
class PlantModel:
    """Assembled simulator: geometry, conduction matrix, boundary faces,
    heater deposition map and sensor indices."""

    config: PlantConfig
    shape: tuple
    n_cells: int
    cell_volume: float
    heat_capacity: float            # J/K per cell
    K_cond: sp.csr_matrix
    face_cells: np.ndarray          # boundary cell index per exterior face
    face_areas: np.ndarray
    face_group: np.ndarray          # 0 upper, 1 lower, 2 lateral
    face_r_ins: np.ndarray
    heater_map: np.ndarray          # (n_cells, n_heaters) W fraction per cell
    max_powers: np.ndarray
    control_idx: np.ndarray
    aux_idx: np.ndarray
    resin_low_idx: np.ndarray
    resin_up_idx: np.ndarray
    resin_cell_volume: float
    fits: tuple                     # (upper, lower, lateral) effective fits

    # factorization cache for the implicit solve (see _solve_implicit)
    _lu: object = field(default=None, repr=False, compare=False)
    _lu_diag: np.ndarray = field(default=None, repr=False, compare=False)
    _K_csr: sp.csr_matrix = field(default=None, repr=False, compare=False)

    def initial_state(self, temperature_K: float | None = None) -> PlantState:
        T0 = self.config.ambient_K if temperature_K is None else temperature_K
        return PlantState(
            temperatures=np.full(self.n_cells, float(T0)),
            cure_degree=np.zeros(len(self.resin_low_idx)),
            sim_time=0.0,
        )


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _cell_index(cfg: PlantConfig, i: int, j: int, k: int) -> int:
    return i + cfg.nx * (j + cfg.ny * k)


def build_plant(config: PlantConfig) -> PlantModel:
    """Assemble the finite-volume model from a configuration.

    Raises ConfigurationError for overlapping heater footprints or sensors
    outside the grid / off the cavity surfaces.
    """
    nx, ny, nz = config.nx, config.ny, config.nz_total
    if min(nx, ny, nz) < 1:
        raise ConfigurationError("grid must have at least one cell per axis")
    lx, ly, lz_block = config.block_size_m
    dx, dy, dz = lx / nx, ly / ny, lz_block / config.nz_block
    n_cells = nx * ny * nz
    cell_volume = dx * dy * dz
    heat_capacity = config.material.volumetric_heat * cell_volume

    k_steel = config.material.conductivity
    gap = config.cavity_gap_m
    cavity_below = config.nz_block - 1  # z index just below the gap

    curing_active = config.curing.enabled
    if curing_active and config.single_block:
        raise ConfigurationError("curing needs the two-block cavity")
    resin_cols = set(map(tuple, config.curing.resin_columns)) if curing_active else set()

    # conduction links (COO triplets for the stiffness-like matrix)
    rows, cols, vals = [], [], []

    def add_link(c0, c1, g):
        rows.extend((c0, c1, c0, c1))
        cols.extend((c0, c1, c1, c0))
        vals.extend((g, g, -g, -g))

    g_x = k_steel * dy * dz / dx
    g_y = k_steel * dx * dz / dy
    g_z = k_steel * dx * dy / dz
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                c = _cell_index(config, i, j, k)
                if i + 1 < nx:
                    add_link(c, _cell_index(config, i + 1, j, k), g_x)
                if j + 1 < ny:
                    add_link(c, _cell_index(config, i, j + 1, k), g_y)
                if k + 1 < nz:
                    up = _cell_index(config, i, j, k + 1)
                    if not config.single_block and k == cavity_below:
                        # across the cavity: thin fill layer instead of steel
                        k_fill = (config.curing.resin_conductivity
                                  if (i, j) in resin_cols
                                  else config.cavity_fill_conductivity)
                        g = k_fill * dx * dy / gap
                    else:
                        g = g_z
                    add_link(c, up, g)
    K_cond = sp.csr_matrix((vals, (rows, cols)), shape=(n_cells, n_cells))

    # exterior faces: 0 upper (z top), 1 lower (z bottom), 2 lateral
    f_cells, f_areas, f_group, f_rins = [], [], [], []
    r_tb = config.insulation_top_bottom.resistance
    r_lat = config.insulation_lateral.resistance
    area_z, area_x, area_y = dx * dy, dy * dz, dx * dz
    for j in range(ny):
        for i in range(nx):
            f_cells.append(_cell_index(config, i, j, nz - 1))
            f_areas.append(area_z); f_group.append(0); f_rins.append(r_tb)
            f_cells.append(_cell_index(config, i, j, 0))
            f_areas.append(area_z); f_group.append(1); f_rins.append(r_tb)
    x_walls = (0,) if nx == 1 else (0, nx - 1)
    y_walls = (0,) if ny == 1 else (0, ny - 1)
    for k in range(nz):
        for j in range(ny):
            for i in x_walls:
                f_cells.append(_cell_index(config, i, j, k))
                f_areas.append(area_x if nx > 1 else 2 * area_x)
                f_group.append(2); f_rins.append(r_lat)
        for i in range(nx):
            for j in y_walls:
                f_cells.append(_cell_index(config, i, j, k))
                f_areas.append(area_y if ny > 1 else 2 * area_y)
                f_group.append(2); f_rins.append(r_lat)

    # heaters
    heaters = tuple(config.heaters)
    heater_map = np.zeros((n_cells, len(heaters)))
    claimed = {}
    for h_id, heater in enumerate(heaters):
        for (i, j, k) in heater.footprint:
            if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
                raise ConfigurationError(
                    f"heater {heater.id}: cell ({i},{j},{k}) outside grid")
            c = _cell_index(config, i, j, k)
            if c in claimed:
                raise ConfigurationError(
                    f"heaters {claimed[c]} and {heater.id} overlap at cell ({i},{j},{k})")
            claimed[c] = heater.id
            heater_map[c, h_id] = 1.0 / len(heater.footprint)
    max_powers = np.array([h.max_power for h in heaters])

    # sensors
    sensors = config.sensors
    if sensors is None:
        sensors = SensorLayout(control=(), auxiliary=())
    locs = sensors.all_locations()
    if len(set(locs)) != len(locs):
        raise ConfigurationError("sensor locations must be distinct")
    cavity_layers = {config.nz_block - 1, config.nz_block}

    def sensor_cell(loc):
        i, j, k = loc
        if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
            raise ConfigurationError(f"sensor at ({i},{j},{k}) outside grid")
        if not config.single_block and k not in cavity_layers:
            raise ConfigurationError(
                f"sensor at ({i},{j},{k}) not on a cavity surface layer")
        return _cell_index(config, i, j, k)

    control_idx = np.array([sensor_cell(s) for s in sensors.control], dtype=int)
    aux_idx = np.array([sensor_cell(s) for s in sensors.auxiliary], dtype=int)

    # resin columns at the cavity interface
    if curing_active:
        low, up = [], []
        for (i, j) in sorted(resin_cols):
            if not (0 <= i < nx and 0 <= j < ny):
                raise ConfigurationError(f"resin column ({i},{j}) outside grid")
            low.append(_cell_index(config, i, j, cavity_below))
            up.append(_cell_index(config, i, j, cavity_below + 1))
        resin_low = np.array(low, dtype=int)
        resin_up = np.array(up, dtype=int)
    else:
        resin_low = np.zeros(0, dtype=int)
        resin_up = np.zeros(0, dtype=int)

    if config.convection_mode == "constant":
        const = ConvectionFit("constant", config.constant_h)
        fits = (const, const, const)
    elif config.convection_mode == "variable":
        fits = (config.conv_upper, config.conv_lower, config.conv_lateral)
    else:
        raise ConfigurationError(f"unknown convection mode {config.convection_mode!r}")

    return PlantModel(
        config=config, shape=(nx, ny, nz), n_cells=n_cells,
        cell_volume=cell_volume, heat_capacity=heat_capacity,
        K_cond=K_cond,
        face_cells=np.array(f_cells, dtype=int),
        face_areas=np.array(f_areas),
        face_group=np.array(f_group, dtype=int),
        face_r_ins=np.array(f_rins),
        heater_map=heater_map, max_powers=max_powers,
        control_idx=control_idx, aux_idx=aux_idx,
        resin_low_idx=resin_low, resin_up_idx=resin_up,
        resin_cell_volume=dx * dy * gap,
        fits=fits,
    )


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _boundary_conductance(plant: PlantModel, T: np.ndarray) -> np.ndarray:
    """Per-face U*A (W/K): film coefficient lagged at T, in series with the
    insulation panel. U = h / (1 + h*R) stays finite at h = 0."""
    dT = T[plant.face_cells] - plant.config.ambient_K
    ua = np.empty(len(plant.face_cells))
    for group in range(3):
        mask = plant.face_group == group
        if not np.any(mask):
            continue
        h = convection_h(plant.fits[group], dT[mask])
        u = h / (1.0 + h * plant.face_r_ins[mask])
        ua[mask] = u * plant.face_areas[mask]
    return ua


def _advance_cure(plant: PlantModel, state: PlantState, dt: float):
    """Integrate the cure ODE over dt at frozen face temperatures.

    Returns (new alpha, heat source W per cell array, released J).
    Sub-steps keep each alpha increment below ~0.02 for accuracy; alpha is
    clamped to [previous, 1] so it never decreases.
    """
    model = plant.config.curing
    q_cells = np.zeros(plant.n_cells)
    if not model.enabled or len(plant.resin_low_idx) == 0:
        return state.cure_degree, q_cells, 0.0
    if state.sim_time < model.injection_time_s:
        return state.cure_degree, q_cells, 0.0
    T_face = 0.5 * (state.temperatures[plant.resin_low_idx]
                    + state.temperatures[plant.resin_up_idx])
    alpha = state.cure_degree.copy()
    rate, _ = curing_rate(model, alpha, T_face)
    max_rate = float(np.max(rate)) if len(rate) else 0.0
    n_sub = max(1, int(math.ceil(max_rate * dt / 0.02)))
    dt_sub = dt / n_sub
    for _ in range(n_sub):
        rate, _ = curing_rate(model, alpha, T_face)
        alpha = np.minimum(alpha + dt_sub * rate, 1.0)
    d_alpha = alpha - state.cure_degree
    released_J = float(np.sum(d_alpha) * model.resin_density
                       * model.total_heat_J_per_kg * plant.resin_cell_volume)
    q_col = (d_alpha * model.resin_density * model.total_heat_J_per_kg
             * plant.resin_cell_volume / dt)
    np.add.at(q_cells, plant.resin_low_idx, 0.5 * q_col)
    np.add.at(q_cells, plant.resin_up_idx, 0.5 * q_col)
    return alpha, q_cells, released_J


def _solve_implicit(plant: PlantModel, diag: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (K_cond + diag(diag)) T = rhs.

    Only the diagonal changes between steps (convection coefficients drift
    with temperature), so a cached LU of a recent matrix preconditions CG on
    the current one; the factorization is refreshed when the diagonal has
    drifted or CG stalls. The system is SPD: conduction Laplacian plus a
    positive diagonal.
    """
    if plant._K_csr is None:
        plant._K_csr = plant.K_cond.tocsr()

    def refactor():
        A = (plant.K_cond + sp.diags(diag)).tocsc()
        plant._lu = spla.splu(A)
        plant._lu_diag = diag.copy()

    if plant._lu is None or not np.allclose(plant._lu_diag, diag,
                                            rtol=0.05, atol=1e-12):
        refactor()
    if np.array_equal(plant._lu_diag, diag):
        return plant._lu.solve(rhs)
    K = plant._K_csr
    op = spla.LinearOperator((plant.n_cells, plant.n_cells),
                             matvec=lambda x: K @ x + diag * x)
    precond = spla.LinearOperator((plant.n_cells, plant.n_cells),
                                  matvec=plant._lu.solve)
    x, info = spla.cg(op, rhs, rtol=1e-13, atol=0.0, M=precond, maxiter=60)
    if info != 0:
        refactor()
        return plant._lu.solve(rhs)
    return x


def step(plant: PlantModel, state: PlantState, powers, dt: float) -> PlantState:
    """One implicit time step of length dt with heater powers held constant.

    Raises ValueError for dt <= 0 or powers outside [0, max_power].
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (plant.heater_map.shape[1],):
        raise ValueError(f"expected {plant.heater_map.shape[1]} heater powers")
    if np.any(powers < -1e-9) or np.any(powers > plant.max_powers + 1e-9):
        raise ValueError("heater power outside [0, max_power]")

    T_old = state.temperatures
    ua = _boundary_conductance(plant, T_old)
    b_vec = np.zeros(plant.n_cells)
    np.add.at(b_vec, plant.face_cells, ua)

    alpha_new, q_cure, released_J = _advance_cure(plant, state, dt)
    q = plant.heater_map @ powers + q_cure

    m_dt = plant.heat_capacity / dt
    rhs = m_dt * T_old + b_vec * plant.config.ambient_K + q
    T_new = _solve_implicit(plant, m_dt + b_vec, rhs)

    conv_J = float(np.sum(ua * (T_new[plant.face_cells] - plant.config.ambient_K)) * dt)
    ledger = {
        "dE": float(plant.heat_capacity * np.sum(T_new - T_old)),
        "heater_J": float(np.sum(powers) * dt),
        "curing_J": released_J,
        "convection_J": conv_J,
    }
    return PlantState(temperatures=T_new, cure_degree=alpha_new,
                      sim_time=state.sim_time + dt, energy_ledger=ledger)


def read_sensors(plant: PlantModel, state: PlantState, noise_std: float = 0.0,
                 rng: np.random.Generator | None = None):
    """Control and auxiliary sensor temperatures in K, optionally with
    additive zero-mean Gaussian noise."""
    control = state.temperatures[plant.control_idx].copy()
    aux = state.temperatures[plant.aux_idx].copy()
    if noise_std > 0.0:
        if rng is None:
            rng = np.random.default_rng()
        control = control + rng.normal(0.0, noise_std, size=control.shape)
        aux = aux + rng.normal(0.0, noise_std, size=aux.shape)
    return control, aux


def run_open_loop(plant: PlantModel, power_schedule, dt: float, duration: float,
                  sample_period: float = 200.0, include_aux: bool = True,
                  noise_std: float = 0.0, seed: int | None = None,
                  initial_state: PlantState | None = None) -> IoDataset:
    """Simulate a power schedule and record an identification dataset.

    `power_schedule` is either an (n_samples, n_heaters) array (one row per
    sample period, zero-order hold) or a callable t -> powers. Outputs are
    logged in degrees C at the start of each period, together with the power
    applied over that period.
    """
    n_samples = int(round(duration / sample_period))
    n_sub = max(1, int(round(sample_period / dt)))
    dt_eff = sample_period / n_sub
    rng = np.random.default_rng(seed)

    if callable(power_schedule):
        schedule = np.array([power_schedule(k * sample_period) for k in range(n_samples)])
    else:
        schedule = np.asarray(power_schedule, dtype=float)
        if schedule.shape[0] < n_samples:
            raise ValueError("power schedule does not cover the requested duration")

    state = plant.initial_state() if initial_state is None else initial_state
    m = len(plant.control_idx) + (len(plant.aux_idx) if include_aux else 0)
    U = np.zeros((n_samples, plant.heater_map.shape[1]))
    Y = np.zeros((n_samples, m))
    times = np.zeros(n_samples)
    for k in range(n_samples):
        control, aux = read_sensors(plant, state, noise_std=noise_std, rng=rng)
        y = np.concatenate([control, aux]) if include_aux else control
        times[k] = state.sim_time
        U[k] = schedule[k]
        Y[k] = y - KELVIN_OFFSET
        for _ in range(n_sub):
            state = step(plant, state, schedule[k], dt_eff)
    return IoDataset(sample_period, U, Y, time=times)


# ---------------------------------------------------------------------------
# default mold layout
# ---------------------------------------------------------------------------

def _box_cells(xs, ys, zs):
    return tuple((i, j, k)
                 for k in range(zs[0], zs[1] + 1)
                 for j in range(ys[0], ys[1] + 1)
                 for i in range(xs[0], xs[1] + 1))


def _wall_cells(nx, ny, nz, face):
    # x-face belts skip the corner columns, which belong to the y-face belts
    if face == "y_min":
        return tuple((i, 0, k) for k in range(nz) for i in range(nx))
    if face == "y_max":
        return tuple((i, ny - 1, k) for k in range(nz) for i in range(nx))
    if face == "x_min":
        return tuple((0, j, k) for k in range(nz) for j in range(1, ny - 1))
    if face == "x_max":
        return tuple((nx - 1, j, k) for k in range(nz) for j in range(1, ny - 1))
    raise ConfigurationError(f"unknown face {face!r}")


def default_heaters(nx: int = 10, ny: int = 8, nz_total: int = 8) -> tuple:
    """Standard heater set: 16 cartridges (500 W) in two rows of four per
    block, plus two long belts (750 W, y faces) and two short belts
    (550 W, x faces). Footprints are symmetric under the in-plane 180-degree
    rotation (i, j) -> (nx-1-i, ny-1-j), which pairs U1-U8, ..., U19-U20."""
    x_spans = [(1, 2), (3, 4), (5, 6), (7, 8)]
    rows = [(1, 2), (5, 6)]
    specs = []
    hid = 1
    for z in (5, 2):  # upper block cartridges first (U1-U8), then lower (U9-U16)
        for y_span in rows:
            for x_span in x_spans:
                specs.append(HeaterSpec(hid, _box_cells(x_span, y_span, (z, z)), 500.0))
                hid += 1
    specs.append(HeaterSpec(17, _wall_cells(nx, ny, nz_total, "y_min"), 750.0))
    specs.append(HeaterSpec(18, _wall_cells(nx, ny, nz_total, "y_max"), 750.0))
    specs.append(HeaterSpec(19, _wall_cells(nx, ny, nz_total, "x_min"), 550.0))
    specs.append(HeaterSpec(20, _wall_cells(nx, ny, nz_total, "x_max"), 550.0))
    return tuple(specs)


def default_sensors() -> SensorLayout:
    """6 control thermocouples (4 upper cavity surface z=4, 2 lower z=3; the
    lower pair is intentionally off-center) and 8 auxiliary thermocouples on
    rotation-symmetric cavity-surface positions."""
    control = ((2, 2, 4), (7, 2, 4), (2, 5, 4), (7, 5, 4),
               (3, 2, 3), (4, 5, 3))
    auxiliary = ((1, 1, 4), (8, 6, 4), (8, 1, 4), (1, 6, 4),
                 (1, 3, 3), (8, 4, 3), (4, 1, 3), (5, 6, 3))
    return SensorLayout(control=control, auxiliary=auxiliary)


def default_resin_columns(nx: int = 10, ny: int = 8) -> tuple:
    """Cavity footprint of the 400x300 mm panel centered in the 500x400 mm
    cavity: an 8x6 block of columns."""
    return tuple((i, j) for j in range(1, ny - 1) for i in range(1, nx - 1))


def default_plant_config(curing_enabled: bool = False,
                         convection_mode: str = "variable",
                         sensor_noise_std_C: float = 0.05,
                         injection_time_s: float = 4000.0) -> PlantConfig:
    """The standard desk-scale mold (640 cells, 20 heaters, 14 sensors)."""
    curing = CuringModel(
        enabled=curing_enabled,
        resin_columns=default_resin_columns(),
        injection_time_s=injection_time_s,
    )
    return PlantConfig(
        heaters=default_heaters(),
        sensors=default_sensors(),
        curing=curing,
        convection_mode=convection_mode,
        sensor_noise_std_C=sensor_noise_std_C,
    )


def rotation_map(cfg: PlantConfig) -> np.ndarray:
    """Cell permutation of the in-plane 180-degree rotation used by the
    symmetric-actuation pairing."""
    nx, ny, nz = cfg.nx, cfg.ny, cfg.nz_total
    perm = np.empty(nx * ny * nz, dtype=int)
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                perm[_cell_index(cfg, i, j, k)] = _cell_index(cfg, nx - 1 - i,
                                                              ny - 1 - j, k)
    return perm
