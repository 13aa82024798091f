import numpy as np
import pytest

from moldmpc import harness as H
from moldmpc import plant as P


@pytest.fixture(scope="session")
def default_cfg():
    return P.default_plant_config()


@pytest.fixture(scope="session")
def id_settings():
    return H.IdSettings()


@pytest.fixture(scope="session")
def id_dataset(default_cfg, id_settings):
    return H.excitation_dataset(default_cfg, id_settings)


@pytest.fixture(scope="session")
def roms(default_cfg, id_settings, id_dataset):
    return H.identify_roms(default_cfg, id_settings, data=id_dataset)


@pytest.fixture(scope="session")
def rom6(roms):
    return roms[0]


@pytest.fixture(scope="session")
def rom14(roms):
    return roms[1]


def small_plant_config(**overrides):
    """4x3x2-per-block mold (72 cells): fast enough for unit tests."""
    heaters = (
        P.HeaterSpec(1, ((1, 1, 3),), 500.0),
        P.HeaterSpec(2, ((2, 1, 3),), 500.0),
        P.HeaterSpec(3, ((1, 1, 0),), 500.0),
        P.HeaterSpec(4, ((2, 1, 0),), 500.0),
    )
    sensors = P.SensorLayout(control=((1, 1, 2), (2, 1, 1)),
                             auxiliary=((0, 0, 2), (3, 2, 1)))
    kwargs = dict(nx=4, ny=3, nz_block=2, block_size_m=(0.2, 0.15, 0.02),
                  heaters=heaters, sensors=sensors)
    kwargs.update(overrides)
    return P.PlantConfig(**kwargs)


@pytest.fixture
def small_cfg():
    return small_plant_config()


def lumped_config(volume_m3=0.01, max_power=500.0):
    """Single-cell adiabatic-capable block."""
    return P.PlantConfig(
        nx=1, ny=1, nz_block=1, single_block=True,
        block_size_m=(0.2, 0.25, volume_m3 / (0.2 * 0.25)),
        convection_mode="constant", constant_h=0.0,
        heaters=(P.HeaterSpec(1, ((0, 0, 0),), max_power),),
        sensors=P.SensorLayout(control=((0, 0, 0),), auxiliary=()),
    )


@pytest.fixture(scope="session")
def comparison(default_cfg, roms):
    """Timed full controller comparison (3 empty-mold variants + molding),
    shared by the harness and acceptance tests.

    Returns (table, records dict, wall-clock seconds).
    """
    import time

    records = {}
    t0 = time.perf_counter()
    table = H.compare_controllers(default_cfg, roms, seed=0,
                                  records_out=records)
    elapsed = time.perf_counter() - t0
    return table, records, elapsed


@pytest.fixture(scope="session")
def closed_loop_runs(comparison):
    _, records, _ = comparison
    return records
