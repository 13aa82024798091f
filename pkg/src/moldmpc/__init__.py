"""Closed-loop thermal MPC toolkit for a two-block heated mold.

Pipeline: a nonlinear finite-volume plant generates identification data and
serves as the closed-loop truth; a multivariable ARX model is fit on
constant-convection data; a Kalman perturbation observer absorbs the
convection mismatch; and an increment-form MPC with Hildreth's QP solver
commands the 20 heaters (standard, extended-domain and symmetric-actuation
variants).
"""

from .dataset import IoDataset
from .harness import (ComparisonTable, IndicatorReport, ReferenceProfile,
                      RunRecord, compare_controllers, identify_roms, indicators,
                      run_closed_loop)
from .mpc import (ControlCommand, MpcConfig, MpcController, build_extended_ss,
                  build_prediction, hildreth_solve, unconstrained_solution)
from .observer import (KalmanConfig, KalmanObserver, ObserverState,
                       VirtualNodeEstimator, estimate_virtual_nodes)
from .plant import (ConvectionFit, CuringModel, MaterialProps, PlantConfig,
                    PlantModel, PlantState, build_plant, convection_h,
                    curing_rate, default_plant_config, read_sensors,
                    run_open_loop, step)
from .sysid import (ArxModel, AugmentedModel, StateSpaceModel,
                    arx_to_statespace, augment_with_perturbations, fit_arx,
                    validate_rom)

__version__ = "0.1.0"
