"""Kalman filtering over the disturbance-augmented model.

The filter estimates the stacked ROM state together with the random-walk
perturbation states that absorb convection mismatch. In the extended-domain
variant the same filter runs on a 14-output model while only the 6 measured
rows enter the update; the remaining rows are the virtual-node estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KalmanConfig:
    """Noise covariances: Cq (process, n_m x n_m), Cs (measurement, q x q)
    and the initial estimate covariance."""

    Cq: np.ndarray
    Cs: np.ndarray
    P0: np.ndarray

    def __post_init__(self):
        for name in ("Cq", "Cs", "P0"):
            mat = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, mat)
            if not np.allclose(mat, mat.T):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.linalg.eigvalsh(mat) < -1e-12):
                raise ValueError(f"{name} must be positive semidefinite")
        if np.min(np.linalg.eigvalsh(self.Cs)) <= 0:
            raise ValueError("Cs must be positive definite")


@dataclass
class ObserverState:
    x_hat: np.ndarray
    P: np.ndarray
    gain_last: np.ndarray = None
    innovation_last: np.ndarray = None


def default_kalman_config(model, cs_std: float = 0.1, cq_state: float = 1e-6,
                          cq_perturbation: float = 1e-2, p0: float = 1.0,
                          n_measured: int | None = None) -> KalmanConfig:
    """Block-diagonal defaults: small noise on the model states, larger noise
    on the perturbation block so it can track drifting mismatch."""
    q = model.m if n_measured is None else n_measured
    cq = np.diag(np.concatenate([np.full(model.n, cq_state),
                                 np.full(model.p, cq_perturbation)]))
    return KalmanConfig(Cq=cq, Cs=cs_std ** 2 * np.eye(q),
                        P0=p0 * np.eye(model.n_m))


def initial_state(model, cfg: KalmanConfig) -> ObserverState:
    return ObserverState(x_hat=np.zeros(model.n_m), P=cfg.P0.copy())


def predict(state: ObserverState, model, cfg: KalmanConfig, u) -> ObserverState:
    """Time update: propagate the estimate through the model with input u."""
    u = np.asarray(u, dtype=float)
    x = model.A_m @ state.x_hat + model.B_m @ u
    P = model.A_m @ state.P @ model.A_m.T + cfg.Cq
    P = 0.5 * (P + P.T)
    return ObserverState(x_hat=x, P=P, gain_last=state.gain_last,
                         innovation_last=state.innovation_last)


def update(state: ObserverState, model, cfg: KalmanConfig, z,
           measured_rows=None) -> ObserverState:
    """Measurement update with readings z over the measured output rows.

    Raises numpy.linalg.LinAlgError when the innovation covariance is
    singular.
    """
    z = np.asarray(z, dtype=float)
    C = model.C_m if measured_rows is None else model.C_m[measured_rows]
    PCt = state.P @ C.T
    S = C @ PCt + cfg.Cs
    K = np.linalg.solve(S, PCt.T).T
    innovation = z - C @ state.x_hat
    x = state.x_hat + K @ innovation
    P = (np.eye(len(x)) - K @ C) @ state.P
    P = 0.5 * (P + P.T)
    return ObserverState(x_hat=x, P=P, gain_last=K, innovation_last=innovation)


class KalmanObserver:
    """Sequential predict/update wrapper holding the filter state."""

    def __init__(self, model, cfg: KalmanConfig, measured_rows=None):
        self.model = model
        self.cfg = cfg
        self.measured_rows = (np.arange(model.m) if measured_rows is None
                              else np.asarray(measured_rows, dtype=int))
        if cfg.Cs.shape[0] != len(self.measured_rows):
            raise ValueError("Cs size does not match the measured row count")
        self.state = initial_state(model, cfg)

    def step(self, u_prev, z) -> ObserverState:
        """One predict(u_prev) + update(z) cycle; returns the new state."""
        pred = predict(self.state, self.model, self.cfg, u_prev)
        self.state = update(pred, self.model, self.cfg, z,
                            measured_rows=self.measured_rows)
        return self.state

    @property
    def x_hat(self) -> np.ndarray:
        return self.state.x_hat

    def outputs(self) -> np.ndarray:
        """All model outputs at the current estimate."""
        return self.model.C_m @ self.state.x_hat

    def perturbations(self) -> np.ndarray:
        return self.state.x_hat[self.model.n:]


class VirtualNodeEstimator(KalmanObserver):
    """Observer over an extended (14-output) model that measures only the
    first 6 rows and reports the remaining rows as virtual-node estimates."""

    def __init__(self, model, cfg: KalmanConfig, n_measured: int = 6):
        if model.m <= n_measured:
            raise ValueError("extended model must have unmeasured output rows")
        super().__init__(model, cfg, measured_rows=np.arange(n_measured))
        self.n_measured = n_measured

    def virtual_outputs(self) -> np.ndarray:
        return self.outputs()[self.n_measured:]


def estimate_virtual_nodes(est: VirtualNodeEstimator, u_prev, z) -> np.ndarray:
    """Advance the estimator one cycle and return the virtual-node rows."""
    est.step(u_prev, z)
    return est.virtual_outputs()
