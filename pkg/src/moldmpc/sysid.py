"""ARX identification and state-space assembly.

The reduced-order model is a multivariable ARX recursion

    y[t+1] = sum_{i<r} a_i y[t-i] + sum_{i<=s} b_i u[t-i]

fit by ordinary least squares on deviations from a baseline operating point
(ambient temperature, zero power). `arx_to_statespace` rewrites it as
x[t+1] = A x[t] + B u[t], y = C x with the stacked-history state, and
`augment_with_perturbations` appends random-walk disturbance states that
absorb plant/model mismatch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import observer as _observer
from .dataset import IoDataset
from .plant import PlantModel, run_open_loop

MODEL_FORMAT = "moldmpc-arx"
MODEL_VERSION = 1


class IdentificationError(RuntimeError):
    """Raised when the regression problem is rank deficient."""


@dataclass
class ArxModel:
    r: int
    s: int
    m: int
    n_inputs: int
    a: list                # r matrices, each (m, m)
    b: list                # s+1 matrices, each (m, n_inputs)
    baseline_temp: float = 0.0
    baseline_power: float = 0.0
    residual_rms: np.ndarray = None

    def regressor_labels(self) -> list:
        labels = []
        for i in range(self.r):
            labels += [f"y{c + 1}[t-{i}]" for c in range(self.m)]
        for i in range(self.s + 1):
            labels += [f"u{c + 1}[t-{i}]" for c in range(self.n_inputs)]
        return labels

    def simulate(self, U_dev: np.ndarray, Y_init_dev: np.ndarray) -> np.ndarray:
        """Free-run the recursion over deviation inputs U_dev (T, n_inputs).

        Y_init_dev supplies the first max(r, s+1) output rows; the remaining
        rows are predicted by the model itself.
        """
        T = U_dev.shape[0]
        t0 = max(self.r, self.s + 1)
        Y = np.zeros((T, self.m))
        Y[:t0] = Y_init_dev[:t0]
        for t in range(t0 - 1, T - 1):
            acc = np.zeros(self.m)
            for i in range(self.r):
                acc += self.a[i] @ Y[t - i]
            for i in range(self.s + 1):
                acc += self.b[i] @ U_dev[t - i]
            Y[t + 1] = acc
        return Y

    def spectral_radius(self) -> float:
        """Spectral radius of the output-companion dynamics."""
        m, r = self.m, self.r
        comp = np.zeros((m * r, m * r))
        for i in range(r):
            comp[:m, i * m:(i + 1) * m] = self.a[i]
        if r > 1:
            comp[m:, :-m] = np.eye(m * (r - 1))
        return float(np.max(np.abs(np.linalg.eigvals(comp))))

    def save(self, path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "r": self.r, "s": self.s, "m": self.m, "n_inputs": self.n_inputs,
            "baseline_temp": self.baseline_temp,
            "baseline_power": self.baseline_power,
            "a": [np.asarray(ai).tolist() for ai in self.a],
            "b": [np.asarray(bi).tolist() for bi in self.b],
            "residual_rms": (None if self.residual_rms is None
                             else np.asarray(self.residual_rms).tolist()),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1)

    @classmethod
    def load(cls, path) -> "ArxModel":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
        if payload.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported version {payload.get('version')}")
        return cls(
            r=payload["r"], s=payload["s"], m=payload["m"],
            n_inputs=payload["n_inputs"],
            a=[np.array(ai) for ai in payload["a"]],
            b=[np.array(bi) for bi in payload["b"]],
            baseline_temp=payload["baseline_temp"],
            baseline_power=payload["baseline_power"],
            residual_rms=(None if payload["residual_rms"] is None
                          else np.array(payload["residual_rms"])),
        )


@dataclass
class StateSpaceModel:
    """x[t+1] = A x[t] + B u[t], y[t] = C x[t] with state layout
    [y[t]; y[t-1]; ...; u[t-1]; ...; u[t-s]]."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    r: int
    s: int
    m: int
    n_inputs: int

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def state_from_history(self, Y_recent: np.ndarray, U_recent: np.ndarray) -> np.ndarray:
        """Stack a state from histories ordered newest first:
        Y_recent (r, m) and U_recent (s, n_inputs)."""
        parts = [np.asarray(Y_recent[i]) for i in range(self.r)]
        parts += [np.asarray(U_recent[i]) for i in range(self.s)]
        return np.concatenate(parts) if parts else np.zeros(0)


@dataclass
class AugmentedModel:
    """Disturbance-augmented model: state [x; p] with random-walk p.

    A_m = [[A, B_p], [0, I]],  B_m = [[B], [0]],  C_m = [C, 0].
    """

    A_m: np.ndarray
    B_m: np.ndarray
    C_m: np.ndarray
    B_p: np.ndarray
    n: int
    m: int
    p: int
    n_inputs: int

    @property
    def n_m(self) -> int:
        return self.n + self.p


def fit_arx(data: IoDataset, r: int, s: int, baseline_temp: float = 0.0,
            baseline_power: float = 0.0) -> ArxModel:
    """Least-squares ARX fit on deviation data.

    Parameters
    ----------
    data : IoDataset
        Sampled inputs/outputs; outputs in degrees C, inputs in W.
    r, s : int
        Output and input regression orders (r >= 1, s >= 0).
    baseline_temp, baseline_power : float
        Operating point subtracted before fitting.

    Returns an ArxModel with per-output residual RMS. Raises
    IdentificationError when the regressor matrix is rank deficient,
    naming the deficient regressor channels.
    """
    if r < 1 or s < 0:
        raise ValueError("need r >= 1 and s >= 0")
    Yd = data.Y - baseline_temp
    Ud = data.U - baseline_power
    T, m = Yd.shape
    nu = Ud.shape[1]
    t0 = max(r - 1, s)
    n_rows = T - 1 - t0
    d = m * r + nu * (s + 1)
    if n_rows < d:
        raise ValueError(f"dataset too short: {n_rows} regression rows for {d} unknowns")

    Phi = np.zeros((n_rows, d))
    for idx, t in enumerate(range(t0, T - 1)):
        cols = [Yd[t - i] for i in range(r)] + [Ud[t - i] for i in range(s + 1)]
        Phi[idx] = np.concatenate(cols)
    target = Yd[t0 + 1:T]

    coef, _, rank, sv = np.linalg.lstsq(Phi, target, rcond=None)
    if rank < d:
        # name the channels spanning the null space
        _, _, Vt = np.linalg.svd(Phi)
        labels = ArxModel(r, s, m, nu, [], []).regressor_labels()
        bad = set()
        for row in Vt[rank:]:
            bad.update(np.nonzero(np.abs(row) > 1e-8)[0].tolist())
        names = ", ".join(labels[i] for i in sorted(bad))
        raise IdentificationError(f"rank-deficient regressor (rank {rank} < {d}); "
                                  f"deficient channels: {names}")

    theta = coef.T  # (m, d)
    a = [theta[:, i * m:(i + 1) * m].copy() for i in range(r)]
    b = [theta[:, m * r + i * nu: m * r + (i + 1) * nu].copy() for i in range(s + 1)]
    resid = target - Phi @ coef
    return ArxModel(r=r, s=s, m=m, n_inputs=nu, a=a, b=b,
                    baseline_temp=baseline_temp, baseline_power=baseline_power,
                    residual_rms=np.sqrt(np.mean(resid ** 2, axis=0)))


def arx_to_statespace(model: ArxModel) -> StateSpaceModel:
    """Stacked-history state-space form; n = m*r + n_inputs*s."""
    m, r, s, nu = model.m, model.r, model.s, model.n_inputs
    n = m * r + nu * s
    A = np.zeros((n, n))
    B = np.zeros((n, nu))
    C = np.zeros((m, n))
    for i in range(r):
        A[:m, i * m:(i + 1) * m] = model.a[i]
    for i in range(1, s + 1):
        A[:m, m * r + (i - 1) * nu: m * r + i * nu] = model.b[i]
    B[:m] = model.b[0]
    for i in range(r - 1):
        A[m * (i + 1): m * (i + 2), m * i: m * (i + 1)] = np.eye(m)
    if s >= 1:
        B[m * r: m * r + nu] = np.eye(nu)
        for i in range(1, s):
            A[m * r + i * nu: m * r + (i + 1) * nu,
              m * r + (i - 1) * nu: m * r + i * nu] = np.eye(nu)
    C[:, :m] = np.eye(m)
    return StateSpaceModel(A=A, B=B, C=C, r=r, s=s, m=m, n_inputs=nu)


def augment_with_perturbations(ss: StateSpaceModel, p: int | None = None) -> AugmentedModel:
    """Append p random-walk disturbance states (default one per output),
    each feeding the matching output slot of the y[t] block."""
    if p is None:
        p = ss.m
    if not 1 <= p <= ss.m:
        raise ValueError(f"need 1 <= p <= {ss.m}")
    n = ss.n
    B_p = np.zeros((n, p))
    B_p[:p, :p] = np.eye(p)
    A_m = np.block([[ss.A, B_p], [np.zeros((p, n)), np.eye(p)]])
    B_m = np.vstack([ss.B, np.zeros((p, ss.n_inputs))])
    C_m = np.hstack([ss.C, np.zeros((ss.m, p))])
    return AugmentedModel(A_m=A_m, B_m=B_m, C_m=C_m, B_p=B_p,
                          n=n, m=ss.m, p=p, n_inputs=ss.n_inputs)


@dataclass
class RomValidationReport:
    per_sensor_rms_C: np.ndarray
    per_sensor_max_pct: np.ndarray
    rms_C: float
    max_pct: float
    span_C: float
    with_observer: bool

    def __str__(self):
        tag = "with observer" if self.with_observer else "open loop"
        return (f"ROM validation ({tag}): RMS {self.rms_C:.3f} C, "
                f"max {self.max_pct:.2f}% of span {self.span_C:.1f} C")


def validate_rom(rom: ArxModel, plant: PlantModel, schedule: np.ndarray,
                 dt: float, duration: float, sample_period: float = 200.0,
                 observer_cfg=None) -> RomValidationReport:
    """Open-loop ROM prediction error against the nonlinear plant.

    With `observer_cfg` (a KalmanConfig for the augmented form of `rom`),
    the comparison uses one-step-ahead predictions of the perturbation
    observer instead of a free run.
    """
    include_aux = rom.m > 6
    data = run_open_loop(plant, schedule, dt, duration,
                         sample_period=sample_period, include_aux=include_aux)
    Y_true_dev = data.Y - rom.baseline_temp
    U_dev = data.U - rom.baseline_power

    if observer_cfg is None:
        Y_pred = rom.simulate(U_dev, Y_true_dev)
        t0 = max(rom.r, rom.s + 1)
    else:
        aug = augment_with_perturbations(arx_to_statespace(rom))
        obs = _observer.KalmanObserver(aug, observer_cfg)
        T = data.n_samples
        Y_pred = np.zeros_like(Y_true_dev)
        u_prev = np.zeros(rom.n_inputs)
        for t in range(T):
            pred_state = _observer.predict(obs.state, aug, observer_cfg, u_prev)
            Y_pred[t] = aug.C_m @ pred_state.x_hat
            obs.state = _observer.update(pred_state, aug, observer_cfg,
                                         Y_true_dev[t][obs.measured_rows],
                                         measured_rows=obs.measured_rows)
            u_prev = U_dev[t]
        t0 = 1
    err = Y_pred[t0:] - Y_true_dev[t0:]
    span = float(np.ptp(data.Y))
    per_rms = np.sqrt(np.mean(err ** 2, axis=0))
    per_max_pct = 100.0 * np.max(np.abs(err), axis=0) / max(span, 1e-12)
    return RomValidationReport(
        per_sensor_rms_C=per_rms,
        per_sensor_max_pct=per_max_pct,
        rms_C=float(np.sqrt(np.mean(err ** 2))),
        max_pct=float(np.max(per_max_pct)),
        span_C=span,
        with_observer=observer_cfg is not None,
    )
