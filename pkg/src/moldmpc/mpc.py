"""Predictive controller: increment-form state space, prediction matrices,
Hildreth QP solver and symmetric-actuation reduction.

The controller works on power increments dU = U[t] - U[t-1]. The augmented
model is lifted to the extended state [dx; y], predictions over the horizon
are Y = F x_e + G dU, and the tracking cost

    J = (Ref - Y)' Qbar (Ref - Y) + dU' Rbar dU

is minimized subject to 0 <= U[t-1] + cumulative dU <= U_max at every
horizon step. Active constraints are handled by Hildreth's dual coordinate
ascent; mirrored-heater equality constraints are imposed by variable
elimination, which keeps the QP inequality-only and the pairing exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

# heater pairs (1-based ids) mirrored about the mold center line
SYMMETRY_PAIRS = ((1, 8), (2, 7), (3, 6), (4, 5),
                  (9, 16), (10, 15), (11, 14), (12, 13),
                  (17, 18), (19, 20))


@dataclass
class ExtendedSS:
    """Increment-form model: x_e[t+1] = A_e x_e[t] + B_e dU[t], y = C_e x_e."""

    A_e: np.ndarray
    B_e: np.ndarray
    C_e: np.ndarray
    n_m: int
    m: int
    n_inputs: int

    @property
    def n_e(self) -> int:
        return self.A_e.shape[0]


@dataclass
class PredictionMatrices:
    F: np.ndarray  # (m*Np, n_e)
    G: np.ndarray  # (m*Np, n_inputs*Np), block lower triangular
    Np: int
    m: int
    n_inputs: int


@dataclass
class MpcConfig:
    """Controller tuning. Q weighs tracking error (scalar or per-output),
    R weighs power increments; symmetry_pairs are 1-based heater ids."""

    Np: int = 6
    Q: float = 1.0
    R: float = 0.01
    u_min: np.ndarray = None
    u_max: np.ndarray = None
    symmetry_pairs: tuple = ()
    extended_domain: bool = False
    virtual_weight: float = None  # defaults to Q
    hildreth_tol: float = 1e-8
    hildreth_max_iter: int = 500

    def __post_init__(self):
        if self.Np < 1:
            raise ValueError("horizon must be at least 1")
        if np.any(np.asarray(self.R) <= 0):
            raise ValueError("R must be positive")
        if np.any(np.asarray(self.Q) < 0):
            raise ValueError("Q must be non-negative")


@dataclass
class ControlCommand:
    u: np.ndarray
    delta_u_horizon: np.ndarray
    cost_value: float
    hildreth_iterations: int
    active_constraints: np.ndarray
    converged: bool = True


@dataclass
class QpProblem:
    """min 0.5 x'Hx + f'x  subject to  M x <= gamma."""

    H: np.ndarray
    f: np.ndarray
    M: np.ndarray
    gamma: np.ndarray


@dataclass
class HildrethResult:
    x: np.ndarray
    lam: np.ndarray
    iterations: int
    converged: bool
    feasible: bool
    dual_trace: list = None


def build_extended_ss(model) -> ExtendedSS:
    """Lift an augmented model into the increment form.

    A_e = [[A_m, 0], [C_m A_m, I]], B_e = [[B_m], [C_m B_m]], C_e = [0, I].
    """
    n_m, m = model.A_m.shape[0], model.C_m.shape[0]
    A_e = np.block([[model.A_m, np.zeros((n_m, m))],
                    [model.C_m @ model.A_m, np.eye(m)]])
    B_e = np.vstack([model.B_m, model.C_m @ model.B_m])
    C_e = np.hstack([np.zeros((m, n_m)), np.eye(m)])
    return ExtendedSS(A_e=A_e, B_e=B_e, C_e=C_e, n_m=n_m, m=m,
                      n_inputs=model.B_m.shape[1])


def build_prediction(ss: ExtendedSS, Np: int) -> PredictionMatrices:
    """Stack the horizon response: row block i of F is C_e A_e^(i+1) and the
    sub-diagonal blocks of G are the impulse responses C_e A_e^k B_e."""
    if Np < 1:
        raise ValueError("horizon must be at least 1")
    m, nu = ss.m, ss.n_inputs
    F = np.zeros((m * Np, ss.n_e))
    G = np.zeros((m * Np, nu * Np))
    CA = ss.C_e.copy()
    impulses = []
    for i in range(Np):
        impulses.append(CA @ ss.B_e)
        CA = CA @ ss.A_e
        F[i * m:(i + 1) * m] = CA
    for i in range(Np):
        for j in range(i + 1):
            G[i * m:(i + 1) * m, j * nu:(j + 1) * nu] = impulses[i - j]
    return PredictionMatrices(F=F, G=G, Np=Np, m=m, n_inputs=nu)


def _output_weights(Q, m: int, Np: int) -> np.ndarray:
    q = np.asarray(Q, dtype=float)
    if q.ndim == 0:
        q = np.full(m, float(q))
    return np.tile(q, Np)


def _input_weights(R, nu: int, Np: int) -> np.ndarray:
    r = np.asarray(R, dtype=float)
    if r.ndim == 0:
        r = np.full(nu, float(r))
    return np.tile(r, Np)


def cost(ref, y, delta_u, Q, R, t_nodes=None, ref_nodes=None,
         virtual_weight=None) -> float:
    """Tracking cost; with t_nodes given, the virtual-node quadratic term is
    added (same Q unless virtual_weight overrides)."""
    ref = np.asarray(ref, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    du = np.asarray(delta_u, dtype=float).ravel()
    e = ref - y
    J = float(e @ (np.asarray(Q) * e) if np.ndim(Q) else Q * e @ e)
    J += float(du @ (np.asarray(R) * du) if np.ndim(R) else R * du @ du)
    if t_nodes is not None:
        w = Q if virtual_weight is None else virtual_weight
        rn = ref if ref_nodes is None else np.asarray(ref_nodes, dtype=float).ravel()
        ev = rn - np.asarray(t_nodes, dtype=float).ravel()
        J += float(w * ev @ ev)
    return J


def unconstrained_solution(pred: PredictionMatrices, ref, x_e, Q, R) -> np.ndarray:
    """dU = (G'QG + R)^-1 G'Q (Ref - F x_e)."""
    ref = np.asarray(ref, dtype=float).ravel()
    qw = _output_weights(Q, pred.m, pred.Np)
    rw = _input_weights(R, pred.n_inputs, pred.Np)
    GtQ = pred.G.T * qw
    H = GtQ @ pred.G + np.diag(rw)
    return np.linalg.solve(H, GtQ @ (ref - pred.F @ np.asarray(x_e, dtype=float)))


def hildreth_solve(H, f, M, gamma, tol: float = 1e-8, max_iter: int = 500,
                   keep_trace: bool = False) -> HildrethResult:
    """Solve min 0.5 x'Hx + f'x s.t. M x <= gamma by dual coordinate ascent.

    H must be positive definite. If no constraint is active the
    unconstrained minimizer is returned immediately. On hitting max_iter the
    best iterate is returned with converged=False; feasible reports whether
    the returned point satisfies the constraints to 1e-6.
    """
    H = np.asarray(H, dtype=float)
    f = np.asarray(f, dtype=float).ravel()
    cho = sla.cho_factor(H)
    x_unc = sla.cho_solve(cho, -f)
    if M is None or len(M) == 0:
        return HildrethResult(x=x_unc, lam=np.zeros(0), iterations=0,
                              converged=True, feasible=True)
    M = np.asarray(M, dtype=float)
    gamma = np.asarray(gamma, dtype=float).ravel()
    if np.all(M @ x_unc <= gamma + 1e-9):
        return HildrethResult(x=x_unc, lam=np.zeros(len(gamma)), iterations=0,
                              converged=True, feasible=True)

    Hinv_Mt = sla.cho_solve(cho, M.T)
    P = M @ Hinv_Mt
    K = gamma + M @ sla.cho_solve(cho, f)
    n_con = len(gamma)
    lam = np.zeros(n_con)
    diag = np.diag(P).copy()
    diag[diag <= 0] = 1e-30  # PD H and nonzero rows make this unreachable
    trace = [] if keep_trace else None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        delta = 0.0
        for i in range(n_con):
            w = K[i] + P[i] @ lam - diag[i] * lam[i]
            new = max(0.0, -w / diag[i])
            delta = max(delta, abs(new - lam[i]))
            lam[i] = new
        if keep_trace:
            trace.append(-0.5 * lam @ P @ lam - K @ lam)
        if delta < tol:
            converged = True
            break
    x = x_unc - Hinv_Mt @ lam
    feasible = bool(np.all(M @ x <= gamma + 1e-6))
    return HildrethResult(x=x, lam=lam, iterations=it, converged=converged,
                          feasible=feasible, dual_trace=trace)


def expansion_matrix(pairs, n_inputs: int) -> np.ndarray:
    """Variable-elimination map: paired inputs share one free variable.

    Returns E (n_inputs x n_free) with one or two unit entries per column;
    unpaired inputs keep their own column. Pairs are 1-based ids."""
    seen = set()
    groups = []
    for (i, j) in pairs:
        a, b = i - 1, j - 1
        if not (0 <= a < n_inputs and 0 <= b < n_inputs):
            raise ValueError(f"pair ({i},{j}) outside 1..{n_inputs}")
        if a in seen or b in seen or a == b:
            raise ValueError(f"overlapping or degenerate pair ({i},{j})")
        seen.update((a, b))
        groups.append((a, b))
    for k in range(n_inputs):
        if k not in seen:
            groups.append((k,))
    groups.sort(key=lambda g: g[0])
    E = np.zeros((n_inputs, len(groups)))
    for col, members in enumerate(groups):
        for mem in members:
            E[mem, col] = 1.0
    return E


def apply_symmetry(problem: QpProblem, pairs, n_inputs: int,
                   horizon: int) -> tuple:
    """Reduce a horizon QP through the pairing map. Returns the reduced
    problem and the full expansion matrix (block diagonal over the horizon);
    expanding a reduced solution reproduces each pairing exactly."""
    E1 = expansion_matrix(pairs, n_inputs)
    E = np.kron(np.eye(horizon), E1)
    reduced = QpProblem(
        H=E.T @ problem.H @ E,
        f=E.T @ problem.f,
        M=None if problem.M is None else problem.M @ E,
        gamma=problem.gamma,
    )
    return reduced, E


class MpcController:
    """Receding-horizon controller for one augmented model.

    Holds the previous absolute command between calls; everything else is
    recomputed from the state estimate each period.
    """

    def __init__(self, model, cfg: MpcConfig, n_measured: int | None = None):
        self.model = model
        self.cfg = cfg
        self.ext = build_extended_ss(model)
        self.pred = build_prediction(self.ext, cfg.Np)
        m, nu, Np = self.ext.m, self.ext.n_inputs, cfg.Np

        n_meas = m if n_measured is None else n_measured
        q_out = np.full(m, float(cfg.Q))
        if m > n_meas:
            q_out[n_meas:] = cfg.Q if cfg.virtual_weight is None else cfg.virtual_weight
        self.q_bar = np.tile(q_out, Np)
        self.r_bar = _input_weights(cfg.R, nu, Np)

        GtQ = self.pred.G.T * self.q_bar
        self.GtQ = GtQ
        self.E_hess = GtQ @ self.pred.G + np.diag(self.r_bar)

        # cumulative-sum map from increments to absolute power changes
        self.S = np.kron(np.tril(np.ones((Np, Np))), np.eye(nu))
        self.M = np.vstack([-self.S, self.S])

        self.u_min = (np.zeros(nu) if cfg.u_min is None
                      else np.asarray(cfg.u_min, dtype=float))
        if cfg.u_max is None:
            raise ValueError("u_max is required")
        self.u_max = np.asarray(cfg.u_max, dtype=float)
        if np.any(self.u_min > self.u_max):
            raise ValueError("u_min must not exceed u_max")

        if cfg.symmetry_pairs:
            self.expand = np.kron(np.eye(Np), expansion_matrix(cfg.symmetry_pairs, nu))
        else:
            self.expand = None

        self.u_prev = np.zeros(nu)
        self.n_inputs = nu

    def build_reference(self, ref_window) -> np.ndarray:
        """Stack a per-step reference (length Np) over all outputs."""
        ref = np.asarray(ref_window, dtype=float)
        if ref.ndim == 1 and len(ref) == self.cfg.Np:
            return np.repeat(ref, self.ext.m)
        return ref.ravel()

    def compute_command(self, x_hat, x_hat_prev, ref_window) -> ControlCommand:
        """Solve the constrained horizon problem and return the first move
        as absolute powers (receding horizon)."""
        x_e = np.concatenate([np.asarray(x_hat) - np.asarray(x_hat_prev),
                              self.model.C_m @ np.asarray(x_hat)])
        ref = self.build_reference(ref_window)
        g_lin = self.GtQ @ (ref - self.pred.F @ x_e)
        H = 2.0 * self.E_hess
        f = -2.0 * g_lin
        gamma = np.concatenate([np.tile(self.u_prev - self.u_min, self.cfg.Np),
                                np.tile(self.u_max - self.u_prev, self.cfg.Np)])
        problem = QpProblem(H=H, f=f, M=self.M, gamma=gamma)
        if self.expand is not None:
            reduced, E = apply_symmetry(problem, self.cfg.symmetry_pairs,
                                        self.n_inputs, self.cfg.Np)
            res = hildreth_solve(reduced.H, reduced.f, reduced.M, reduced.gamma,
                                 tol=self.cfg.hildreth_tol,
                                 max_iter=self.cfg.hildreth_max_iter)
            du = E @ res.x
        else:
            res = hildreth_solve(problem.H, problem.f, problem.M, problem.gamma,
                                 tol=self.cfg.hildreth_tol,
                                 max_iter=self.cfg.hildreth_max_iter)
            du = res.x

        u_new = np.clip(self.u_prev + du[:self.n_inputs], self.u_min, self.u_max)
        err = ref - self.pred.F @ x_e - self.pred.G @ du
        J = float(err @ (self.q_bar * err) + du @ (self.r_bar * du))
        slack = problem.gamma - problem.M @ du
        active = np.nonzero(slack <= 1e-6)[0]
        self.u_prev = u_new.copy()
        return ControlCommand(u=u_new, delta_u_horizon=du, cost_value=J,
                              hildreth_iterations=res.iterations,
                              active_constraints=active, converged=res.converged)

    def reset(self, u_initial=None):
        self.u_prev = (np.zeros(self.n_inputs) if u_initial is None
                       else np.asarray(u_initial, dtype=float).copy())
