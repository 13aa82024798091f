"""Hildreth QP solver against an independent bounded-least-squares oracle."""

import time

import numpy as np
import pytest
import scipy.linalg
import scipy.optimize

from moldmpc import mpc as M


def active_set_oracle(H, f, lo, hi):
    """Box QP solved as bounded least squares through a Cholesky transform:
    min 0.5 x'Hx + f'x = min 0.5 || L' x + L^-1 f ||^2 with H = L L'.
    BVLS is an active-set method, fully independent of the dual ascent."""
    L = np.linalg.cholesky(H)
    rhs = -scipy.linalg.solve_triangular(L, f, lower=True)
    res = scipy.optimize.lsq_linear(L.T, rhs, bounds=(lo, hi), method="bvls",
                                    tol=1e-14)
    return res.x


def box_to_inequalities(lo, hi):
    n = len(lo)
    Mc = np.vstack([-np.eye(n), np.eye(n)])
    gamma = np.concatenate([-lo, hi])
    return Mc, gamma


def random_box_qp(rng, n):
    A = rng.uniform(-1, 1, (n, n))
    H = A @ A.T + (0.5 + n * 0.05) * np.eye(n)
    f = rng.uniform(-5, 5, n)
    lo = rng.uniform(-2, -0.1, n)
    hi = rng.uniform(0.1, 2, n)
    return H, f, lo, hi


def test_scalar_clip():
    res = M.hildreth_solve(np.array([[2.0]]), np.array([-4.0]),
                           np.array([[1.0]]), np.array([1.0]))
    assert res.x[0] == pytest.approx(1.0, abs=1e-9)
    assert res.converged and res.feasible


def test_interior_optimum_returns_unconstrained():
    rng = np.random.default_rng(0)
    n = 6
    H, f, _, _ = random_box_qp(rng, n)
    x_unc = np.linalg.solve(H, -f)
    lo = x_unc - 10.0
    hi = x_unc + 10.0
    Mc, gamma = box_to_inequalities(lo, hi)
    res = M.hildreth_solve(H, f, Mc, gamma)
    np.testing.assert_allclose(res.x, x_unc, atol=1e-9)
    assert res.iterations == 0


def test_matches_oracle_on_200_random_qps():
    rng = np.random.default_rng(42)
    t0 = time.time()
    worst = 0.0
    for k in range(200):
        n = int(rng.integers(2, 31))
        H, f, lo, hi = random_box_qp(rng, n)
        Mc, gamma = box_to_inequalities(lo, hi)
        res = M.hildreth_solve(H, f, Mc, gamma, tol=1e-10, max_iter=3000)
        x_ref = active_set_oracle(H, f, lo, hi)
        worst = max(worst, float(np.linalg.norm(res.x - x_ref)))
        assert np.all(Mc @ res.x <= gamma + 1e-6)
    elapsed = time.time() - t0
    assert worst < 1e-6, f"worst solution-norm gap {worst:.2e}"
    assert elapsed < 10.0


def test_kkt_conditions_at_solution():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 15))
        H, f, lo, hi = random_box_qp(rng, n)
        Mc, gamma = box_to_inequalities(lo, hi)
        res = M.hildreth_solve(H, f, Mc, gamma, tol=1e-12, max_iter=5000)
        grad = H @ res.x + f
        # stationarity of the Lagrangian and dual feasibility
        assert np.linalg.norm(grad + Mc.T @ res.lam) < 1e-5
        assert np.all(res.lam >= 0.0)
        # complementary slackness
        slack = gamma - Mc @ res.x
        assert np.max(np.abs(res.lam * slack)) < 1e-5


def test_dual_objective_monotone():
    rng = np.random.default_rng(8)
    H, f, lo, hi = random_box_qp(rng, 12)
    Mc, gamma = box_to_inequalities(lo, hi)
    res = M.hildreth_solve(H, f, Mc, gamma, keep_trace=True)
    trace = np.array(res.dual_trace)
    assert len(trace) >= 1
    assert np.all(np.diff(trace) >= -1e-10)


def test_infeasible_set_flagged():
    # x <= -1 and -x <= -2  (i.e. x >= 2): empty feasible set
    H = np.array([[2.0]])
    f = np.array([0.0])
    Mc = np.array([[1.0], [-1.0]])
    gamma = np.array([-1.0, -2.0])
    res = M.hildreth_solve(H, f, Mc, gamma, max_iter=100)
    assert not res.feasible
    assert not res.converged


def test_max_iter_returns_best_iterate_with_flag():
    rng = np.random.default_rng(9)
    H, f, lo, hi = random_box_qp(rng, 10)
    Mc, gamma = box_to_inequalities(lo, hi)
    full = M.hildreth_solve(H, f, Mc, gamma, tol=1e-12, max_iter=5000)
    truncated = M.hildreth_solve(H, f, Mc, gamma, tol=1e-12, max_iter=2)
    if not truncated.converged:
        assert truncated.iterations == 2
        # iterate is returned and is in the ballpark of the optimum
        assert np.linalg.norm(truncated.x - full.x) < 1.0


def test_no_constraints_equals_unconstrained():
    rng = np.random.default_rng(10)
    H, f, _, _ = random_box_qp(rng, 5)
    res = M.hildreth_solve(H, f, None, None)
    np.testing.assert_allclose(res.x, np.linalg.solve(H, -f), atol=1e-12)
