"""Tests for exact and entropic optimal transport."""

import numpy as np
import pytest

from syndeepc import (CostMatrix, DiscreteDistribution, TransportPlan,
                      cost_matrix, sinkhorn, solve_exact_ot, wasserstein)
from syndeepc.transport import marginal_matrix, save_plan_csv

from oracles import ot_network_simplex, ot_vertex_enumeration


def fixed_sinkhorn_instance():
    """A 5x4 instance whose optimal support is a fixed staircase: the cost
    is a separable base (which every plan pays identically) plus a penalty
    off the staircase, so the optimum is unique and well-conditioned."""
    alpha = np.full(5, 0.2)
    beta = np.full(4, 0.25)
    a = np.array([554.791, 487.776, 571.72, 539.474, 418.835])
    b = np.array([595.124, 552.228, 557.213, 425.623])
    support = np.zeros((5, 4), dtype=bool)
    for i, j in [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3)]:
        support[i, j] = True
    D = a[:, None] + b[None, :] + 18.0 * (~support)
    return alpha, beta, D


def test_cost_matrix_norms():
    X = np.array([[0.0, 3.0], [0.0, 4.0]])
    Y = np.array([[0.0], [0.0]])
    assert cost_matrix(X, Y, "one").D[1, 0] == pytest.approx(7.0)
    assert cost_matrix(X, Y, "two").D[1, 0] == pytest.approx(5.0)
    assert cost_matrix(X, Y, "inf").D[1, 0] == pytest.approx(4.0)
    with pytest.raises(ValueError):
        cost_matrix(X, Y, "zero")


def test_marginal_matrix_shape_and_action():
    A = marginal_matrix(3, 4)
    T = np.arange(12.0).reshape(3, 4)
    out = A @ T.reshape(-1)
    assert np.allclose(out[:3], T.sum(axis=1))
    assert np.allclose(out[3:], T.sum(axis=0))


def test_exact_ot_marginals_and_identity():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(3, 5))
    P = DiscreteDistribution.uniform(X)
    # transporting a distribution to itself costs nothing
    assert wasserstein(P, P) == pytest.approx(0.0, abs=1e-10)
    Y = rng.normal(size=(3, 4))
    D = cost_matrix(X, Y)
    plan = solve_exact_ot(P.weights, np.full(4, 0.25), D)
    assert plan.status == "optimal"
    assert plan.marginal_violation(P.weights, np.full(4, 0.25)) <= 1e-8


def test_exact_ot_matches_vertex_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(10):
        N, M = rng.integers(2, 5, size=2)
        alpha = rng.integers(1, 9, size=N).astype(float)
        alpha /= alpha.sum()
        beta = rng.integers(1, 9, size=M).astype(float)
        beta /= beta.sum()
        D = rng.uniform(0.0, 10.0, size=(N, M))
        plan = solve_exact_ot(alpha, beta, D)
        assert plan.cost == pytest.approx(ot_vertex_enumeration(alpha, beta, D),
                                          abs=1e-8)


def test_exact_ot_matches_network_simplex_integers():
    """Integer-valued instance solved exactly by network simplex."""
    rng = np.random.default_rng(2)
    for _ in range(5):
        N, M = rng.integers(2, 7, size=2)
        ai = rng.integers(1, 10, size=N)
        bi = rng.integers(1, 10, size=M)
        # balance the marginals
        total = np.lcm(ai.sum(), bi.sum())
        ai = ai * (total // ai.sum())
        bi = bi * (total // bi.sum())
        ai[-1] += total - ai.sum()
        bi[-1] += total - bi.sum()
        Di = rng.integers(0, 50, size=(N, M))
        plan = solve_exact_ot(ai / total, bi / total, Di.astype(float))
        oracle = ot_network_simplex(ai, bi, Di) / total
        assert plan.cost == pytest.approx(oracle, abs=1e-9)


def test_wasserstein_symmetry_and_triangle():
    rng = np.random.default_rng(3)
    P = DiscreteDistribution.uniform(rng.normal(size=(4, 3)))
    Q = DiscreteDistribution.uniform(rng.normal(size=(4, 5)))
    S = DiscreteDistribution.uniform(rng.normal(size=(4, 4)))
    dpq = wasserstein(P, Q)
    assert dpq == pytest.approx(wasserstein(Q, P), abs=1e-9)
    assert dpq <= wasserstein(P, S) + wasserstein(S, Q) + 1e-9


def test_simplex_validation():
    with pytest.raises(ValueError):
        solve_exact_ot([0.5, 0.6], [0.5, 0.5], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        DiscreteDistribution(np.zeros((2, 2)), [0.7, 0.7])


def test_sinkhorn_small_gamma_near_exact():
    alpha, beta, D = fixed_sinkhorn_instance()
    exact = solve_exact_ot(alpha, beta, D).cost
    gamma = 1e-3 * float(D.max())
    plan = sinkhorn(alpha, beta, D, gamma=gamma)
    assert plan.status == "optimal"
    assert abs(plan.cost - exact) <= 1e-3
    assert plan.marginal_violation(alpha, beta) <= 1e-8


def test_sinkhorn_large_gamma_independent_coupling():
    alpha, beta, D = fixed_sinkhorn_instance()
    plan = sinkhorn(alpha, beta, D, gamma=1e6 * float(D.max()))
    independent = np.outer(alpha, beta)
    assert np.abs(plan.T - independent).max() <= 1e-6


def test_sinkhorn_log_domain_agrees_with_scaling():
    """Same plan from the two numerical regimes on a moderate instance."""
    rng = np.random.default_rng(4)
    alpha = np.full(4, 0.25)
    beta = np.full(3, 1.0 / 3.0)
    D = rng.uniform(0.0, 1.0, size=(4, 3))
    gamma_direct = float(D.max()) / 20.0   # kernel representable
    gamma_log = float(D.max()) / 40.0      # forces the log-domain branch
    p1 = sinkhorn(alpha, beta, D, gamma=gamma_direct)
    p2 = sinkhorn(alpha, beta, D, gamma=gamma_log)
    assert p1.status == p2.status == "optimal"
    # both regularized costs sit between the exact optimum and the
    # independent coupling, with the smaller gamma closer to exact
    exact = solve_exact_ot(alpha, beta, D).cost
    assert exact - 1e-9 <= p2.cost <= p1.cost + 1e-6


def test_sinkhorn_rejects_bad_gamma():
    with pytest.raises(ValueError):
        sinkhorn([1.0], [1.0], np.zeros((1, 1)), gamma=0.0)


def test_save_plan_csv(tmp_path):
    plan = TransportPlan(T=np.eye(2) / 2.0, cost=0.0)
    path = tmp_path / "plan.csv"
    save_plan_csv(plan, path)
    assert path.read_text().startswith("# cost")
