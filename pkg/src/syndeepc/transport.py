"""Discrete optimal transport: ground costs, the exact Kantorovich LP over
the transportation polytope, and entropic (Sinkhorn) regularization.

Default ground metric repo-wide is the 1-norm with Wasserstein order p = 1,
so downstream dual norms are inf-norms and every problem stays an LP.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .lp import LinearProgram, LpOptions, solve_lp

MARGINAL_TOL = 1e-8
SIMPLEX_TOL = 1e-12

_NORM_ORDERS = {"one": 1, "two": 2, "inf": np.inf}


@dataclass(frozen=True)
class DiscreteDistribution:
    """Weighted atoms: one atom per column, weights on the simplex."""

    atoms: np.ndarray    # (d, n)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if atoms.shape[1] != weights.size:
            raise ValueError("atom count does not match weight count")
        if np.any(weights < -SIMPLEX_TOL) or abs(weights.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("weights must be nonnegative and sum to 1")

    @staticmethod
    def uniform(atoms) -> "DiscreteDistribution":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        n = atoms.shape[1]
        return DiscreteDistribution(atoms, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class CostMatrix:
    D: np.ndarray
    ground_norm: str = "one"
    p: int = 1


@dataclass
class TransportPlan:
    T: np.ndarray
    cost: float
    status: str = "optimal"
    iterations: int = 0

    def marginal_violation(self, alpha, beta) -> float:
        r = np.abs(self.T.sum(axis=1) - np.asarray(alpha)).max()
        c = np.abs(self.T.sum(axis=0) - np.asarray(beta)).max()
        return float(max(r, c))


def cost_matrix(X, Y, ground_norm: str = "one", p: int = 1) -> CostMatrix:
    """Pairwise ground distances ||x_i - y_j||^p between atom columns."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] != Y.shape[0]:
        raise ValueError("atom dimensions differ")
    if ground_norm not in _NORM_ORDERS:
        raise ValueError(f"unknown ground norm {ground_norm!r}")
    diff = X[:, :, None] - Y[:, None, :]   # (d, N, M)
    ordv = _NORM_ORDERS[ground_norm]
    D = np.linalg.norm(diff, ord=ordv, axis=0)
    if p != 1:
        D = D ** p
    return CostMatrix(D=D, ground_norm=ground_norm, p=p)


def _check_simplex(w, name):
    w = np.asarray(w, dtype=float).reshape(-1)
    if np.any(w < -SIMPLEX_TOL) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must lie on the probability simplex")
    return np.clip(w, 0.0, None)


def marginal_matrix(N: int, M: int) -> sp.csr_matrix:
    """Equality matrix mapping vec(T) (row-major) to (row sums, column sums)."""
    rows = sp.kron(sp.eye(N), np.ones((1, M)), format="csr")
    cols = sp.kron(np.ones((1, N)), sp.eye(M), format="csr")
    return sp.vstack([rows, cols], format="csr")


def solve_exact_ot(alpha, beta, D) -> TransportPlan:
    """Exact Kantorovich LP  min <T, D>  over the transportation polytope."""
    D = D.D if isinstance(D, CostMatrix) else np.asarray(D, dtype=float)
    N, M = D.shape
    alpha = _check_simplex(alpha, "alpha")
    beta = _check_simplex(beta, "beta")
    if alpha.size != N or beta.size != M:
        raise ValueError("marginal sizes do not match the cost matrix")
    lp = LinearProgram(
        c=D.reshape(-1),
        A_eq=marginal_matrix(N, M),
        b_eq=np.concatenate([alpha, beta]),
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        return TransportPlan(T=np.full((N, M), np.nan), cost=np.nan,
                             status=sol.status, iterations=sol.iterations)
    T = sol.x.reshape(N, M)
    return TransportPlan(T=T, cost=float(np.sum(T * D)), status="optimal",
                         iterations=sol.iterations)


def sinkhorn(alpha, beta, D, gamma: float, tol: float = 1e-9,
             max_iter: int = 100000) -> TransportPlan:
    """Entropic OT by alternating diagonal scaling of exp(-D/gamma).

    Runs in the log domain whenever max(D)/gamma is large enough to
    underflow the kernel; the reported cost is the unregularized <T, D>.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    D = D.D if isinstance(D, CostMatrix) else np.asarray(D, dtype=float)
    N, M = D.shape
    alpha = _check_simplex(alpha, "alpha")
    beta = _check_simplex(beta, "beta")
    log_domain = float(np.max(D)) / gamma > 30.0

    if log_domain:
        logK = -D / gamma
        la = np.log(np.clip(alpha, 1e-300, None))
        lb = np.log(np.clip(beta, 1e-300, None))
        f = np.zeros(N)
        g = np.zeros(M)
        for it in range(1, max_iter + 1):
            f = gamma * (la - logsumexp(logK + g[None, :] / gamma, axis=1))
            g = gamma * (lb - logsumexp(logK.T + f[None, :] / gamma, axis=1))
            if it % 10 == 0 or it == max_iter:
                logT = logK + f[:, None] / gamma + g[None, :] / gamma
                T = np.exp(logT)
                if _violation(T, alpha, beta) < tol:
                    return TransportPlan(T=T, cost=float(np.sum(T * D)),
                                         status="optimal", iterations=it)
        logT = logK + f[:, None] / gamma + g[None, :] / gamma
        T = np.exp(logT)
        return TransportPlan(T=T, cost=float(np.sum(T * D)),
                             status="iteration-limit", iterations=max_iter)

    K = np.exp(-D / gamma)
    if np.any(K.sum(axis=1) == 0.0) or np.any(K.sum(axis=0) == 0.0):
        raise FloatingPointError(
            "Sinkhorn kernel underflow: increase gamma or rely on log-domain mode")
    u = np.ones(N)
    v = np.ones(M)
    for it in range(1, max_iter + 1):
        u = alpha / (K @ v)
        v = beta / (K.T @ u)
        if it % 10 == 0 or it == max_iter:
            T = u[:, None] * K * v[None, :]
            if _violation(T, alpha, beta) < tol:
                return TransportPlan(T=T, cost=float(np.sum(T * D)),
                                     status="optimal", iterations=it)
    T = u[:, None] * K * v[None, :]
    return TransportPlan(T=T, cost=float(np.sum(T * D)),
                         status="iteration-limit", iterations=max_iter)


def _violation(T, alpha, beta) -> float:
    return float(max(np.abs(T.sum(axis=1) - alpha).max(),
                     np.abs(T.sum(axis=0) - beta).max()))


def wasserstein(P: DiscreteDistribution, Q: DiscreteDistribution,
                ground_norm: str = "one") -> float:
    """Exact 1-Wasserstein (Kantorovich-Rubinstein) distance."""
    D = cost_matrix(P.atoms, Q.atoms, ground_norm=ground_norm, p=1)
    plan = solve_exact_ot(P.weights, Q.weights, D)
    if plan.status != "optimal":
        raise RuntimeError(f"transport LP failed: {plan.status}")
    return plan.cost


def save_plan_csv(plan: TransportPlan, path) -> None:
    """Plan matrix as CSV for debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["# cost", plan.cost, "status", plan.status])
        for row in plan.T:
            writer.writerow([repr(float(v)) for v in row])
