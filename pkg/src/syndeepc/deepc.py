"""Data-enabled predictive control: the deterministic equality-constrained
problem, its softened variant, and the distributionally robust tractable
reformulation.

All problems use the separable cost

    J(u, y) = ||u||_1 + sum_i w_i |y_i - r_i|

with per-channel output weights w (uniformly c by default), plus the
softened consistency penalty rho * ||Yb g - y_ini||_1.  With the 1-norm
ground metric of the ambiguity set the dual norm is the inf-norm and the
robust counterpart stays a single LP after epigraph splitting.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .hankel import HankelBlocks, InitialWindow
from .lp import LinearProgram, LpSolution, lp_text, solve_lp

CONSTRAINT_TOL = 1e-9


@dataclass(frozen=True)
class CostSpec:
    """Tracking cost parameters.

    ``output_weights`` gives the per-entry weight of the reference term;
    scalar ``c`` broadcasts to every output channel.  rho = 0 disables the
    consistency penalty entirely (degenerate, warned about).
    """

    c: float
    reference: np.ndarray  # (l*K,)
    rho: float
    output_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "reference", np.asarray(self.reference, dtype=float).reshape(-1))
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.rho == 0:
            warnings.warn("rho = 0: backward-output consistency is ignored")
        if self.output_weights is None:
            object.__setattr__(self, "output_weights", np.full(self.reference.size, float(self.c)))
        else:
            w = np.asarray(self.output_weights, dtype=float).reshape(-1)
            if w.size != self.reference.size or np.any(w < 0):
                raise ValueError("output_weights must be nonnegative, length l*K")
            object.__setattr__(self, "output_weights", w)


@dataclass(frozen=True)
class AmbiguitySpec:
    """Wasserstein ambiguity radius: base radius plus compression distance."""

    eps_beta: float
    eta_S: float = 0.0

    def __post_init__(self):
        if self.eps_beta < 0 or self.eta_S < 0:
            raise ValueError("radii must be nonnegative")

    @property
    def effective_radius(self) -> float:
        return self.eps_beta + self.eta_S


def ambiguity_radius(eps_beta: float, eta_S: float) -> float:
    """Enlarged radius eps_beta + eta_S of the compressed-data ambiguity set."""
    if eps_beta < 0 or eta_S < 0:
        raise ValueError("radii must be nonnegative")
    return eps_beta + eta_S


@dataclass
class ControlSolution:
    g_star: np.ndarray
    u_star: np.ndarray
    y_pred: np.ndarray
    objective: float
    solve_time: float
    status: str

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class RobustProblem:
    blocks: HankelBlocks
    window: InitialWindow
    cost: CostSpec
    ambiguity: AmbiguitySpec
    input_box: Tuple[np.ndarray, np.ndarray]
    lp: LinearProgram
    dual_norm: str = "inf"

    def dump(self) -> str:
        return lp_text(self.lp, name="robust-deepc")


def _box(input_box, mK: int):
    lo, hi = input_box
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (mK,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (mK,)).copy()
    if np.any(lo > hi):
        raise ValueError("empty input box")
    return lo, hi


def conjugate_bound(cost: CostSpec) -> Tuple[float, float]:
    """Bounds on the conjugate sets of the output cost and the consistency
    penalty: the conjugate of a weighted 1-norm is finite exactly on the
    weight box, so the sups of ||xi||_inf are max(w) and rho."""
    return float(np.max(cost.output_weights)), float(cost.rho)


def _check_dims(blocks: HankelBlocks, window: InitialWindow, cost: CostSpec):
    if window.u_ini.size != blocks.m * blocks.Ki or window.y_ini.size != blocks.l * blocks.Ki:
        raise ValueError("window length inconsistent with blocks")
    if cost.reference.size != blocks.l * blocks.K:
        raise ValueError("reference length must be l*K")


def deterministic_deepc(blocks: HankelBlocks, window: InitialWindow,
                        cost: CostSpec, input_box) -> ControlSolution:
    """Equality-constrained DeePC for noise-free persistently exciting data:
    min J over { g : [Ub; Yb] g = [u_ini; y_ini], Uf g in the box }."""
    _check_dims(blocks, window, cost)
    R = blocks.R
    mK = blocks.Uf.shape[0]
    lK = blocks.Yf.shape[0]
    lo, hi = _box(input_box, mK)
    # variables: g (R), a (mK) >= |Uf g|, b (lK) >= |Yf g - r|
    n = R + mK + lK
    c_vec = np.concatenate([np.zeros(R), np.ones(mK), cost.output_weights])
    if blocks.Ki > 0:
        A_eq = np.hstack([np.vstack([blocks.Ub, blocks.Yb]),
                          np.zeros(((blocks.m + blocks.l) * blocks.Ki, mK + lK))])
        b_eq = np.concatenate([window.u_ini, window.y_ini])
    else:
        A_eq, b_eq = None, None
    rows, rhs = _abs_and_box_rows(blocks, cost, lo, hi, R, mK, lK, n,
                                  with_soft=False, with_t=False)
    A_ub, b_ub = np.vstack(rows), np.concatenate(rhs)
    lb = np.concatenate([np.full(R, -np.inf), np.zeros(mK + lK)])
    lp = LinearProgram(c=c_vec, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub, lb=lb, ub=np.full(n, np.inf))
    t0 = time.perf_counter()
    sol = solve_lp(lp)
    return _extract(sol, blocks, cost, time.perf_counter() - t0)


def _abs_and_box_rows(blocks, cost, lo, hi, R, mK, lK, n, with_soft: bool,
                      with_t: bool, xi_bound: float = 0.0, rho: float = 0.0):
    """Inequality rows shared by the LP variants, in variable order
    g, a, b[, d][, t]."""
    lKi = blocks.Yb.shape[0]
    rows = []
    rhs = []

    def block_row(core, a_col=None, sign=1.0):
        row = np.zeros((core.shape[0], n))
        row[:, :R] = sign * core
        return row

    # a >= |Uf g|
    for sign in (1.0, -1.0):
        row = block_row(blocks.Uf, sign=sign)
        row[:, R:R + mK] = -np.eye(mK)
        rows.append(row)
        rhs.append(np.zeros(mK))
    # b >= |Yf g - r|
    for sign in (1.0, -1.0):
        row = block_row(blocks.Yf, sign=sign)
        row[:, R + mK:R + mK + lK] = -np.eye(lK)
        rows.append(row)
        rhs.append(sign * cost.reference)
    off = R + mK + lK
    if with_soft:
        # d >= |Yb g - y_ini|  (rhs filled by caller: depends on window)
        for sign in (1.0, -1.0):
            row = block_row(blocks.Yb, sign=sign)
            row[:, off:off + lKi] = -np.eye(lKi)
            rows.append(row)
            rhs.append(None)  # placeholder, caller substitutes
        off += lKi
    # input box
    rows.append(block_row(blocks.Uf))
    rhs.append(hi)
    rows.append(block_row(blocks.Uf, sign=-1.0))
    rhs.append(-lo)
    if with_t:
        # t >= xi_bound * ||g||_inf  and  t >= rho * ||g||_inf
        for coef in (xi_bound, rho):
            if coef <= 0:
                continue
            for sign in (1.0, -1.0):
                row = np.zeros((R, n))
                row[:, :R] = sign * coef * np.eye(R)
                row[:, -1] = -1.0
                rows.append(row)
                rhs.append(np.zeros(R))
    return rows, rhs


def _assemble_soft(blocks, window, cost, ambiguity, input_box):
    _check_dims(blocks, window, cost)
    R = blocks.R
    mK = blocks.Uf.shape[0]
    lK = blocks.Yf.shape[0]
    lKi = blocks.Yb.shape[0]
    lo, hi = _box(input_box, mK)
    xi_bound, xi_prime = conjugate_bound(cost)
    eps = ambiguity.effective_radius
    # variables: g (R), a (mK), b (lK), d (lKi), t (1)
    n = R + mK + lK + lKi + 1
    c_vec = np.concatenate([np.zeros(R), np.ones(mK), cost.output_weights,
                            np.full(lKi, cost.rho), [eps]])
    if blocks.Ki > 0:
        A_eq = np.zeros((blocks.m * blocks.Ki, n))
        A_eq[:, :R] = blocks.Ub
        b_eq = window.u_ini
    else:
        A_eq, b_eq = None, None
    rows, rhs = _abs_and_box_rows(blocks, cost, lo, hi, R, mK, lK, n,
                                  with_soft=True, with_t=True,
                                  xi_bound=xi_bound, rho=cost.rho)
    # fill the soft-penalty rhs placeholders (order: +Yb then -Yb)
    filled = []
    soft_signs = iter((1.0, -1.0))
    for r in rhs:
        if r is None:
            filled.append(next(soft_signs) * window.y_ini)
        else:
            filled.append(r)
    A_ub = np.vstack(rows)
    b_ub = np.concatenate(filled)
    lb = np.concatenate([np.full(R, -np.inf), np.zeros(mK + lK + lKi),
                         [cost.rho]])  # ||v||_inf >= 1 forces t >= rho
    lp = LinearProgram(c=c_vec, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub,
                       lb=lb, ub=np.full(n, np.inf))
    return RobustProblem(blocks=blocks, window=window, cost=cost,
                         ambiguity=ambiguity, input_box=(lo, hi), lp=lp)


def build_robust(blocks: HankelBlocks, window: InitialWindow, cost: CostSpec,
                 ambiguity: AmbiguitySpec, input_box) -> RobustProblem:
    """Assemble the tractable robust LP

        min  f(data, v) + eff_radius * t
        s.t. t >= xi_bound * ||col(g,0)||_inf,  t >= rho * ||v||_inf,
             Ub g = u_ini,  Uf g in the box,

    with every 1-/inf-norm split into linear rows.  The trailing -1 entry
    of v = col(g, -1) is what puts the constant rho lower bound on t."""
    return _assemble_soft(blocks, window, cost, ambiguity, input_box)


def solve_robust(problem: RobustProblem) -> ControlSolution:
    """Solve the assembled LP and extract g*, u* = Uf g*, y_pred = Yf g*."""
    t0 = time.perf_counter()
    sol = solve_lp(problem.lp)
    return _extract(sol, problem.blocks, problem.cost, time.perf_counter() - t0)


def solve_softened(blocks: HankelBlocks, window: InitialWindow, cost: CostSpec,
                   input_box) -> ControlSolution:
    """Softened-consistency problem: the robust LP with radius zero."""
    problem = build_robust(blocks, window, cost, AmbiguitySpec(0.0, 0.0), input_box)
    return solve_robust(problem)


def soften(blocks: HankelBlocks, window: InitialWindow, cost: CostSpec):
    """The softened objective as a plain function of g, for audits:
    J(Uf g, Yf g) + rho ||Yb g - y_ini||_1."""
    _check_dims(blocks, window, cost)

    def objective(g):
        g = np.asarray(g, dtype=float).reshape(-1)
        u = blocks.Uf @ g
        y = blocks.Yf @ g
        val = np.abs(u).sum()
        val += float(cost.output_weights @ np.abs(y - cost.reference))
        val += cost.rho * float(np.abs(blocks.Yb @ g - window.y_ini).sum())
        return val

    return objective


def _extract(sol: LpSolution, blocks: HankelBlocks, cost: CostSpec,
             elapsed: float) -> ControlSolution:
    R = blocks.R
    if not sol.optimal:
        empty = np.full(0, np.nan)
        return ControlSolution(g_star=empty, u_star=empty, y_pred=empty,
                               objective=np.nan, solve_time=elapsed,
                               status=sol.status)
    g = sol.x[:R]
    return ControlSolution(
        g_star=g,
        u_star=blocks.Uf @ g,
        y_pred=blocks.Yf @ g,
        objective=float(sol.objective_value),
        solve_time=elapsed,
        status="optimal",
    )
