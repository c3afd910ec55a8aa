"""Dense linear-programming front end shared by the transport, compression
and control modules.

Problems are stated as

    min  c^T x
    s.t. A_eq x = b_eq
         A_ub x <= b_ub
         lb <= x <= ub

and solved with the HiGHS engine shipped in scipy, which returns exact
vertex (basic) solutions deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-8
OPT_TOL = 1e-7

_STATUS_MAP = {
    0: "optimal",
    1: "iteration-limit",
    2: "infeasible",
    3: "unbounded",
    4: "numerical-error",
}


@dataclass
class LinearProgram:
    """A linear program in standard inequality/equality form.

    Constraint matrices may be dense ndarrays or scipy sparse matrices;
    ``None`` means "no constraints of that kind".  Bounds default to
    x >= 0 when omitted, matching the convention of the solvers used
    downstream (transport plans, hull weights, epigraph variables).
    """

    c: np.ndarray
    A_eq: Optional[object] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[object] = None
    b_ub: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective coefficients must be finite")
        n = self.c.size
        if self.lb is None:
            self.lb = np.zeros(n)
        else:
            self.lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        if self.ub is None:
            self.ub = np.full(n, np.inf)
        else:
            self.ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        for A, b, name in ((self.A_eq, self.b_eq, "eq"), (self.A_ub, self.b_ub, "ub")):
            if (A is None) != (b is None):
                raise ValueError(f"A_{name} and b_{name} must be given together")
            if A is not None and A.shape[1] != n:
                raise ValueError(f"A_{name} has {A.shape[1]} columns, expected {n}")
            if A is not None and A.shape[0] != np.asarray(b).size:
                raise ValueError(f"A_{name}/b_{name} row mismatch")

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    x: np.ndarray
    objective_value: float
    status: str
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class LpOptions:
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    max_iter: Optional[int] = None
    verify: bool = True


def solve_lp(lp: LinearProgram, opts: Optional[LpOptions] = None) -> LpSolution:
    """Solve ``lp`` and return an :class:`LpSolution`.

    On ``status == "optimal"`` the returned point is primal feasible within
    ``opts.feas_tol`` (verified here, not just reported by the engine).
    """
    opts = opts or LpOptions()
    options = {"presolve": True}
    if opts.max_iter is not None:
        options["maxiter"] = opts.max_iter
    bounds = np.column_stack([lp.lb, lp.ub])
    res = linprog(
        lp.c,
        A_ub=lp.A_ub,
        b_ub=lp.b_ub,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        bounds=bounds,
        method="highs",
        options=options,
    )
    status = _STATUS_MAP.get(res.status, "numerical-error")
    x = np.asarray(res.x, dtype=float) if res.x is not None else np.full(lp.num_vars, np.nan)
    sol = LpSolution(
        x=x,
        objective_value=float(res.fun) if res.fun is not None else np.nan,
        status=status,
        iterations=int(getattr(res, "nit", 0) or 0),
        message=str(res.message),
    )
    if sol.optimal and opts.verify:
        viol = constraint_violation(lp, sol.x)
        if viol > opts.feas_tol:
            sol.status = "numerical-error"
            sol.message = f"feasibility check failed: violation {viol:.3e}"
    return sol


def constraint_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Worst absolute constraint violation of ``x`` for ``lp``."""
    viol = 0.0
    if lp.A_eq is not None:
        r = _matvec(lp.A_eq, x) - np.asarray(lp.b_eq, dtype=float).ravel()
        viol = max(viol, float(np.max(np.abs(r), initial=0.0)))
    if lp.A_ub is not None:
        r = _matvec(lp.A_ub, x) - np.asarray(lp.b_ub, dtype=float).ravel()
        viol = max(viol, float(np.max(r, initial=0.0)))
    viol = max(viol, float(np.max(lp.lb - x, initial=0.0)))
    viol = max(viol, float(np.max(x - lp.ub, initial=0.0)))
    return viol


def _matvec(A, x):
    if sp.issparse(A):
        return A @ x
    return np.asarray(A, dtype=float) @ x


def lp_text(lp: LinearProgram, name: str = "lp") -> str:
    """Human-readable dump of a (small) LP for audits and bug reports."""
    lines = [f"# {name}: {lp.num_vars} variables"]
    lines.append("minimize " + " + ".join(
        f"{ci:+g}*x{i}" for i, ci in enumerate(lp.c) if ci != 0.0) or "0")
    if lp.A_eq is not None:
        A = np.asarray(lp.A_eq.todense() if sp.issparse(lp.A_eq) else lp.A_eq)
        for row, bi in zip(A, np.ravel(lp.b_eq)):
            terms = " + ".join(f"{a:+g}*x{j}" for j, a in enumerate(row) if a != 0.0)
            lines.append(f"  {terms} == {bi:g}")
    if lp.A_ub is not None:
        A = np.asarray(lp.A_ub.todense() if sp.issparse(lp.A_ub) else lp.A_ub)
        for row, bi in zip(A, np.ravel(lp.b_ub)):
            terms = " + ".join(f"{a:+g}*x{j}" for j, a in enumerate(row) if a != 0.0)
            lines.append(f"  {terms} <= {bi:g}")
    for i, (lo, hi) in enumerate(zip(lp.lb, lp.ub)):
        lines.append(f"  {lo:g} <= x{i} <= {hi:g}")
    return "\n".join(lines)
