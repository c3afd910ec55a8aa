"""Variational Wasserstein compression of a data matrix.

Finds S synthetic atoms whose uniform empirical distribution is closest in
1-Wasserstein distance to the uniform distribution on the R columns of the
data matrix.  Solved by block-coordinate descent: alternate an inner
transport solve (exact LP, or Sinkhorn when an entropic weight is set) with
a transport-weighted barycenter update of each atom.

The achieved distance eta(S) feeds the enlarged ambiguity radius of the
robust controller; eta(S) -> 0 as S -> R.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .lp import LinearProgram, solve_lp
from .transport import (DiscreteDistribution, TransportPlan, cost_matrix,
                        sinkhorn, solve_exact_ot)

logger = logging.getLogger(__name__)

HULL_TOL = 1e-6
WEISZFELD_TOL = 1e-9
WEISZFELD_MAX_ITER = 200


@dataclass(frozen=True)
class CompressionConfig:
    S: int
    ground_norm: str = "one"          # "one" | "two"
    init: str = "kmeans++"            # "random-columns" | "kmeans++" | "provided"
    init_atoms: Optional[np.ndarray] = None
    max_outer_iters: int = 200
    outer_tol: float = 1e-6           # relative cost-decrease stop threshold
    gamma: float = 0.0                # 0 = exact LP inner solves
    seed: int = 0

    def __post_init__(self):
        if self.S < 1:
            raise ValueError("S must be >= 1")
        if self.max_outer_iters < 1 or self.outer_tol <= 0:
            raise ValueError("bad stopping parameters")
        if self.ground_norm not in ("one", "two"):
            raise ValueError("ground_norm must be 'one' or 'two'")
        if self.init not in ("random-columns", "kmeans++", "provided"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "provided" and self.init_atoms is None:
            raise ValueError("init='provided' requires init_atoms")


@dataclass
class SyntheticDataset:
    atoms: np.ndarray            # (r, S)
    eta: float
    plan: TransportPlan
    iterations: int
    cost_history: List[float]
    config: CompressionConfig

    @property
    def S(self) -> int:
        return self.atoms.shape[1]


def _pairwise_dist(H, atoms, norm):
    return cost_matrix(H, atoms, ground_norm=norm, p=1).D


def _init_atoms(H: np.ndarray, cfg: CompressionConfig, rng) -> np.ndarray:
    R = H.shape[1]
    if cfg.init == "provided":
        atoms = np.atleast_2d(np.asarray(cfg.init_atoms, dtype=float)).copy()
        if atoms.shape != (H.shape[0], cfg.S):
            raise ValueError("provided atoms have the wrong shape")
        return atoms
    if cfg.init == "random-columns":
        idx = rng.choice(R, size=cfg.S, replace=False)
        return H[:, idx].copy()
    # kmeans++-style distance-proportional seeding on columns
    idx = [int(rng.integers(R))]
    d = _pairwise_dist(H, H[:, idx], cfg.ground_norm).min(axis=1)
    for _ in range(cfg.S - 1):
        total = d.sum()
        if total <= 0:
            # all columns already covered; fall back to uniform over the rest
            remaining = np.setdiff1d(np.arange(R), idx)
            idx.append(int(rng.choice(remaining)))
        else:
            idx.append(int(rng.choice(R, p=d / total)))
        d = np.minimum(d, _pairwise_dist(H, H[:, idx[-1:]], cfg.ground_norm)[:, 0])
    return H[:, idx].copy()


def weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    """Minimizer of sum_i w_i |x - v_i|; the midpoint of the median interval
    is returned when the mass splits evenly, so uniform weights reproduce
    the ordinary median."""
    order = np.argsort(values)
    v = values[order]
    w = weights[order]
    total = w.sum()
    cum = np.cumsum(w)
    half = 0.5 * total
    k = int(np.searchsorted(cum, half - 1e-12 * total))
    if abs(cum[k] - half) <= 1e-9 * total and k + 1 < v.size:
        return 0.5 * (v[k] + v[k + 1])
    return float(v[k])


def _median_update(H: np.ndarray, w: np.ndarray) -> np.ndarray:
    mask = w > 0
    Hm, wm = H[:, mask], w[mask]
    return np.array([weighted_median(row, wm) for row in Hm])


def _weiszfeld_update(H: np.ndarray, w: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Weighted geometric median of columns of H via Weiszfeld iteration."""
    mask = w > 0
    Hm, wm = H[:, mask], w[mask]
    s = start.copy()
    for _ in range(WEISZFELD_MAX_ITER):
        d = np.linalg.norm(Hm - s[:, None], axis=0)
        at_point = d < 1e-14
        if np.any(at_point):
            # anchored on a data point: standard modified-Weiszfeld step
            d = np.where(at_point, np.inf, d)
        coef = wm / d
        denom = coef.sum()
        if denom == 0.0:
            break
        s_new = (Hm * coef[None, :]).sum(axis=1) / denom
        if np.linalg.norm(s_new - s) <= WEISZFELD_TOL * (1.0 + np.linalg.norm(s)):
            return s_new
        s = s_new
    return s


def _inner_solve(H, atoms, cfg) -> TransportPlan:
    R, S = H.shape[1], atoms.shape[1]
    D = cost_matrix(H, atoms, ground_norm=cfg.ground_norm, p=1)
    alpha = np.full(R, 1.0 / R)
    beta = np.full(S, 1.0 / S)
    if cfg.gamma > 0:
        return sinkhorn(alpha, beta, D, gamma=cfg.gamma)
    plan = solve_exact_ot(alpha, beta, D)
    if plan.status != "optimal":
        raise RuntimeError(f"inner transport solve failed: {plan.status}")
    return plan


def compress(H, cfg: CompressionConfig) -> SyntheticDataset:
    """Block-coordinate descent on atom locations and transport plan.

    Returns a locally optimal synthetic dataset; the problem is convex in
    each block but not jointly, so only local optimality is promised.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = H.shape[1]
    if cfg.S > R:
        raise ValueError(f"S={cfg.S} exceeds the number of data columns R={R}")
    rng = np.random.default_rng(cfg.seed)
    atoms = _init_atoms(H, cfg, rng)

    cost_history: List[float] = []
    plan = _inner_solve(H, atoms, cfg)
    cost_history.append(plan.cost)
    iterations = 0
    for it in range(1, cfg.max_outer_iters + 1):
        if cost_history[-1] <= 1e-15:
            break
        # (b) barycenter update per atom under the ground norm
        new_atoms = atoms.copy()
        empty = []
        for j in range(cfg.S):
            w = plan.T[:, j]
            if w.sum() <= 1e-15 / cfg.S:
                empty.append(j)
                continue
            if cfg.ground_norm == "one":
                new_atoms[:, j] = _median_update(H, w)
            else:
                new_atoms[:, j] = _weiszfeld_update(H, w, atoms[:, j])
        if empty:
            # zero-mass atoms are re-seeded at the columns farthest from the
            # current atom set; descent resumes after one extra inner solve
            d = _pairwise_dist(H, new_atoms, cfg.ground_norm).min(axis=1)
            for j in empty:
                k = int(np.argmax(d))
                new_atoms[:, j] = H[:, k]
                d[k] = -np.inf
                logger.info("re-seeded empty atom %d at column %d", j, k)
        atoms = new_atoms
        # (a) inner transport solve at the new atoms
        plan = _inner_solve(H, atoms, cfg)
        cost_history.append(plan.cost)
        iterations = it
        prev, cur = cost_history[-2], cost_history[-1]
        if not empty and prev - cur < cfg.outer_tol * max(abs(prev), 1e-30):
            break

    return SyntheticDataset(atoms=atoms, eta=cost_history[-1], plan=plan,
                            iterations=iterations, cost_history=cost_history,
                            config=cfg)


def eta_curve(H, S_list: Sequence[int], cfg_template: CompressionConfig
              ) -> List[Tuple[int, float, float]]:
    """Independent compress runs over a list of atom counts.

    Seeds follow cfg_template.seed + index; a failed entry reports
    (S, nan, wall_time) instead of aborting the sweep.
    """
    if not len(S_list):
        raise ValueError("S_list must be nonempty")
    H = np.atleast_2d(np.asarray(H, dtype=float))
    results = []
    for i, S in enumerate(S_list):
        cfg = replace(cfg_template, S=int(S), seed=cfg_template.seed + i)
        t0 = time.perf_counter()
        try:
            ds = compress(H, cfg)
            eta = ds.eta
        except Exception as exc:  # one failure must not abort the sweep
            logger.warning("compress failed for S=%d: %s", S, exc)
            eta = float("nan")
        results.append((int(S), eta, time.perf_counter() - t0))
    return results


def in_convex_hull(point, columns, tol: float = HULL_TOL) -> bool:
    """LP feasibility test: is `point` within inf-norm `tol` of the convex
    hull of the columns?"""
    columns = np.atleast_2d(np.asarray(columns, dtype=float))
    point = np.asarray(point, dtype=float).reshape(-1)
    r, R = columns.shape
    if point.size != r:
        raise ValueError("point dimension does not match columns")
    # variables: lambda (R) >= 0, t >= 0; minimize t subject to
    #   sum lambda = 1,  -t <= (C lambda - point)_i <= t
    n = R + 1
    c = np.zeros(n)
    c[-1] = 1.0
    A_eq = np.zeros((1, n))
    A_eq[0, :R] = 1.0
    b_eq = np.array([1.0])
    A_ub = np.zeros((2 * r, n))
    A_ub[:r, :R] = columns
    A_ub[:r, -1] = -1.0
    A_ub[r:, :R] = -columns
    A_ub[r:, -1] = -1.0
    b_ub = np.concatenate([point, -point])
    sol = solve_lp(LinearProgram(c=c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub))
    if not sol.optimal:
        logger.warning("hull LP did not solve: %s", sol.status)
        return False
    return sol.objective_value <= tol


def recompute_eta(H, dataset: SyntheticDataset, ground_norm: Optional[str] = None) -> float:
    """Cross-check eta through the transport module's exact solver."""
    norm = ground_norm or dataset.config.ground_norm
    P = DiscreteDistribution.uniform(np.atleast_2d(np.asarray(H, dtype=float)))
    Q = DiscreteDistribution.uniform(dataset.atoms)
    from .transport import wasserstein
    return wasserstein(P, Q, ground_norm=norm)


def save_dataset(dataset: SyntheticDataset, csv_path, meta_path) -> None:
    """Atom matrix as CSV plus a sidecar metadata file."""
    np.savetxt(csv_path, dataset.atoms, delimiter=",")
    with open(meta_path, "w") as fh:
        fh.write(f"S = {dataset.S}\n")
        fh.write(f"eta = {dataset.eta!r}\n")
        fh.write(f"seed = {dataset.config.seed}\n")
        fh.write(f"ground_norm = {dataset.config.ground_norm}\n")
        fh.write(f"iterations = {dataset.iterations}\n")


class WassersteinCompressor:
    """Estimator-style wrapper: fit on a data matrix with columns as
    samples; learned attributes follow the sklearn trailing-underscore
    convention so the compressor composes with pipeline tooling."""

    def __init__(self, n_atoms: int = 8, ground_norm: str = "one",
                 init: str = "kmeans++", max_outer_iters: int = 200,
                 outer_tol: float = 1e-6, gamma: float = 0.0, seed: int = 0):
        self.n_atoms = n_atoms
        self.ground_norm = ground_norm
        self.init = init
        self.max_outer_iters = max_outer_iters
        self.outer_tol = outer_tol
        self.gamma = gamma
        self.seed = seed

    def get_params(self, deep: bool = True) -> dict:
        return {k: getattr(self, k) for k in
                ("n_atoms", "ground_norm", "init", "max_outer_iters",
                 "outer_tol", "gamma", "seed")}

    def set_params(self, **params) -> "WassersteinCompressor":
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def _config(self) -> CompressionConfig:
        return CompressionConfig(
            S=self.n_atoms, ground_norm=self.ground_norm, init=self.init,
            max_outer_iters=self.max_outer_iters, outer_tol=self.outer_tol,
            gamma=self.gamma, seed=self.seed)

    def fit(self, H, y=None) -> "WassersteinCompressor":
        result = compress(H, self._config())
        self.atoms_ = result.atoms
        self.eta_ = result.eta
        self.plan_ = result.plan
        self.cost_history_ = result.cost_history
        self.n_iter_ = result.iterations
        self.result_ = result
        return self

    def transform(self, H) -> np.ndarray:
        """Map each column to its nearest synthetic atom index."""
        if not hasattr(self, "atoms_"):
            raise RuntimeError("fit the compressor first")
        D = _pairwise_dist(np.atleast_2d(np.asarray(H, dtype=float)),
                           self.atoms_, self.ground_norm)
        return D.argmin(axis=1)

    def fit_transform(self, H, y=None) -> np.ndarray:
        return self.fit(H).transform(H)
