"""Receding-horizon experiment harness.

Runs the full pipeline: collect persistently exciting training data from
the simulated plant, optionally compress it offline, then close the loop:
solve the robust control problem, apply only the first input block, measure,
shift the initial window, repeat.
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import lti
from .compress import CompressionConfig, SyntheticDataset, compress
from .deepc import (AmbiguitySpec, ControlSolution, CostSpec, RobustProblem,
                    build_robust, solve_robust)
from .hankel import (HankelBlocks, InitialWindow, is_persistently_exciting,
                     min_data_length, split_blocks, stacked_hankel)
from .lti import NoiseModel, SystemRealization, Trajectory, quadcopter_model


class HarnessError(RuntimeError):
    pass


class InfeasibleStep(HarnessError):
    def __init__(self, step: int, dump: str):
        super().__init__(f"robust problem infeasible at step {step}")
        self.step = step
        self.dump = dump


def double_integrator_model(Ts: float = 0.1) -> SystemRealization:
    """Single-axis double integrator with position measurement; the desk-scale
    plant for closed-loop sanity experiments."""
    A = np.array([[1.0, Ts], [0.0, 1.0]])
    B = np.array([[0.5 * Ts ** 2], [Ts]])
    C = np.array([[1.0, 0.0]])
    D = np.zeros((1, 1))
    E = np.zeros((2, 1))
    F = np.ones((1, 1))
    return SystemRealization(A=A, B=B, C=C, D=D, E=E, F=F, Ts=Ts)


@dataclass
class ReferenceSpec:
    kind: str = "figure8"     # "figure8" | "constant"
    period: float = 10.0
    amplitude: float = 1.0
    altitude: float = 1.0
    value: float = 1.0        # constant references
    tracked: Optional[Tuple[int, ...]] = None  # output channels with weight c

    def sequence(self, Ts: float, l: int, length: int) -> np.ndarray:
        if self.kind == "figure8":
            return figure8_reference(Ts, self.period, self.amplitude,
                                     self.altitude, length, l=l)
        if self.kind == "constant":
            ref = np.zeros((length, l))
            tracked = self.tracked if self.tracked is not None else tuple(range(l))
            for ch in tracked:
                ref[:, ch] = self.value
            return ref
        raise ValueError(f"unknown reference kind {self.kind!r}")

    def tracked_channels(self, l: int) -> Tuple[int, ...]:
        if self.tracked is not None:
            return tuple(self.tracked)
        return (0, 1, 2) if self.kind == "figure8" else tuple(range(l))


def figure8_reference(Ts: float, period: float, amplitude: float,
                      altitude: float, length: int, l: int = 12) -> np.ndarray:
    """Lissajous figure-8 at fixed altitude:
    x = A sin(2 pi t / T), y = (A/2) sin(4 pi t / T), z = altitude."""
    if period <= 0 or amplitude <= 0:
        raise ValueError("period and amplitude must be positive")
    t = np.arange(length) * Ts
    ref = np.zeros((length, l))
    ref[:, 0] = amplitude * np.sin(2 * np.pi * t / period)
    ref[:, 1] = amplitude * np.sin(4 * np.pi * t / period) / 2.0
    if l > 2:
        ref[:, 2] = altitude
    return ref


@dataclass
class ExperimentConfig:
    system: str = "quadcopter"        # "quadcopter" | "double-integrator" | model file path
    Ts: float = 0.05
    Ki: int = 1
    K: int = 30
    N: int = 214
    noise_kind: str = "none"
    noise_std: float = 0.0
    noise_seed: int = 0
    c: float = 200.0
    rho: float = 1e5
    eps_beta: float = 1e-3
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    compression: Optional[CompressionConfig] = None
    steps: int = 50
    seed: int = 0
    outdir: Optional[str] = None
    input_lo: float = lti.QUADCOPTER_INPUT_BOX[0]
    input_hi: float = lti.QUADCOPTER_INPUT_BOX[1]

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("run length must be >= 1")

    def build_system(self) -> SystemRealization:
        if self.system == "quadcopter":
            return quadcopter_model(self.Ts)
        if self.system == "double-integrator":
            return double_integrator_model(self.Ts)
        return lti.load_model(self.system)

    def validate(self, sys: SystemRealization) -> None:
        n_min = min_data_length(sys.m, sys.n, self.Ki, self.K)
        if self.N < n_min:
            raise ValueError(f"N={self.N} below minimum data length {n_min}")

    def digest(self) -> str:
        blob = repr(sorted(asdict(self).items())).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class StepRecord:
    k: int
    u: np.ndarray
    y: np.ndarray
    error: np.ndarray   # per tracked axis
    objective: float
    solve_time: float


@dataclass
class RunLog:
    records: List[StepRecord]
    reference: np.ndarray        # (steps, l), the applied slice
    tracked: Tuple[int, ...]
    provenance: dict

    @property
    def steps(self) -> int:
        return len(self.records)

    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.records])

    def solve_times(self) -> np.ndarray:
        return np.array([r.solve_time for r in self.records])

    def mean_abs_error(self) -> np.ndarray:
        return np.abs(self.errors()).mean(axis=0)

    def max_abs_error(self) -> np.ndarray:
        return np.abs(self.errors()).max(axis=0)

    def total_tracking_cost(self) -> float:
        return float(np.abs(self.errors()).sum())

    def mean_solve_time(self) -> float:
        return float(self.solve_times().mean())

    def write_csv(self, path) -> None:
        r0 = self.records[0]
        header = (["k"] + [f"u_{i+1}" for i in range(r0.u.size)]
                  + [f"y_{i+1}" for i in range(r0.y.size)]
                  + [f"err_{i+1}" for i in range(r0.error.size)]
                  + ["objective", "solve_time"])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for r in self.records:
                writer.writerow([r.k] + [repr(float(v)) for v in r.u]
                                + [repr(float(v)) for v in r.y]
                                + [repr(float(v)) for v in r.error]
                                + [repr(float(r.objective)),
                                   repr(float(r.solve_time))])

    def write_meta(self, path) -> None:
        with open(path, "w") as fh:
            for key in sorted(self.provenance):
                fh.write(f"{key} = {self.provenance[key]!r}\n")


def collect_training_data(cfg: ExperimentConfig,
                          sys: Optional[SystemRealization] = None):
    """Simulate N steps under i.i.d. uniform inputs over the input box and
    build the split depth-(Ki+K) data matrix.

    Raises if the drawn input fails the excitation rank test of order
    n + Ki + K (the caller may retry with a different seed)."""
    sys = sys or cfg.build_system()
    cfg.validate(sys)
    rng = np.random.default_rng(cfg.seed)
    inputs = rng.uniform(cfg.input_lo, cfg.input_hi, size=(cfg.N, sys.m))
    noise = NoiseModel(kind=cfg.noise_kind, stddev=cfg.noise_std, seed=cfg.noise_seed)
    traj = lti.simulate(sys, np.zeros(sys.n), inputs, noise)
    report = is_persistently_exciting(traj.inputs, sys.n + cfg.Ki + cfg.K)
    if not report.flag:
        raise HarnessError(
            f"training input not persistently exciting: rank {report.rank} "
            f"of required {report.required_rank}")
    H = stacked_hankel(traj.inputs, traj.outputs, cfg.Ki + cfg.K)
    blocks = split_blocks(H, m=sys.m, l=sys.l, Ki=cfg.Ki, K=cfg.K)
    return traj, blocks


def _offline_compress(cfg: ExperimentConfig, blocks: HankelBlocks):
    """Algorithm's offline phase: compress the stacked data matrix once and
    re-split the synthetic atoms into blocks of S columns."""
    dataset = compress(blocks.stacked(), cfg.compression)
    syn_blocks = HankelBlocks.from_stacked(dataset.atoms, m=blocks.m,
                                           l=blocks.l, Ki=blocks.Ki, K=blocks.K)
    return dataset, syn_blocks


def run_receding_horizon(cfg: ExperimentConfig) -> RunLog:
    """Offline compression (if configured) followed by the closed receding-
    horizon loop; only the first planned input is ever applied."""
    sys = cfg.build_system()
    traj, blocks = collect_training_data(cfg, sys)

    dataset: Optional[SyntheticDataset] = None
    if cfg.compression is not None:
        dataset, work_blocks = _offline_compress(cfg, blocks)
        eta = dataset.eta
    else:
        work_blocks, eta = blocks, 0.0
    ambiguity = AmbiguitySpec(eps_beta=cfg.eps_beta, eta_S=eta)

    tracked = cfg.reference.tracked_channels(sys.l)
    ref = cfg.reference.sequence(sys.Ts, sys.l, cfg.steps + cfg.K)
    weights_step = np.zeros(sys.l)
    weights_step[list(tracked)] = cfg.c

    plant_noise = NoiseModel(kind=cfg.noise_kind, stddev=cfg.noise_std,
                             seed=cfg.noise_seed + 7919)
    draw = plant_noise.stream(sys.q)

    # seed the window with Ki true zero-input steps from hover
    x = np.zeros(sys.n)
    u_hist: List[np.ndarray] = []
    y_hist: List[np.ndarray] = []
    for _ in range(cfg.Ki):
        u0 = np.zeros(sys.m)
        x, y = lti.step(sys, x, u0, draw())
        u_hist.append(u0)
        y_hist.append(y)

    records: List[StepRecord] = []
    box = (cfg.input_lo, cfg.input_hi)
    for k in range(cfg.steps):
        window = InitialWindow(u_ini=np.concatenate(u_hist[-cfg.Ki:]) if cfg.Ki else np.zeros(0),
                               y_ini=np.concatenate(y_hist[-cfg.Ki:]) if cfg.Ki else np.zeros(0))
        r_k = ref[k:k + cfg.K].reshape(-1)
        cost = CostSpec(c=cfg.c, reference=r_k, rho=cfg.rho,
                        output_weights=np.tile(weights_step, cfg.K))
        problem = build_robust(work_blocks, window, cost, ambiguity, box)
        sol = solve_robust(problem)
        if not sol.optimal:
            dump = problem.dump() if work_blocks.R <= 64 else "(problem too large to dump)"
            raise InfeasibleStep(k, dump)
        u1 = sol.u_star[:sys.m]
        x, y = lti.step(sys, x, u1, draw())
        err = y[list(tracked)] - ref[k, list(tracked)]
        records.append(StepRecord(k=k, u=u1, y=y, error=err,
                                  objective=sol.objective,
                                  solve_time=sol.solve_time))
        u_hist.append(u1)
        y_hist.append(y)

    provenance = {
        "config_hash": cfg.digest(),
        "dataset": "synthetic" if dataset is not None else "full",
        "S": dataset.S if dataset is not None else work_blocks.R,
        "eta": eta,
        "eps_beta": cfg.eps_beta,
        "effective_radius": ambiguity.effective_radius,
        "seed": cfg.seed,
        "noise_seed": cfg.noise_seed,
        "steps": cfg.steps,
    }
    log = RunLog(records=records, reference=ref[:cfg.steps], tracked=tracked,
                 provenance=provenance)
    if cfg.outdir:
        out = Path(cfg.outdir)
        out.mkdir(parents=True, exist_ok=True)
        log.write_csv(out / "runlog.csv")
        log.write_meta(out / "meta.txt")
    return log


def compare_runs(logs: Sequence[RunLog]) -> List[dict]:
    """Side-by-side aggregates for runs sharing the same reference."""
    if not logs:
        raise ValueError("need at least one run log")
    base = logs[0]
    rows = []
    for log in logs:
        nsteps = min(base.steps, log.steps)
        if not np.array_equal(base.reference[:nsteps], log.reference[:nsteps]):
            raise ValueError("run logs track different references")
        rows.append({
            "dataset": log.provenance["dataset"],
            "S": log.provenance["S"],
            "eta": log.provenance["eta"],
            "effective_radius": log.provenance["effective_radius"],
            "steps": log.steps,
            "mean_abs_error": log.mean_abs_error().tolist(),
            "max_abs_error": log.max_abs_error().tolist(),
            "total_tracking_cost": log.total_tracking_cost(),
            "mean_solve_time": log.mean_solve_time(),
        })
    return rows


def write_comparison_csv(rows: List[dict], path) -> None:
    keys = ["dataset", "S", "eta", "effective_radius", "steps",
            "total_tracking_cost", "mean_solve_time", "mean_abs_error",
            "max_abs_error"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in rows:
            writer.writerow([row[k] for k in keys])
