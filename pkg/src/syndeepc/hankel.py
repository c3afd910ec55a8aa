"""Block-Hankel data matrices, persistency of excitation, and the
backward/forward split used by data-enabled predictive control.

Column convention for stacked input/output data, fixed repo-wide: each
column is col(u-window over the full depth, y-window over the full depth),
i.e. the input block rows come first, then the output block rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

# Membership threshold for span_residual on unit-scale trajectories: well
# above accumulated round-off, far below signal scale.
SPAN_TOL = 1e-8


@dataclass(frozen=True)
class HankelMatrix:
    """Depth-K block-Hankel matrix of a w-dimensional signal of length N."""

    data: np.ndarray  # (w*K, N-K+1)
    w: int
    K: int
    N: int

    @property
    def columns(self) -> int:
        return self.data.shape[1]

    def block(self, i: int, j: int) -> np.ndarray:
        """Block entry (i, j), equal to signal sample i + j."""
        return self.data[i * self.w:(i + 1) * self.w, j]


@dataclass(frozen=True)
class HankelBlocks:
    """Backward/forward split of a stacked depth-(Ki+K) data matrix."""

    Ub: np.ndarray  # (m*Ki, R)
    Yb: np.ndarray  # (l*Ki, R)
    Uf: np.ndarray  # (m*K, R)
    Yf: np.ndarray  # (l*K, R)
    m: int
    l: int
    Ki: int
    K: int

    @property
    def R(self) -> int:
        return self.Uf.shape[1]

    def stacked(self) -> np.ndarray:
        """Reconstitute the full (m+l)(Ki+K) x R matrix in the repo column
        convention (all input steps, then all output steps)."""
        return np.vstack([self.Ub, self.Uf, self.Yb, self.Yf])

    @staticmethod
    def from_stacked(data: np.ndarray, m: int, l: int, Ki: int, K: int) -> "HankelBlocks":
        """Split a stacked (m+l)(Ki+K) x R matrix (or synthetic atom matrix
        of the same row layout) into backward/forward blocks."""
        data = np.asarray(data, dtype=float)
        depth = Ki + K
        if data.shape[0] != (m + l) * depth:
            raise ValueError(
                f"stacked matrix has {data.shape[0]} rows, expected {(m + l) * depth}")
        u_part = data[:m * depth]
        y_part = data[m * depth:]
        return HankelBlocks(
            Ub=u_part[:m * Ki], Uf=u_part[m * Ki:],
            Yb=y_part[:l * Ki], Yf=y_part[l * Ki:],
            m=m, l=l, Ki=Ki, K=K)


@dataclass(frozen=True)
class InitialWindow:
    """The Ki most recent applied inputs and measured outputs."""

    u_ini: np.ndarray  # (m*Ki,)
    y_ini: np.ndarray  # (l*Ki,)

    def __post_init__(self):
        object.__setattr__(self, "u_ini", np.asarray(self.u_ini, dtype=float).reshape(-1))
        object.__setattr__(self, "y_ini", np.asarray(self.y_ini, dtype=float).reshape(-1))


class ExcitationReport(NamedTuple):
    flag: bool
    rank: int
    required_rank: int
    reason: str = ""


def _as_signal(signal) -> np.ndarray:
    signal = np.asarray(signal, dtype=float)
    if signal.ndim == 1:
        signal = signal.reshape(-1, 1)
    return signal


def build_hankel(signal, K: int) -> HankelMatrix:
    """Build the depth-K block-Hankel matrix of a (N, w) signal.

    Block (i, j) equals signal sample i + j; columns number N - K + 1.
    """
    signal = _as_signal(signal)
    N, w = signal.shape
    if K < 1:
        raise ValueError("depth K must be >= 1")
    if N < K:
        raise ValueError("horizon exceeds data")
    cols = N - K + 1
    data = np.empty((w * K, cols))
    for i in range(K):
        data[i * w:(i + 1) * w, :] = signal[i:i + cols].T
    return HankelMatrix(data=data, w=w, K=K, N=N)


def stacked_hankel(inputs, outputs, depth: int) -> np.ndarray:
    """Stacked data matrix col(input Hankel, output Hankel) of given depth."""
    Hu = build_hankel(inputs, depth)
    Hy = build_hankel(outputs, depth)
    return np.vstack([Hu.data, Hy.data])


def is_persistently_exciting(signal, order: int, rank_tol: Optional[float] = None) -> ExcitationReport:
    """Rank test of Definition-style persistency of excitation.

    The numerical rank uses tau = max(dims) * eps * sigma_max unless an
    explicit tolerance is given.
    """
    signal = _as_signal(signal)
    N, w = signal.shape
    required = w * order
    if N < order:
        return ExcitationReport(False, 0, required, "N < (w+1)K-1 cannot hold")
    H = build_hankel(signal, order)
    s = np.linalg.svd(H.data, compute_uv=False)
    if rank_tol is None:
        rank_tol = max(H.data.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > rank_tol))
    return ExcitationReport(rank == required, rank, required)


def min_data_length(m: int, n: int, Ki: int, K: int) -> int:
    """Shortest data length guaranteeing excitation of order n + Ki + K:
    (m+1)(n+Ki+K) - 1."""
    if m < 1 or n < 1 or K < 1 or Ki < 0:
        raise ValueError("m, n, K must be positive and Ki nonnegative")
    return (m + 1) * (n + Ki + K) - 1


def split_blocks(H, m: int, l: int, Ki: int, K: int) -> HankelBlocks:
    """Split a stacked depth-(Ki+K) data matrix into (Ub, Yb, Uf, Yf)."""
    data = H.data if isinstance(H, HankelMatrix) else np.asarray(H, dtype=float)
    return HankelBlocks.from_stacked(data, m=m, l=l, Ki=Ki, K=K)


def span_residual(data, trajectory) -> float:
    """2-norm of the least-squares residual of a stacked trajectory against
    the column space of the data matrix; ~0 certifies membership."""
    if isinstance(data, HankelBlocks):
        M = data.stacked()
    elif isinstance(data, HankelMatrix):
        M = data.data
    else:
        M = np.asarray(data, dtype=float)
    t = np.asarray(trajectory, dtype=float).reshape(-1)
    if t.size != M.shape[0]:
        raise ValueError(f"trajectory length {t.size} does not match {M.shape[0]} rows")
    g, *_ = np.linalg.lstsq(M, t, rcond=None)
    return float(np.linalg.norm(M @ g - t))


def stack_trajectory(inputs, outputs) -> np.ndarray:
    """Stack an input/output window into the repo column convention."""
    u = np.asarray(inputs, dtype=float).reshape(-1)
    y = np.asarray(outputs, dtype=float).reshape(-1)
    return np.concatenate([u, y])


def save_trajectory_csv(traj, path) -> None:
    """One row per time step, columns u_1..u_m, y_1..y_l, with header."""
    u = np.atleast_2d(traj.inputs)
    y = np.atleast_2d(traj.outputs)
    header = [f"u_{i+1}" for i in range(u.shape[1])] + [f"y_{i+1}" for i in range(y.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for uk, yk in zip(u, y):
            writer.writerow([repr(float(v)) for v in uk]
                            + [repr(float(v)) for v in yk])


def load_trajectory_csv(path):
    """Inverse of :func:`save_trajectory_csv`; returns (inputs, outputs)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        m = sum(1 for h in header if h.startswith("u_"))
        l = sum(1 for h in header if h.startswith("y_"))
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows)
    return data[:, :m], data[:, m:m + l]
