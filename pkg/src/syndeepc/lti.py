"""Discrete-time stochastic LTI simulation.

The plant model is

    x(k+1) = A x(k) + B u(k) + E v(k)
    y(k)   = C x(k) + D u(k) + F v(k)

with v(k) an i.i.d. disturbance owned by a :class:`NoiseModel`.  All types
are immutable values; the random stream is derived from the caller-supplied
seed, so simulation is repeatable bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

GRAVITY = 9.81

# Per-rotor thrust deviation box around hover (N), asymmetric because the
# rotors cannot push downward past zero thrust.
QUADCOPTER_INPUT_BOX = (-0.7007, 0.2993)


@dataclass(frozen=True)
class SystemRealization:
    """State-space matrices of a discrete-time LTI system plus sampling time."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    Ts: float = 1.0

    def __post_init__(self):
        for name in "ABCDEF":
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        n, m, l, q = self.n, self.m, self.l, self.q
        expected = {"A": (n, n), "B": (n, m), "E": (n, q), "C": (l, n), "D": (l, m), "F": (l, q)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"matrix {name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def l(self) -> int:
        return self.C.shape[0]

    @property
    def q(self) -> int:
        return self.E.shape[1]

    def controllability_matrix(self) -> np.ndarray:
        blocks = []
        Ak_B = self.B
        for _ in range(self.n):
            blocks.append(Ak_B)
            Ak_B = self.A @ Ak_B
        return np.hstack(blocks)

    def is_controllable(self, rtol: Optional[float] = None) -> bool:
        ctrb = self.controllability_matrix()
        return int(np.linalg.matrix_rank(ctrb, tol=rtol)) == self.n


@dataclass(frozen=True)
class NoiseModel:
    """Disturbance process: either none or i.i.d. Gaussian per channel."""

    kind: str = "none"
    stddev: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian-iid"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.stddev < 0:
            raise ValueError("stddev must be nonnegative")

    def stream(self, q: int):
        """Return a draw(k) -> q-vector callable for one simulation pass."""
        if self.kind == "none" or self.stddev == 0.0:
            zero = np.zeros(q)
            return lambda: zero
        rng = np.random.default_rng(self.seed)
        return lambda: rng.normal(0.0, self.stddev, size=q)


@dataclass(frozen=True)
class Trajectory:
    """A simulated or measured input/output record of equal length."""

    inputs: np.ndarray   # (T, m)
    outputs: np.ndarray  # (T, l)
    states: Optional[np.ndarray] = None  # (T, n), simulation only
    k0: int = 0

    def __post_init__(self):
        object.__setattr__(self, "inputs", np.atleast_2d(np.asarray(self.inputs, dtype=float)))
        object.__setattr__(self, "outputs", np.atleast_2d(np.asarray(self.outputs, dtype=float)))
        if len(self.inputs) != len(self.outputs):
            raise ValueError("inputs and outputs must have equal length")

    def __len__(self) -> int:
        return len(self.inputs)


def step(sys: SystemRealization, x: np.ndarray, u: np.ndarray, v: Optional[np.ndarray] = None):
    """One exact update of the plant equations; returns (x_next, y)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    v = np.zeros(sys.q) if v is None else np.asarray(v, dtype=float).reshape(-1)
    if x.size != sys.n or u.size != sys.m or v.size != sys.q:
        raise ValueError(
            f"dimension mismatch: got x:{x.size} u:{u.size} v:{v.size}, "
            f"system expects n:{sys.n} m:{sys.m} q:{sys.q}")
    x_next = sys.A @ x + sys.B @ u + sys.E @ v
    y = sys.C @ x + sys.D @ u + sys.F @ v
    return x_next, y


def simulate(sys: SystemRealization, x0: np.ndarray, inputs: Sequence[np.ndarray],
             noise: Optional[NoiseModel] = None) -> Trajectory:
    """Iterate :func:`step` over an input sequence, recording states and outputs."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        # a flat sequence is a scalar-input signal when m == 1, else one step
        inputs = inputs.reshape(-1, 1) if sys.m == 1 else inputs.reshape(1, -1)
    if inputs.shape[0] == 0:
        raise ValueError("inputs must be nonempty")
    noise = noise or NoiseModel()
    draw = noise.stream(sys.q)
    x = np.asarray(x0, dtype=float).reshape(-1)
    states, outputs = [], []
    for u in inputs:
        states.append(x)
        x, y = step(sys, x, u, draw())
        outputs.append(y)
    return Trajectory(inputs=inputs, outputs=np.array(outputs), states=np.array(states))


def _quadcopter_continuous():
    """Hover linearization: per-axis double integrators with small-angle
    attitude coupling, four identical rotors as inputs."""
    mass = 4 * 0.7007 / GRAVITY  # hover thrust balances weight at u = 0
    arm = 0.17
    Ix = Iy = 7.0e-3
    Iz = 1.2e-2
    c_tau = 0.016  # rotor drag torque per unit thrust

    A = np.zeros((12, 12))
    # state: col(x, y, z, vx, vy, vz, phi, theta, psi, p, q, r)
    A[0:3, 3:6] = np.eye(3)
    A[3, 7] = GRAVITY    # pitch tilts thrust into +x
    A[4, 6] = -GRAVITY   # roll tilts thrust into -y
    A[6:9, 9:12] = np.eye(3)

    B = np.zeros((12, 4))
    B[5, :] = 1.0 / mass
    B[9, :] = arm / Ix * np.array([0.0, -1.0, 0.0, 1.0])
    B[10, :] = arm / Iy * np.array([-1.0, 0.0, 1.0, 0.0])
    B[11, :] = c_tau / Iz * np.array([1.0, -1.0, 1.0, -1.0])
    return A, B


def quadcopter_model(Ts: float = 0.05) -> SystemRealization:
    """Zero-order-hold discretization of a 12-state, 4-rotor hover model with
    full state measurement and per-channel measurement noise."""
    if Ts <= 0:
        raise ValueError("Ts must be positive")
    Ac, Bc = _quadcopter_continuous()
    n, m = 12, 4
    # ZOH: expm of the augmented [[A, B], [0, 0]] block
    M = np.zeros((n + m, n + m))
    M[:n, :n] = Ac * Ts
    M[:n, n:] = Bc * Ts
    Md = expm(M)
    A = Md[:n, :n]
    B = Md[:n, n:]
    C = np.eye(12)
    D = np.zeros((12, 4))
    E = np.zeros((12, 12))
    F = np.eye(12)
    return SystemRealization(A=A, B=B, C=C, D=D, E=E, F=F, Ts=Ts)


def save_model(sys: SystemRealization, path) -> None:
    """Plain-text model file: header ``n m l q Ts`` then A, B, E, C, D, F
    row-major, separated by blank lines."""
    with open(path, "w") as fh:
        fh.write(f"{sys.n} {sys.m} {sys.l} {sys.q} {float(sys.Ts)!r}\n\n")
        for M in (sys.A, sys.B, sys.E, sys.C, sys.D, sys.F):
            for row in M:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write("\n")


def load_model(path) -> SystemRealization:
    """Inverse of :func:`save_model`."""
    with open(path) as fh:
        chunks = [c for c in fh.read().split("\n\n") if c.strip()]
    header = chunks[0].split()
    n, m, l, q = (int(v) for v in header[:4])
    Ts = float(header[4])
    mats = []
    for chunk, rows in zip(chunks[1:], (n, n, n, l, l, l)):
        data = np.array([[float(v) for v in line.split()]
                         for line in chunk.strip().splitlines()])
        if data.shape[0] != rows:
            raise ValueError("model file matrix block has wrong row count")
        mats.append(data)
    A, B, E, C, D, F = mats
    return SystemRealization(A=A, B=B, C=C, D=D, E=E, F=F, Ts=Ts)
