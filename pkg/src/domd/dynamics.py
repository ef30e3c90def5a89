"""Target motion: known linear dynamics plus unstructured perturbations.

The moving point the agents chase follows x[t+1] = A x[t] + v[t], where A
is known to every agent and v[t] is an arbitrary disturbance sequence.  The
accumulated disturbance size sum_t ||v[t]|| is the path variation that the
regret bounds are written against.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import csvio
from .geometry import check_nonexpansive

RECONSTRUCTION_TOL = 1e-12


@dataclass(frozen=True)
class LinearDynamics:
    """Square transition matrix with an optional cached non-expansiveness verdict."""

    a: np.ndarray
    d: int
    nonexpansive: bool = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.all(np.isfinite(a)):
            raise ValueError("transition matrix has non-finite entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "d", a.shape[0])


def linear_dynamics(a):
    a = np.asarray(a, dtype=float)
    return LinearDynamics(a, a.shape[0])


def identity_dynamics(d):
    return linear_dynamics(np.eye(d))


def with_nonexpansive_verdict(dyn, geom, trials=500, seed=0):
    """Return a copy of dyn carrying the divergence non-expansiveness verdict."""
    report = check_nonexpansive(geom, dyn.a, trials=trials, seed=seed)
    return replace(dyn, nonexpansive=report.passed)


def ncv_dynamics(eps):
    """Near-constant-velocity model on (hpos, hvel, vpos, vvel).

    Each position integrates its velocity over a sampling interval eps; the
    two axes are decoupled, so A = I_2 kron [[1, eps], [0, 1]].
    """
    if eps <= 0:
        raise ValueError("sampling interval must be positive")
    block = np.array([[1.0, eps], [0.0, 1.0]])
    return linear_dynamics(np.kron(np.eye(2), block))


def ncv_noise_covariance(eps, sigma_v2):
    """Process noise covariance of the NCV model:
    sigma_v2 * I_2 kron [[eps^3/3, eps^2/2], [eps^2/2, eps]]."""
    if eps <= 0:
        raise ValueError("sampling interval must be positive")
    if sigma_v2 < 0:
        raise ValueError("noise intensity must be nonnegative")
    block = np.array([[eps**3 / 3.0, eps**2 / 2.0], [eps**2 / 2.0, eps]])
    return sigma_v2 * np.kron(np.eye(2), block)


def _ncv_noise_factor(eps, sigma_v2):
    # closed-form Cholesky factor of one 2x2 block of the NCV covariance
    s = np.sqrt(sigma_v2)
    l11 = s * eps ** 1.5 / np.sqrt(3.0)
    l21 = s * np.sqrt(3.0 * eps) / 2.0
    l22 = s * np.sqrt(eps) / 2.0
    block = np.array([[l11, 0.0], [l21, l22]])
    return np.kron(np.eye(2), block)


@dataclass(frozen=True)
class NoiseModel:
    """Disturbance generator for the target path.

    kind: zero | gaussian_ncv | constant_drift | custom_sequence.
    gaussian_ncv draws v[t] ~ N(0, Sigma(eps, sigma_v2)) from its own seeded
    stream; constant_drift repeats a fixed vector; custom_sequence replays a
    caller-supplied array.
    """

    kind: str
    sigma_v2: float = 0.0
    seed: int = 0
    eps: float = 0.1
    drift: np.ndarray = None
    sequence: np.ndarray = None


def zero_noise():
    return NoiseModel("zero")


def gaussian_ncv_noise(sigma_v2, eps, seed):
    if sigma_v2 < 0:
        raise ValueError("sigma_v2 must be nonnegative")
    return NoiseModel("gaussian_ncv", sigma_v2=float(sigma_v2), eps=float(eps), seed=int(seed))


def constant_drift_noise(drift):
    drift = np.asarray(drift, dtype=float)
    return NoiseModel("constant_drift", drift=drift)


def custom_noise(sequence):
    sequence = np.asarray(sequence, dtype=float)
    if sequence.ndim != 2:
        raise ValueError("custom noise must be a (horizon, d) array")
    return NoiseModel("custom_sequence", sequence=sequence)


@dataclass(frozen=True)
class MinimizerPath:
    """Target states x[1..T+1] (rows) and the disturbances v[1..T] that built them."""

    states: np.ndarray
    noise: np.ndarray

    @property
    def horizon(self):
        return self.states.shape[0] - 1

    @property
    def d(self):
        return self.states.shape[1]


def _noise_sequence(dyn, noise, horizon):
    if noise.kind == "zero":
        return np.zeros((horizon, dyn.d))
    if noise.kind == "gaussian_ncv":
        if dyn.d != 4:
            raise ValueError("gaussian_ncv noise requires the 4-dimensional NCV model")
        factor = _ncv_noise_factor(noise.eps, noise.sigma_v2)
        rng = np.random.default_rng(noise.seed)
        return rng.standard_normal((horizon, 4)) @ factor.T
    if noise.kind == "constant_drift":
        if noise.drift is None or noise.drift.shape != (dyn.d,):
            raise ValueError("constant_drift needs a drift vector matching the state dimension")
        return np.tile(noise.drift, (horizon, 1))
    if noise.kind == "custom_sequence":
        if noise.sequence is None or noise.sequence.shape != (horizon, dyn.d):
            raise ValueError("custom sequence shape must be (horizon, d)")
        return np.array(noise.sequence, dtype=float)
    raise ValueError(f"unknown noise kind {noise.kind!r}")


def generate_path(dyn, noise, x0, horizon):
    """Roll the target forward: states[0] = x0, states[t+1] = A states[t] + v[t]."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dyn.d,):
        raise ValueError("initial state dimension mismatch")
    v = _noise_sequence(dyn, noise, horizon)
    states = np.empty((horizon + 1, dyn.d))
    states[0] = x0
    for t in range(horizon):
        states[t + 1] = dyn.a @ states[t] + v[t]
    return MinimizerPath(states, v)


def verify_reconstruction(path, dyn):
    """Max residual of states[t+1] - (A states[t] + v[t]); 0 for generated paths."""
    pred = path.states[:-1] @ dyn.a.T + path.noise
    return float(np.max(np.abs(pred - path.states[1:]))) if path.horizon else 0.0


def path_variation(path, dyn, norm="l2"):
    """Accumulated disturbance size sum_t ||states[t+1] - A states[t]||."""
    if path.states.shape[0] < 2:
        raise ValueError("path variation needs at least two states")
    residual = path.states[1:] - path.states[:-1] @ dyn.a.T
    if norm == "l2":
        per_step = np.linalg.norm(residual, axis=1)
    elif norm == "l1":
        per_step = np.abs(residual).sum(axis=1)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return float(per_step.sum())


def save_path_csv(path, file, comments=()):
    """One row per state: t, x(1..d), v(1..d); the final row has no noise."""
    d = path.d
    header = ["t"] + [f"x{k + 1}" for k in range(d)] + [f"v{k + 1}" for k in range(d)]
    rows = []
    for t in range(path.states.shape[0]):
        row = [t + 1] + list(path.states[t])
        row += list(path.noise[t]) if t < path.noise.shape[0] else [None] * d
        rows.append(row)
    csvio.write_csv(file, header, rows, comments)


def load_path_csv(file):
    _, header, rows = csvio.read_csv(file)
    d = (len(header) - 1) // 2
    states = np.array([[float(r[1 + k]) for k in range(d)] for r in rows])
    noise = np.array([[float(r[1 + d + k]) for k in range(d)] for r in rows[:-1]])
    return MinimizerPath(states, noise)
