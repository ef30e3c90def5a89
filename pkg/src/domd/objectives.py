"""Per-agent loss families and their gradient oracles.

Three families are provided.  tracking_square gives each agent a noisy
scalar observation of one target coordinate and the induced expected square
loss.  synthetic_quadratic centers a quadratic bowl near the target with
zero-mean per-agent offsets, so the network-average loss is minimized
exactly at the target.  synthetic_linear replays bounded linear losses.

Every stochastic oracle takes an explicit generator argument; the caller
owns the stream, which keeps runs reproducible.
"""

from dataclasses import dataclass, replace

import numpy as np

from .geometry import contains, diameter

TRACKED_COORDS = 4


def coordinate_groups(n, d=TRACKED_COORDS):
    """Assign agents to coordinates in near-equal contiguous groups.

    Leading groups absorb the remainder, e.g. n=25 -> sizes 7,6,6,6.
    """
    if n < d:
        raise ValueError(f"need at least {d} agents so every coordinate is observed")
    sizes = [n // d + (1 if k < n % d else 0) for k in range(d)]
    assignment = np.repeat(np.arange(d), sizes)
    return assignment


@dataclass(frozen=True)
class ObservationModel:
    """Which coordinate each agent sees, plus the observation noise support."""

    assignment: np.ndarray
    noise_low: float = -1.0
    noise_high: float = 1.0

    @property
    def noise_var(self):
        return (self.noise_high - self.noise_low) ** 2 / 12.0

    def counts(self, d):
        return np.bincount(self.assignment, minlength=d).astype(float)


@dataclass(frozen=True)
class LossEnsemble:
    """A family of per-agent losses f[i, t] plus its declared constants.

    lipschitz bounds the dual norm of every exact gradient on the domain;
    second_moment bounds E||stochastic gradient||_*^2.  innovation selects
    the tracking oracle's update direction: True replays the raw innovation
    -e_k (z - x_k), whose mean is half the exact gradient; False doubles it
    so the oracle is unbiased for the exact gradient.
    """

    kind: str
    n: int
    d: int
    lipschitz: float
    second_moment: float
    obs: ObservationModel = None
    offsets: np.ndarray = None
    gradients: np.ndarray = None
    noise_scale: float = 0.0
    innovation: bool = True


def tracking_ensemble(n, domain, noise_low=-1.0, noise_high=1.0, innovation=True):
    """Observation-driven square losses over a box domain."""
    if domain.kind != "box":
        raise ValueError("tracking losses are defined on a box domain")
    if noise_high < noise_low:
        raise ValueError("empty observation noise support")
    obs = ObservationModel(coordinate_groups(n, domain.d), noise_low, noise_high)
    span = float((domain.hi - domain.lo).max())
    lipschitz = 2.0 * span
    w_max = max(abs(noise_low), abs(noise_high))
    g = span + w_max
    if not innovation:
        g = 2.0 * g
    return LossEnsemble(
        "tracking_square", n, domain.d, lipschitz, g * g, obs=obs, innovation=innovation
    )


def synthetic_suite(seed, n, d, horizon, domain, kind="synthetic_quadratic",
                    offset_scale=0.2, noise_scale=0.0):
    """Seeded synthetic losses for bound verification.

    synthetic_quadratic: f[i,t](x) = ||x - c[i,t]||^2 with c[i,t] = target_t
    plus zero-mean offsets, so the average loss is minimized at the target.
    On a simplex domain the offsets also sum to zero across coordinates so
    the centers stay on the target's affine hull.  synthetic_linear:
    f[i,t](x) = <g[i,t], x> with dual norm at most one.

    noise_scale > 0 adds bounded uniform noise to the stochastic oracle.
    """
    rng = np.random.default_rng(seed)
    if kind == "synthetic_quadratic":
        offsets = rng.normal(scale=offset_scale, size=(horizon, n, d))
        if domain.kind == "simplex":
            offsets -= offsets.mean(axis=2, keepdims=True)
        offsets -= offsets.mean(axis=1, keepdims=True)
        if domain.kind == "simplex":
            lipschitz = 2.0 * diameter(domain, "linf")
            g = lipschitz + noise_scale
        else:
            lipschitz = 2.0 * diameter(domain, "l2")
            g = lipschitz + noise_scale * np.sqrt(d)
        return LossEnsemble(kind, n, d, lipschitz, g * g, offsets=offsets,
                            noise_scale=noise_scale)
    if kind == "synthetic_linear":
        if domain.kind == "simplex":
            grads = rng.uniform(-1.0, 1.0, size=(horizon, n, d))
            g = 1.0 + noise_scale
        else:
            raw = rng.standard_normal((horizon, n, d))
            norms = np.linalg.norm(raw, axis=2, keepdims=True)
            grads = raw / np.maximum(norms, 1.0)
            g = 1.0 + noise_scale * np.sqrt(d)
        return LossEnsemble(kind, n, d, 1.0, g * g, gradients=grads,
                            noise_scale=noise_scale)
    raise ValueError(f"unknown synthetic kind {kind!r}")


def linear_ensemble(gradients, domain, noise_scale=0.0):
    """Linear losses from an explicit (horizon, n, d) gradient array."""
    gradients = np.asarray(gradients, dtype=float)
    if domain.kind == "simplex":
        worst = float(np.abs(gradients).max(axis=2).max())
        g = worst + noise_scale
    else:
        worst = float(np.linalg.norm(gradients, axis=2).max())
        g = worst + noise_scale * np.sqrt(gradients.shape[2])
    _, n, d = gradients.shape
    return LossEnsemble("synthetic_linear", n, d, worst, g * g,
                        gradients=gradients, noise_scale=noise_scale)


def lipschitz_bound(ens, domain):
    """Analytic Lipschitz constant in the geometry dual norm."""
    if ens.kind == "tracking_square":
        return 2.0 * float((domain.hi - domain.lo).max())
    if ens.kind == "synthetic_quadratic":
        norm = "linf" if domain.kind == "simplex" else "l2"
        return 2.0 * diameter(domain, norm)
    if ens.kind == "synthetic_linear":
        return ens.lipschitz
    raise ValueError(f"unknown ensemble kind {ens.kind!r}")


def _star(path, t):
    return path.states[t - 1]


def _centers(ens, path, t):
    return _star(path, t) + ens.offsets[t - 1]


def tracking_loss_value(ens, i, t, x, path):
    """Expected square observation error for agent i at round t."""
    k = ens.obs.assignment[i]
    gap = _star(path, t)[k] - np.asarray(x, dtype=float)[k]
    return float(gap * gap + ens.obs.noise_var)


def tracking_gradient_exact(ens, i, t, x, path):
    k = ens.obs.assignment[i]
    g = np.zeros(ens.d)
    g[k] = 2.0 * (np.asarray(x, dtype=float)[k] - _star(path, t)[k])
    return g


def tracking_gradient_stochastic(ens, i, t, x, path, rng):
    """One noisy observation turned into an update direction.

    Draws z = target_k + w with w uniform on the observation support and
    returns -e_k (z - x_k), doubled when the ensemble is configured for an
    unbiased oracle.
    """
    k = ens.obs.assignment[i]
    w = rng.uniform(ens.obs.noise_low, ens.obs.noise_high)
    z = _star(path, t)[k] + w
    g = np.zeros(ens.d)
    g[k] = -(z - np.asarray(x, dtype=float)[k])
    if not ens.innovation:
        g[k] *= 2.0
    return g


def loss_value(ens, i, t, x, path):
    x = np.asarray(x, dtype=float)
    if ens.kind == "tracking_square":
        return tracking_loss_value(ens, i, t, x, path)
    if ens.kind == "synthetic_quadratic":
        diff = x - _centers(ens, path, t)[i]
        return float(diff @ diff)
    return float(ens.gradients[t - 1, i] @ x)


def gradient_exact(ens, i, t, x, path):
    x = np.asarray(x, dtype=float)
    if ens.kind == "tracking_square":
        return tracking_gradient_exact(ens, i, t, x, path)
    if ens.kind == "synthetic_quadratic":
        return 2.0 * (x - _centers(ens, path, t)[i])
    return np.array(ens.gradients[t - 1, i])


def gradient_stochastic(ens, i, t, x, path, rng):
    if ens.kind == "tracking_square":
        return tracking_gradient_stochastic(ens, i, t, x, path, rng)
    g = gradient_exact(ens, i, t, x, path)
    if ens.noise_scale > 0:
        g = g + rng.uniform(-ens.noise_scale, ens.noise_scale, ens.d)
    return g


def gradients_exact_batch(ens, t, x_all, path):
    """Exact gradients for every agent at once; x_all has one row per agent."""
    x_all = np.asarray(x_all, dtype=float)
    if ens.kind == "tracking_square":
        ks = ens.obs.assignment
        rows = np.arange(ens.n)
        g = np.zeros((ens.n, ens.d))
        g[rows, ks] = 2.0 * (x_all[rows, ks] - _star(path, t)[ks])
        return g
    if ens.kind == "synthetic_quadratic":
        return 2.0 * (x_all - _centers(ens, path, t))
    return np.array(ens.gradients[t - 1])


def gradients_stochastic_batch(ens, t, x_all, path, rng):
    """Noisy gradients for every agent, one oracle draw per agent."""
    x_all = np.asarray(x_all, dtype=float)
    if ens.kind == "tracking_square":
        ks = ens.obs.assignment
        rows = np.arange(ens.n)
        w = rng.uniform(ens.obs.noise_low, ens.obs.noise_high, ens.n)
        z = _star(path, t)[ks] + w
        g = np.zeros((ens.n, ens.d))
        g[rows, ks] = -(z - x_all[rows, ks])
        if not ens.innovation:
            g *= 2.0
        return g
    g = gradients_exact_batch(ens, t, x_all, path)
    if ens.noise_scale > 0:
        g = g + rng.uniform(-ens.noise_scale, ens.noise_scale, (ens.n, ens.d))
    return g


def global_loss_batch(ens, t, x_rows, path):
    """Network-average loss f_t evaluated at each row of x_rows."""
    x_rows = np.atleast_2d(np.asarray(x_rows, dtype=float))
    if ens.kind == "tracking_square":
        counts = ens.obs.counts(ens.d)
        gaps = _star(path, t)[None, :] - x_rows
        return (gaps * gaps) @ counts / ens.n + ens.obs.noise_var
    if ens.kind == "synthetic_quadratic":
        diff = x_rows - _star(path, t)[None, :]
        spread = float(np.mean(np.sum(ens.offsets[t - 1] ** 2, axis=1)))
        return np.sum(diff * diff, axis=1) + spread
    return x_rows @ ens.gradients[t - 1].mean(axis=0)


def global_loss(ens, t, x, path):
    return float(global_loss_batch(ens, t, np.asarray(x)[None, :], path)[0])


def centers_outside_domain(ens, path, domain):
    """Count quadratic centers that leave the domain; should be 0 for valid suites."""
    if ens.kind != "synthetic_quadratic":
        return 0
    bad = 0
    for t in range(1, path.horizon + 1):
        for c in _centers(ens, path, t):
            if not contains(domain, c):
                bad += 1
    return bad


def with_innovation(ens, innovation):
    """Copy of a tracking ensemble with the other oracle convention."""
    if ens.kind != "tracking_square":
        raise ValueError("the innovation flag only applies to tracking losses")
    g = np.sqrt(ens.second_moment)
    if ens.innovation and not innovation:
        g = 2.0 * g
    elif not ens.innovation and innovation:
        g = 0.5 * g
    return replace(ens, innovation=innovation, second_moment=g * g)
