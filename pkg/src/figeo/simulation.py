"""Synthetic data: a hidden angle random walk on the sphere and a staged surrogate.

All randomness comes from :class:`numpy.random.Generator` seeded with
PCG64, which gives bit-identical streams across platforms for a given seed.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int
from .exceptions import InvalidConfig

ELEVATION_MARGIN = 0.1
DEFAULT_STEP = 0.01


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def reflect(values, lo, hi):
    """Fold values back into ``[lo, hi]`` by mirror reflection at the ends."""
    width = hi - lo
    r = np.mod(values - lo, 2.0 * width)
    return lo + np.where(r > width, 2.0 * width - r, r)


def sphere_points(theta):
    """Unit vectors for (azimuth, elevation-from-pole) angle pairs."""
    az, el = theta[:, 0], theta[:, 1]
    return np.column_stack([np.sin(el) * np.cos(az), np.sin(el) * np.sin(az), np.cos(el)])


@dataclass
class SphereWalk:
    theta: np.ndarray
    Y: np.ndarray
    X: np.ndarray
    sigma_noise: float
    sigma_step: float
    seed: int

    def metadata(self):
        return {"n": len(self.X), "sigma_noise": self.sigma_noise, "sigma_step": self.sigma_step,
                "seed": self.seed, "elevation_margin": ELEVATION_MARGIN, "rng": "PCG64",
                "start": "azimuth=pi,elevation=pi/2"}


def simulate_sphere_walk(n=1000, sigma_step=DEFAULT_STEP, sigma_noise=0.0, seed=0):
    """Brownian walk of two angles observed as noisy points on the unit sphere.

    The azimuth wraps modulo 2*pi and the elevation reflects inside
    ``[0.1, pi - 0.1]``. The walk starts at azimuth pi on the equator. Steps
    are drawn before the observation noise, so for a fixed seed the hidden
    path does not depend on ``sigma_noise``.
    """
    n = check_positive_int(n, "n", minimum=2)
    if sigma_step < 0 or sigma_noise < 0:
        raise InvalidConfig("noise and step scales must be nonnegative")
    rng = _rng(seed)
    steps = rng.standard_normal((n - 1, 2)) * sigma_step
    noise = rng.standard_normal((n, 3))

    theta = np.empty((n, 2))
    theta[0] = (np.pi, np.pi / 2)
    lo, hi = ELEVATION_MARGIN, np.pi - ELEVATION_MARGIN
    for t in range(1, n):
        az = np.mod(theta[t - 1, 0] + steps[t - 1, 0], 2.0 * np.pi)
        el = reflect(theta[t - 1, 1] + steps[t - 1, 1], lo, hi)
        theta[t] = (az, el)
    Y = sphere_points(theta)
    X = Y + sigma_noise * noise
    return SphereWalk(theta=theta, Y=Y, X=X, sigma_noise=float(sigma_noise),
                      sigma_step=float(sigma_step), seed=seed)


# Four regimes standing in for merged sleep stages. Each has its own AR(1)
# coefficient (spectral content), marginal scale and mean offset.
STAGE_NAMES = ("REM", "Awake", "S1-S2", "S3-S4")
_STAGE_AR = (0.3, -0.2, 0.6, 0.9)
_STAGE_SCALE = (0.8, 1.3, 1.0, 1.6)
_STAGE_SHIFT = (0.0, 0.6, -0.4, 0.3)


def default_transition(n_stages, stay=0.9):
    P = np.full((n_stages, n_stages), (1.0 - stay) / max(n_stages - 1, 1))
    np.fill_diagonal(P, stay if n_stages > 1 else 1.0)
    return P


def simulate_staged_surrogate(n_segments=200, d=6, seed=0, segment_length=64,
                              n_stages=4, transition=None):
    """Piecewise-stationary multivariate AR(1) series with Markov stage labels.

    Returns ``(X, labels)`` with ``n_segments * segment_length`` rows. Each
    segment is drawn from one stage; stages follow a Markov chain with
    ``transition`` (default: stay with probability 0.9).
    """
    n_segments = check_positive_int(n_segments, "n_segments", minimum=40)
    d = check_positive_int(d, "d", minimum=2)
    segment_length = check_positive_int(segment_length, "segment_length")
    n_stages = check_positive_int(n_stages, "n_stages")
    if n_stages > len(_STAGE_AR):
        raise InvalidConfig(f"at most {len(_STAGE_AR)} stages are defined")
    P = default_transition(n_stages) if transition is None else np.asarray(transition, dtype=float)
    if P.shape != (n_stages, n_stages) or np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0):
        raise InvalidConfig("transition must be a row-stochastic n_stages x n_stages matrix")

    rng = _rng(seed)
    # Per-stage channel mixing so stages differ in their joint structure too.
    mixing = [np.eye(d) + 0.3 * rng.standard_normal((d, d)) / np.sqrt(d) for _ in range(n_stages)]
    stages = np.empty(n_segments, dtype=int)
    stages[0] = rng.integers(n_stages)
    for k in range(1, n_segments):
        stages[k] = rng.choice(n_stages, p=P[stages[k - 1]])

    n = n_segments * segment_length
    X = np.empty((n, d))
    state = np.zeros(d)
    innov = rng.standard_normal((n, d))
    for k, s in enumerate(stages):
        a = _STAGE_AR[s]
        scale = _STAGE_SCALE[s] * np.sqrt(1.0 - a * a)
        for t in range(k * segment_length, (k + 1) * segment_length):
            state = a * state + scale * innov[t]
            X[t] = mixing[s] @ state + _STAGE_SHIFT[s]
    labels = np.repeat(stages, segment_length)
    return X, labels
