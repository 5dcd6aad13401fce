"""What each agent knows about the default barrier.

The barrier ``L`` takes finitely many values (``BarrierLaw``).  A density
model describes how market information updates the conditional law of
``L``: either the barrier is independent of the market filtration
(``Independent``, density identically 1) or it is decided by the sign of
the driving Brownian motion at a future signal horizon
(``BrownianSignal``), which produces a genuinely time-varying conditional
density.  The insider observes the barrier through additive Gaussian noise
whose variance decreases over time (``NoiseModel``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import log_ndtr, ndtri

from .kernels import NumericalError

__all__ = [
    "BarrierLaw",
    "Independent",
    "BrownianSignal",
    "DensityModel",
    "NoiseModel",
    "density",
    "density_all",
    "info_drift",
    "info_drift_all",
    "insider_drift",
    "check_compatible",
    "sample_barrier",
    "sample_noise_path",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class BarrierLaw:
    """Discrete law of the default barrier: P(L = levels[i]) = weights[i]."""

    levels: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(l) for l in self.levels)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "weights", weights)
        if len(levels) != len(weights) or not levels:
            raise ValueError("levels and weights must be non-empty and same length")
        if any(l <= 0.0 for l in levels):
            raise ValueError(f"levels must be > 0, got {levels}")
        if any(l2 <= l1 for l1, l2 in zip(levels, levels[1:])):
            raise ValueError(f"levels must be strictly increasing, got {levels}")
        if any(w <= 0.0 for w in weights):
            raise ValueError(f"weights must be > 0, got {weights}")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got sum {sum(weights)}")

    @property
    def n(self) -> int:
        return len(self.levels)

    def levels_array(self) -> np.ndarray:
        return np.asarray(self.levels)

    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def check_above(self, x0: float) -> None:
        """Require every level below the initial firm value (X_0 > L a.s.)."""
        if self.levels[-1] >= x0:
            raise ValueError(
                f"all barrier levels must lie below x0={x0}, got {self.levels}"
            )


@dataclass(frozen=True)
class Independent:
    """Barrier independent of the market filtration; density identically 1."""


@dataclass(frozen=True)
class BrownianSignal:
    """Two-level barrier decided by the driving Brownian motion at ``t0``.

    ``L`` equals the low level when ``B_{t0} <= c`` and the high level
    otherwise.  Valid for pricing times t < t0; consistency with a
    two-level :class:`BarrierLaw` requires ``Phi(c / sqrt(t0)) = weights[0]``
    (use :meth:`for_law`).
    """

    t0: float
    c: float

    def __post_init__(self):
        if self.t0 <= 0.0:
            raise ValueError(f"signal horizon t0 must be > 0, got {self.t0}")

    @classmethod
    def for_law(cls, t0: float, law: BarrierLaw) -> "BrownianSignal":
        """Threshold implied by the law's low-level weight."""
        if law.n != 2:
            raise ValueError("BrownianSignal supports exactly two barrier levels")
        return cls(t0=t0, c=math.sqrt(t0) * float(ndtri(law.weights[0])))


DensityModel = Union[Independent, BrownianSignal]


def check_compatible(model: DensityModel, law: BarrierLaw) -> None:
    """Validate that a density model can be used with a barrier law."""
    if isinstance(model, Independent):
        return
    if law.n != 2:
        raise ValueError("BrownianSignal supports exactly two barrier levels")
    implied = math.exp(log_ndtr(model.c / math.sqrt(model.t0)))
    if abs(implied - law.weights[0]) > 1e-9:
        raise ValueError(
            f"signal threshold c={model.c} implies low-level weight {implied}, "
            f"law has {law.weights[0]}; build the model with BrownianSignal.for_law"
        )


def _signal_logs(model: BrownianSignal, t, b):
    """Log conditional probabilities and log normal hazards of both branches.

    Returns ``(log p_low, log p_high, s)`` with ``s = sqrt(t0 - t)``;
    everything broadcasts over ``b``.
    """
    if np.any(np.asarray(t) >= model.t0):
        raise ValueError(
            f"density model is only valid before the signal horizon t0={model.t0}"
        )
    s = np.sqrt(model.t0 - t)
    d_low = (model.c - np.asarray(b)) / s
    sqrt_t0 = math.sqrt(model.t0)
    log_p_low = log_ndtr(d_low) - log_ndtr(model.c / sqrt_t0)
    log_p_high = log_ndtr(-d_low) - log_ndtr(-model.c / sqrt_t0)
    return log_p_low, log_p_high, s, d_low


def density_all(model: DensityModel, law: BarrierLaw, t, b) -> np.ndarray:
    """Conditional density of the barrier at every level, stacked last axis.

    ``out[..., i]`` is the Radon-Nikodym density of the conditional law of
    ``L`` given the market state ``(t, b)`` against its prior law, evaluated
    at ``levels[i]``.  The weighted total ``sum_i weights[i] * out[..., i]``
    is identically 1.
    """
    b = np.asarray(b, dtype=float)
    if isinstance(model, Independent):
        return np.ones(b.shape + (law.n,))
    log_p_low, log_p_high, _s, _d = _signal_logs(model, t, b)
    return np.stack([np.exp(log_p_low), np.exp(log_p_high)], axis=-1)


def density(model: DensityModel, law: BarrierLaw, t: float, level: float,
            b: float) -> float:
    """Conditional density of the barrier at one of the law's levels."""
    return float(density_all(model, law, t, b)[..., _level_index(law, level)])


def info_drift_all(model: DensityModel, law: BarrierLaw, t, b) -> np.ndarray:
    """Logarithmic derivative of the density in the Brownian coordinate.

    This is the drift the barrier knowledge adds to the Brownian motion of
    an agent who knows ``L = levels[i]``; zero for the independent model.
    """
    b = np.asarray(b, dtype=float)
    if isinstance(model, Independent):
        return np.zeros(b.shape + (law.n,))
    _pl, _ph, s, d_low = _signal_logs(model, t, b)
    log_phi_low = -0.5 * d_low**2 - _LOG_SQRT_2PI
    # hazard ratios phi(d)/Phi(d), computed in log space for tail stability
    drift_low = -np.exp(log_phi_low - log_ndtr(d_low)) / s
    drift_high = np.exp(log_phi_low - log_ndtr(-d_low)) / s
    return np.stack([drift_low, drift_high], axis=-1)


def info_drift(model: DensityModel, law: BarrierLaw, t: float, level: float,
               b: float) -> float:
    """Information drift for a single known barrier level."""
    return float(info_drift_all(model, law, t, b)[..., _level_index(law, level)])


def _level_index(law: BarrierLaw, level: float) -> int:
    for i, l in enumerate(law.levels):
        if math.isclose(l, level, rel_tol=0.0, abs_tol=1e-12):
            return i
    raise ValueError(f"level {level} is not one of the law's levels {law.levels}")


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian observation noise with decreasing variance.

    The insider sees ``L + eps_t`` where ``eps_t`` is a Brownian motion run
    on the decreasing clock ``u(t) = sigma_eps^2 / (1 + t)``, which gives
    backwardly independent increments: the noise "clears up" as t grows.
    """

    sigma_eps: float

    def __post_init__(self):
        if self.sigma_eps <= 0.0:
            raise ValueError(f"sigma_eps must be > 0, got {self.sigma_eps}")

    def variance(self, t) -> float:
        """Noise variance u(t) at time t >= 0."""
        return self.sigma_eps**2 / (1.0 + np.asarray(t, dtype=float))

    def increment_var(self, t: float, theta: float) -> float:
        """Variance of ``eps_theta - eps_t`` for ``theta >= t``."""
        if theta < t:
            raise ValueError(f"need theta >= t, got t={t}, theta={theta}")
        return float(self.variance(t) - self.variance(theta))

    def log_density(self, t, x) -> np.ndarray:
        """Log of the marginal N(0, u(t)) density at x."""
        u = self.variance(t)
        return -0.5 * np.asarray(x, dtype=float) ** 2 / u - 0.5 * np.log(u) - _LOG_SQRT_2PI

    def q(self, t, x):
        """Marginal density of the noise at time t, evaluated at x."""
        out = np.exp(self.log_density(t, x))
        return float(out) if np.ndim(out) == 0 else out


def insider_drift(model: DensityModel, law: BarrierLaw, noise: NoiseModel,
                  t: float, b, noisy_level):
    """Information drift of the noisy observer.

    Averages the known-barrier drift over the conditional law of ``L`` given
    the market state and the current noisy observation ``noisy_level``:
    weights are ``weights[i] * density_i * q_t(noisy_level - levels[i])``,
    computed in log space so they cannot underflow to a zero denominator.
    """
    b = np.asarray(b, dtype=float)
    x = np.asarray(noisy_level, dtype=float)
    rho = info_drift_all(model, law, t, b)
    levels = law.levels_array()
    log_w = (
        np.log(law.weights_array())
        + np.log(density_all(model, law, t, b))
        + noise.log_density(t, x[..., None] - levels)
    )
    log_w = log_w - np.max(log_w, axis=-1, keepdims=True)
    w = np.exp(log_w)
    denom = w.sum(axis=-1)
    if np.any(~np.isfinite(denom)) or np.any(denom == 0.0):
        raise NumericalError("insider drift weights degenerated")
    out = (w * rho).sum(axis=-1) / denom
    return float(out) if out.ndim == 0 else out


def sample_barrier(law: BarrierLaw, seed: int, size: int | None = None):
    """Draw barrier realizations from the law; deterministic per seed."""
    rng = np.random.default_rng(seed)
    draws = rng.choice(law.levels_array(), size=size, p=law.weights_array())
    return float(draws) if size is None else draws


def sample_noise_path(noise: NoiseModel, grid, seed: int) -> np.ndarray:
    """Sample the noise process on a time grid; deterministic per seed.

    The path is the time-changed Brownian motion evaluated at ``u(t_k)``,
    built from independent increments starting at the latest grid time (the
    smallest Brownian clock value), which preserves backwardly independent
    increments exactly.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    if np.any(np.diff(grid) <= 0.0) or grid[0] < 0.0:
        raise ValueError("grid must be strictly increasing and non-negative")
    u = np.asarray(noise.variance(grid))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(len(grid))
    # variances of the independent pieces, from the last grid point backwards
    piece_var = np.empty(len(grid))
    piece_var[-1] = u[-1]
    piece_var[:-1] = u[:-1] - u[1:]
    pieces = np.sqrt(piece_var) * z
    eps = np.cumsum(pieces[::-1])[::-1]
    return eps
