"""Firm-value model: geometric Brownian motion with exact path simulation.

The firm value follows ``dX_t / X_t = mu dt + sigma dB_t``.  Simulation is
exact in log space (no Euler bias) and every step carries an intra-step
minimum drawn from the Brownian-bridge minimum law, so barrier crossings of
the continuous-time path are detected without discretization bias.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine

__all__ = ["GbmParams", "MarketState", "PathSet", "simulate_paths", "state_at",
           "market_state"]


@dataclass(frozen=True)
class GbmParams:
    """Black-Scholes firm-value dynamics.

    Attributes
    ----------
    x0 : initial firm value, > 0
    mu : drift per year
    sigma : volatility per sqrt-year, > 0
    """

    x0: float
    mu: float
    sigma: float

    def __post_init__(self):
        if self.x0 <= 0.0:
            raise ValueError(f"x0 must be > 0, got {self.x0}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    @property
    def nu(self) -> float:
        """Log-value drift mu - sigma^2 / 2."""
        return self.mu - 0.5 * self.sigma**2


@dataclass(frozen=True)
class MarketState:
    """The market-observable data ``(t, X_t, X_t*, B_t)`` every pricer uses.

    ``x_min`` is the running minimum of the firm value over [0, t] and ``b``
    the Brownian value, recoverable as ``(ln(x/x0) - nu*t) / sigma``.
    """

    t: float
    x: float
    x_min: float
    b: float

    def __post_init__(self):
        if self.t < 0.0:
            raise ValueError(f"t must be >= 0, got {self.t}")
        if self.x <= 0.0 or self.x_min <= 0.0:
            raise ValueError("firm value and running minimum must be > 0")
        if self.x_min > self.x * (1.0 + 1e-12):
            raise ValueError(f"running minimum {self.x_min} exceeds value {self.x}")


def market_state(params: GbmParams, t: float, x: float, x_min: float) -> MarketState:
    """Build a state, inverting the Brownian value from the firm value."""
    b = (math.log(x / params.x0) - params.nu * t) / params.sigma
    return MarketState(t=t, x=x, x_min=x_min, b=b)


@dataclass(frozen=True)
class PathSet:
    """Simulated firm-value paths on a fixed grid.

    ``running_min[i, k]`` is the continuous-time minimum of path ``i`` over
    ``[0, grid[k]]`` including the bridge-sampled intra-step minima, hence it
    can be strictly below every stored value.
    """

    params: GbmParams
    grid: np.ndarray          # (n_steps + 1,)
    values: np.ndarray        # (n_paths, n_steps + 1)
    running_min: np.ndarray   # (n_paths, n_steps + 1)
    seed: int
    n_paths: int


def simulate_paths(params: GbmParams, horizon: float, n_steps: int,
                   n_paths: int, seed: int, n_workers: int = 1,
                   block_size: int = _engine.DEFAULT_BLOCK_SIZE) -> PathSet:
    """Simulate GBM paths with exact stepping and bridge-corrected minima.

    The same ``(seed, n_steps, n_paths)`` always reproduces bit-identical
    output, regardless of ``n_workers``.

    Parameters
    ----------
    horizon : simulation end time in years, > 0
    n_steps : number of grid steps, >= 1
    n_paths : number of paths, >= 1
    seed : RNG seed; per-block streams are derived from it
    n_workers : thread count (paths are embarrassingly parallel)
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be >= 1")

    def one_block(rng, m, _index):
        rel, step_min, _z = _engine.simulate_log_block(
            rng, params.nu, params.sigma, horizon, n_steps, m
        )
        return rel, np.minimum.accumulate(step_min, axis=1)

    parts = _engine.map_blocks(one_block, n_paths, seed, block_size, n_workers)
    rel = np.concatenate([p[0] for p in parts], axis=0)
    run_rel = np.concatenate([p[1] for p in parts], axis=0)

    grid = np.linspace(0.0, horizon, n_steps + 1)
    log_x0 = math.log(params.x0)
    values = np.empty((n_paths, n_steps + 1))
    values[:, 0] = params.x0
    values[:, 1:] = np.exp(log_x0 + rel)
    running_min = np.empty_like(values)
    running_min[:, 0] = params.x0
    running_min[:, 1:] = np.exp(log_x0 + run_rel)
    return PathSet(params=params, grid=grid, values=values,
                   running_min=running_min, seed=seed, n_paths=n_paths)


def state_at(paths: PathSet, path_index: int, t: float) -> MarketState:
    """Extract ``(t, X_t, X_t*, B_t)`` for one path at a grid time.

    ``t`` must lie exactly on the grid: interpolating would silently bias
    the running minimum.
    """
    k = int(np.searchsorted(paths.grid, t))
    if k >= len(paths.grid) or not math.isclose(paths.grid[k], t, abs_tol=1e-12):
        raise ValueError(f"t={t} is not on the simulation grid")
    x = float(paths.values[path_index, k])
    x_min = float(paths.running_min[path_index, k])
    return market_state(paths.params, float(paths.grid[k]), x, x_min)
