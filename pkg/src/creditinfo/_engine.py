"""Low-level blocked simulation machinery shared by the simulators.

Paths are generated in fixed-size blocks, each block drawing from its own
RNG stream derived from ``(seed, block_index)``.  The block decomposition
depends only on ``(n_paths, block_size)``, never on the worker count, so
results are bit-identical whether blocks run sequentially or on a thread
pool.  Per-block partial results are always combined in block order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BLOCK_SIZE = 1 << 16

# Domain tag keeping these streams distinct from any other SeedSequence use.
_STREAM_TAG = 0x1A2B_90CE


def block_rng(seed: int, block_index: int) -> np.random.Generator:
    """Independent generator for one path block."""
    return np.random.default_rng(
        np.random.SeedSequence([_STREAM_TAG, int(seed), int(block_index)])
    )


def block_sizes(n_paths: int, block_size: int = DEFAULT_BLOCK_SIZE) -> list[int]:
    """Sizes of the fixed block decomposition of ``n_paths``."""
    n_full, rem = divmod(int(n_paths), int(block_size))
    return [block_size] * n_full + ([rem] if rem else [])


def map_blocks(fn, n_paths: int, seed: int, block_size: int = DEFAULT_BLOCK_SIZE,
               n_workers: int = 1) -> list:
    """Apply ``fn(rng, m, block_index)`` to every block, in block order.

    Returns the per-block results as a list indexed by block; caller combines
    them (in that order) so the reduction is worker-count independent.
    """
    sizes = block_sizes(n_paths, block_size)
    if n_workers <= 1 or len(sizes) <= 1:
        return [fn(block_rng(seed, i), m, i) for i, m in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futures = [
            pool.submit(fn, block_rng(seed, i), m, i) for i, m in enumerate(sizes)
        ]
        return [f.result() for f in futures]


def simulate_log_block(rng: np.random.Generator, nu: float, sigma: float,
                       h: float, n_steps: int, m: int):
    """One block of exact log-space GBM increments with bridge step minima.

    Draw order per block is fixed (normals, then uniforms) so that output is
    reproducible for a given stream.

    Returns
    -------
    rel : (m, n_steps) ndarray
        Cumulative log increment at the end of each step, relative to the
        starting log value.
    step_min : (m, n_steps) ndarray
        Continuous-time minimum of the log increment within each step,
        sampled exactly from the Brownian-bridge minimum law given the step
        endpoints.
    z : (m, n_steps) ndarray
        The standard normal innovations (callers reuse them to recover the
        Brownian path).
    """
    dt = h / n_steps
    z = rng.standard_normal((m, n_steps))
    u = rng.random((m, n_steps))
    np.maximum(u, 1e-300, out=u)  # guard log(0)
    inc = nu * dt + sigma * math.sqrt(dt) * z
    rel = np.cumsum(inc, axis=1)
    left = np.empty_like(rel)
    left[:, 0] = 0.0
    left[:, 1:] = rel[:, :-1]
    gap = rel - left
    step_min = 0.5 * (left + rel - np.sqrt(gap * gap - 2.0 * sigma * sigma * dt * np.log(u)))
    return rel, step_min, z


def first_crossing(step_min: np.ndarray, threshold: float):
    """First step whose bridge minimum reaches ``threshold`` (a rel-log level).

    Returns
    -------
    step : (m,) int ndarray
        Index of the crossing step; ``n_steps`` when no crossing occurred.
    crossed : (m,) bool ndarray
    """
    mask = step_min <= threshold
    crossed = mask.any(axis=1)
    step = np.where(crossed, mask.argmax(axis=1), step_min.shape[1])
    return step, crossed


def crossing_times(step: np.ndarray, crossed: np.ndarray, t_start: float,
                   dt: float) -> np.ndarray:
    """Absolute crossing times, midpoint of the crossing step; inf if none."""
    tau = t_start + (step + 0.5) * dt
    return np.where(crossed, tau, np.inf)


def combine_mean_stderr(sums: np.ndarray, sumsq: np.ndarray, n: int):
    """Mean and standard error of the mean from blockwise Σx and Σx²."""
    mean = sums / n
    var = max(sumsq / n - mean * mean, 0.0)
    stderr = math.sqrt(var / n)
    return mean, stderr


def ratio_estimate(sn: float, sd: float, snn: float, sdd: float, snd: float,
                   n: int):
    """Delta-method mean and stderr of a ratio estimator Σnum / Σden.

    ``sn, sd`` are Σ of per-path numerator/denominator, ``snn, sdd, snd``
    the corresponding second moments.  Degenerate denominators return
    (0, 0): the priced state is then certainly in default.
    """
    if sd == 0.0:
        return 0.0, 0.0
    mn, md = sn / n, sd / n
    r = mn / md
    var_n = max(snn / n - mn * mn, 0.0)
    var_d = max(sdd / n - md * md, 0.0)
    cov = snd / n - mn * md
    var_r = (var_n - 2.0 * r * cov + r * r * var_d) / (md * md)
    stderr = math.sqrt(max(var_r, 0.0) / n)
    return r, stderr
