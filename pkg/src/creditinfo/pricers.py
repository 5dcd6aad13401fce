"""Pre-default value processes under the four information structures.

Every pricer is a pure function of the market state ``(t, X_t, X_t*, B_t)``
plus whatever extra knowledge the agent has (the realized barrier for the
manager, the noisy barrier observation for the insider, a stale state for
the delayed investor).  Prices are per unit notional, discounted to the
pricing time; each pricer returns exactly 0 once the default relevant to it
has happened.

Historical-measure and risk-neutral variants are provided for the manager
and the insider; the progressive and delayed investors price under the
benchmark measure, so they have a single variant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _engine, kernels
from .information import (
    BarrierLaw,
    BrownianSignal,
    DensityModel,
    Independent,
    NoiseModel,
    check_compatible,
    density_all,
    info_drift_all,
)
from .instruments import Claim, Discount
from .kernels import DEFAULT_TOL, NumericalError
from .market_model import GbmParams, MarketState

__all__ = [
    "Manager",
    "Progressive",
    "Delayed",
    "Insider",
    "InfoSpec",
    "PriceSeries",
    "McParams",
    "conditional_survival",
    "survival_kernel",
    "value_kernel",
    "price_manager_p",
    "price_manager_q",
    "price_progressive",
    "price_delayed",
    "insider_survival",
    "price_insider_p",
    "price_insider_q",
]


# ---------------------------------------------------------------------------
# information structure descriptors


@dataclass(frozen=True)
class Manager:
    """Knows the realized barrier from time 0."""

    measure: str = "P"

    def __post_init__(self):
        if self.measure not in ("P", "Q"):
            raise ValueError(f"measure must be 'P' or 'Q', got {self.measure}")


@dataclass(frozen=True)
class Progressive:
    """Observes the firm value and whether default has occurred."""


@dataclass(frozen=True)
class Delayed:
    """Progressive information built on a lagged copy of the firm filtration.

    Either a constant ``delay`` or strictly increasing ``dates`` at which the
    firm information is refreshed (the delayed time is then the latest date
    not after t).
    """

    delay: Optional[float] = None
    dates: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if (self.delay is None) == (self.dates is None):
            raise ValueError("specify exactly one of delay or dates")
        if self.delay is not None and self.delay < 0.0:
            raise ValueError(f"delay must be >= 0, got {self.delay}")
        if self.dates is not None:
            dates = tuple(float(d) for d in self.dates)
            object.__setattr__(self, "dates", dates)
            if any(b <= a for a, b in zip(dates, dates[1:])):
                raise ValueError("observation dates must be strictly increasing")

    def lag_time(self, t: float) -> float:
        """The time t - delta(t) whose firm information is available at t."""
        if self.delay is not None:
            return max(t - self.delay, 0.0)
        if t < self.dates[0]:
            raise ValueError(f"no observation date at or before t={t}")
        idx = np.searchsorted(np.asarray(self.dates), t, side="right") - 1
        return self.dates[idx]


@dataclass(frozen=True)
class Insider:
    """Sees the barrier through additive noise, plus progressive information."""

    noise: NoiseModel
    measure: str = "P"

    def __post_init__(self):
        if self.measure not in ("P", "Q"):
            raise ValueError(f"measure must be 'P' or 'Q', got {self.measure}")


InfoSpec = Union[Manager, Progressive, Delayed, Insider]


@dataclass(frozen=True)
class PriceSeries:
    """Dynamic prices of one claim along one scenario.

    ``prices`` maps an information-structure label to the price path; all
    prices are 0 at and after the default time for zero-recovery claims.
    """

    times: np.ndarray
    prices: dict[str, np.ndarray]
    default_time: Optional[float]
    barrier: float


@dataclass(frozen=True)
class McParams:
    """Budget and grid for the Monte Carlo backed pricing legs."""

    n_paths: int = 100_000
    n_steps: int = 128
    seed: int = 0
    block_size: int = _engine.DEFAULT_BLOCK_SIZE
    n_workers: int = 1


# ---------------------------------------------------------------------------
# building blocks


def _bare_legs(y: float, nu: float, sigma: float, h: float, claim: Claim,
               rate: float, tol: float) -> float:
    """Value of the claim legs for a single known barrier at log-distance y.

    Terminal, dividend and recovery legs against the bare survival law (no
    density weighting): the workhorse of every closed-form pricer.
    """
    if h == 0.0:
        return claim.terminal
    total = claim.terminal * math.exp(-rate * h) * kernels.survival_prob(y, nu, sigma, h)
    if claim.dividend_rate != 0.0:
        total += claim.dividend_rate * kernels.integrate(
            lambda s: math.exp(-rate * s) * kernels.survival_prob(y, nu, sigma, s),
            0.0, h, tol,
        )
    if claim.recovery != 0.0:
        total += claim.recovery * kernels.integrate(
            lambda s: (
                math.exp(-rate * s) * kernels.hitting_time_density(y, nu, sigma, s)
                if s > 0.0 else 0.0
            ),
            0.0, h, tol,
        )
    return total


def _check_horizon(state_t: float, claim: Claim) -> float:
    h = claim.maturity - state_t
    if h < 0.0:
        raise ValueError(
            f"pricing time {state_t} is past the claim maturity {claim.maturity}"
        )
    return h


def conditional_survival(law: BarrierLaw, state: MarketState,
                         model: DensityModel = Independent()) -> float:
    """Conditional survival probability given market information only.

    The weighted sum ``sum_i weights[i] * density_i * 1{x_min > levels[i]}``;
    with the independent model this is simply the prior mass of the levels
    still above the running minimum.
    """
    check_compatible(model, law)
    p = density_all(model, law, state.t, state.b)
    alive = state.x_min > law.levels_array()
    return float(np.sum(law.weights_array() * p * alive))


def survival_kernel(model: DensityModel, law: BarrierLaw, state: MarketState,
                    level: float) -> float:
    """Density-weighted survival indicator for one barrier level."""
    idx = _index_of(law, level)
    if state.x_min <= level:
        return 0.0
    return float(density_all(model, law, state.t, state.b)[idx])


def value_kernel(params: GbmParams, model: DensityModel, law: BarrierLaw,
                 state: MarketState, level: float, claim: Claim,
                 disc: Discount, mc: Optional[McParams] = None,
                 tol: float = DEFAULT_TOL) -> float:
    """Unnormalized pre-default claim value for a known barrier level.

    For the independent model every leg is in closed quadrature form.  For
    the signal model the terminal leg couples the terminal density of the
    log increment (restricted to survival) with the conditional barrier
    density at maturity; dividend and recovery legs then require Monte Carlo
    (``mc``, defaulting to :class:`McParams`).

    Returns 0 when the level is already crossed.
    """
    if state.x_min <= level:
        return 0.0
    h = _check_horizon(state.t, claim)
    y = math.log(state.x / level)
    nu, sigma, r = params.nu, params.sigma, disc.rate
    if isinstance(model, Independent):
        return _bare_legs(y, nu, sigma, h, claim, r, tol)

    check_compatible(model, law)
    if claim.maturity >= model.t0:
        raise ValueError(
            f"claim maturity {claim.maturity} must precede the signal horizon "
            f"{model.t0}"
        )
    if h == 0.0:
        return claim.terminal * survival_kernel(model, law, state, level)
    maturity = claim.maturity

    def terminal_integrand(z: float) -> float:
        b_T = state.b + (z - nu * h) / sigma
        p_T = density_all(model, law, maturity, b_T)[_index_of(law, level)]
        return kernels.joint_density_terminal_min(z, y, nu, sigma, h) * p_T

    z_hi = nu * h + 8.0 * sigma * math.sqrt(h)
    total = (
        claim.terminal
        * math.exp(-r * h)
        * kernels.integrate(terminal_integrand, -y, z_hi, tol)
    )
    if claim.dividend_rate != 0.0 or claim.recovery != 0.0:
        total += _signal_flow_legs_mc(params, model, law, state, level, claim,
                                      disc, mc or McParams())
    return total


def _index_of(law: BarrierLaw, level: float) -> int:
    for i, l in enumerate(law.levels):
        if math.isclose(l, level, rel_tol=0.0, abs_tol=1e-12):
            return i
    raise ValueError(f"level {level} not in the barrier law {law.levels}")


def _signal_flow_legs_mc(params: GbmParams, model: BrownianSignal,
                         law: BarrierLaw, state: MarketState, level: float,
                         claim: Claim, disc: Discount, mc: McParams) -> float:
    """Dividend and recovery legs of the value kernel under the signal model.

    Monte Carlo over continuations: the dividend leg integrates the
    density-weighted survival indicator along the path, the recovery leg
    collects the density at the (bridge-detected) crossing time, where the
    Brownian value is pinned by the barrier being touched.
    """
    h = claim.maturity - state.t
    idx = _index_of(law, level)
    nu, sigma, r = params.nu, params.sigma, disc.rate
    y = math.log(state.x / level)
    dt = h / mc.n_steps
    log_x0 = math.log(state.x) - nu * state.t - sigma * state.b
    b_at_barrier_coeff = (math.log(level) - log_x0) / sigma

    def one_block(rng, m, _i):
        rel, step_min, _z = _engine.simulate_log_block(rng, nu, sigma, h,
                                                       mc.n_steps, m)
        step, crossed = _engine.first_crossing(step_min, -y)
        tau_rel = (step + 0.5) * dt
        total = np.zeros(m)
        if claim.dividend_rate != 0.0:
            s_k = dt * np.arange(1, mc.n_steps + 1)
            b_k = state.b + (rel - nu * s_k) / sigma
            p_k = density_all(model, law, state.t + s_k, b_k)[..., idx]
            alive_k = np.arange(mc.n_steps)[None, :] < step[:, None]
            w = np.full(mc.n_steps, dt)
            w[-1] *= 0.5
            integ = (np.exp(-r * s_k) * p_k * alive_k) @ w
            p_now = density_all(model, law, state.t, state.b)[idx]
            integ += 0.5 * dt * p_now
            total += claim.dividend_rate * integ
        if claim.recovery != 0.0:
            tau_abs = state.t + tau_rel
            b_tau = (b_at_barrier_coeff - nu * tau_abs / sigma)
            p_tau = density_all(model, law, np.where(crossed, tau_abs, state.t),
                                b_tau)[..., idx]
            rec = np.where(crossed, np.exp(-r * tau_rel) * p_tau, 0.0)
            total += claim.recovery * rec
        return np.array([total.sum(), float(m)])

    parts = _engine.map_blocks(one_block, mc.n_paths, mc.seed, mc.block_size,
                               mc.n_workers)
    sums = np.sum(np.stack(parts), axis=0)
    return float(sums[0] / sums[1])


# ---------------------------------------------------------------------------
# the four pricers


def price_manager_p(params: GbmParams, model: DensityModel, law: BarrierLaw,
                    state: MarketState, barrier: float, claim: Claim,
                    disc: Discount, mc: Optional[McParams] = None,
                    tol: float = DEFAULT_TOL) -> float:
    """Pre-default price seen by the manager who knows the barrier.

    Value kernel at the realized level, deflated by the conditional barrier
    density; zero once the barrier has been hit.
    """
    if state.x_min <= barrier:
        return 0.0
    v = value_kernel(params, model, law, state, barrier, claim, disc, mc, tol)
    p_t = density_all(model, law, state.t, state.b)[_index_of(law, barrier)]
    return v / float(p_t)


def price_manager_q(params: GbmParams, model: DensityModel, law: BarrierLaw,
                    state: MarketState, barrier: float, claim: Claim,
                    disc: Discount, tol: float = DEFAULT_TOL) -> float:
    """Manager price under the manager's risk-neutral measure.

    The measure change removes every density factor, so the price is the
    bare-kernel closed form for any density model; it coincides with
    :func:`price_manager_p` when the barrier is independent of the market.
    """
    if state.x_min <= barrier:
        return 0.0
    h = _check_horizon(state.t, claim)
    y = math.log(state.x / barrier)
    return _bare_legs(y, params.nu, params.sigma, h, claim, disc.rate, tol)


def price_progressive(params: GbmParams, model: DensityModel, law: BarrierLaw,
                      state: MarketState, claim: Claim, disc: Discount,
                      tol: float = DEFAULT_TOL) -> float:
    """Price for the investor observing only the market and the default.

    Mixture of the bare single-level values over the levels still alive,
    normalized by the conditional survival probability.  Closed form for
    the independent density model only; with a signal-correlated barrier
    use the Monte Carlo oracle.
    """
    if not isinstance(model, Independent):
        raise TypeError(
            "closed-form progressive pricing requires the independent density "
            "model; use mc_oracle.oracle_price for signal models"
        )
    h = _check_horizon(state.t, claim)
    num = 0.0
    den = 0.0
    for alpha, level in zip(law.weights, law.levels):
        if state.x_min <= level:
            continue
        y = math.log(state.x / level)
        num += alpha * _bare_legs(y, params.nu, params.sigma, h, claim,
                                  disc.rate, tol)
        den += alpha
    if den == 0.0:
        return 0.0
    return num / den


def price_delayed(params: GbmParams, model: DensityModel, law: BarrierLaw,
                  delayed_state: MarketState, t: float, claim: Claim,
                  disc: Discount, default_observed: bool = False,
                  tol: float = DEFAULT_TOL) -> float:
    """Price for an investor with lagged firm information.

    Conditions on the firm state at ``t - delta`` while observing the
    default indicator at ``t`` itself: every leg is the bare kernel from the
    stale state with the horizon extended by the lag, normalized by the
    conditional probability of surviving up to ``t`` seen from the stale
    state.  ``delta = 0`` reproduces the progressive price exactly.
    """
    if not isinstance(model, Independent):
        raise TypeError(
            "closed-form delayed pricing requires the independent density "
            "model; use mc_oracle.oracle_price for signal models"
        )
    if default_observed:
        return 0.0
    delta = t - delayed_state.t
    if delta < 0.0:
        raise ValueError(
            f"delayed state at {delayed_state.t} is later than pricing time {t}"
        )
    h = claim.maturity - t
    if h < 0.0:
        raise ValueError(f"pricing time {t} is past maturity {claim.maturity}")
    nu, sigma, r = params.nu, params.sigma, disc.rate
    num = 0.0
    den = 0.0
    for alpha, level in zip(law.weights, law.levels):
        if delayed_state.x_min <= level:
            continue
        y = math.log(delayed_state.x / level)
        den += alpha * kernels.survival_prob(y, nu, sigma, delta)
        leg = claim.terminal * math.exp(-r * h) * kernels.survival_prob(
            y, nu, sigma, h + delta
        )
        if claim.dividend_rate != 0.0:
            leg += claim.dividend_rate * kernels.integrate(
                lambda s, y=y: math.exp(-r * (s - delta))
                * kernels.survival_prob(y, nu, sigma, s),
                delta, h + delta, tol,
            )
        if claim.recovery != 0.0:
            leg += claim.recovery * kernels.integrate(
                lambda s, y=y: (
                    math.exp(-r * (s - delta))
                    * kernels.hitting_time_density(y, nu, sigma, s)
                    if s > 0.0 else 0.0
                ),
                delta, h + delta, tol,
            )
        num += alpha * leg
    if den == 0.0:
        return 0.0
    return num / den


def _insider_log_weights(model: DensityModel, law: BarrierLaw,
                         noise: NoiseModel, t: float, b: float,
                         noisy_level: float):
    """Log of ``weights[i] * q_t(noisy_level - levels[i])`` plus densities."""
    p = density_all(model, law, t, b)
    log_w = np.log(law.weights_array()) + noise.log_density(
        t, noisy_level - law.levels_array()
    )
    return log_w - np.max(log_w), p


def insider_survival(model: DensityModel, law: BarrierLaw, noise: NoiseModel,
                     t: float, b: float, x_min: float,
                     noisy_level: float) -> float:
    """Survival probability given market data and the noisy barrier.

    Ratio of the density-and-noise-weighted alive mass to the total mass;
    flattens to :func:`conditional_survival` as the noise variance grows.
    """
    log_w, p = _insider_log_weights(model, law, noise, t, b, noisy_level)
    w = np.exp(log_w) * p
    alive = x_min > law.levels_array()
    return float(np.sum(w * alive) / np.sum(w))


def price_insider_p(params: GbmParams, model: DensityModel, law: BarrierLaw,
                    noise: NoiseModel, state: MarketState, noisy_level: float,
                    claim: Claim, disc: Discount,
                    mc: Optional[McParams] = None,
                    tol: float = DEFAULT_TOL) -> float:
    """Pre-default price for the insider observing the noisy barrier.

    Numerator: noise-weighted mixture of the per-level value kernels.
    Denominator: same weights against the density-weighted survival
    indicators.  Interpolates between the manager price (noise variance to
    zero) and the progressive price (variance to infinity).
    """
    log_w, p = _insider_log_weights(model, law, noise, state.t, state.b,
                                    noisy_level)
    w = np.exp(log_w)
    levels = law.levels_array()
    alive = state.x_min > levels
    den = float(np.sum(w * p * alive))
    if den == 0.0:
        return 0.0
    num = 0.0
    for i, level in enumerate(law.levels):
        if not alive[i]:
            continue
        num += w[i] * value_kernel(params, model, law, state, level, claim,
                                   disc, mc, tol)
    return num / den


def price_insider_q(params: GbmParams, model: DensityModel, law: BarrierLaw,
                    noise: NoiseModel, state: MarketState, noisy_level: float,
                    claim: Claim, disc: Discount, mc_budget: int = 100_000,
                    seed: int = 0, step: Optional[float] = None,
                    gh_order: int = 32, block_size: Optional[int] = None,
                    n_workers: int = 1) -> tuple[float, float]:
    """Insider price under the insider's risk-neutral measure (Monte Carlo).

    Simulates market continuations and deflates the per-level survival
    kernels by the inverse stochastic exponential of the insider drift,
    where the drift is pre-averaged over the law of the future noise
    increment by Gauss-Hermite quadrature; the exponent integral is
    Euler-discretized with step ``step`` (default maturity/512).  Levels are
    then combined exactly as in the historical-measure insider price.
    Results are reproducible for fixed (seed, mc_budget, step, block_size).

    Returns
    -------
    (estimate, standard error)
    """
    if mc_budget < 1000:
        raise ValueError(f"mc_budget must be >= 1000, got {mc_budget}")
    check_compatible(model, law)
    h = _check_horizon(state.t, claim)
    t = state.t
    log_w, p_now = _insider_log_weights(model, law, noise, t, state.b,
                                        noisy_level)
    w = np.exp(log_w)
    levels = law.levels_array()
    alive0 = state.x_min > levels
    den = float(np.sum(w * p_now * alive0))
    if den == 0.0:
        return 0.0, 0.0
    if h == 0.0:
        return claim.terminal, 0.0
    if step is None:
        step = claim.maturity / 512.0
    n_steps = max(1, int(round(h / step)))
    if block_size is None:
        # keep per-block work arrays around 30 MB
        block_size = max(1024, (1 << 22) // (n_steps + 1))
    dt = h / n_steps
    nu, sigma, r = params.nu, params.sigma, disc.rate
    y_alive = [
        (i, math.log(state.x / levels[i])) for i in range(law.n) if alive0[i]
    ]
    trivial_drift = isinstance(model, Independent)
    if not trivial_drift:
        if claim.maturity >= model.t0:
            raise ValueError(
                f"claim maturity {claim.maturity} must precede the signal "
                f"horizon {model.t0}"
            )
        gh_x, gh_w = np.polynomial.hermite.hermgauss(gh_order)
        gh_x = gh_x * math.sqrt(2.0)
        gh_w = gh_w / math.sqrt(math.pi)
    s_grid = dt * np.arange(n_steps + 1)          # relative step times
    disc_grid = np.exp(-r * s_grid)
    alpha = law.weights_array()
    trap_w = np.full(n_steps + 1, dt)
    trap_w[0] *= 0.5
    trap_w[-1] *= 0.5

    def drift_premix(s_rel: float, b_vec: np.ndarray) -> np.ndarray:
        """Gauss-Hermite average of the insider drift over the noise increment."""
        s_abs = t + s_rel
        rho = info_drift_all(model, law, s_abs, b_vec)       # (m, n)
        p = density_all(model, law, s_abs, b_vec)            # (m, n)
        inc_sd = math.sqrt(max(noise.increment_var(t, s_abs), 0.0))
        x_nodes = noisy_level + inc_sd * gh_x                # (gh,)
        logq = noise.log_density(s_abs, x_nodes[:, None] - levels[None, :])
        q_nodes = np.exp(logq - logq.max())                  # (gh, n)
        num = (rho * p * alpha) @ q_nodes.T                  # (m, gh)
        d = (p * alpha) @ q_nodes.T
        return (num / d) @ gh_w

    def one_block(rng, m, _i):
        rel, step_min, z = _engine.simulate_log_block(rng, nu, sigma, h,
                                                      n_steps, m)
        if not trivial_drift:
            dinv = np.ones((m, n_steps + 1))
            db = math.sqrt(dt) * z
            log_dinv = np.zeros(m)
            b_left = np.broadcast_to(np.float64(state.b), (m,))
            for k in range(n_steps):
                if k > 0:
                    b_left = state.b + (rel[:, k - 1] - nu * s_grid[k]) / sigma
                mdrift = drift_premix(s_grid[k], b_left)
                log_dinv = log_dinv - mdrift * db[:, k] + 0.5 * mdrift**2 * dt
                dinv[:, k + 1] = np.exp(log_dinv)
            if not np.all(np.isfinite(dinv)):
                raise NumericalError("stochastic exponential overflowed")
        num_contrib = np.zeros(m)
        if not trivial_drift:
            b_grid = state.b + (rel - nu * s_grid[1:]) / sigma
            p_grid = density_all(model, law, t + s_grid[1:], b_grid)
        for i, y in y_alive:
            step_idx, _crossed = _engine.first_crossing(step_min, -y)
            f_k = np.zeros((m, n_steps + 1))
            f_k[:, 0] = p_now[i]
            alive_k = np.arange(n_steps)[None, :] < step_idx[:, None]
            if trivial_drift:
                f_k[:, 1:] = alive_k
            else:
                f_k[:, 1:] = dinv[:, 1:] * p_grid[..., i] * alive_k
            integ = (f_k * disc_grid) @ trap_w
            f_end = f_k[:, -1]
            legs = (
                claim.terminal * math.exp(-r * h) * f_end
                + (claim.dividend_rate - r * claim.recovery) * integ
                + claim.recovery * (f_k[:, 0] - math.exp(-r * h) * f_end)
            )
            num_contrib += w[i] * legs
        return np.array([num_contrib.sum(), np.sum(num_contrib**2), float(m)])

    parts = _engine.map_blocks(one_block, mc_budget, seed, block_size,
                               n_workers)
    sums = np.sum(np.stack(parts), axis=0)
    n = sums[2]
    mean, stderr = _engine.combine_mean_stderr(sums[0], sums[1], n)
    return mean / den, stderr / den
