"""Brute-force Monte Carlo pricing: the ground truth for every closed form.

The oracle simulates the driving Brownian motion directly (exact log-space
stepping, bridge-corrected crossing detection), conditions on exactly the
variables each information structure contains, and averages discounted cash
flows.  It never evaluates the closed-form survival/hitting kernels, so an
error in those is caught rather than reproduced.

Conditioning per information structure:

* manager: the realized barrier (plus the market state);
* progressive: only the market state and the no-default-yet event;
* delayed: the market state at the lagged time plus the no-default event
  at the pricing time itself;
* insider: the no-default event plus the noisy barrier observation, with
  the barrier conditioning implemented by exact discrete weights
  ``q_t(l_t - L)``.

Under the signal density model the conditional law of the barrier given the
market is realized by simulating the signal variable itself (the Brownian
value at the signal horizon) and weighting by the branch indicators,
independent of any density formula.  Risk-neutral estimates reweight the
same paths by the simulated change-of-measure factor.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from . import _engine
from .information import (
    BarrierLaw,
    BrownianSignal,
    DensityModel,
    Independent,
    NoiseModel,
    check_compatible,
    density_all,
    insider_drift,
    sample_barrier,
)
from .instruments import Claim, Discount
from .market_model import GbmParams, MarketState, market_state
from .pricers import (
    Delayed,
    InfoSpec,
    Insider,
    Manager,
    Progressive,
    price_delayed,
    price_insider_p,
    price_insider_q,
    price_manager_p,
    price_manager_q,
    price_progressive,
)

__all__ = [
    "Conditioning",
    "OracleEstimate",
    "oracle_price",
    "ValidationCase",
    "CaseResult",
    "ValidationReport",
    "validate_report",
    "default_suite",
]

REPORT_COLUMNS = ("case_id", "info", "closed_form", "oracle_mean",
                  "oracle_stderr", "z_score", "pass")


@dataclass(frozen=True)
class Conditioning:
    """The exact variables the agent's information set contains at t.

    ``state`` is the market state at the conditioning time: the pricing
    time itself except for delayed information, where it is the state at
    the lagged time ``t - delta(t)``.
    """

    state: MarketState
    barrier: Optional[float] = None         # manager: realized level
    noisy_barrier: Optional[float] = None   # insider: observed L + eps_t
    default_observed: bool = False          # delayed: default seen by t


@dataclass(frozen=True)
class OracleEstimate:
    mean: float
    stderr: float
    n_paths: int
    seed: int
    info: InfoSpec


def _validate(info: InfoSpec, cond: Conditioning, t: float,
              law: BarrierLaw) -> None:
    if isinstance(info, Manager):
        if cond.barrier is None:
            raise ValueError("manager conditioning requires the realized barrier")
        if cond.noisy_barrier is not None:
            raise ValueError("manager conditioning must not carry a noisy barrier")
        if not any(math.isclose(l, cond.barrier, abs_tol=1e-12) for l in law.levels):
            raise ValueError(f"barrier {cond.barrier} not in law levels")
    elif isinstance(info, Insider):
        if cond.noisy_barrier is None:
            raise ValueError("insider conditioning requires the noisy barrier")
        if cond.barrier is not None:
            raise ValueError("insider conditioning must not carry the true barrier")
    elif isinstance(info, (Progressive, Delayed)):
        if cond.barrier is not None or cond.noisy_barrier is not None:
            raise ValueError(
                "progressive/delayed conditioning carries no barrier knowledge"
            )
    else:
        raise TypeError(f"unknown info spec {info!r}")
    if isinstance(info, Delayed):
        expected = info.lag_time(t)
        if abs(cond.state.t - expected) > 1e-9:
            raise ValueError(
                f"delayed conditioning state must be at t - delta(t) = "
                f"{expected}, got {cond.state.t}"
            )
    else:
        if abs(cond.state.t - t) > 1e-9:
            raise ValueError(
                f"conditioning state at {cond.state.t} does not match pricing "
                f"time {t}"
            )
        if cond.default_observed:
            raise ValueError("default_observed only applies to delayed information")


def _plain_legs(tau_abs: np.ndarray, t: float, claim: Claim,
                rate: float) -> np.ndarray:
    """Discounted cash flows of the claim given the default time of a path.

    Exact in continuous time given the crossing time: the dividend annuity
    integrates in closed form up to ``min(tau, T)``.
    """
    T = claim.maturity
    out = claim.terminal * math.exp(-rate * (T - t)) * (tau_abs > T)
    if claim.dividend_rate != 0.0:
        upper = np.clip(tau_abs, t, T)
        if rate != 0.0:
            ann = (1.0 - np.exp(-rate * (upper - t))) / rate
        else:
            ann = upper - t
        out = out + claim.dividend_rate * ann
    if claim.recovery != 0.0:
        hit = (tau_abs > t) & (tau_abs <= T)
        out = out + np.where(
            hit, claim.recovery * np.exp(-rate * (tau_abs - t)), 0.0
        )
    return out


def _weighted_legs(tau: np.ndarray, alive_k: np.ndarray, t: float,
                   claim: Claim, rate: float, dt: float, s_grid: np.ndarray,
                   w_grid: np.ndarray, w_at_tau: np.ndarray) -> np.ndarray:
    """Claim legs carrying a path-dependent change-of-measure weight.

    ``w_grid[:, k]`` is the weight at time ``t + s_grid[k]`` (the weight at
    t itself is 1), ``w_at_tau`` the weight at the crossing time.  The
    dividend leg integrates weight times survival on the grid (trapezoid).
    """
    T = claim.maturity
    out = claim.terminal * math.exp(-rate * (T - t)) * (tau > T) * w_grid[:, -1]
    if claim.dividend_rate != 0.0:
        disc_k = np.exp(-rate * s_grid)
        trap = np.full(len(s_grid), dt)
        trap[-1] *= 0.5
        integ = (w_grid * alive_k * disc_k) @ trap + 0.5 * dt
        out = out + claim.dividend_rate * integ
    if claim.recovery != 0.0:
        hit = (tau > t) & (tau <= T)
        out = out + np.where(
            hit, claim.recovery * np.exp(-rate * (tau - t)) * w_at_tau, 0.0
        )
    return out


def oracle_price(info: InfoSpec, params: GbmParams, model: DensityModel,
                 law: BarrierLaw, claim: Claim, disc: Discount, t: float,
                 conditioning: Conditioning, n_paths: int, seed: int,
                 n_steps: int = 64,
                 block_size: int = _engine.DEFAULT_BLOCK_SIZE,
                 n_workers: int = 1) -> OracleEstimate:
    """Unbiased Monte Carlo price under one information structure.

    Simulates continuations of the firm value from the conditioning state,
    detects barrier crossings through bridge-sampled step minima, assembles
    the claim's discounted cash flows per path and level, and combines
    levels with the conditional weights the information structure dictates.
    Pricing at ``t > 0`` conditions on the supplied state (scenario replay),
    never on a regression.

    Estimates are reproducible for fixed ``(seed, n_paths, n_steps,
    block_size)`` and independent of ``n_workers``.
    """
    check_compatible(model, law)
    _validate(info, conditioning, t, law)
    state = conditioning.state
    if claim.maturity < t:
        raise ValueError(f"pricing time {t} past maturity {claim.maturity}")
    if isinstance(info, Delayed) and conditioning.default_observed:
        return OracleEstimate(0.0, 0.0, n_paths, seed, info)

    levels = law.levels_array()
    alphas = law.weights_array()
    alive0 = state.x_min > levels
    signal = isinstance(model, BrownianSignal)
    if signal and model.t0 <= claim.maturity:
        raise ValueError("signal horizon must exceed the claim maturity")
    h_sim = claim.maturity - state.t
    nu, sigma, rate = params.nu, params.sigma, disc.rate

    is_manager = isinstance(info, Manager)
    is_insider = isinstance(info, Insider)
    manager_q = is_manager and info.measure == "Q"
    insider_q = is_insider and info.measure == "Q"
    if is_manager:
        level_ids = [int(np.argmin(np.abs(levels - conditioning.barrier)))]
        if not alive0[level_ids[0]]:
            return OracleEstimate(0.0, 0.0, n_paths, seed, info)
    else:
        level_ids = [i for i in range(law.n) if alive0[i]]
        if not level_ids:
            return OracleEstimate(0.0, 0.0, n_paths, seed, info)
    qn = np.ones(law.n)
    if is_insider:
        qn = np.exp(
            info.noise.log_density(t, conditioning.noisy_barrier - levels)
        )
        qn = qn / qn.max()  # common factor, keeps weights O(1)

    if h_sim == 0.0:
        return OracleEstimate(claim.terminal, 0.0, n_paths, seed, info)

    dt = h_sim / n_steps
    s_grid = dt * np.arange(1, n_steps + 1)
    p_t_state = density_all(model, law, state.t, state.b)
    log_x0 = math.log(state.x) - nu * state.t - sigma * state.b

    def one_block(rng, m, _i):
        rel, step_min, z = _engine.simulate_log_block(rng, nu, sigma, h_sim,
                                                      n_steps, m)
        # fixed draw order: path block, then signal extension, then noise
        sig_low = None
        if signal:
            b_end = state.b + (rel[:, -1] - nu * h_sim) / sigma
            gap = model.t0 - claim.maturity
            b_t0 = b_end + math.sqrt(gap) * rng.standard_normal(m)
            sig_low = b_t0 <= model.c

        if insider_q:
            z_eps = rng.standard_normal((m, n_steps))
        if manager_q and signal:
            b_grid = state.b + (rel - nu * s_grid) / sigma
            p_grid = density_all(model, law, state.t + s_grid, b_grid)

        num = np.zeros(m)
        den = np.zeros(m)
        for i in level_ids:
            level = levels[i]
            y = math.log(state.x / level)
            step_idx, crossed = _engine.first_crossing(step_min, -y)
            tau = _engine.crossing_times(step_idx, crossed, state.t, dt)
            if signal:
                omega = np.where(sig_low ^ (i != 0), 1.0, 0.0)
            else:
                omega = np.full(m, alphas[i])
            if is_insider:
                omega = omega * qn[i]

            if manager_q and signal:
                alive_k = np.arange(n_steps)[None, :] < step_idx[:, None]
                # density ratio p_t/p_u along the path; at the crossing the
                # Brownian value is pinned by the barrier being touched
                safe_tau = np.where(crossed, tau, state.t)
                b_tau = (math.log(level) - log_x0 - nu * safe_tau) / sigma
                p_tau = density_all(model, law, safe_tau, b_tau)[..., i]
                p_tau = np.where(crossed, np.maximum(p_tau, 1e-300), 1.0)
                legs = _weighted_legs(
                    tau, alive_k, t, claim, rate, dt, s_grid,
                    p_t_state[i] / p_grid[..., i],
                    np.where(crossed, p_t_state[i] / p_tau, 0.0),
                )
            elif insider_q:
                alive_k = np.arange(n_steps)[None, :] < step_idx[:, None]
                w_grid, w_by_step = _insider_weight_path(
                    info.noise, state, level,
                    conditioning.noisy_barrier - level, model, law, rel, z,
                    z_eps, s_grid, dt, nu, sigma,
                )
                legs = _weighted_legs(
                    tau, alive_k, t, claim, rate, dt, s_grid,
                    w_grid, w_by_step[np.arange(m), np.minimum(step_idx,
                                                               n_steps)],
                )
            else:
                legs = _plain_legs(tau, t, claim, rate)
            num += omega * legs
            den += omega * (tau > t)
        return np.array([
            num.sum(), den.sum(), np.sum(num * num), np.sum(den * den),
            np.sum(num * den), float(m),
        ])

    parts = _engine.map_blocks(one_block, n_paths, seed, block_size, n_workers)
    sums = np.sum(np.stack(parts), axis=0)
    mean, stderr = _engine.ratio_estimate(
        sums[0], sums[1], sums[2], sums[3], sums[4], int(sums[5])
    )
    return OracleEstimate(mean, stderr, n_paths, seed, info)


def _insider_weight_path(noise: NoiseModel, state: MarketState, level: float,
                         eps_now: float, model: DensityModel,
                         law: BarrierLaw, rel, z, z_eps, s_grid, dt, nu,
                         sigma):
    """Simulated insider change-of-measure factor along each path.

    Given the barrier level, the current noise value is pinned
    (``eps_now = noisy_barrier - level``) and the future noise follows the
    exact conditional law of the time-changed Brownian noise: a bridge
    pulled toward zero, simulated step by step from the shared innovations
    ``z_eps``.  The insider drift is evaluated pathwise at the simulated
    noisy barrier and the inverse stochastic exponential of its integral is
    Euler-accumulated.  Returns the factor at every grid time and at every
    step start (for crossing-time lookup).
    """
    m, n_steps = z_eps.shape
    t = state.t
    u_grid = np.asarray(noise.variance(t + np.concatenate(([0.0], s_grid))))
    eps = np.full(m, eps_now)
    noisy_path = np.empty((m, n_steps))
    for k in range(n_steps):
        v_prev, v_next = u_grid[k], u_grid[k + 1]
        shrink = v_next / v_prev
        sd = math.sqrt(max(v_next * (v_prev - v_next) / v_prev, 0.0))
        eps = eps * shrink + sd * z_eps[:, k]
        noisy_path[:, k] = level + eps
    db = math.sqrt(dt) * z
    log_y = np.zeros(m)
    y_by_step = np.empty((m, n_steps + 1))
    y_by_step[:, 0] = 1.0
    rho = insider_drift(model, law, noise, t, np.full(m, state.b),
                        np.full(m, level + eps_now))
    for k in range(n_steps):
        if k > 0:
            b_left = state.b + (rel[:, k - 1] - nu * s_grid[k - 1]) / sigma
            rho = insider_drift(model, law, noise, t + s_grid[k - 1], b_left,
                                noisy_path[:, k - 1])
        log_y = log_y - rho * db[:, k] + 0.5 * rho**2 * dt
        y_by_step[:, k + 1] = np.exp(log_y)
    return y_by_step[:, 1:], y_by_step


# ---------------------------------------------------------------------------
# validation suite


@dataclass(frozen=True)
class ValidationCase:
    """One closed-form-versus-oracle comparison."""

    case_id: str
    info: InfoSpec
    params: GbmParams
    model: DensityModel
    law: BarrierLaw
    claim: Claim
    disc: Discount
    t: float
    conditioning: Conditioning
    n_paths: int = 1_000_000
    seed: int = 0
    n_steps: int = 64
    noise: Optional[NoiseModel] = None
    insider_q_budget: int = 100_000


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    info_label: str
    closed_form: float
    oracle_mean: float
    oracle_stderr: float
    z_score: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    cases: tuple[CaseResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out)
        writer.writerow(REPORT_COLUMNS)
        for c in self.cases:
            writer.writerow([
                c.case_id, c.info_label, f"{c.closed_form:.12g}",
                f"{c.oracle_mean:.12g}", f"{c.oracle_stderr:.12g}",
                f"{c.z_score:.12g}", str(c.passed).lower(),
            ])


def _info_label(info: InfoSpec) -> str:
    if isinstance(info, Manager):
        return f"manager_{info.measure}"
    if isinstance(info, Progressive):
        return "progressive"
    if isinstance(info, Delayed):
        return "delayed"
    return f"insider_{info.measure}"


def _closed_form(case: ValidationCase) -> tuple[float, float]:
    """The engine's own price for the case; (value, stderr of the value)."""
    info, cond = case.info, case.conditioning
    if isinstance(info, Manager):
        if info.measure == "P":
            v = price_manager_p(case.params, case.model, case.law, cond.state,
                                cond.barrier, case.claim, case.disc)
        else:
            v = price_manager_q(case.params, case.model, case.law, cond.state,
                                cond.barrier, case.claim, case.disc)
        return v, 0.0
    if isinstance(info, Progressive):
        return price_progressive(case.params, case.model, case.law, cond.state,
                                 case.claim, case.disc), 0.0
    if isinstance(info, Delayed):
        return price_delayed(case.params, case.model, case.law, cond.state,
                             case.t, case.claim, case.disc,
                             cond.default_observed), 0.0
    if info.measure == "P":
        return price_insider_p(case.params, case.model, case.law, info.noise,
                               cond.state, cond.noisy_barrier, case.claim,
                               case.disc), 0.0
    return price_insider_q(case.params, case.model, case.law, info.noise,
                           cond.state, cond.noisy_barrier, case.claim,
                           case.disc, mc_budget=case.insider_q_budget,
                           seed=case.seed + 1)


def validate_report(suite: list[ValidationCase],
                    n_workers: int = 1) -> ValidationReport:
    """Run closed form against oracle for every case; pass iff all |z| <= 3.

    An empty suite yields a trivially passing empty report.
    """
    results = []
    for case in suite:
        cf, cf_stderr = _closed_form(case)
        est = oracle_price(case.info, case.params, case.model, case.law,
                           case.claim, case.disc, case.t, case.conditioning,
                           case.n_paths, case.seed, case.n_steps,
                           n_workers=n_workers)
        combined = math.hypot(cf_stderr, est.stderr)
        diff = cf - est.mean
        if combined == 0.0:
            z = 0.0 if diff == 0.0 else math.inf
        else:
            z = diff / combined
        results.append(CaseResult(
            case_id=case.case_id, info_label=_info_label(case.info),
            closed_form=cf, oracle_mean=est.mean, oracle_stderr=est.stderr,
            z_score=z, passed=abs(z) <= 3.0,
        ))
    return ValidationReport(cases=tuple(results))


def default_suite(params: GbmParams, model: DensityModel, law: BarrierLaw,
                  noise: NoiseModel, claim: Claim, disc: Discount,
                  n_paths: int = 1_000_000, seed: int = 0,
                  n_steps: int = 64,
                  insider_q_budget: int = 100_000) -> list[ValidationCase]:
    """The standard time-0 suite: every pricer against the oracle."""
    state0 = market_state(params, 0.0, params.x0, params.x0)
    barrier = sample_barrier(law, seed=seed + 101)
    eps0 = float(np.random.default_rng(seed + 202).standard_normal()
                 * math.sqrt(noise.variance(0.0)))
    noisy0 = barrier + eps0
    base = dict(params=params, model=model, law=law, claim=claim, disc=disc,
                t=0.0, n_paths=n_paths, n_steps=n_steps,
                insider_q_budget=insider_q_budget)
    cases = [
        ValidationCase(case_id="manager_P_low", info=Manager("P"),
                       conditioning=Conditioning(state0, barrier=law.levels[0]),
                       seed=seed + 1, **base),
        ValidationCase(case_id="manager_P_high", info=Manager("P"),
                       conditioning=Conditioning(state0, barrier=law.levels[-1]),
                       seed=seed + 2, **base),
        ValidationCase(case_id="manager_Q_low", info=Manager("Q"),
                       conditioning=Conditioning(state0, barrier=law.levels[0]),
                       seed=seed + 3, **base),
        ValidationCase(case_id="progressive", info=Progressive(),
                       conditioning=Conditioning(state0), seed=seed + 4, **base),
        ValidationCase(case_id="delayed", info=Delayed(delay=0.01),
                       conditioning=Conditioning(state0), seed=seed + 5, **base),
        ValidationCase(case_id="insider_P", info=Insider(noise, "P"),
                       conditioning=Conditioning(state0, noisy_barrier=noisy0),
                       seed=seed + 6, **base),
        ValidationCase(case_id="insider_Q", info=Insider(noise, "Q"),
                       conditioning=Conditioning(state0, noisy_barrier=noisy0),
                       seed=seed + 7, **base),
    ]
    return cases
