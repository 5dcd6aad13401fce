"""Command-line front end: scenario generation, price queries, validation.

Configuration is a single JSON document; every field has a default, unknown
keys are rejected, and the whole document is validated before any
computation.  Exit codes: 0 success (validation passed), 1 validation
failed, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .information import (
    BarrierLaw,
    BrownianSignal,
    DensityModel,
    Independent,
    NoiseModel,
    check_compatible,
    sample_barrier,
    sample_noise_path,
)
from .instruments import Claim, Discount, make_cds, make_zcb
from .kernels import NumericalError
from .market_model import GbmParams, PathSet, simulate_paths, state_at
from .mc_oracle import Conditioning, default_suite, oracle_price, validate_report
from .pricers import (
    Delayed,
    Insider,
    Manager,
    PriceSeries,
    Progressive,
    price_delayed,
    price_insider_p,
    price_insider_q,
    price_manager_p,
    price_manager_q,
    price_progressive,
)

__all__ = ["Config", "ConfigError", "load_config", "build_scenario",
           "scenario_rows", "main"]

SCENARIO_COLUMNS = ("t", "firm_value", "running_min", "default", "V_manager",
                    "V_progressive", "V_delayed", "V_insider")

_DEFAULT_CONFIG = {
    "model": {"x0": 4.0, "mu": 0.05, "sigma": 0.2},
    "rate": 0.02,
    "barrier": {"levels": [1.0, 3.0], "weights": [0.5, 0.5], "realized": "low"},
    "density": {"kind": "independent"},
    "noise": {"sigma_eps": 1.0},
    "delay": 0.01,
    "claim": {"kind": "zcb", "maturity": 1.0, "recovery_rate": 1.0},
    "grid": {"horizon": 1.0, "steps": 100},
    "seeds": {"scenario": 42, "oracle": 7},
    "mc": {"oracle_paths": 1000000, "oracle_steps": 64,
           "insider_q_paths": 100000},
}


class ConfigError(ValueError):
    """Invalid configuration document."""


@dataclass(frozen=True)
class Config:
    params: GbmParams
    disc: Discount
    law: BarrierLaw
    realized: str
    model: DensityModel
    noise: NoiseModel
    delay: float
    claim: Claim
    horizon: float
    steps: int
    seed_scenario: int
    seed_oracle: int
    oracle_paths: int
    oracle_steps: int
    insider_q_paths: int


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    out = {}
    for key, dval in defaults.items():
        if key in given:
            gval = given[key]
            if isinstance(dval, dict):
                if not isinstance(gval, dict):
                    raise ConfigError(f"field {path + key} must be an object")
                out[key] = _merge(dval, gval, path + key + ".")
            else:
                out[key] = gval
        else:
            out[key] = dval
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(
            f"unknown config keys: {sorted(path + k for k in unknown)}"
        )
    return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def parse_config(doc: dict) -> Config:
    """Validate a raw JSON document and build the typed configuration."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    claim_defaults = dict(_DEFAULT_CONFIG["claim"])
    if doc.get("claim", {}).get("kind") == "cds":
        claim_defaults = {"kind": "cds", "maturity": 1.0, "spread": 0.01,
                          "recovery_rate": 0.4}
    defaults = dict(_DEFAULT_CONFIG)
    defaults["claim"] = claim_defaults
    merged = _merge(defaults, doc)
    try:
        params = GbmParams(x0=float(merged["model"]["x0"]),
                           mu=float(merged["model"]["mu"]),
                           sigma=float(merged["model"]["sigma"]))
        law = BarrierLaw(levels=tuple(merged["barrier"]["levels"]),
                         weights=tuple(merged["barrier"]["weights"]))
        law.check_above(params.x0)
        realized = merged["barrier"]["realized"]
        _require(realized in ("low", "high", "sample"),
                 f"barrier.realized must be low|high|sample, got {realized!r}")
        claim_doc = merged["claim"]
        if claim_doc["kind"] == "zcb":
            claim = make_zcb(float(claim_doc["maturity"]),
                             float(claim_doc["recovery_rate"]))
        elif claim_doc["kind"] == "cds":
            claim = make_cds(float(claim_doc["maturity"]),
                             float(claim_doc["spread"]),
                             float(claim_doc["recovery_rate"]))
        else:
            raise ConfigError(f"claim.kind must be zcb|cds, got {claim_doc['kind']!r}")
        density_doc = merged["density"]
        kind = density_doc.get("kind")
        if kind == "independent":
            _require(set(density_doc) == {"kind"},
                     "independent density takes no extra fields")
            model: DensityModel = Independent()
        elif kind == "brownian_signal":
            extra = set(density_doc) - {"kind", "t0", "c"}
            _require(not extra, f"unknown density fields: {sorted(extra)}")
            t0 = float(density_doc.get("t0", 2.0))
            _require(t0 > claim.maturity,
                     "density.t0 must exceed the claim maturity")
            if density_doc.get("c") is None:
                model = BrownianSignal.for_law(t0, law)
            else:
                model = BrownianSignal(t0=t0, c=float(density_doc["c"]))
            check_compatible(model, law)
        else:
            raise ConfigError(f"density.kind must be independent|brownian_signal, "
                              f"got {kind!r}")
        noise = NoiseModel(sigma_eps=float(merged["noise"]["sigma_eps"]))
        delay = float(merged["delay"])
        _require(delay >= 0.0, "delay must be >= 0")
        horizon = float(merged["grid"]["horizon"])
        steps = int(merged["grid"]["steps"])
        _require(horizon > 0.0 and steps >= 1, "grid must have horizon > 0, steps >= 1")
        _require(horizon <= claim.maturity,
                 "grid.horizon must not exceed the claim maturity")
        dt = horizon / steps
        _require(abs(delay / dt - round(delay / dt)) < 1e-9,
                 "delay must be a whole number of grid steps")
        mc = merged["mc"]
        oracle_paths = int(mc["oracle_paths"])
        oracle_steps = int(mc["oracle_steps"])
        insider_q_paths = int(mc["insider_q_paths"])
        _require(oracle_paths >= 1000 and insider_q_paths >= 1000,
                 "mc budgets must be >= 1000 paths")
        _require(oracle_steps >= 1, "mc.oracle_steps must be >= 1")
        return Config(
            params=params, disc=Discount(rate=float(merged["rate"])), law=law,
            realized=realized, model=model, noise=noise, delay=delay,
            claim=claim, horizon=horizon, steps=steps,
            seed_scenario=int(merged["seeds"]["scenario"]),
            seed_oracle=int(merged["seeds"]["oracle"]),
            oracle_paths=oracle_paths, oracle_steps=oracle_steps,
            insider_q_paths=insider_q_paths,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Optional[str]) -> Config:
    if path is None:
        return parse_config({})
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


# ---------------------------------------------------------------------------
# scenario generation


def _realized_barrier(cfg: Config, choice: Optional[str], seed: int) -> float:
    choice = choice or cfg.realized
    if choice == "low":
        return cfg.law.levels[0]
    if choice == "high":
        return cfg.law.levels[-1]
    return float(sample_barrier(cfg.law, seed + 1))


def build_scenario(cfg: Config, barrier_choice: Optional[str] = None,
                   seed: Optional[int] = None) -> tuple[PriceSeries, PathSet]:
    """Simulate one firm path and price the claim along it for all agents.

    Requires the independent density model (the closed-form progressive and
    delayed pricers exist only there; signal-model scenario paths would need
    the Monte Carlo oracle at every grid point).
    """
    if not isinstance(cfg.model, Independent):
        raise ConfigError(
            "scenario generation requires density.kind = independent"
        )
    seed = cfg.seed_scenario if seed is None else seed
    barrier = _realized_barrier(cfg, barrier_choice, seed)
    paths = simulate_paths(cfg.params, cfg.horizon, cfg.steps, 1, seed)
    eps = sample_noise_path(cfg.noise, paths.grid, seed + 2)

    grid = paths.grid
    n_pts = len(grid)
    default_mask = paths.running_min[0] <= barrier
    default_time = float(grid[default_mask.argmax()]) if default_mask.any() else None
    delayed_info = Delayed(delay=cfg.delay)

    names = ("V_manager", "V_progressive", "V_delayed", "V_insider")
    prices = {name: np.zeros(n_pts) for name in names}
    for k in range(n_pts):
        t = float(grid[k])
        if default_mask[k]:
            continue  # defaulted: all prices are 0 from here on
        state = state_at(paths, 0, t)
        lag = delayed_info.lag_time(t)
        lag_idx = int(round(lag / (grid[1] - grid[0])))
        delayed_state = state_at(paths, 0, float(grid[lag_idx]))
        prices["V_manager"][k] = price_manager_p(
            cfg.params, cfg.model, cfg.law, state, barrier, cfg.claim, cfg.disc
        )
        prices["V_progressive"][k] = price_progressive(
            cfg.params, cfg.model, cfg.law, state, cfg.claim, cfg.disc
        )
        prices["V_delayed"][k] = price_delayed(
            cfg.params, cfg.model, cfg.law, delayed_state, t, cfg.claim,
            cfg.disc, default_observed=False
        )
        prices["V_insider"][k] = price_insider_p(
            cfg.params, cfg.model, cfg.law, cfg.noise, state,
            barrier + float(eps[k]), cfg.claim, cfg.disc
        )
    series = PriceSeries(times=grid, prices=prices, default_time=default_time,
                         barrier=barrier)
    return series, paths


def scenario_rows(series: PriceSeries, paths: PathSet) -> list[list[str]]:
    """CSV rows (strings, 12 significant digits) for a scenario."""
    rows = []
    defaulted = (
        np.zeros(len(series.times), dtype=bool)
        if series.default_time is None
        else series.times >= series.default_time
    )
    for k, t in enumerate(series.times):
        rows.append([
            f"{t:.12g}",
            f"{paths.values[0, k]:.12g}",
            f"{paths.running_min[0, k]:.12g}",
            "1" if defaulted[k] else "0",
            f"{series.prices['V_manager'][k]:.12g}",
            f"{series.prices['V_progressive'][k]:.12g}",
            f"{series.prices['V_delayed'][k]:.12g}",
            f"{series.prices['V_insider'][k]:.12g}",
        ])
    return rows


def cmd_scenario(cfg: Config, barrier_choice: Optional[str], seed: Optional[int],
                 out_dir: str) -> int:
    series, paths = build_scenario(cfg, barrier_choice, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = scenario_rows(series, paths)
    csv_path = out / "scenario.csv"
    with csv_path.open("w", newline="") as fh:
        fh.write(",".join(SCENARIO_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    dat_path = out / "scenario.dat"
    with dat_path.open("w") as fh:
        fh.write("# " + " ".join(SCENARIO_COLUMNS) + "\n")
        for row in rows:
            fh.write(" ".join(row) + "\n")
    print(f"wrote {csv_path} and {dat_path} (barrier={series.barrier:.12g})")
    return 0


# ---------------------------------------------------------------------------
# single price query


def cmd_price(cfg: Config, info_name: str, measure: str, t: float) -> int:
    dt = cfg.horizon / cfg.steps
    k = round(t / dt)
    if abs(t - k * dt) > 1e-9 or not 0 <= k <= cfg.steps:
        print(f"error: t={t} is not on the scenario grid", file=sys.stderr)
        return 2
    seed = cfg.seed_scenario
    barrier = _realized_barrier(cfg, None, seed)
    paths = simulate_paths(cfg.params, cfg.horizon, cfg.steps, 1, seed)
    state = state_at(paths, 0, float(paths.grid[k]))
    mc_line: Optional[float] = None

    if paths.running_min[0, k] <= barrier:
        # every agent observes the default; the claim is worth its past flows
        print("0")
        return 0

    if info_name == "manager":
        if state.x_min <= barrier:
            value = 0.0
        elif measure == "P":
            value = price_manager_p(cfg.params, cfg.model, cfg.law, state,
                                    barrier, cfg.claim, cfg.disc)
        else:
            value = price_manager_q(cfg.params, cfg.model, cfg.law, state,
                                    barrier, cfg.claim, cfg.disc)
    elif info_name == "progressive":
        if isinstance(cfg.model, Independent):
            value = price_progressive(cfg.params, cfg.model, cfg.law, state,
                                      cfg.claim, cfg.disc)
        else:
            est = oracle_price(Progressive(), cfg.params, cfg.model, cfg.law,
                               cfg.claim, cfg.disc, state.t,
                               Conditioning(state), cfg.oracle_paths,
                               cfg.seed_oracle, cfg.oracle_steps)
            value, mc_line = est.mean, est.stderr
    elif info_name == "delayed":
        lag = Delayed(delay=cfg.delay).lag_time(state.t)
        lag_idx = int(round(lag / dt))
        delayed_state = state_at(paths, 0, float(paths.grid[lag_idx]))
        default_observed = bool(paths.running_min[0, k] <= barrier)
        if isinstance(cfg.model, Independent):
            value = price_delayed(cfg.params, cfg.model, cfg.law, delayed_state,
                                  state.t, cfg.claim, cfg.disc, default_observed)
        else:
            est = oracle_price(Delayed(delay=cfg.delay), cfg.params, cfg.model,
                               cfg.law, cfg.claim, cfg.disc, state.t,
                               Conditioning(delayed_state,
                                            default_observed=default_observed),
                               cfg.oracle_paths, cfg.seed_oracle,
                               cfg.oracle_steps)
            value, mc_line = est.mean, est.stderr
    elif info_name == "insider":
        eps = sample_noise_path(cfg.noise, paths.grid, seed + 2)
        noisy = barrier + float(eps[k])
        if measure == "P":
            value = price_insider_p(cfg.params, cfg.model, cfg.law, cfg.noise,
                                    state, noisy, cfg.claim, cfg.disc)
        else:
            value, stderr = price_insider_q(
                cfg.params, cfg.model, cfg.law, cfg.noise, state, noisy,
                cfg.claim, cfg.disc, mc_budget=cfg.insider_q_paths,
                seed=cfg.seed_oracle,
            )
            mc_line = stderr
    else:
        print(f"error: unknown info {info_name!r}", file=sys.stderr)
        return 2

    if mc_line is None:
        print(f"{value:.12g}")
    else:
        print(f"{value:.12g},{mc_line:.12g}")
    return 0


# ---------------------------------------------------------------------------
# validation


def cmd_validate(cfg: Config, out_file: str) -> int:
    suite = default_suite(cfg.params, cfg.model, cfg.law, cfg.noise, cfg.claim,
                          cfg.disc, n_paths=cfg.oracle_paths,
                          seed=cfg.seed_oracle, n_steps=cfg.oracle_steps,
                          insider_q_budget=cfg.insider_q_paths)
    if not isinstance(cfg.model, Independent):
        # no closed form for these agents under a signal-correlated barrier
        suite = [c for c in suite
                 if not isinstance(c.info, (Progressive, Delayed))]
    report = validate_report(suite)
    with Path(out_file).open("w", newline="") as fh:
        report.write_csv(fh)
    status = "PASS" if report.passed else "FAIL"
    worst = max((abs(c.z_score) for c in report.cases), default=0.0)
    print(f"{status}: {len(report.cases)} cases, max |z| = {worst:.3g} "
          f"(report: {out_file})")
    return 0 if report.passed else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engine",
        description="Pricing engine for default-sensitive claims under "
                    "asymmetric barrier information.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_scen = sub.add_parser("scenario", help="simulate one path and price along it")
    p_scen.add_argument("--config", default=None, help="JSON config file")
    p_scen.add_argument("--barrier", choices=("low", "high", "sample"),
                        default=None, help="override the realized barrier")
    p_scen.add_argument("--seed", type=int, default=None)
    p_scen.add_argument("--out", required=True, help="output directory")

    p_price = sub.add_parser("price", help="price the claim at one time")
    p_price.add_argument("--config", default=None)
    p_price.add_argument("--info", required=True,
                         choices=("manager", "progressive", "delayed", "insider"))
    p_price.add_argument("--measure", choices=("P", "Q"), default="P")
    p_price.add_argument("--t", type=float, required=True)

    p_val = sub.add_parser("validate", help="run the oracle validation suite")
    p_val.add_argument("--config", default=None)
    p_val.add_argument("--out", required=True, help="report CSV file")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "scenario":
            return cmd_scenario(cfg, args.barrier, args.seed, args.out)
        if args.command == "price":
            return cmd_price(cfg, args.info, args.measure, args.t)
        return cmd_validate(cfg, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
