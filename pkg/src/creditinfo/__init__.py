"""Pricing engine for default-sensitive claims under asymmetric information.

The firm defaults when its value first reaches a random barrier; agents
differ in what they know about that barrier (manager, investor, delayed
investor, noisy insider) and are priced accordingly, under both the
historical and the information-adjusted risk-neutral measures.  A
Monte Carlo oracle independently validates every closed form.
"""
from .information import (
    BarrierLaw,
    BrownianSignal,
    Independent,
    NoiseModel,
)
from .instruments import Claim, Discount, discount_factor, make_cds, make_zcb
from .kernels import (
    NumericalError,
    hitting_time_density,
    integrate,
    joint_density_terminal_min,
    survival_prob,
)
from .market_model import GbmParams, MarketState, PathSet, market_state, \
    simulate_paths, state_at
from .mc_oracle import Conditioning, OracleEstimate, oracle_price, \
    validate_report
from .pricers import (
    Delayed,
    Insider,
    Manager,
    McParams,
    PriceSeries,
    Progressive,
    conditional_survival,
    insider_survival,
    price_delayed,
    price_insider_p,
    price_insider_q,
    price_manager_p,
    price_manager_q,
    price_progressive,
    survival_kernel,
    value_kernel,
)

__version__ = "0.1.0"
