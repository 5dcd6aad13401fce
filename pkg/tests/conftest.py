import pytest

from creditinfo import (
    BarrierLaw,
    Discount,
    GbmParams,
    Independent,
    NoiseModel,
    make_zcb,
    market_state,
)

# Example 6.3 barrier values; the firm-value defaults are the engine's
# declared scenario defaults (the barrier must lie below the initial value).
PAPER_LEVELS = (1.0, 3.0)
PAPER_ALPHA = 0.5


@pytest.fixture
def paper_law():
    return BarrierLaw(PAPER_LEVELS, (PAPER_ALPHA, 1.0 - PAPER_ALPHA))


@pytest.fixture
def paper_params():
    return GbmParams(x0=4.0, mu=0.05, sigma=0.2)


@pytest.fixture
def low_start_params():
    """Initial value between the two barrier levels (x0 = 2)."""
    return GbmParams(x0=2.0, mu=0.05, sigma=0.2)


@pytest.fixture
def zero_recovery_bond():
    return make_zcb(1.0, alpha_rec=1.0)


@pytest.fixture
def disc():
    return Discount(rate=0.02)


@pytest.fixture
def independent():
    return Independent()


@pytest.fixture
def noise_unit():
    return NoiseModel(sigma_eps=1.0)


def state_at_start(params):
    return market_state(params, 0.0, params.x0, params.x0)
