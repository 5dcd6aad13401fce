import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditinfo import kernels
from creditinfo.kernels import (
    NumericalError,
    hitting_time_density,
    integrate,
    joint_density_terminal_min,
    survival_prob,
)

LN2 = math.log(2.0)

# parameter grid used by the consistency properties
NUS = (-0.05, 0.0, 0.03)
SIGMAS = (0.1, 0.2)
YS = (0.1, LN2, 1.5)
HS = (0.25, 1.0)


class TestSurvivalProb:
    def test_at_the_barrier_is_zero(self):
        for nu in NUS:
            assert survival_prob(0.0, nu, 0.2, 1.0) == 0.0

    def test_zero_horizon_is_one(self):
        assert survival_prob(LN2, 0.03, 0.2, 0.0) == 1.0

    def test_bounds_on_grid(self):
        for nu in NUS:
            for sigma in SIGMAS:
                for y in YS:
                    for h in HS:
                        v = survival_prob(y, nu, sigma, h)
                        assert 0.0 <= v <= 1.0

    def test_monotone_in_h_and_y(self):
        # finite-difference sign checks on a grid of > 100 points
        ys = np.linspace(0.05, 2.0, 12)
        hs = np.linspace(0.05, 2.0, 10)
        for nu in NUS:
            for sigma in SIGMAS:
                vals = survival_prob(ys[:, None], nu, sigma, hs[None, :])
                assert np.all(np.diff(vals, axis=1) <= 1e-12)   # nonincreasing in h
                assert np.all(np.diff(vals, axis=0) >= -1e-12)  # nondecreasing in y

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            survival_prob(LN2, 0.03, 0.2, -0.1)
        with pytest.raises(ValueError):
            survival_prob(LN2, 0.03, -0.2, 1.0)
        with pytest.raises(ValueError):
            survival_prob(-0.1, 0.03, 0.2, 1.0)

    @given(
        y=st.floats(0.01, 3.0),
        nu=st.floats(-0.3, 0.3),
        sigma=st.floats(0.05, 0.8),
        h=st.floats(0.0, 5.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_always_a_probability(self, y, nu, sigma, h):
        assert 0.0 <= survival_prob(y, nu, sigma, h) <= 1.0


class TestHittingTimeDensity:
    def test_vanishes_at_origin(self):
        assert hitting_time_density(LN2, 0.03, 0.2, 1e-12) == pytest.approx(0.0)

    def test_nonnegative(self):
        s = np.linspace(1e-6, 3.0, 200)
        for nu in NUS:
            assert np.all(hitting_time_density(LN2, nu, 0.2, s) >= 0.0)

    def test_integral_matches_survival(self):
        total = integrate(
            lambda s: hitting_time_density(LN2, 0.03, 0.2, s) if s > 0 else 0.0,
            0.0, 1.0,
        )
        assert total == pytest.approx(1.0 - survival_prob(LN2, 0.03, 0.2, 1.0),
                                      abs=1e-8)

    def test_matches_minus_dh_survival(self):
        # central finite difference of the survival probability in h; only
        # points where the density is measurable above the difference
        # roundoff (eps / step ~ 1e-11) say anything about the identity
        step = 1e-5
        checked = 0
        for nu in NUS:
            for sigma in SIGMAS:
                for y in (0.1, 0.3, LN2, 1.2):
                    for h in (0.2, 0.7, 1.5):
                        f = hitting_time_density(y, nu, sigma, h)
                        if f < 1e-4:
                            continue
                        fd = -(survival_prob(y, nu, sigma, h + step)
                               - survival_prob(y, nu, sigma, h - step)) / (2 * step)
                        assert fd == pytest.approx(f, rel=1e-5)
                        checked += 1
        assert checked >= 30

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            hitting_time_density(LN2, 0.03, 0.2, 0.0)
        with pytest.raises(ValueError):
            hitting_time_density(LN2, 0.03, 0.2, -1.0)


class TestJointDensityTerminalMin:
    def test_zero_outside_support(self):
        assert joint_density_terminal_min(-LN2, LN2, 0.03, 0.2, 1.0) == 0.0
        assert joint_density_terminal_min(-1.0, LN2, 0.03, 0.2, 1.0) == 0.0

    def test_nonnegative(self):
        z = np.linspace(-2.0, 2.0, 400)
        for nu in NUS:
            assert np.all(joint_density_terminal_min(z, LN2, nu, 0.2, 1.0) >= 0.0)

    @pytest.mark.parametrize("nu", NUS)
    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_integrates_to_survival(self, nu, sigma):
        y, h = LN2, 1.0
        hi = nu * h + 8.0 * sigma * math.sqrt(h)
        val = integrate(
            lambda z: joint_density_terminal_min(z, y, nu, sigma, h), -y, hi
        )
        assert val == pytest.approx(survival_prob(y, nu, sigma, h), abs=1e-8)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            joint_density_terminal_min(0.0, -0.5, 0.03, 0.2, 1.0)
        with pytest.raises(ValueError):
            joint_density_terminal_min(0.0, LN2, 0.03, 0.2, 0.0)


class TestIntegrate:
    def test_constant(self):
        assert integrate(lambda x: 1.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-8)

    def test_gaussian_half_mass(self):
        dens = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
        assert integrate(dens, 0.0, np.inf) == pytest.approx(0.5, abs=1e-8)

    def test_empty_interval(self):
        assert integrate(lambda x: 1e9, 2.0, 2.0) == 0.0

    def test_rejects_bad_bounds_and_tol(self):
        with pytest.raises(ValueError):
            integrate(lambda x: 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            integrate(lambda x: 1.0, 0.0, 1.0, tol=0.0)

    def test_nonconvergence_raises(self):
        # violently oscillatory integrand defeats the adaptive rule
        with pytest.raises(NumericalError):
            integrate(lambda x: math.sin(1.0 / (x + 1e-12)) / (x + 1e-12),
                      0.0, 1.0, tol=1e-12)

    def test_consistency_with_survival(self):
        val = integrate(
            lambda s: hitting_time_density(LN2, 0.03, 0.2, s) if s > 0 else 0.0,
            0.0, 1.0,
        )
        assert val == pytest.approx(1.0 - survival_prob(LN2, 0.03, 0.2, 1.0),
                                    abs=1e-8)


def test_internal_consistency_on_grid():
    """Hitting integral and joint-density mass agree with survival, 1e-8."""
    nus = np.linspace(-0.05, 0.05, 5)
    sigmas = (0.1, 0.2)
    ys = (0.3, LN2, 1.0, 1.5, 2.0)
    hs = (0.5, 1.0)
    checked = 0
    for nu in nus:
        for sigma in sigmas:
            for y in ys:
                for h in hs:
                    lhs = integrate(
                        lambda s: hitting_time_density(y, nu, sigma, s)
                        if s > 0 else 0.0, 0.0, h,
                    )
                    assert lhs == pytest.approx(
                        1.0 - survival_prob(y, nu, sigma, h), abs=1e-8
                    )
                    hi = nu * h + 8.0 * sigma * math.sqrt(h)
                    mass = integrate(
                        lambda z: joint_density_terminal_min(z, y, nu, sigma, h),
                        -y, hi,
                    )
                    assert mass == pytest.approx(
                        survival_prob(y, nu, sigma, h), abs=1e-8
                    )
                    checked += 1
    assert checked == 100
