"""Closed-form first-passage kernels for drifted Brownian motion / GBM.

All kernels are expressed in log-distance coordinates: with firm value
``X_t`` and a barrier ``l`` below it, ``y = ln(X_t / l)`` is the distance
that the log-value must fall for the barrier to be hit.  The log-value
increment over a horizon ``h`` is ``D_h = nu*h + sigma*W_h`` with
``nu = mu - sigma^2/2``.

Everything here is a pure function of floats (or numpy arrays, which
broadcast), safe for concurrent use.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate as _sci_integrate
from scipy.special import log_ndtr, ndtr

__all__ = [
    "survival_prob",
    "hitting_time_density",
    "joint_density_terminal_min",
    "integrate",
    "NumericalError",
    "DEFAULT_TOL",
]

# Default absolute quadrature tolerance used throughout the pricers.
DEFAULT_TOL = 1e-8

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails to reach its tolerance."""


def _validate_positive(name: str, value) -> None:
    if np.any(np.asarray(value) <= 0.0):
        raise ValueError(f"{name} must be > 0, got {value}")


def survival_prob(y, nu, sigma, h):
    """Probability that a drifted Brownian motion stays above ``-y`` on [0, h].

    This is the conditional probability, given the current state, that the
    running minimum of the log firm value does not fall by more than ``y``
    over the next ``h`` years:

        1 - [Phi((-y - nu*h)/(sigma*sqrt(h)))
             + exp(-2*nu*y/sigma^2) * Phi((-y + nu*h)/(sigma*sqrt(h)))]

    The exponent sign follows the reflection-principle derivation and is
    validated against the Monte Carlo oracle.

    Parameters
    ----------
    y : float or array
        Log-distance to the barrier, >= 0.  ``y = 0`` means the barrier is
        being touched right now and the survival probability is 0 for h > 0.
    nu : float or array
        Drift of the log value (per year).
    sigma : float or array
        Volatility (> 0).
    h : float or array
        Horizon in years, >= 0.

    Returns
    -------
    float or ndarray in [0, 1], broadcast over the inputs.
    """
    y, nu, sigma, h = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (y, nu, sigma, h))
    )
    _validate_positive("sigma", sigma)
    if np.any(h < 0.0):
        raise ValueError(f"horizon h must be >= 0, got {h}")
    if np.any(y < 0.0):
        raise ValueError(f"log-distance y must be >= 0, got {y}")

    out = np.ones(y.shape, dtype=float)
    live = h > 0.0
    if np.any(live):
        yl, nl, sl, hl = y[live], nu[live], sigma[live], h[live]
        sq = sl * np.sqrt(hl)
        # second term in log space: exp() * Phi() can otherwise overflow to
        # inf * 0 for strongly negative drift
        term1 = ndtr((-yl - nl * hl) / sq)
        term2 = np.exp(-2.0 * nl * yl / sl**2 + log_ndtr((-yl + nl * hl) / sq))
        # at the barrier default is immediate: Phi(-a) + Phi(a) = 1 exactly
        out[live] = np.where(yl == 0.0, 0.0, 1.0 - (term1 + term2))
    res = np.clip(out, 0.0, 1.0)
    return float(res) if res.ndim == 0 else res


def hitting_time_density(y, nu, sigma, s):
    """Density of the first time the log value falls by ``y``.

    The first-passage time of ``nu*t + sigma*W_t`` to level ``-y`` has the
    inverse-Gaussian-type density

        f(s) = y / (sigma * sqrt(2*pi*s^3)) * exp(-(y + nu*s)^2 / (2*sigma^2*s))

    which is minus the derivative in ``h`` of :func:`survival_prob`.

    Parameters
    ----------
    y : float or array, > 0
    nu, sigma : drift and volatility, sigma > 0
    s : float or array, > 0
        Elapsed time (per-year density evaluated at s).
    """
    y, nu, sigma, s = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (y, nu, sigma, s))
    )
    _validate_positive("sigma", sigma)
    _validate_positive("s", s)
    _validate_positive("y", y)
    dens = (
        y
        / (sigma * np.sqrt(2.0 * np.pi * s**3))
        * np.exp(-((y + nu * s) ** 2) / (2.0 * sigma**2 * s))
    )
    return float(dens) if dens.ndim == 0 else dens


def joint_density_terminal_min(z, y, nu, sigma, h):
    """Defective density of the terminal log increment on the survival set.

    Density in ``z`` of ``D_h = nu*h + sigma*W_h`` restricted to the event
    that ``min_{s<=h} D_s > -y``:

        (1/(sigma*sqrt(h))) * [phi((z - nu*h)/(sigma*sqrt(h)))
            - exp(-2*nu*y/sigma^2) * phi((z + 2y - nu*h)/(sigma*sqrt(h)))]

    for ``z > -y`` and 0 otherwise.  Integrating over ``z`` recovers
    :func:`survival_prob`.
    """
    z, y, nu, sigma, h = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (z, y, nu, sigma, h))
    )
    _validate_positive("sigma", sigma)
    _validate_positive("h", h)
    _validate_positive("y", y)
    sq = sigma * np.sqrt(h)
    u1 = (z - nu * h) / sq
    u2 = (z + 2.0 * y - nu * h) / sq
    # reflected term in log space for drift robustness
    dens = (
        np.exp(-0.5 * u1**2) - np.exp(-2.0 * nu * y / sigma**2 - 0.5 * u2**2)
    ) / (sq * _SQRT_2PI)
    dens = np.where(z > -y, np.maximum(dens, 0.0), 0.0)
    return float(dens) if dens.ndim == 0 else dens


def integrate(f, a: float, b: float, tol: float = DEFAULT_TOL) -> float:
    """Adaptive quadrature of a scalar function with absolute tolerance.

    Thin wrapper over QUADPACK's adaptive Gauss-Kronrod rules
    (``scipy.integrate.quad``).  ``b`` may be ``numpy.inf``; improper tails
    are then handled by QUADPACK's internal variable substitution.  Callers
    that truncate tails themselves use an 8-standard-deviation cutoff, whose
    omitted Gaussian mass is below 1e-15 and therefore negligible against
    the default tolerance.

    Raises
    ------
    ValueError
        If ``a > b`` or ``tol <= 0``.
    NumericalError
        If the routine reports non-convergence or cannot reach ``tol``.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if not (a <= b):
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    value, abserr, info, *tail = _sci_integrate.quad(
        f, a, b, epsabs=tol, epsrel=tol, full_output=1
    )
    if tail:  # QUADPACK warning message present
        raise NumericalError(
            f"quadrature on [{a}, {b}] did not converge: {tail[0]}; "
            f"estimate={value}, abserr={abserr}"
        )
    if abserr > max(tol, abs(value) * tol) * 10.0:
        raise NumericalError(
            f"quadrature on [{a}, {b}] reached abserr={abserr} > tol={tol}"
        )
    return float(value)
