"""Credit-sensitive claims and deterministic discounting.

A claim is a triplet: a constant payment at maturity if no default occurred,
a linear cumulative dividend stream, and a constant recovery paid at the
default time.  This covers both the defaultable zero-coupon bond and the
CDS exactly, and keeps every pricing leg in closed quadrature form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Claim", "Discount", "make_zcb", "make_cds", "discount_factor"]


@dataclass(frozen=True)
class Claim:
    """Claim triplet with maturity ``T``.

    Attributes
    ----------
    maturity : T in years, > 0
    terminal : constant payment at T on survival
    dividend_rate : g such that the cumulative dividend is g * t
        (negative for premium payments, e.g. a CDS spread leg)
    recovery : constant payment at the default time if it occurs before T
    """

    maturity: float
    terminal: float
    dividend_rate: float
    recovery: float

    def __post_init__(self):
        if self.maturity <= 0.0:
            raise ValueError(f"maturity must be > 0, got {self.maturity}")

    def scaled(self, a: float) -> "Claim":
        return Claim(self.maturity, a * self.terminal, a * self.dividend_rate,
                     a * self.recovery)

    def __add__(self, other: "Claim") -> "Claim":
        if other.maturity != self.maturity:
            raise ValueError("can only combine claims with the same maturity")
        return Claim(self.maturity, self.terminal + other.terminal,
                     self.dividend_rate + other.dividend_rate,
                     self.recovery + other.recovery)


@dataclass(frozen=True)
class Discount:
    """Deterministic flat short rate; discount factor process e^{r t}."""

    rate: float


def discount_factor(disc: Discount, t: float) -> float:
    """Value of the discount factor process R_t = e^{r t}."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    return math.exp(disc.rate * t)


def make_zcb(maturity: float, alpha_rec: float) -> Claim:
    """Defaultable zero-coupon bond: pays 1 at T, ``1 - alpha_rec`` at default.

    ``alpha_rec = 1`` is the zero-recovery bond (nothing on default).
    """
    if not 0.0 <= alpha_rec <= 1.0:
        raise ValueError(f"recovery rate must be in [0, 1], got {alpha_rec}")
    return Claim(maturity=maturity, terminal=1.0, dividend_rate=0.0,
                 recovery=1.0 - alpha_rec)


def make_cds(maturity: float, kappa: float, alpha_rec: float) -> Claim:
    """CDS seen by the protection buyer: pays spread, receives 1 - alpha_rec."""
    if kappa < 0.0:
        raise ValueError(f"spread must be >= 0, got {kappa}")
    if not 0.0 <= alpha_rec <= 1.0:
        raise ValueError(f"recovery rate must be in [0, 1], got {alpha_rec}")
    return Claim(maturity=maturity, terminal=0.0, dividend_rate=-kappa,
                 recovery=1.0 - alpha_rec)
