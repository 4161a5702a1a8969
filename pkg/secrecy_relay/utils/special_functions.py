"""Real-argument special functions used by the secrecy outage expressions.

Thin, domain-checked wrappers over scipy.special, plus the power series of
I_0 that the eta = 2 derivation is built on.
"""

import math

from scipy import special

from secrecy_relay.errors import InvalidParameterError


def gamma_fn(x: float) -> float:
    """Euler gamma function for x > 0."""
    if not x > 0 or not math.isfinite(x):
        raise InvalidParameterError(f"gamma_fn is defined here for finite x > 0, got {x}")
    return float(special.gamma(x))


def bessel_i0(z: float) -> float:
    """Modified Bessel function of the first kind, order zero, for z >= 0."""
    if not z >= 0 or not math.isfinite(z):
        raise InvalidParameterError(f"bessel_i0 is defined here for finite z >= 0, got {z}")
    return float(special.i0(z))


def bessel_i0_scaled(z: float) -> float:
    """exp(-z) * I_0(z); stays finite where I_0 alone would overflow."""
    if not z >= 0 or not math.isfinite(z):
        raise InvalidParameterError(f"bessel_i0_scaled is defined here for finite z >= 0, got {z}")
    return float(special.i0e(z))


def bessel_i0_series(z: float, terms: int = 60) -> float:
    """Partial sum of I_0(z) = sum_k (z^2/4)^k / (k!)^2 over k < terms."""
    if not z >= 0:
        raise InvalidParameterError(f"bessel_i0_series needs z >= 0, got {z}")
    if terms < 1:
        raise InvalidParameterError(f"terms must be >= 1, got {terms}")
    quarter_square = z * z / 4.0
    term = 1.0
    total = 1.0
    for k in range(1, terms):
        term *= quarter_square / (k * k)
        total += term
    return total
