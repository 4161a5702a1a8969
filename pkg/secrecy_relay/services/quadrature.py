"""Adaptive quadrature for the secrecy outage integrals.

Both entry points delegate to QUADPACK through ``scipy.integrate.quad``.
The 2-D polar integrals are evaluated as nested 1-D integrals: an outer
radial integral over d_si and an inner angular integral over [0, pi].
Infinite upper limits in 1-D are left to QUADPACK's variable change; the
2-D radial integral is truncated at an explicit, auditable radius.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from scipy import integrate

from secrecy_relay.errors import InvalidParameterError, QuadratureConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    radial_truncation_factor: float = 2.0
    max_subdivisions: int = 2048
    # Re-evaluate eta = 2 closed forms by quadrature and fail on disagreement.
    cross_check_closed_forms: bool = False

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidParameterError(f"tolerances must be > 0, got rel={self.rel_tol} abs={self.abs_tol}")
        if self.max_subdivisions < 16:
            raise InvalidParameterError(f"max_subdivisions must be >= 16, got {self.max_subdivisions}")
        if self.radial_truncation_factor < 1:
            raise InvalidParameterError(
                f"radial_truncation_factor must be >= 1, got {self.radial_truncation_factor}"
            )

    def tolerance_for(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class RadialKernel:
    """A factor exp(-decay * (d - centre_offset)^eta) dominating an integrand for d > centre_offset."""

    decay: float
    centre_offset: float = 0.0


def _quad(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    cfg: QuadratureConfig,
    points: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    kwargs = {}
    if points and math.isfinite(upper):
        inside = sorted({float(p) for p in points if lower < p < upper})
        if inside:
            kwargs["points"] = inside
    # With full_output, non-convergence comes back as a fourth element instead of a warning.
    result = integrate.quad(
        f,
        lower,
        upper,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        full_output=1,
        **kwargs,
    )
    value, error = float(result[0]), float(result[1])
    if len(result) > 3:
        raise QuadratureConvergenceError(
            f"quadrature on [{lower}, {upper}] did not converge: {result[3]}",
            best_estimate=value,
            error_estimate=error,
            detail=str(result[3]),
        )
    if not math.isfinite(value):
        raise QuadratureConvergenceError(
            f"quadrature on [{lower}, {upper}] produced a non-finite value",
            best_estimate=value,
            error_estimate=error,
        )
    return value, error


def integrate_1d(
    f: Callable[[float], float],
    lower: float,
    upper: float,
    cfg: QuadratureConfig,
    points: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """Adaptively integrate f over [lower, upper]; upper may be math.inf.

    Returns (value, error_estimate). Raises QuadratureConvergenceError, carrying
    the best estimate, when the subdivision limit is hit.
    """
    if upper < lower:
        raise InvalidParameterError(f"integration limits out of order: [{lower}, {upper}]")
    if upper == lower:
        return 0.0, 0.0
    return _quad(f, lower, upper, cfg, points)


def integrate_2d_polar(
    g: Callable[[float, float], float],
    cfg: QuadratureConfig,
    radial_limit: float = math.inf,
    radial_breakpoints: Sequence[float] = (),
) -> Tuple[float, float]:
    """Integrate g(d_si, theta) over d_si in [0, radial_limit) and theta in [0, pi].

    The inner angular integral runs over the fixed interval [0, pi]; the
    outer radial integral is truncated at ``radial_limit`` (see
    radial_truncation). ``radial_breakpoints`` marks radii where the
    integrand has a ridge, typically d_si = d_sr.
    """
    if not radial_limit > 0:
        raise InvalidParameterError(f"radial_limit must be > 0, got {radial_limit}")

    inner_errors: List[float] = []

    def radial_integrand(dist_si: float) -> float:
        value, error = _quad(lambda theta: g(dist_si, theta), 0.0, math.pi, cfg)
        inner_errors.append(error)
        return value

    value, outer_error = _quad(radial_integrand, 0.0, radial_limit, cfg, radial_breakpoints)
    span = radial_limit if math.isfinite(radial_limit) else 1.0
    # Inner errors integrate over the radial span at most.
    error = outer_error + (max(inner_errors) if inner_errors else 0.0) * span
    logger.debug(
        f"integrate_2d_polar: value={value:.6g} err={error:.3g} inner_evals={len(inner_errors)} "
        f"radial_limit={radial_limit:.4g}"
    )
    return value, error


def radial_truncation(kernels: Sequence[RadialKernel], path_loss_exp: float, cfg: QuadratureConfig) -> float:
    """Radius beyond which every kernel's tail is below abs_tol.

    For each kernel exp(-c (d - offset)^eta) the cut is
    offset + factor * (ln(1/abs_tol) / c)^(1/eta); the largest cut wins.
    """
    if not kernels:
        raise InvalidParameterError("radial_truncation needs at least one kernel")
    log_inverse_tol = math.log(1.0 / cfg.abs_tol)
    radius = 0.0
    for kernel in kernels:
        if not kernel.decay > 0:
            raise InvalidParameterError(f"kernel decay must be > 0, got {kernel.decay}")
        reach = (log_inverse_tol / kernel.decay) ** (1.0 / path_loss_exp)
        radius = max(radius, kernel.centre_offset + cfg.radial_truncation_factor * reach)
    return radius


def radial_tail_bound(kernel: RadialKernel, path_loss_exp: float, radius: float, cfg: QuadratureConfig) -> float:
    """Upper bound on the polar-integral mass discarded beyond ``radius``.

    Bounds pi * int_radius^inf d exp(-c (d - offset)^eta) dd, which dominates
    the [0, pi] angular integral of every kernel-dominated integrand.
    """
    if radius <= kernel.centre_offset:
        raise InvalidParameterError("radius must lie beyond the kernel centre")

    def tail(dist: float) -> float:
        return dist * math.exp(-kernel.decay * (dist - kernel.centre_offset) ** path_loss_exp)

    value, _ = integrate_1d(tail, radius, math.inf, cfg)
    return math.pi * value
