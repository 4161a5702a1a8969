"""Closed-form and semi-analytic outage probabilities.

Transmission outage is closed form. Secrecy outage follows from the
probability generating functional of the eavesdropper PPP:

    P_so = 1 - exp(-2 lambda (J1 + J2 - J3))

J1 is closed form for every path-loss exponent. J2 and J3 are 2-D polar
integrals evaluated by quadrature, except at eta = 2 where they reduce to
closed forms and are dispatched to them.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

from scipy import optimize, special

from secrecy_relay.errors import InvalidParameterError, QuadratureConvergenceError
from secrecy_relay.models import (
    PowerAllocation,
    SecrecyMetrics,
    SystemParams,
    WiretapCode,
    an_attenuation,
    mean_snr_rd,
    mean_snr_ri,
    mean_snr_si,
    mean_snr_sr,
)
from secrecy_relay.services.quadrature import (
    QuadratureConfig,
    RadialKernel,
    integrate_1d,
    integrate_2d_polar,
    radial_truncation,
)
from secrecy_relay.utils.special_functions import bessel_i0_scaled, gamma_fn

logger = logging.getLogger(__name__)

# exp(-x) underflows to zero in double precision beyond about this exponent.
MAX_PGFL_EXPONENT = 700.0

# Relative agreement required between a closed form and its quadrature twin.
CROSS_CHECK_RTOL = 1e-6

DEFAULT_QUADRATURE = QuadratureConfig()


class TermMethod(enum.Enum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class SoTerms:
    """The three PGFL integrals behind one secrecy outage evaluation."""

    j1: float
    j2: float
    j3: float
    j1_method: TermMethod
    j2_method: TermMethod
    j3_method: TermMethod
    error_estimate: float = 0.0

    @property
    def total(self) -> float:
        """J1 + J2 - J3, clamped at zero (see so_terms)."""
        return max(0.0, self.j1 + self.j2 - self.j3)


def _check_beta(params: SystemParams, beta: float) -> None:
    PowerAllocation(beta).validate_for(params)


def _check_tau_e(tau_e: float) -> None:
    if not tau_e > 0 or not math.isfinite(tau_e):
        raise InvalidParameterError(
            f"tau_e must be a positive finite threshold here, got {tau_e}; P_so handles tau_e = 0 itself"
        )


# ---------------------------------------------------------------------------
# Per-link CDFs
# ---------------------------------------------------------------------------


def cdf_gamma_sr(gamma: float, params: SystemParams, beta: float) -> float:
    """CDF of the source-relay SNR: Erlang(N) with scale beta * mean_snr_sr."""
    _check_beta(params, beta)
    if gamma <= 0:
        return 0.0
    x = gamma / (beta * mean_snr_sr(params))
    return float(special.gammainc(params.num_antennas, x))


def cdf_gamma_rd(gamma: float, params: SystemParams) -> float:
    """CDF of the relay-destination SNR: exponential with mean mean_snr_rd."""
    if gamma <= 0:
        return 0.0
    return -math.expm1(-gamma / mean_snr_rd(params))


def cdf_gamma_si(gamma: float, params: SystemParams, beta: float, dist_si: float) -> float:
    """CDF of an eavesdropper's slot-one SINR under artificial noise."""
    _check_beta(params, beta)
    if not dist_si > 0:
        raise InvalidParameterError(f"dist_si must be > 0, got {dist_si}")
    if gamma <= 0:
        return 0.0
    survival_log = -gamma / (beta * mean_snr_si(params, dist_si))
    if beta < 1.0:
        dof = params.num_antennas - 1
        survival_log -= dof * math.log1p((1.0 - beta) * gamma / (beta * dof))
    return -math.expm1(survival_log)


def cdf_gamma_ri(gamma: float, params: SystemParams, dist_ri: float) -> float:
    """CDF of an eavesdropper's slot-two SNR from the relay."""
    if not dist_ri > 0:
        raise InvalidParameterError(f"dist_ri must be > 0, got {dist_ri}")
    if gamma <= 0:
        return 0.0
    return -math.expm1(-gamma / mean_snr_ri(params, dist_ri))


# ---------------------------------------------------------------------------
# Transmission outage
# ---------------------------------------------------------------------------


def p_to(params: SystemParams, beta: float, code: WiretapCode) -> float:
    """P(min(gamma_sr, gamma_rd) <= tau_b).

    The closed form is
    1 - exp(-tau_b / mean_snr_rd) * exp(-x) * sum_{n<N} x^n / n!
    with x = tau_b / (beta mean_snr_sr); the Erlang partial sum times exp(-x)
    is the regularised upper incomplete gamma Q(N, x).
    """
    _check_beta(params, beta)
    tau_b = code.tau_b
    if tau_b <= 0:
        return 0.0
    x = tau_b / (beta * mean_snr_sr(params))
    survival = float(special.gammaincc(params.num_antennas, x)) * math.exp(-tau_b / mean_snr_rd(params))
    return min(1.0, max(0.0, 1.0 - survival))


# ---------------------------------------------------------------------------
# Secrecy outage building blocks
# ---------------------------------------------------------------------------


def _relay_decay(params: SystemParams, tau_e: float) -> float:
    return tau_e * params.noise_eav_slot2 / params.power_relay


def _source_decay(params: SystemParams, beta: float, tau_e: float) -> float:
    return tau_e * params.noise_eav_slot1 / (beta * params.power_source)


def psi(theta: float, dist_si: float, params: SystemParams, tau_e: float) -> float:
    """(tau_e sigma_i2^2 / P_r) * d_ri^eta with d_ri from the law of cosines."""
    dist_sr = params.dist_sr
    squared = dist_sr * dist_sr + dist_si * dist_si - 2.0 * dist_sr * dist_si * math.cos(theta)
    return _relay_decay(params, tau_e) * max(0.0, squared) ** (params.path_loss_exp / 2.0)


def j1(params: SystemParams, beta: float, tau_e: float) -> float:
    """Closed form of J1: (pi/eta) (beta P_s / (tau_e sigma_i1^2))^(2/eta) * AN factor * Gamma(2/eta)."""
    _check_beta(params, beta)
    _check_tau_e(tau_e)
    eta = params.path_loss_exp
    scale = (1.0 / _source_decay(params, beta, tau_e)) ** (2.0 / eta)
    return math.pi / eta * scale * an_attenuation(params.num_antennas, beta, tau_e) * gamma_fn(2.0 / eta)


def j1_integral(params: SystemParams, beta: float, tau_e: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """J1 as pi * AN factor * int_0^inf d exp(-c d^eta) dd, for cross-checking j1."""
    _check_beta(params, beta)
    _check_tau_e(tau_e)
    eta = params.path_loss_exp
    decay = _source_decay(params, beta, tau_e)

    def integrand(dist: float) -> float:
        return dist * math.exp(-decay * dist**eta)

    # Split at a few kernel widths so the bulk is integrated on a finite interval.
    split = 4.0 * decay ** (-1.0 / eta)
    bulk, _ = integrate_1d(integrand, 0.0, split, cfg)
    tail, _ = integrate_1d(integrand, split, math.inf, cfg)
    return math.pi * an_attenuation(params.num_antennas, beta, tau_e) * (bulk + tail)


def _use_closed_form(params: SystemParams, method: str) -> bool:
    if method not in ("auto", "closed-form", "quadrature"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if method == "closed-form" and params.path_loss_exp != 2:
        raise InvalidParameterError("closed forms for J2 and J3 exist only for eta = 2")
    return method == "closed-form" or (method == "auto" and params.path_loss_exp == 2)


def _cross_check(name: str, closed: float, quadrature: float, cfg: QuadratureConfig) -> None:
    if not math.isclose(closed, quadrature, rel_tol=CROSS_CHECK_RTOL, abs_tol=10.0 * cfg.abs_tol):
        raise QuadratureConvergenceError(
            f"{name}: closed form {closed!r} and quadrature {quadrature!r} disagree",
            best_estimate=quadrature,
            error_estimate=abs(closed - quadrature),
        )
    logger.debug(f"{name}: closed form and quadrature agree ({closed:.12g})")


def _ridge_breakpoints(centre: float, width: float) -> List[float]:
    return [centre - width, centre, centre + width]


def _j2_quadrature(params: SystemParams, tau_e: float, cfg: QuadratureConfig) -> Tuple[float, float]:
    eta = params.path_loss_exp
    dist_sr = params.dist_sr
    decay = _relay_decay(params, tau_e)
    half_eta = eta / 2.0

    def integrand(dist_si: float, theta: float) -> float:
        squared = dist_sr * dist_sr + dist_si * dist_si - 2.0 * dist_sr * dist_si * math.cos(theta)
        return dist_si * math.exp(-decay * max(0.0, squared) ** half_eta)

    width = decay ** (-1.0 / eta)
    limit = radial_truncation([RadialKernel(decay, centre_offset=dist_sr)], eta, cfg)
    breakpoints = _ridge_breakpoints(dist_sr, width) + [width]
    return integrate_2d_polar(integrand, cfg, radial_limit=limit, radial_breakpoints=breakpoints)


def _j2_closed_form(params: SystemParams, tau_e: float) -> float:
    return math.pi / (2.0 * _relay_decay(params, tau_e))


def _j2_with_error(
    params: SystemParams, tau_e: float, cfg: QuadratureConfig, method: str
) -> Tuple[float, float, TermMethod]:
    if _use_closed_form(params, method):
        value = _j2_closed_form(params, tau_e)
        if cfg.cross_check_closed_forms:
            _cross_check("J2", value, _j2_quadrature(params, tau_e, cfg)[0], cfg)
        return value, 0.0, TermMethod.CLOSED_FORM
    value, error = _j2_quadrature(params, tau_e, cfg)
    return value, error, TermMethod.QUADRATURE


def j2(params: SystemParams, tau_e: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE, method: str = "auto") -> float:
    """J2 = int_0^inf int_0^pi d_si exp(-psi(theta)) dtheta dd_si.

    ``method`` is "auto" (closed form at eta = 2, quadrature otherwise),
    "closed-form" or "quadrature".
    """
    _check_tau_e(tau_e)
    return _j2_with_error(params, tau_e, cfg, method)[0]


def _j3_quadrature(params: SystemParams, beta: float, tau_e: float, cfg: QuadratureConfig) -> Tuple[float, float]:
    eta = params.path_loss_exp
    dist_sr = params.dist_sr
    relay_decay = _relay_decay(params, tau_e)
    source_decay = _source_decay(params, beta, tau_e)
    half_eta = eta / 2.0

    def integrand(dist_si: float, theta: float) -> float:
        squared = dist_sr * dist_sr + dist_si * dist_si - 2.0 * dist_sr * dist_si * math.cos(theta)
        exponent = source_decay * dist_si**eta + relay_decay * max(0.0, squared) ** half_eta
        return dist_si * math.exp(-exponent)

    # The integrand sits under both kernels, so the tighter cut is enough.
    limit = min(
        radial_truncation([RadialKernel(source_decay)], eta, cfg),
        radial_truncation([RadialKernel(relay_decay, centre_offset=dist_sr)], eta, cfg),
    )
    # Along theta = 0 the combined exponent is smallest at a saddle between source and relay.
    saddle = optimize.minimize_scalar(
        lambda d: source_decay * d**eta + relay_decay * abs(d - dist_sr) ** eta,
        bounds=(0.0, dist_sr),
        method="bounded",
        options={"xatol": 1e-10 * dist_sr},
    ).x
    source_width = source_decay ** (-1.0 / eta)
    relay_width = relay_decay ** (-1.0 / eta)
    joint_width = (source_decay + relay_decay) ** (-1.0 / eta)
    breakpoints = (
        _ridge_breakpoints(float(saddle), joint_width)
        + _ridge_breakpoints(dist_sr, relay_width)
        + [source_width]
    )
    value, error = integrate_2d_polar(integrand, cfg, radial_limit=limit, radial_breakpoints=breakpoints)
    attenuation = an_attenuation(params.num_antennas, beta, tau_e)
    return attenuation * value, attenuation * error


def _j3_closed_form(params: SystemParams, beta: float, tau_e: float) -> float:
    power_s = beta * params.power_source
    power_r = params.power_relay
    mixed_noise = power_s * params.noise_eav_slot2 + power_r * params.noise_eav_slot1
    prefactor = math.pi * power_s * power_r / (2.0 * tau_e * mixed_noise)
    exponent = tau_e * params.noise_eav_slot1 * params.noise_eav_slot2 * params.dist_sr**2 / mixed_noise
    return prefactor * math.exp(-exponent) * an_attenuation(params.num_antennas, beta, tau_e)


def _j3_with_error(
    params: SystemParams, beta: float, tau_e: float, cfg: QuadratureConfig, method: str
) -> Tuple[float, float, TermMethod]:
    if _use_closed_form(params, method):
        value = _j3_closed_form(params, beta, tau_e)
        if cfg.cross_check_closed_forms:
            _cross_check("J3", value, _j3_quadrature(params, beta, tau_e, cfg)[0], cfg)
        return value, 0.0, TermMethod.CLOSED_FORM
    value, error = _j3_quadrature(params, beta, tau_e, cfg)
    return value, error, TermMethod.QUADRATURE


def j3(
    params: SystemParams,
    beta: float,
    tau_e: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    method: str = "auto",
) -> float:
    """J3: the overlap term, J2's integrand times the slot-one survival factor."""
    _check_beta(params, beta)
    _check_tau_e(tau_e)
    return _j3_with_error(params, beta, tau_e, cfg, method)[0]


def j2_bessel_form(params: SystemParams, tau_e: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """J2 at eta = 2 after the angular integral is replaced by pi * I_0.

    pi exp(-k d_sr^2) int_0^inf d exp(-k d^2) I_0(2 k d_sr d) dd with
    k = tau_e sigma_i2^2 / P_r, written with the scaled Bessel function so the
    exponentials cancel before they can overflow.
    """
    if params.path_loss_exp != 2:
        raise InvalidParameterError("the Bessel form of J2 holds only for eta = 2")
    _check_tau_e(tau_e)
    decay = _relay_decay(params, tau_e)
    dist_sr = params.dist_sr

    def integrand(dist_si: float) -> float:
        return dist_si * math.exp(-decay * (dist_si - dist_sr) ** 2) * bessel_i0_scaled(2.0 * decay * dist_sr * dist_si)

    value, _ = integrate_1d(integrand, 0.0, math.inf, cfg)
    return math.pi * value


def j2_series_form(params: SystemParams, tau_e: float, terms: int = 60) -> float:
    """J2 at eta = 2 as the truncated series left after integrating term by term.

    (pi P_r / (2 tau_e sigma_i2^2)) exp(-x) sum_{k<terms} x^k Gamma(k+1) / (k!)^2
    with x = k d_sr^2; the sum tends to exp(x), giving pi P_r / (2 tau_e sigma_i2^2).
    """
    if params.path_loss_exp != 2:
        raise InvalidParameterError("the series form of J2 holds only for eta = 2")
    _check_tau_e(tau_e)
    if terms < 1:
        raise InvalidParameterError(f"terms must be >= 1, got {terms}")
    decay = _relay_decay(params, tau_e)
    x = decay * params.dist_sr**2
    if x == 0:
        return math.pi / (2.0 * decay)
    log_x = math.log(x)
    # Each term exp(-x) x^k Gamma(k+1) / (k!)^2 is evaluated in log space.
    total = 0.0
    for k in range(terms):
        log_factorial = math.lgamma(k + 1)
        total += math.exp(k * log_x + log_factorial - 2.0 * log_factorial - x)
    return math.pi / (2.0 * decay) * total


def so_terms(
    params: SystemParams,
    beta: float,
    tau_e: float,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
    method: str = "auto",
) -> SoTerms:
    """Evaluate J1, J2 and J3 at one operating point.

    J1 + J2 - J3 is provably non-negative. A small negative value within the
    combined error estimate is quadrature noise and is clamped with a
    warning; anything larger means the quadrature failed.
    """
    _check_beta(params, beta)
    _check_tau_e(tau_e)
    value_j1 = j1(params, beta, tau_e)
    value_j2, error_j2, method_j2 = _j2_with_error(params, tau_e, cfg, method)
    value_j3, error_j3, method_j3 = _j3_with_error(params, beta, tau_e, cfg, method)
    error = error_j2 + error_j3
    raw = value_j1 + value_j2 - value_j3
    if raw < 0:
        if -raw > error + cfg.abs_tol:
            raise QuadratureConvergenceError(
                f"J1 + J2 - J3 = {raw:.3e} is negative beyond the error estimate {error:.3e}",
                best_estimate=raw,
                error_estimate=error,
            )
        logger.warning(f"Clamping J1 + J2 - J3 = {raw:.3e} to zero (error estimate {error:.3e})")
    return SoTerms(
        j1=value_j1,
        j2=value_j2,
        j3=value_j3,
        j1_method=TermMethod.CLOSED_FORM,
        j2_method=method_j2,
        j3_method=method_j3,
        error_estimate=error,
    )


# ---------------------------------------------------------------------------
# Secrecy outage and throughput
# ---------------------------------------------------------------------------


def p_so(
    params: SystemParams,
    beta: float,
    code: WiretapCode,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Secrecy outage P(Gamma_E > tau_e) over the eavesdropper PPP.

    No eavesdroppers means no outage. With eavesdroppers present and
    tau_e = 0 every one of them exceeds the threshold almost surely, so the
    outage is 1; the integrals are never evaluated at tau_e = 0.
    """
    _check_beta(params, beta)
    if params.eav_density == 0:
        return 0.0
    tau_e = code.tau_e
    if tau_e == 0:
        return 1.0
    terms = so_terms(params, beta, tau_e, cfg)
    exponent = 2.0 * params.eav_density * terms.total
    if exponent > MAX_PGFL_EXPONENT:
        return 1.0
    return min(1.0, max(0.0, -math.expm1(-exponent)))


def throughput(
    params: SystemParams,
    beta: float,
    code: WiretapCode,
    cfg: QuadratureConfig = DEFAULT_QUADRATURE,
) -> SecrecyMetrics:
    """P_to, P_so and T_s = (R_b - R_e)(1 - P_to) / 2 at one operating point."""
    outage = p_to(params, beta, code)
    secrecy_outage = p_so(params, beta, code, cfg)
    return SecrecyMetrics.for_code(code, p_to=outage, p_so=secrecy_outage)
