"""Secrecy throughput maximisation.

For a fixed beta the secrecy outage constraint P_so <= phi pins R_e* (the
root of P_so(R_e) = phi), and R_b* maximises
T_s(R_b) = (R_b - R_e*)(1 - P_to(R_b)) / 2 over [R_e*, R_b_max]. The joint
optimum over beta is found on a grid with local refinement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from secrecy_relay.errors import InvalidParameterError, MonotonicityError, OptimizationError
from secrecy_relay.models import PowerAllocation, SystemParams, WiretapCode
from secrecy_relay.services import analytic
from secrecy_relay.services.quadrature import QuadratureConfig

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0

# Bracket search for R_e* may run this far past R_b_max before giving up.
RE_BRACKET_SLACK = 10.0

# Two T_s values closer than this (relative) count as a tie between betas.
TIE_RTOL = 1e-12


def default_beta_grid(num_antennas: int) -> Tuple[float, ...]:
    """0.01, 0.02, ..., 0.99 and 1.0; only 1.0 for a single antenna."""
    if num_antennas < 2:
        return (1.0,)
    return tuple(round(0.01 * k, 2) for k in range(1, 100)) + (1.0,)


@dataclass(frozen=True)
class OptimizerConfig:
    outage_constraint: float
    rate_b_min: float = 0.0
    rate_b_max: float = 20.0
    root_tol: float = 1e-8
    rate_tol: float = 1e-6
    # None means default_beta_grid(N).
    beta_grid: Optional[Tuple[float, ...]] = None
    refine_passes: int = 2
    refine_points: int = 9
    coarse_points: int = 64
    dense_points: int = 4096
    # Allowed upward drift of P_so between increasing R_e before it counts as a violation.
    monotonicity_tol: float = 1e-7
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self) -> None:
        if not 0 < self.outage_constraint < 1:
            raise InvalidParameterError(f"outage_constraint must lie in (0, 1), got {self.outage_constraint}")
        if not 0 <= self.rate_b_min < self.rate_b_max or not math.isfinite(self.rate_b_max):
            raise InvalidParameterError(f"empty rate_b bracket [{self.rate_b_min}, {self.rate_b_max}]")
        if not (self.root_tol > 0 and self.rate_tol > 0):
            raise InvalidParameterError("root_tol and rate_tol must be > 0")
        if self.refine_passes < 0:
            raise InvalidParameterError(f"refine_passes must be >= 0, got {self.refine_passes}")
        if self.refine_points < 3 or self.coarse_points < 3 or self.dense_points < 3:
            raise InvalidParameterError("refine_points, coarse_points and dense_points must be >= 3")
        if self.beta_grid is not None:
            grid = tuple(float(b) for b in self.beta_grid)
            if not grid:
                raise InvalidParameterError("beta_grid must not be empty")
            for beta in grid:
                PowerAllocation(beta)
            if list(grid) != sorted(set(grid)):
                raise InvalidParameterError("beta_grid must be strictly increasing")
            object.__setattr__(self, "beta_grid", grid)

    def betas_for(self, params: SystemParams) -> Tuple[float, ...]:
        grid = self.beta_grid if self.beta_grid is not None else default_beta_grid(params.num_antennas)
        usable = tuple(b for b in grid if params.supports_beta(b))
        if not usable:
            raise InvalidParameterError(f"no beta in the grid is usable with N={params.num_antennas}")
        return usable

    def to_dict(self) -> Dict[str, Any]:
        return {
            "outage_constraint": self.outage_constraint,
            "rate_b_min": self.rate_b_min,
            "rate_b_max": self.rate_b_max,
            "root_tol": self.root_tol,
            "rate_tol": self.rate_tol,
            "beta_grid": list(self.beta_grid) if self.beta_grid is not None else None,
            "refine_passes": self.refine_passes,
        }


@dataclass(frozen=True)
class RatePairResult:
    beta: float
    r_b_star: Optional[float]
    r_e_star: Optional[float]
    t_s_star: float
    feasible: bool
    p_so: Optional[float] = None
    p_to: Optional[float] = None
    method: str = "golden"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta": self.beta,
            "r_b_star": self.r_b_star,
            "r_e_star": self.r_e_star,
            "t_s_star": self.t_s_star,
            "feasible": self.feasible,
            "p_so": self.p_so,
            "p_to": self.p_to,
            "method": self.method,
        }


@dataclass(frozen=True)
class OptimizationResult:
    beta_star: Optional[float]
    r_b_star: Optional[float]
    r_e_star: Optional[float]
    t_s_star: float
    feasible: bool
    trace: Tuple[RatePairResult, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta_star": self.beta_star,
            "r_b_star": self.r_b_star,
            "r_e_star": self.r_e_star,
            "t_s_star": self.t_s_star,
            "feasible": self.feasible,
            "trace": [entry.to_dict() for entry in self.trace],
        }


def _p_so_at(params: SystemParams, beta: float, rate_e: float, cfg: OptimizerConfig) -> float:
    return analytic.p_so(params, beta, WiretapCode(rate_b=rate_e, rate_e=rate_e), cfg.quadrature)


def _secrecy_throughput(params: SystemParams, beta: float, rate_b: float, rate_e: float) -> float:
    code = WiretapCode(rate_b=rate_b, rate_e=rate_e)
    return 0.5 * code.rate_margin * (1.0 - analytic.p_to(params, beta, code))


# ---------------------------------------------------------------------------
# R_e*
# ---------------------------------------------------------------------------


def _check_monotone(evaluations: List[Tuple[float, float]], cfg: OptimizerConfig) -> None:
    ordered = sorted(evaluations)
    for (rate_lo, p_lo), (rate_hi, p_hi) in zip(ordered, ordered[1:]):
        if p_hi > p_lo + cfg.monotonicity_tol:
            raise MonotonicityError(
                f"P_so rose from {p_lo:.12g} at R_e={rate_lo:.6g} to {p_hi:.12g} at R_e={rate_hi:.6g}"
            )


def solve_re_star(
    params: SystemParams, beta: float, cfg: OptimizerConfig, hint: Optional[float] = None
) -> Optional[float]:
    """Smallest R_e meeting P_so(R_e) = phi, or None when no bracket exists.

    P_so falls monotonically from 1 at R_e = 0, so the root is bracketed by
    doubling an upper end from ``hint`` (or 1 bit) and then polished with
    Brent's method. Returns 0 when the constraint never binds.
    """
    PowerAllocation(beta).validate_for(params)
    phi = cfg.outage_constraint
    if params.eav_density == 0:
        return 0.0

    evaluations: List[Tuple[float, float]] = []

    def excess(rate_e: float) -> float:
        value = _p_so_at(params, beta, rate_e, cfg)
        evaluations.append((rate_e, value))
        return value - phi

    if excess(0.0) <= 0:
        return 0.0

    cap = cfg.rate_b_max + RE_BRACKET_SLACK
    lower = 0.0
    upper = min(hint, cap) if hint is not None and hint > 0 else min(1.0, cap)
    while excess(upper) > 0:
        lower = upper
        if upper >= cap:
            _check_monotone(evaluations, cfg)
            logger.info(f"solve_re_star: no bracket below R_e={cap} at beta={beta}")
            return None
        upper = min(2.0 * upper, cap)
    if hint is not None and lower == 0.0 and upper > 0.5:
        # Tighten a generous hint from below before handing over to Brent.
        candidate = 0.5 * upper
        while candidate > 1e-3 and excess(candidate) <= 0:
            upper = candidate
            candidate *= 0.5
        lower = candidate if candidate > 1e-3 else 0.0

    try:
        root = optimize.brentq(excess, lower, upper, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=200)
    except (ValueError, RuntimeError) as error:
        raise OptimizationError(f"root search for R_e* failed on [{lower}, {upper}] at beta={beta}: {error}") from error
    _check_monotone(evaluations, cfg)
    logger.debug(f"solve_re_star: beta={beta} R_e*={root:.10g} evaluations={len(evaluations)}")
    return float(root)


# ---------------------------------------------------------------------------
# R_b*
# ---------------------------------------------------------------------------


def golden_section_max(
    objective: Callable[[float], float], lower: float, upper: float, tol: float
) -> Tuple[float, float]:
    """Maximise a unimodal objective on [lower, upper] to within tol in x."""
    dist = upper - lower
    if dist <= tol:
        mid = 0.5 * (lower + upper)
        return mid, objective(mid)

    iterations = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))
    c = lower + INV_PHI_SQ * dist
    d = lower + INV_PHI * dist
    yc = objective(c)
    yd = objective(d)
    for _ in range(iterations - 1):
        if yc > yd:
            upper = d
            d, yd = c, yc
            dist *= INV_PHI
            c = lower + INV_PHI_SQ * dist
            yc = objective(c)
        else:
            lower = c
            c, yc = d, yd
            dist *= INV_PHI
            d = lower + INV_PHI * dist
            yd = objective(d)
    return (c, yc) if yc > yd else (d, yd)


def _is_unimodal(values: np.ndarray, tol: float) -> bool:
    peak = int(np.argmax(values))
    rising = np.diff(values[: peak + 1])
    falling = np.diff(values[peak:])
    return bool(np.all(rising >= -tol) and np.all(falling <= tol))


def _infeasible(beta: float, r_e: Optional[float], p_so: Optional[float] = None) -> RatePairResult:
    return RatePairResult(
        beta=beta,
        r_b_star=r_e,
        r_e_star=r_e,
        t_s_star=0.0,
        feasible=False,
        p_so=p_so,
        method="none",
    )


def solve_rate_pair(
    params: SystemParams, beta: float, cfg: OptimizerConfig, r_e_hint: Optional[float] = None
) -> RatePairResult:
    """Optimal (R_b*, R_e*) for a fixed power allocation."""
    r_e = solve_re_star(params, beta, cfg, hint=r_e_hint)
    if r_e is None:
        return _infeasible(beta, None)
    p_so_star = _p_so_at(params, beta, r_e, cfg) if params.eav_density > 0 else 0.0
    if r_e > 0 and abs(p_so_star - cfg.outage_constraint) > cfg.root_tol:
        logger.warning(
            f"P_so(R_e*) = {p_so_star:.12g} misses phi = {cfg.outage_constraint} by more than root_tol at beta={beta}"
        )

    lower = max(r_e, cfg.rate_b_min)
    if lower >= cfg.rate_b_max:
        return _infeasible(beta, r_e, p_so_star)

    def objective(rate_b: float) -> float:
        return _secrecy_throughput(params, beta, rate_b, r_e)

    coarse = np.linspace(lower, cfg.rate_b_max, cfg.coarse_points)
    coarse_values = np.array([objective(r) for r in coarse])
    peak = int(np.argmax(coarse_values))
    if _is_unimodal(coarse_values, cfg.rate_tol):
        left = coarse[max(peak - 1, 0)]
        right = coarse[min(peak + 1, len(coarse) - 1)]
        r_b, t_s = golden_section_max(objective, float(left), float(right), cfg.rate_tol)
        if coarse_values[peak] > t_s:
            r_b, t_s = float(coarse[peak]), float(coarse_values[peak])
        method = "golden"
    else:
        logger.warning(f"T_s(R_b) is not unimodal on the coarse grid at beta={beta}; using a dense grid")
        dense = np.linspace(lower, cfg.rate_b_max, cfg.dense_points)
        dense_values = np.array([objective(r) for r in dense])
        best = int(np.argmax(dense_values))
        r_b, t_s = float(dense[best]), float(dense_values[best])
        method = "grid"

    if t_s <= 0 or r_b <= r_e:
        return _infeasible(beta, r_e, p_so_star)
    p_to_star = analytic.p_to(params, beta, WiretapCode(rate_b=r_b, rate_e=r_e))
    return RatePairResult(
        beta=beta,
        r_b_star=r_b,
        r_e_star=r_e,
        t_s_star=t_s,
        feasible=True,
        p_so=p_so_star,
        p_to=p_to_star,
        method=method,
    )


def throughput_curve(
    params: SystemParams, beta: float, r_e: float, rates: Sequence[float]
) -> List[Optional[float]]:
    """T_s at each R_b for a fixed R_e; None where R_b < R_e."""
    PowerAllocation(beta).validate_for(params)
    return [_secrecy_throughput(params, beta, r_b, r_e) if r_b >= r_e else None for r_b in rates]


# ---------------------------------------------------------------------------
# Joint optimum
# ---------------------------------------------------------------------------


def _is_tie(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))


def _incumbent(results: Dict[float, RatePairResult], grid: Sequence[float]) -> Optional[RatePairResult]:
    feasible = [r for r in results.values() if r.feasible]
    if not feasible:
        return None
    best = max(r.t_s_star for r in feasible)
    tied = [r for r in feasible if _is_tie(r.t_s_star, best)]
    # Ties go to the smallest beta, and a grid point beats a refinement point.
    on_grid = [r for r in tied if r.beta in grid]
    return min(on_grid or tied, key=lambda r: r.beta)


def _joint_result(incumbent: Optional[RatePairResult], trace: Tuple[RatePairResult, ...]) -> OptimizationResult:
    if incumbent is None:
        logger.info("solve_joint: no feasible beta")
        return OptimizationResult(
            beta_star=None, r_b_star=None, r_e_star=None, t_s_star=0.0, feasible=False, trace=trace
        )
    logger.info(
        f"solve_joint: beta*={incumbent.beta:.6g} R_b*={incumbent.r_b_star:.8g} "
        f"R_e*={incumbent.r_e_star:.8g} T_s*={incumbent.t_s_star:.8g}"
    )
    return OptimizationResult(
        beta_star=incumbent.beta,
        r_b_star=incumbent.r_b_star,
        r_e_star=incumbent.r_e_star,
        t_s_star=incumbent.t_s_star,
        feasible=True,
        trace=trace,
    )


def solve_joint(params: SystemParams, cfg: OptimizerConfig) -> OptimizationResult:
    """Joint (beta*, R_b*, R_e*) over the beta grid plus local refinement passes.

    Without eavesdroppers the answer is beta = 1 and the grid is skipped.
    """
    if params.eav_density == 0:
        only = solve_rate_pair(params, 1.0, cfg)
        return _joint_result(only if only.feasible else None, (only,))

    grid = cfg.betas_for(params)
    results: Dict[float, RatePairResult] = {}
    hint: Optional[float] = None

    def evaluate(beta: float) -> None:
        nonlocal hint
        if beta in results:
            return
        result = solve_rate_pair(params, beta, cfg, r_e_hint=hint)
        results[beta] = result
        if result.r_e_star is not None and result.r_e_star > 0:
            hint = result.r_e_star * 1.25

    for beta in grid:
        evaluate(beta)

    incumbent = _incumbent(results, grid)
    if incumbent is not None and len(grid) > 1:
        position = grid.index(incumbent.beta) if incumbent.beta in grid else 0
        step = max(
            grid[min(position + 1, len(grid) - 1)] - incumbent.beta,
            incumbent.beta - grid[max(position - 1, 0)],
        )
        for refine_pass in range(cfg.refine_passes):
            low = max(incumbent.beta - step, grid[0])
            high = min(incumbent.beta + step, 1.0)
            for beta in np.linspace(low, high, cfg.refine_points):
                beta = round(float(beta), 12)
                if params.supports_beta(beta):
                    evaluate(beta)
            incumbent = _incumbent(results, grid)
            assert incumbent is not None
            step = (high - low) / (cfg.refine_points - 1)
            logger.info(
                f"solve_joint: refine pass {refine_pass + 1}: beta*={incumbent.beta:.6g} T_s*={incumbent.t_s_star:.8g}"
            )

    trace = tuple(results[beta] for beta in sorted(results))
    return _joint_result(incumbent, trace)
