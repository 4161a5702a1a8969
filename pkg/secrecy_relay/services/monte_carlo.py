"""Monte Carlo oracle for the outage probabilities.

Each estimate is split into blocks of ``block_size`` trials. Block ``b``
draws from its own generator seeded by ``SeedSequence(seed,
spawn_key=(stream, point, b))``, so estimates depend only on (seed, point,
num_trials, block_size, mode) and never on how blocks are spread over workers.

Geometry: the source sits at the origin and the relay on the polar axis at
distance d_sr. Eavesdroppers are drawn on a disc of radius R_max around the
source.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, Optional, Tuple

import numpy as np

from secrecy_relay.errors import InvalidParameterError
from secrecy_relay.models import PowerAllocation, SystemParams, WiretapCode, mean_snr_rd, mean_snr_sr
from secrecy_relay.services.job_queue import JobQueue

logger = logging.getLogger(__name__)

# Target for the probability that truncating the PPP changes an outcome.
TRUNCATION_TARGET = 1e-4

# Points per chunk in explicit-beamformer mode; bounds the gathered (chunk, N, N) array.
EXPLICIT_CHUNK = 16384

_STREAM_P_TO = 0
_STREAM_P_SO = 1


class SimulationMode(str, enum.Enum):
    DISTRIBUTIONAL = "distributional"
    EXPLICIT = "explicit-beamformer"


@dataclass(frozen=True)
class MonteCarloConfig:
    num_trials: int = 1_000_000
    seed: int = 0
    # None means default_disc_radius at the operating point.
    disc_radius: Optional[float] = None
    mode: SimulationMode = SimulationMode.DISTRIBUTIONAL
    block_size: int = 8192
    workers: int = 1
    # Grid point index; selects an independent family of substreams per sweep point.
    point: int = 0

    def __post_init__(self) -> None:
        if self.num_trials < 1:
            raise InvalidParameterError(f"num_trials must be >= 1, got {self.num_trials}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.disc_radius is not None and not (self.disc_radius > 0 and math.isfinite(self.disc_radius)):
            raise InvalidParameterError(f"disc_radius must be > 0, got {self.disc_radius}")
        if self.block_size < 1:
            raise InvalidParameterError(f"block_size must be >= 1, got {self.block_size}")
        if self.workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {self.workers}")
        if self.point < 0:
            raise InvalidParameterError(f"point must be >= 0, got {self.point}")
        # Accept the plain string from the CLI or JSON.
        object.__setattr__(self, "mode", SimulationMode(self.mode))

    def for_point(self, index: int) -> MonteCarloConfig:
        return dataclasses.replace(self, point=index)

    @property
    def num_blocks(self) -> int:
        return -(-self.num_trials // self.block_size)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "num_trials": self.num_trials,
            "seed": self.seed,
            "disc_radius": self.disc_radius,
            "mode": self.mode.value,
            "block_size": self.block_size,
        }


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    std_error: float
    num_trials: int
    hits: int
    config: MonteCarloConfig
    disc_radius: Optional[float] = None

    @classmethod
    def from_hits(
        cls, hits: int, config: MonteCarloConfig, disc_radius: Optional[float] = None
    ) -> MonteCarloEstimate:
        n = config.num_trials
        p = hits / n
        return cls(
            estimate=p,
            std_error=math.sqrt(p * (1.0 - p) / n),
            num_trials=n,
            hits=hits,
            config=config,
            disc_radius=disc_radius,
        )


@dataclass(frozen=True, eq=False)
class PointProcessSample:
    """Eavesdropper positions in polar coordinates around the source, theta in [-pi, pi)."""

    dist_si: np.ndarray
    theta: np.ndarray

    def __len__(self) -> int:
        return int(self.dist_si.shape[0])

    def dist_ri(self, dist_sr: float) -> np.ndarray:
        return _law_of_cosines(dist_sr, self.dist_si, self.theta)


def _law_of_cosines(dist_sr: float, dist_si: np.ndarray, theta: np.ndarray) -> np.ndarray:
    squared = dist_sr * dist_sr + dist_si * dist_si - 2.0 * dist_sr * dist_si * np.cos(theta)
    return np.sqrt(np.maximum(squared, 0.0))


def _check_beta(params: SystemParams, beta: float) -> None:
    PowerAllocation(beta).validate_for(params)


def _complex_gaussian(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """CN(0, 1) entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _block_rng(cfg: MonteCarloConfig, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(stream, cfg.point, block)))


# ---------------------------------------------------------------------------
# Point process
# ---------------------------------------------------------------------------


def _uniform_disc(rng: np.random.Generator, radius: float, count: int) -> Tuple[np.ndarray, np.ndarray]:
    # 1 - U lies in (0, 1], so no eavesdropper lands exactly on the source.
    dist = radius * np.sqrt(1.0 - rng.random(count))
    theta = rng.uniform(-math.pi, math.pi, count)
    return dist, theta


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> PointProcessSample:
    """Homogeneous PPP of the given density on the disc of the given radius."""
    if not density >= 0:
        raise InvalidParameterError(f"density must be >= 0, got {density}")
    if not radius > 0:
        raise InvalidParameterError(f"radius must be > 0, got {radius}")
    count = int(rng.poisson(density * math.pi * radius * radius))
    dist, theta = _uniform_disc(rng, radius, count)
    return PointProcessSample(dist_si=dist, theta=theta)


def default_disc_radius(params: SystemParams, beta: float, tau_e: float) -> float:
    """Truncation radius that keeps the chance of a missed outage below 1e-4.

    2 * max(d_sr, (beta P_s ln(1e4) / (tau_e sigma_i1^2))^(1/eta),
    (P_r ln(1e4) / (tau_e sigma_i2^2))^(1/eta)). At tau_e = 0 any
    eavesdropper causes an outage, so the radius instead makes the disc
    non-empty with the same probability as the whole plane, up to 1e-4.
    """
    _check_beta(params, beta)
    log_target = math.log(1.0 / TRUNCATION_TARGET)
    if tau_e <= 0:
        if params.eav_density == 0:
            return 2.0 * params.dist_sr
        void_radius = math.sqrt(log_target / (math.pi * params.eav_density))
        return max(2.0 * params.dist_sr, void_radius)
    eta = params.path_loss_exp
    reach_source = (beta * params.power_source * log_target / (tau_e * params.noise_eav_slot1)) ** (1.0 / eta)
    reach_relay = (params.power_relay * log_target / (tau_e * params.noise_eav_slot2)) ** (1.0 / eta)
    return 2.0 * max(params.dist_sr, reach_source, reach_relay)


# ---------------------------------------------------------------------------
# Beamforming
# ---------------------------------------------------------------------------


def build_beamformer(h_sr: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Matched-filter w_S and an orthonormal basis W_AN of the null space of h_sr.

    Accepts a single channel of shape (N,) or a batch (n, N); returns w_S of
    the same shape and W_AN of shape (..., N, N - 1). The basis comes from a
    QR factorisation of [w_S | I_N], whose first column is then pinned to
    w_S exactly so that W = [w_S, W_AN] is unitary.
    """
    h = np.asarray(h_sr, dtype=complex)
    if h.ndim not in (1, 2) or h.shape[-1] < 1:
        raise InvalidParameterError(f"h_sr must have shape (N,) or (n, N), got {h.shape}")
    norm = np.linalg.norm(h, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise InvalidParameterError("h_sr must be non-zero")
    w_s = np.conj(h) / norm
    num_antennas = h.shape[-1]
    identity = np.broadcast_to(np.eye(num_antennas, dtype=complex), h.shape[:-1] + (num_antennas, num_antennas))
    stacked = np.concatenate([w_s[..., :, None], identity], axis=-1)
    q, _ = np.linalg.qr(stacked)
    q = q.copy()
    q[..., :, 0] = w_s
    return w_s, q[..., :, 1:]


# ---------------------------------------------------------------------------
# Per-trial SNRs
# ---------------------------------------------------------------------------


def _slot_one_sinr(
    params: SystemParams, beta: float, dist_si: np.ndarray, signal_gain: np.ndarray, an_gain: np.ndarray
) -> np.ndarray:
    path = params.power_source * dist_si ** -params.path_loss_exp
    interference = params.noise_eav_slot1
    if beta < 1.0:
        interference = interference + (1.0 - beta) / (params.num_antennas - 1) * path * an_gain
    return beta * path * signal_gain / interference


def _slot_two_snr(params: SystemParams, dist_ri: np.ndarray, fading: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return params.power_relay * dist_ri ** -params.path_loss_exp * fading / params.noise_eav_slot2


def _distributional_gains(
    params: SystemParams, beta: float, count: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    signal_gain = rng.exponential(1.0, count)
    if beta < 1.0:
        an_gain = rng.gamma(params.num_antennas - 1, 1.0, count)
    else:
        an_gain = np.zeros(count)
    return signal_gain, an_gain


def _explicit_gains(w_full: np.ndarray, owner: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Project fresh h_si draws on each trial's beamformer, chunk by chunk."""
    total = owner.shape[0]
    num_antennas = w_full.shape[-1]
    signal_gain = np.empty(total)
    an_gain = np.empty(total)
    for start in range(0, total, EXPLICIT_CHUNK):
        stop = min(total, start + EXPLICIT_CHUNK)
        h_si = _complex_gaussian(rng, (stop - start, num_antennas))
        projected = np.einsum("cn,cnm->cm", h_si, w_full[owner[start:stop]])
        power = np.abs(projected) ** 2
        signal_gain[start:stop] = power[:, 0]
        an_gain[start:stop] = power[:, 1:].sum(axis=1)
    return signal_gain, an_gain


def _points_gamma_e(
    params: SystemParams,
    beta: float,
    dist_si: np.ndarray,
    theta: np.ndarray,
    signal_gain: np.ndarray,
    an_gain: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-eavesdropper max of the slot-one SINR and the slot-two SNR."""
    gamma_si = _slot_one_sinr(params, beta, dist_si, signal_gain, an_gain)
    # Slot-two fading is independent of slot one.
    fading = rng.exponential(1.0, dist_si.shape[0])
    gamma_ri = _slot_two_snr(params, _law_of_cosines(params.dist_sr, dist_si, theta), fading)
    return np.maximum(gamma_si, gamma_ri)


def sample_gamma_d(
    params: SystemParams,
    beta: float,
    n: int,
    rng: np.random.Generator,
    mode: SimulationMode = SimulationMode.DISTRIBUTIONAL,
) -> np.ndarray:
    """n independent draws of Gamma_D = min(gamma_sr, gamma_rd)."""
    _check_beta(params, beta)
    if SimulationMode(mode) is SimulationMode.EXPLICIT:
        h_sr = _complex_gaussian(rng, (n, params.num_antennas))
        w_s, _ = build_beamformer(h_sr)
        source_gain = np.abs(np.einsum("nk,nk->n", h_sr, w_s)) ** 2
        relay_gain = np.abs(_complex_gaussian(rng, (n,))) ** 2
    else:
        source_gain = rng.gamma(params.num_antennas, 1.0, n)
        relay_gain = rng.exponential(1.0, n)
    return np.minimum(beta * mean_snr_sr(params) * source_gain, mean_snr_rd(params) * relay_gain)


def sample_gamma_e(
    params: SystemParams,
    beta: float,
    n: int,
    rng: np.random.Generator,
    radius: float,
    mode: SimulationMode = SimulationMode.DISTRIBUTIONAL,
) -> np.ndarray:
    """n independent draws of Gamma_E, the best eavesdropper SNR per trial; 0 for an empty disc."""
    _check_beta(params, beta)
    if not radius > 0:
        raise InvalidParameterError(f"radius must be > 0, got {radius}")
    explicit = SimulationMode(mode) is SimulationMode.EXPLICIT
    if explicit:
        h_sr = _complex_gaussian(rng, (n, params.num_antennas))
        w_s, w_an = build_beamformer(h_sr)
        w_full = np.concatenate([w_s[..., :, None], w_an], axis=-1)

    counts = rng.poisson(params.eav_density * math.pi * radius * radius, n)
    total = int(counts.sum())
    gamma_e = np.zeros(n)
    if total == 0:
        return gamma_e
    owner = np.repeat(np.arange(n), counts)
    dist_si, theta = _uniform_disc(rng, radius, total)
    if explicit:
        signal_gain, an_gain = _explicit_gains(w_full, owner, rng)
    else:
        signal_gain, an_gain = _distributional_gains(params, beta, total, rng)
    per_point = _points_gamma_e(params, beta, dist_si, theta, signal_gain, an_gain, rng)
    np.maximum.at(gamma_e, owner, per_point)
    return gamma_e


def trial_gamma_d(params: SystemParams, beta: float, rng: np.random.Generator) -> float:
    return float(sample_gamma_d(params, beta, 1, rng)[0])


def trial_gamma_e(params: SystemParams, beta: float, ppp: PointProcessSample, rng: np.random.Generator) -> float:
    """Gamma_E for one PPP realisation with distributional fading."""
    _check_beta(params, beta)
    if len(ppp) == 0:
        return 0.0
    signal_gain, an_gain = _distributional_gains(params, beta, len(ppp), rng)
    return float(np.max(_points_gamma_e(params, beta, ppp.dist_si, ppp.theta, signal_gain, an_gain, rng)))


def explicit_beamformer_trial(
    params: SystemParams, beta: float, ppp: PointProcessSample, rng: np.random.Generator
) -> float:
    """Gamma_E for one PPP realisation from explicit h_sr, h_si vectors and W = [w_S, W_AN]."""
    _check_beta(params, beta)
    h_sr = _complex_gaussian(rng, (params.num_antennas,))
    w_s, w_an = build_beamformer(h_sr)
    if len(ppp) == 0:
        return 0.0
    h_si = _complex_gaussian(rng, (len(ppp), params.num_antennas))
    signal_gain = np.abs(h_si @ w_s) ** 2
    an_gain = np.sum(np.abs(h_si @ w_an) ** 2, axis=1)
    return float(np.max(_points_gamma_e(params, beta, ppp.dist_si, ppp.theta, signal_gain, an_gain, rng)))


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _block_sizes(cfg: MonteCarloConfig) -> Iterator[Tuple[int, int]]:
    for block in range(cfg.num_blocks):
        yield block, min(cfg.block_size, cfg.num_trials - block * cfg.block_size)


def _count_hits(
    cfg: MonteCarloConfig, stream: int, count_block: Callable[[np.random.Generator, int], int]
) -> int:
    tasks = [
        (f"block {block}", lambda block=block, size=size: count_block(_block_rng(cfg, stream, block), size))
        for block, size in _block_sizes(cfg)
    ]
    return int(sum(JobQueue(max_workers=cfg.workers).run_all(tasks)))


def estimate_p_to(
    params: SystemParams, beta: float, code: WiretapCode, cfg: MonteCarloConfig
) -> MonteCarloEstimate:
    """Fraction of trials with Gamma_D < tau_b."""
    _check_beta(params, beta)
    tau_b = code.tau_b
    if tau_b <= 0:
        return MonteCarloEstimate.from_hits(0, cfg)

    def count_block(rng: np.random.Generator, size: int) -> int:
        return int(np.count_nonzero(sample_gamma_d(params, beta, size, rng, cfg.mode) < tau_b))

    hits = _count_hits(cfg, _STREAM_P_TO, count_block)
    logger.debug(f"estimate_p_to: tau_b={tau_b:.6g} beta={beta} hits={hits}/{cfg.num_trials}")
    return MonteCarloEstimate.from_hits(hits, cfg)


def estimate_p_so(
    params: SystemParams, beta: float, code: WiretapCode, cfg: MonteCarloConfig
) -> MonteCarloEstimate:
    """Fraction of trials with Gamma_E > tau_e."""
    _check_beta(params, beta)
    if params.eav_density == 0:
        return MonteCarloEstimate.from_hits(0, cfg)
    tau_e = code.tau_e
    radius = cfg.disc_radius if cfg.disc_radius is not None else default_disc_radius(params, beta, tau_e)

    def count_block(rng: np.random.Generator, size: int) -> int:
        return int(np.count_nonzero(sample_gamma_e(params, beta, size, rng, radius, cfg.mode) > tau_e))

    hits = _count_hits(cfg, _STREAM_P_SO, count_block)
    logger.debug(
        f"estimate_p_so: tau_e={tau_e:.6g} beta={beta} radius={radius:.4g} hits={hits}/{cfg.num_trials}"
    )
    return MonteCarloEstimate.from_hits(hits, cfg, disc_radius=radius)
