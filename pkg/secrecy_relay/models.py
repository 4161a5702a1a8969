"""Domain types for the relay wiretap channel and the derived mean SNRs.

All powers and noise variances are linear (watts). Conversion from dB/dBm
happens once, at the CLI boundary (see utils.units).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Dict

from secrecy_relay.errors import InvalidParameterError


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameterError(message)


def _is_finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def rate_to_threshold(rate: float) -> float:
    """Map a code rate R (bits/channel use) to its SNR threshold 2^R - 1."""
    return math.expm1(rate * math.log(2.0))


def threshold_to_rate(threshold: float) -> float:
    """Inverse of rate_to_threshold: log2(1 + tau)."""
    return math.log1p(threshold) / math.log(2.0)


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the relay wiretap channel."""

    num_antennas: int
    path_loss_exp: float
    eav_density: float
    power_source: float
    power_relay: float
    dist_sr: float
    dist_rd: float
    noise_relay: float
    noise_dest: float
    noise_eav_slot1: float
    noise_eav_slot2: float

    def __post_init__(self) -> None:
        _require(
            isinstance(self.num_antennas, int) and not isinstance(self.num_antennas, bool),
            f"num_antennas must be an integer, got {self.num_antennas!r}",
        )
        _require(self.num_antennas >= 1, f"num_antennas must be >= 1, got {self.num_antennas}")
        _require(
            _is_finite(self.path_loss_exp) and self.path_loss_exp >= 2,
            f"path_loss_exp must be >= 2, got {self.path_loss_exp}",
        )
        _require(
            _is_finite(self.eav_density) and self.eav_density >= 0,
            f"eav_density must be >= 0, got {self.eav_density}",
        )
        for name in (
            "power_source",
            "power_relay",
            "dist_sr",
            "dist_rd",
            "noise_relay",
            "noise_dest",
            "noise_eav_slot1",
            "noise_eav_slot2",
        ):
            value = getattr(self, name)
            _require(_is_finite(value) and value > 0, f"{name} must be a positive finite number, got {value}")

    @classmethod
    def from_mean_snr(
        cls,
        num_antennas: int,
        path_loss_exp: float,
        eav_density: float,
        mean_snr_b: float,
        mean_snr_e: float,
        dist_sr: float = 1.0,
        dist_rd: float = 1.0,
    ) -> SystemParams:
        """Build parameters from the figure normalisation with unit powers.

        Sets mean_snr_sr = mean_snr_rd = mean_snr_b and
        P_s d_sr^-eta / sigma_i1^2 = P_r d_rd^-eta / sigma_i2^2 = mean_snr_e.
        """
        _require(mean_snr_b > 0 and mean_snr_e > 0, "mean SNRs must be positive")
        loss_sr = dist_sr**-path_loss_exp
        loss_rd = dist_rd**-path_loss_exp
        return cls(
            num_antennas=num_antennas,
            path_loss_exp=path_loss_exp,
            eav_density=eav_density,
            power_source=1.0,
            power_relay=1.0,
            dist_sr=dist_sr,
            dist_rd=dist_rd,
            noise_relay=loss_sr / mean_snr_b,
            noise_dest=loss_rd / mean_snr_b,
            noise_eav_slot1=loss_sr / mean_snr_e,
            noise_eav_slot2=loss_rd / mean_snr_e,
        )

    def replace(self, **changes: Any) -> SystemParams:
        return dataclasses.replace(self, **changes)

    def supports_beta(self, beta: float) -> bool:
        """AN needs at least one null-space dimension, so N = 1 forces beta = 1."""
        return self.num_antennas >= 2 or beta == 1.0

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SystemParams:
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        _require(not unknown, f"unknown SystemParams fields: {sorted(unknown)}")
        values = dict(data)
        if "num_antennas" in values:
            values["num_antennas"] = int(values["num_antennas"])
        return cls(**values)


@dataclass(frozen=True)
class PowerAllocation:
    """Fraction beta of the source power spent on the information signal."""

    beta: float

    def __post_init__(self) -> None:
        _require(
            _is_finite(self.beta) and 0 < self.beta <= 1,
            f"beta must satisfy 0 < beta <= 1, got {self.beta}",
        )

    @property
    def an_share(self) -> float:
        """Total power fraction on artificial noise, 1 - beta."""
        return 1.0 - self.beta

    def validate_for(self, params: SystemParams) -> None:
        _require(
            params.supports_beta(self.beta),
            f"beta={self.beta} < 1 needs num_antennas >= 2 (got {params.num_antennas})",
        )


@dataclass(frozen=True)
class WiretapCode:
    """Rate pair (R_b, R_e) of a wiretap code, with 0 <= R_e <= R_b."""

    rate_b: float
    rate_e: float

    def __post_init__(self) -> None:
        _require(_is_finite(self.rate_b, self.rate_e), "code rates must be finite")
        _require(self.rate_e >= 0, f"rate_e must be >= 0, got {self.rate_e}")
        _require(
            self.rate_e <= self.rate_b,
            f"rate_e must not exceed rate_b, got rate_e={self.rate_e} > rate_b={self.rate_b}",
        )

    @classmethod
    def from_thresholds(cls, tau_b: float, tau_e: float) -> WiretapCode:
        _require(tau_b >= 0 and tau_e >= 0, "SNR thresholds must be >= 0")
        return cls(rate_b=threshold_to_rate(tau_b), rate_e=threshold_to_rate(tau_e))

    @property
    def tau_b(self) -> float:
        return rate_to_threshold(self.rate_b)

    @property
    def tau_e(self) -> float:
        return rate_to_threshold(self.rate_e)

    @property
    def rate_margin(self) -> float:
        return self.rate_b - self.rate_e


@dataclass(frozen=True)
class SecrecyMetrics:
    """(P_to, P_so, T_s) evaluated at one operating point."""

    p_to: float
    p_so: float
    throughput: float

    def __post_init__(self) -> None:
        _require(0.0 <= self.p_to <= 1.0, f"p_to must lie in [0, 1], got {self.p_to}")
        _require(0.0 <= self.p_so <= 1.0, f"p_so must lie in [0, 1], got {self.p_so}")
        _require(self.throughput >= 0.0, f"throughput must be >= 0, got {self.throughput}")

    @classmethod
    def for_code(cls, code: WiretapCode, p_to: float, p_so: float) -> SecrecyMetrics:
        """Bundle outage probabilities with T_s = (R_b - R_e)(1 - P_to) / 2."""
        # Two time slots per message, hence the factor 1/2.
        throughput = 0.5 * code.rate_margin * (1.0 - p_to)
        return cls(p_to=p_to, p_so=p_so, throughput=max(0.0, throughput))


def mean_snr_sr(params: SystemParams) -> float:
    """Average source-relay SNR per unit channel gain, P_s d_sr^-eta / sigma_r^2."""
    return params.power_source * params.dist_sr**-params.path_loss_exp / params.noise_relay


def mean_snr_rd(params: SystemParams) -> float:
    """Average relay-destination SNR, P_r d_rd^-eta / sigma_d^2."""
    return params.power_relay * params.dist_rd**-params.path_loss_exp / params.noise_dest


def mean_snr_si(params: SystemParams, dist_si: float) -> float:
    return params.power_source * dist_si**-params.path_loss_exp / params.noise_eav_slot1


def mean_snr_ri(params: SystemParams, dist_ri: float) -> float:
    return params.power_relay * dist_ri**-params.path_loss_exp / params.noise_eav_slot2


def an_attenuation(num_antennas: int, beta: float, tau_e: float) -> float:
    """Probability factor (1 + (1-beta) tau_e / (beta (N-1)))^-(N-1).

    This is the chance that the artificial-noise term alone does not push an
    eavesdropper's slot-one SINR below tau_e. It is exactly 1 when beta = 1.
    """
    if beta == 1.0:
        return 1.0
    _require(num_antennas >= 2, f"beta={beta} < 1 needs num_antennas >= 2")
    dof = num_antennas - 1
    return math.exp(-dof * math.log1p((1.0 - beta) * tau_e / (beta * dof)))
