"""Parsing and expansion of sweep axes such as ``tau-e 0.1..10 x50``."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

import numpy as np

from secrecy_relay.errors import InvalidParameterError

SWEEP_VARIABLES = (
    "tau-b",
    "tau-e",
    "rb",
    "re",
    "beta",
    "lambda",
    "ps-dbm",
    "pr-dbm",
    "dsr",
    "drd",
    "phi",
    "gamma-b-db",
    "gamma-e-db",
)

_RANGE_PATTERN = re.compile(r"^\s*([-+0-9.eE]+)\s*\.\.\s*([-+0-9.eE]+)\s*$")
_POINTS_PATTERN = re.compile(r"^\s*[xX](\d+)\s*$")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int
    log: bool = False

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise InvalidParameterError(
                f"unknown sweep variable {self.variable!r}; choose one of {', '.join(SWEEP_VARIABLES)}"
            )
        if not self.start < self.stop:
            raise InvalidParameterError(f"sweep bounds must be ordered, got {self.start}..{self.stop}")
        if self.points < 2:
            raise InvalidParameterError(f"a sweep needs at least 2 points, got {self.points}")
        if self.log and self.start <= 0:
            raise InvalidParameterError(f"log spacing needs a positive start, got {self.start}")

    def values(self) -> List[float]:
        if self.log:
            grid = np.geomspace(self.start, self.stop, self.points)
        else:
            grid = np.linspace(self.start, self.stop, self.points)
        return [float(v) for v in grid]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> SweepSpec:
        return cls(
            variable=str(data["variable"]),
            start=float(data["start"]),
            stop=float(data["stop"]),
            points=int(data["points"]),
            log=bool(data.get("log", False)),
        )


def parse_sweep(variable: str, range_text: str, points_text: str, log: bool = False) -> SweepSpec:
    """Parse the three tokens of ``--sweep <var> <start>..<stop> x<points>``."""
    range_match = _RANGE_PATTERN.match(range_text)
    if not range_match:
        raise InvalidParameterError(f"malformed sweep range {range_text!r}, expected <start>..<stop>")
    points_match = _POINTS_PATTERN.match(points_text)
    if not points_match:
        raise InvalidParameterError(f"malformed sweep size {points_text!r}, expected x<points>")
    try:
        start = float(range_match.group(1))
        stop = float(range_match.group(2))
    except ValueError as error:
        raise InvalidParameterError(f"malformed sweep range {range_text!r}") from error
    return SweepSpec(
        variable=variable.lower(),
        start=start,
        stop=stop,
        points=int(points_match.group(1)),
        log=log,
    )
