"""Battery state, the K-factor transform and per-packet transmit costs.

Battery values are dimensionless energy units (default capacity 15).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from manetsim.errors import EnergyNonPositiveError, ZeroReceptionProbabilityError

HEADER_RATE_BPS = 6e6
PAYLOAD_RATE_BPS = 54e6


@dataclass
class Battery:
    level: float
    e_max: float = 15.0
    voltage: float = 1.0
    current: float = 1.0
    death_threshold: float = 0.15
    drained: float = 0.0
    drain_count: int = 0

    def __post_init__(self):
        if not 0.0 <= self.level <= self.e_max:
            raise ValueError(f"battery level {self.level} outside [0, {self.e_max}]")
        self.initial = self.level

    @property
    def alive(self) -> bool:
        return self.level >= self.death_threshold

    def drain(self, amount: float) -> float:
        """Remove ``amount`` (floored at zero) and return the new level."""
        if amount < 0:
            raise ValueError("drain amount must be >= 0")
        taken = min(self.level, amount)
        self.level -= taken
        self.drained += taken
        self.drain_count += 1
        return self.level


@dataclass(frozen=True)
class LinkEnergyParams:
    M: float  # packet length, bits
    P_i: float  # transmit power, W
    R: float  # data rate, bit/s
    p_c: float  # probability of correct reception


@dataclass(frozen=True)
class EnergyModel:
    """Which cost model charges a transmission.

    ``mode="time"`` uses current*voltage*airtime; ``mode="link"`` uses
    M*P_i/(R*p_c) with the scalar parameters below.
    """

    mode: str = "time"
    tx_power: float = 0.1
    data_rate: float = 54e6
    p_correct: float = 1.0

    def __post_init__(self):
        if self.mode not in ("time", "link"):
            raise ValueError(f"unknown energy mode {self.mode!r}")

    def cost(self, header_bits: int, payload_bits: int, battery: Battery) -> float:
        if self.mode == "time":
            return tx_energy_time_model(header_bits, payload_bits, battery)
        return tx_energy_link_model(
            LinkEnergyParams(
                M=header_bits + payload_bits,
                P_i=self.tx_power,
                R=self.data_rate,
                p_c=self.p_correct,
            )
        )


def k_factor(e: float, e_max: float) -> float:
    """Inverse battery fraction; 1 at full charge, grows as the battery drains."""
    if e <= 0:
        raise EnergyNonPositiveError(f"energy must be > 0, got {e}")
    return e_max / e


def packet_airtime(p_h: float, p_d: float) -> float:
    """Seconds on air: header at 6 Mbit/s, payload at 54 Mbit/s."""
    if p_h < 0 or p_d < 0:
        raise ValueError("bit counts must be >= 0")
    return p_h / HEADER_RATE_BPS + p_d / PAYLOAD_RATE_BPS


def tx_energy_time_model(p_h: float, p_d: float, bat: Battery) -> float:
    return bat.current * bat.voltage * packet_airtime(p_h, p_d)


def tx_energy_link_model(p: LinkEnergyParams) -> float:
    if p.p_c == 0:
        raise ZeroReceptionProbabilityError("p_c = 0 makes the link cost undefined")
    if p.R <= 0 or not 0 < p.p_c <= 1 or p.M < 0:
        raise ValueError(f"invalid link parameters {p}")
    return p.M * p.P_i / (p.R * p.p_c)


def resultant_energy(costs: Iterable[float]) -> float:
    costs = list(costs)
    if any(c < 0 for c in costs):
        raise ValueError("link costs must be >= 0")
    return math.fsum(costs)
