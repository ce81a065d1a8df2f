"""Scenario files: flat ``key = value`` lines.

``#`` starts a comment. ``flow``, ``position`` and ``energy`` may repeat::

    name = fig1
    nodes = 4
    sim_time = 60
    position = 0 500 500
    energy = 0 7.5
    flow = 1 2 10 0.25 100        # src dst start interval count [data_bytes]
    random_flows = 3 5 1.0 100    # count start interval packets
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from manetsim.aodv import AodvConfig
from manetsim.energy import EnergyModel
from manetsim.errors import ScenarioParseError, ScenarioRangeError
from manetsim.model import PayloadSpec, SizeConfig
from manetsim.pcaodv import PcConfig

PROTOCOL_ALIASES = {
    "aodv": "aodv",
    "pc-aodv": "pc-aodv",
    "pc_aodv": "pc-aodv",
    "pcaodv": "pc-aodv",
}


def normalize_protocol(name: str) -> str:
    try:
        return PROTOCOL_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown protocol {name!r} (expected aodv or pc-aodv)") from None


@dataclass(frozen=True)
class FlowSpec:
    src: int
    dst: int
    start: float
    interval: float
    count: int
    data_bytes: int | None = None


@dataclass(frozen=True)
class RandomFlows:
    """``count`` flows between connected node pairs drawn from the flow stream."""

    count: int
    start: float
    interval: float
    packets: int


@dataclass(frozen=True)
class ScenarioConfig:
    nodes: int
    name: str = "scenario"
    sim_time: float = 1800.0
    area: tuple[float, float] = (1000.0, 1000.0)
    comm_range: float = 250.0
    protocol: str = "aodv"
    seed: int = 1
    positions: dict[int, tuple[float, float]] = field(default_factory=dict)

    hello_interval: float = 1.0
    active_route_timeout: float = 3.0
    allowed_hello_loss: int = 2
    ttl_start: int = 1
    ttl_increment: int = 2
    ttl_threshold: int = 7
    net_diameter: int = 35
    rreq_retries: int = 2
    rreq_wait: float | None = None
    node_traversal_time: float = 0.04
    buffer_size: int = 64
    link_feedback: bool = True

    delta_t: float = 0.002
    e_max: float = 15.0
    energy_threshold: float = 1.5
    death_threshold: float | None = None
    t_ack: float | None = None
    withhold_late_acks: bool = True
    reroute_on_critical: bool = True
    detour_hops: int = 1
    critical_cache_replies: bool = False

    energy_init: tuple[float, float] = (1.0, 15.0)
    energies: dict[int, float] = field(default_factory=dict)
    energy_low_fraction: float = 0.0
    energy_low_range: tuple[float, float] = (0.2, 1.0)
    battery_voltage: float = 1.0
    battery_current: float = 1.0
    energy_model: str = "time"
    tx_power: float = 0.1
    data_rate: float = 54e6
    p_correct: float = 1.0

    control_header_bits: int = 512
    data_header_bits: int = 192
    payload_data: int = 228
    payload_udp: int = 8
    payload_ip: int = 20
    payload_multiplier: int = 256
    propagation_delay: float = 1e-6

    flows: tuple[FlowSpec, ...] = ()
    random_flows: RandomFlows | None = None

    def __post_init__(self):
        validate(self)

    @property
    def death_level(self) -> float:
        return self.e_max / 100 if self.death_threshold is None else self.death_threshold

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def aodv_config(self) -> AodvConfig:
        return AodvConfig(
            hello_interval=self.hello_interval,
            active_route_timeout=self.active_route_timeout,
            allowed_hello_loss=self.allowed_hello_loss,
            ttl_start=self.ttl_start,
            ttl_increment=self.ttl_increment,
            ttl_threshold=self.ttl_threshold,
            net_diameter=self.net_diameter,
            rreq_retries=self.rreq_retries,
            rreq_wait=self.rreq_wait,
            node_traversal_time=self.node_traversal_time,
            buffer_size=self.buffer_size,
        )

    def pc_config(self) -> PcConfig:
        return PcConfig(
            delta_t=self.delta_t,
            e_max=self.e_max,
            energy_threshold=self.energy_threshold,
            t_ack=self.t_ack,
            withhold_late_acks=self.withhold_late_acks,
            reroute_on_critical=self.reroute_on_critical,
            detour_hops=self.detour_hops,
            critical_cache_replies=self.critical_cache_replies,
        )

    def payload(self, data_bytes: int | None = None) -> PayloadSpec:
        return PayloadSpec(
            data=self.payload_data if data_bytes is None else data_bytes,
            udp=self.payload_udp,
            ip=self.payload_ip,
            multiplier=self.payload_multiplier,
        )

    def sizes(self) -> SizeConfig:
        return SizeConfig(self.control_header_bits, self.data_header_bits, self.payload())

    def energy(self) -> EnergyModel:
        return EnergyModel(self.energy_model, self.tx_power, self.data_rate, self.p_correct)


def validate(c: ScenarioConfig) -> None:
    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ScenarioRangeError(msg)

    need(c.nodes >= 1, f"nodes must be >= 1, got {c.nodes}")
    need(c.sim_time > 0, "sim_time must be > 0")
    need(c.area[0] > 0 and c.area[1] > 0, "area must be positive")
    need(c.comm_range > 0, "comm_range must be > 0")
    need(c.protocol in ("aodv", "pc-aodv"), f"unknown protocol {c.protocol!r}")
    need(c.hello_interval > 0 and c.active_route_timeout > 0, "intervals must be > 0")
    need(c.e_max > 0, "e_max must be > 0")
    need(0 < c.energy_threshold < c.e_max, "need 0 < energy_threshold < e_max")
    need(0 <= c.death_level < c.e_max, "need 0 <= death_threshold < e_max")
    lo, hi = c.energy_init
    need(0 <= lo <= hi <= c.e_max, f"energy_init needs 0 <= lo <= hi <= e_max, got {lo} {hi}")
    lo, hi = c.energy_low_range
    need(0 <= lo <= hi <= c.e_max, "energy_low_range needs 0 <= lo <= hi <= e_max")
    need(0 <= c.energy_low_fraction <= 1, "energy_low_fraction must be in [0, 1]")
    need(c.energy_model in ("time", "link"), "energy_model must be time or link")
    need(0 < c.p_correct <= 1, "p_correct must be in (0, 1]")
    need(c.data_rate > 0, "data_rate must be > 0")
    need(c.delta_t > 0, "delta_t must be > 0")
    need(c.detour_hops >= 0, "detour_hops must be >= 0")
    if c.t_ack is not None:
        need(c.t_ack >= c.delta_t * c.e_max / c.energy_threshold,
             "t_ack must be >= delta_t * e_max / energy_threshold")
    for name in ("control_header_bits", "data_header_bits", "payload_data", "payload_udp",
                 "payload_ip", "payload_multiplier"):
        need(getattr(c, name) >= 0, f"{name} must be >= 0")
    for i, (x, y) in c.positions.items():
        need(0 <= i < c.nodes, f"position for unknown node {i}")
        need(0 <= x <= c.area[0] and 0 <= y <= c.area[1], f"node {i} position outside area")
    if c.positions:
        need(len(c.positions) == c.nodes, "explicit placement must give every node a position")
    for i, e in c.energies.items():
        need(0 <= i < c.nodes, f"energy for unknown node {i}")
        need(0 <= e <= c.e_max, f"energy {e} for node {i} outside [0, e_max]")
    for f in c.flows:
        need(0 <= f.src < c.nodes and 0 <= f.dst < c.nodes, f"flow references unknown node: {f}")
        need(f.src != f.dst, f"flow source equals destination: {f}")
        need(f.start >= 0 and f.interval > 0 and f.count >= 0, f"bad flow timing: {f}")
    if c.random_flows is not None:
        r = c.random_flows
        need(r.count >= 0 and r.start >= 0 and r.interval > 0 and r.packets >= 0,
             f"bad random_flows: {r}")
        need(r.count == 0 or c.nodes >= 2, "random_flows needs at least two nodes")


_SCALARS: dict[str, type] = {}
for _f in dataclasses.fields(ScenarioConfig):
    if _f.name in ("positions", "energies", "flows", "random_flows", "area", "energy_init",
                   "energy_low_range", "protocol", "name"):
        continue
    _SCALARS[_f.name] = {"int": int, "float": float, "bool": bool, "str": str}.get(
        str(_f.type).split(" ")[0], float)

_OPTIONAL_FLOATS = {"rreq_wait", "death_threshold", "t_ack"}

# Short aliases accepted in files.
_ALIASES = {"hi": "hello_interval", "hi_s": "hello_interval", "sim_time_s": "sim_time",
            "comm_range_m": "comm_range", "delta_t_s": "delta_t", "area_m": "area"}


def _to_bool(s: str) -> bool:
    v = s.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _numbers(value: str, n: int, conv=float) -> list:
    parts = value.replace("x", " ").split() if conv is float else value.split()
    if len(parts) != n:
        raise ValueError(f"expected {n} values, got {len(parts)}")
    return [conv(p) for p in parts]


def parse_scenario(text: str) -> ScenarioConfig:
    kw: dict = {}
    positions: dict[int, tuple[float, float]] = {}
    energies: dict[int, float] = {}
    flows: list[FlowSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key.lower(), key.lower())
        try:
            if key == "position":
                i, x, y = value.split()
                if int(i) in positions:
                    raise ValueError(f"duplicate position for node {i}")
                positions[int(i)] = (float(x), float(y))
            elif key == "energy":
                i, e = value.split()
                if int(i) in energies:
                    raise ValueError(f"duplicate energy for node {i}")
                energies[int(i)] = float(e)
            elif key == "flow":
                parts = value.split()
                if len(parts) not in (5, 6):
                    raise ValueError("flow needs: src dst start interval count [data_bytes]")
                flows.append(FlowSpec(int(parts[0]), int(parts[1]), float(parts[2]),
                                      float(parts[3]), int(parts[4]),
                                      int(parts[5]) if len(parts) == 6 else None))
            else:
                if key in kw:
                    raise ValueError(f"duplicate key {key!r}")
                kw[key] = _parse_value(key, value)
        except ScenarioParseError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioParseError(f"{key}: {exc}", lineno) from None
    if "nodes" not in kw:
        raise ScenarioParseError("missing required key 'nodes'")
    try:
        return ScenarioConfig(positions=positions, energies=energies, flows=tuple(flows), **kw)
    except ScenarioRangeError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioRangeError(str(exc)) from None


def _parse_value(key: str, value: str):
    if key == "name":
        return value
    if key == "protocol":
        return normalize_protocol(value)
    if key == "area":
        return tuple(_numbers(value, 2))
    if key == "energy_init":
        parts = value.split()
        if parts and parts[0].lower() == "uniform":
            parts = parts[1:]
        if len(parts) == 1:
            parts = parts * 2
        return tuple(_numbers(" ".join(parts), 2))
    if key == "energy_low_range":
        return tuple(_numbers(value, 2))
    if key == "random_flows":
        c, s, i, p = value.split()
        return RandomFlows(int(c), float(s), float(i), int(p))
    if key not in _SCALARS:
        raise ValueError("unknown key")
    if key in _OPTIONAL_FLOATS and value.lower() in ("none", "default", ""):
        return None
    conv = _SCALARS[key]
    if conv is str:
        return value
    if conv is bool:
        return _to_bool(value)
    if conv is int:
        return int(value)
    return float(value)


def serialize_scenario(c: ScenarioConfig) -> str:
    """Inverse of :func:`parse_scenario`; every field written explicitly."""
    lines = [f"name = {c.name}", f"nodes = {c.nodes}", f"protocol = {c.protocol}",
             f"area = {c.area[0]!r} {c.area[1]!r}",
             f"energy_init = uniform {c.energy_init[0]!r} {c.energy_init[1]!r}",
             f"energy_low_range = {c.energy_low_range[0]!r} {c.energy_low_range[1]!r}"]
    for key in _SCALARS:
        if key == "nodes":
            continue
        v = getattr(c, key)
        if v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, str):
            pass
        else:
            v = repr(v)
        lines.append(f"{key} = {v}")
    if c.random_flows is not None:
        r = c.random_flows
        lines.append(f"random_flows = {r.count} {r.start!r} {r.interval!r} {r.packets}")
    for i, (x, y) in sorted(c.positions.items()):
        lines.append(f"position = {i} {x!r} {y!r}")
    for i, e in sorted(c.energies.items()):
        lines.append(f"energy = {i} {e!r}")
    for f in c.flows:
        tail = "" if f.data_bytes is None else f" {f.data_bytes}"
        lines.append(f"flow = {f.src} {f.dst} {f.start!r} {f.interval!r} {f.count}{tail}")
    return "\n".join(lines) + "\n"


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())
