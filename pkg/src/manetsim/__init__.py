"""Discrete-event MANET simulator with classic AODV and the power-control
variant that signals residual battery through HELLO-acknowledgment timing."""

from manetsim.model import Message, MsgKind, NeighborRecord, RoutingTableEntry
from manetsim.metrics import MetricsReport
from manetsim.scenario import ScenarioConfig, parse_scenario
from manetsim.runner import compare, run, sweep

__all__ = [
    "Message",
    "MsgKind",
    "NeighborRecord",
    "RoutingTableEntry",
    "MetricsReport",
    "ScenarioConfig",
    "parse_scenario",
    "run",
    "compare",
    "sweep",
]

__version__ = "0.1.0"
