from __future__ import annotations

import pytest

from manetsim.scenario import FlowSpec, ScenarioConfig, load_scenario
from pathlib import Path

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def line_config(n: int, spacing: float = 200.0, **kw) -> ScenarioConfig:
    """``n`` nodes on a horizontal line; only consecutive nodes are in range."""
    width = max(1000.0, spacing * (n - 1))
    positions = {i: (i * spacing, 500.0) for i in range(n)}
    base = dict(name="line", nodes=n, area=(width, 1000.0), positions=positions,
                energy_init=(15.0, 15.0), sim_time=30.0)
    base.update(kw)
    return ScenarioConfig(**base)


def one_packet(src: int, dst: int, at: float = 5.0) -> tuple[FlowSpec, ...]:
    return (FlowSpec(src, dst, at, 1.0, 1),)


@pytest.fixture
def star4() -> ScenarioConfig:
    return load_scenario(SCENARIOS / "star4.txt")


def scenario(name: str) -> ScenarioConfig:
    return load_scenario(SCENARIOS / f"{name}.txt")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
