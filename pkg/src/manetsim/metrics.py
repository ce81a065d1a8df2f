"""Run counters, derived ratios, route and energy oracles, CSV output."""

from __future__ import annotations

import csv
import heapq
import io
import os
from dataclasses import dataclass, field, fields
from typing import IO, Iterable, Protocol

from manetsim.errors import OracleMismatchError

PROTOCOLS = ("aodv", "pc-aodv")

CSV_COLUMNS = (
    "run_id", "protocol", "nodes", "seed", "sim_time_s",
    "hello_sent", "hello_recv", "ack_sent", "ack_recv",
    "rreq_sent", "rrep_sent", "rerr_sent",
    "data_sent", "data_delivered",
    "overhead", "pdr_rrep", "pdr_data", "total_energy_drained", "forced_unsafe",
)


@dataclass(frozen=True)
class RouteCheck:
    discovered: int
    oracle: int
    match: bool
    slack: int


@dataclass
class MetricsReport:
    run_id: str = ""
    protocol: str = "aodv"
    nodes: int = 0
    seed: int = 0
    sim_time_s: float = 0.0

    hello_sent: int = 0
    hello_recv: int = 0
    ack_sent: int = 0
    ack_recv: int = 0
    rreq_sent: int = 0
    rreq_recv: int = 0
    rrep_sent: int = 0
    rrep_recv: int = 0
    rerr_sent: int = 0
    rerr_recv: int = 0
    data_sent: int = 0
    data_recv: int = 0
    data_originated: int = 0
    data_delivered: int = 0
    forced_unsafe: int = 0

    rrep_originated: int = 0
    rrep_delivered: int = 0
    rrep_dropped: int = 0
    unsolicited_acks: int = 0
    late_acks: int = 0
    acks_withheld: int = 0
    rreq_duplicates: int = 0
    discoveries_failed: int = 0
    data_dropped_buffer: int = 0
    data_dropped_no_route: int = 0
    data_dropped_ttl: int = 0
    data_dropped_link: int = 0
    data_lost_dead: int = 0
    node_deaths: int = 0
    total_energy_drained: float = 0.0
    route_checks: list[RouteCheck] = field(default_factory=list, repr=False)

    @property
    def control_sent(self) -> int:
        return self.hello_sent + self.ack_sent + self.rreq_sent + self.rrep_sent + self.rerr_sent

    @property
    def overhead(self) -> float:
        return overhead(self)

    @property
    def pdr_rrep(self) -> float:
        return pdr(self.rrep_originated, self.rrep_delivered)

    @property
    def pdr_data(self) -> float:
        return pdr(self.data_originated, self.data_delivered)

    def counters(self) -> dict[str, int | float]:
        skip = {"run_id", "protocol", "route_checks"}
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip}

    def csv_row(self) -> list[str]:
        row = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            row.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        return row


def overhead(report: MetricsReport) -> float:
    ctrl = report.control_sent
    total = ctrl + report.data_sent
    return ctrl / total if total else 0.0


def pdr(transmitted: int, received: int) -> float:
    return received / transmitted if transmitted else 0.0


class _Graph(Protocol):
    def neighbors(self, a: int) -> Iterable[int]: ...


def dijkstra_oracle(graph: _Graph, src: int, dst: int) -> int | None:
    """Minimum hop count from ``src`` to ``dst``; None if unreachable."""
    dist = {src: 0}
    heap = [(0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == dst:
            return d
        if d > dist[u]:
            continue
        for v in graph.neighbors(u):
            nd = d + 1
            if nd < dist.get(v, nd + 1):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return None


def analytic_hello_energy(n: int, C: float, T: float, HI: float, protocol: str) -> float:
    """Closed-form HELLO-class energy over a horizon.

    Both protocols give n*C*T/HI: under PC-AODV each node's longer HELLO
    interval is exactly offset by the acknowledgments it receives.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    if n < 1 or HI <= 0:
        raise ValueError("need n >= 1 and HI > 0")
    return n * C * T / HI


def route_vs_oracle(discovered_hops: int, oracle_hops: int | None) -> RouteCheck:
    if oracle_hops is None:
        raise OracleMismatchError("route discovered to a destination the oracle cannot reach")
    slack = discovered_hops - oracle_hops
    if slack < 0:
        raise OracleMismatchError(
            f"discovered {discovered_hops} hops but the minimum is {oracle_hops}"
        )
    return RouteCheck(discovered_hops, oracle_hops, slack == 0, slack)


def sort_reports(reports: Iterable[MetricsReport]) -> list[MetricsReport]:
    return sorted(reports, key=lambda r: (r.nodes, r.protocol, r.seed))


def write_csv(reports: Iterable[MetricsReport], fh: IO[str],
              extra_rows: Iterable[list[str]] = ()) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sort_reports(reports):
        w.writerow(r.csv_row())
    for row in extra_rows:
        w.writerow(row)


def emit_csv(reports: Iterable[MetricsReport], out: str | os.PathLike | IO[str],
             extra_rows: Iterable[list[str]] = ()) -> None:
    if hasattr(out, "write"):
        write_csv(reports, out, extra_rows)
        return
    with open(out, "w", newline="") as fh:
        write_csv(reports, fh, extra_rows)


def csv_text(reports: Iterable[MetricsReport]) -> str:
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()
