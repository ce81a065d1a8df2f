"""Event engine, node placement, unit-disk radio and packet delivery."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

from manetsim import rng
from manetsim.energy import Battery, EnergyModel, packet_airtime
from manetsim.errors import ScheduleInPastError
from manetsim.metrics import dijkstra_oracle
from manetsim.model import CONTROL_KINDS, Message, MsgKind, SizeConfig, header_payload_bits

SCHEDULER = -1
DEFAULT_PROPAGATION_DELAY = 1e-6


class SimEvent(NamedTuple):
    fire_time: float
    seq_no: int
    target: int
    action: Callable[..., Any]
    args: tuple = ()


class Scheduler:
    """Min-heap of events ordered by (fire_time, insertion counter)."""

    def __init__(self, start: float = 0.0):
        self.now = start
        self._queue: list[SimEvent] = []
        self._seq = 0
        self._cancelled: set[int] = set()
        self.processed = 0

    def schedule(self, t: float, target: int, action: Callable[..., Any], *args) -> SimEvent:
        if t < self.now:
            raise ScheduleInPastError(f"cannot schedule at {t} < now {self.now}")
        ev = SimEvent(t, self._seq, target, action, args)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        return ev

    def cancel(self, ev: SimEvent | None) -> None:
        if ev is not None:
            self._cancelled.add(ev.seq_no)

    def __len__(self) -> int:
        return len(self._queue)

    def run_until(self, t_end: float) -> int:
        if t_end < self.now:
            raise ScheduleInPastError(f"t_end {t_end} < now {self.now}")
        q = self._queue
        cancelled = self._cancelled
        count = 0
        while q and q[0].fire_time <= t_end:
            ev = heapq.heappop(q)
            if ev.seq_no in cancelled:
                cancelled.discard(ev.seq_no)
                continue
            self.now = ev.fire_time
            ev.action(*ev.args)
            count += 1
        self.now = t_end
        self.processed += count
        return count


@dataclass
class Topology:
    positions: list[tuple[float, float]]
    area: tuple[float, float] = (1000.0, 1000.0)
    comm_range: float = 250.0
    _adj: list[list[int]] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        w, h = self.area
        if w <= 0 or h <= 0:
            raise ValueError("area must be positive")
        for i, (x, y) in enumerate(self.positions):
            if not (0.0 <= x <= w and 0.0 <= y <= h):
                raise ValueError(f"node {i} at ({x}, {y}) is outside the {w}x{h} area")
        n = len(self.positions)
        adj: list[list[int]] = [[] for _ in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                if self.distance(a, b) <= self.comm_range:
                    adj[a].append(b)
                    adj[b].append(a)
        self._adj = adj

    @property
    def n(self) -> int:
        return len(self.positions)

    def distance(self, a: int, b: int) -> float:
        (xa, ya), (xb, yb) = self.positions[a], self.positions[b]
        return math.hypot(xa - xb, ya - yb)

    def in_range(self, a: int, b: int) -> bool:
        # closed ball: distance == range is in range
        return self.distance(a, b) <= self.comm_range

    def neighbors(self, a: int) -> list[int]:
        return self._adj[a]

    def degree(self, a: int) -> int:
        return len(self._adj[a])

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.n) for b in self._adj[a] if a < b]


def place_nodes(n: int, area: tuple[float, float], seed: int) -> list[tuple[float, float]]:
    if n < 1:
        raise ValueError("need at least one node")
    w, h = area
    r = rng.stream(seed, "placement")
    return [(r.random() * w, r.random() * h) for _ in range(n)]


def assign_initial_energy(n: int, seed: int, e_lo: float, e_hi: float,
                          e_max: float = 15.0) -> list[float]:
    if not 0 <= e_lo <= e_hi <= e_max:
        raise ValueError(f"need 0 <= e_lo <= e_hi <= e_max, got {e_lo}, {e_hi}, {e_max}")
    r = rng.stream(seed, "energy")
    return [e_lo + (e_hi - e_lo) * r.random() for _ in range(n)]


_SENT = {k: f"{k.name.lower().replace('hello_ack', 'ack')}_sent" for k in MsgKind}
_RECV = {k: f"{k.name.lower().replace('hello_ack', 'ack')}_recv" for k in MsgKind}


class Network:
    """Owns the clock, the radio and the node objects of one simulation.

    The radio is an ideal unit disk: no loss, no collisions. A transmission
    reaches every in-range alive node after airtime + propagation delay.
    """

    def __init__(self, topology: Topology, metrics, *,
                 sizes: SizeConfig = SizeConfig(),
                 energy_model: EnergyModel = EnergyModel(),
                 propagation_delay: float = DEFAULT_PROPAGATION_DELAY,
                 scheduler: Scheduler | None = None,
                 trace: bool = False,
                 link_feedback: bool = True):
        self.topology = topology
        self.link_feedback = link_feedback
        self.metrics = metrics
        self.sizes = sizes
        self.energy_model = energy_model
        self.propagation_delay = propagation_delay
        self.scheduler = scheduler or Scheduler()
        self.nodes: list = []
        self.trace: list[str] | None = [] if trace else None
        self._ctrl_latency = (
            packet_airtime(sizes.control_header_bits, 0) + propagation_delay
        )
        self._oracle_cache: dict[tuple[int, int], int | None] = {}

    @property
    def now(self) -> float:
        return self.scheduler.now

    def attach(self, nodes: Sequence) -> None:
        self.nodes = list(nodes)

    def oracle_hops(self, src: int, dst: int) -> int | None:
        key = (src, dst)
        if key not in self._oracle_cache:
            self._oracle_cache[key] = dijkstra_oracle(self.topology, src, dst)
        return self._oracle_cache[key]

    def latency(self, m: Message) -> float:
        if m.kind in CONTROL_KINDS:
            return self._ctrl_latency
        h, p = header_payload_bits(m, self.sizes)
        return packet_airtime(h, p) + self.propagation_delay

    @property
    def control_latency(self) -> float:
        return self._ctrl_latency

    def log(self, node: int, event: str, kind: str = "-", src: int | str = "-",
            dst: int | str = "-", detail: str = "-") -> None:
        if self.trace is not None:
            self.trace.append(
                f"{self.now:.9f}\t{node}\t{event}\t{kind}\t{src}\t{dst}\t{detail}"
            )

    def broadcast(self, src: int, m: Message) -> list[int]:
        return self._transmit(src, m, self.topology.neighbors(src), "*")

    def unicast(self, src: int, dst: int, m: Message) -> list[int]:
        receivers = [dst] if self.topology.in_range(src, dst) else []
        return self._transmit(src, m, receivers, dst, unicast=True)

    def _transmit(self, src: int, m: Message, receivers: list[int], dst_label,
                  unicast: bool = False) -> list[int]:
        node = self.nodes[src]
        if not node.alive:
            return []
        met = self.metrics
        attr = _SENT[m.kind]
        setattr(met, attr, getattr(met, attr) + 1)
        t = self.scheduler.now + self.latency(m)
        sched = self.scheduler.schedule
        for r in receivers:
            sched(t, r, self._deliver, r, m, src if unicast else -1)
        self.log(src, "tx", m.kind.name, src, dst_label, f"n={len(receivers)}")
        h, p = header_payload_bits(m, self.sizes)
        node.spend(self.energy_model.cost(h, p, node.battery))
        return list(receivers)

    def _deliver(self, r: int, m: Message, sender: int = -1) -> None:
        node = self.nodes[r]
        if not node.alive:
            self.log(r, "drop", m.kind.name, m.src, r, "dead")
            # a failed unicast is reported back to the sender, as a MAC retry limit would
            if sender >= 0 and self.link_feedback and self.nodes[sender].alive:
                self.nodes[sender].link_failed(r, m)
            elif m.kind is MsgKind.DATA:
                self.metrics.data_lost_dead += 1
            return
        met = self.metrics
        attr = _RECV[m.kind]
        setattr(met, attr, getattr(met, attr) + 1)
        self.log(r, "rx", m.kind.name, m.src, r)
        node.receive(m)


def make_battery(level: float, *, e_max: float, voltage: float, current: float,
                 death_threshold: float) -> Battery:
    return Battery(level=level, e_max=e_max, voltage=voltage, current=current,
                   death_threshold=death_threshold)
