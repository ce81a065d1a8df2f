"""Power-control AODV.

Each node answers a neighbor's HELLO with a HELLO_ACK delayed by
``delta_t * K`` where ``K = e_max / own_energy``. The HELLO sender measures
the delay and inverts it to learn the neighbor's battery level; neighbors
that stay silent for the whole acknowledgment window are flagged critical
and avoided as next hops whenever a safe alternative exists.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

from manetsim.aodv import AodvConfig, AodvNode, Candidate, classic_next_hop
from manetsim.energy import Battery, k_factor
from manetsim.errors import NoCandidateError, OffsetTooSmallError
from manetsim.kernel import Network
from manetsim.model import Message, MsgKind, NeighborRecord

# rounding slack when comparing measured offsets against delta_t / t_ack
_REL_EPS = 1e-9


@dataclass(frozen=True)
class PcConfig:
    delta_t: float = 0.002
    e_max: float = 15.0
    energy_threshold: float = 1.5
    t_ack: float | None = None
    # A node whose delay would land past t_ack stays silent instead of sending
    # an acknowledgment the HELLO sender is going to discard.
    withhold_late_acks: bool = True
    # Drop routes whose next hop turns critical so the next discovery can
    # elect a safer one.
    reroute_on_critical: bool = True
    # Reverse-path candidates up to this many hops longer than the shortest
    # may be elected when every shortest one is critical.
    detour_hops: int = 1
    # A node below the threshold does not volunteer cached routes.
    critical_cache_replies: bool = False

    def __post_init__(self):
        if self.detour_hops < 0:
            raise ValueError("detour_hops must be >= 0")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if not 0 < self.energy_threshold < self.e_max:
            raise ValueError("need 0 < energy_threshold < e_max")
        if self.t_ack is None:
            object.__setattr__(self, "t_ack", self.min_t_ack)
        elif self.t_ack < self.min_t_ack * (1 - _REL_EPS):
            raise ValueError(f"t_ack must be >= delta_t * e_max / energy_threshold = {self.min_t_ack}")

    @property
    def min_t_ack(self) -> float:
        return self.delta_t * self.e_max / self.energy_threshold


@dataclass(frozen=True)
class AckSchedule:
    hello_origin: int
    hello_rx_time: float
    my_offset: float
    fire_time: float


def pc_hello_interval(n_neighbors: int, hi_base: float) -> float:
    if hi_base <= 0:
        raise ValueError("hi_base must be positive")
    return max(1, n_neighbors) * hi_base


def ack_send_offset(k: float, delta_t: float) -> float:
    if k < 1 or delta_t <= 0:
        raise ValueError(f"need k >= 1 and delta_t > 0, got k={k}, delta_t={delta_t}")
    return delta_t * k


def decode_neighbor_energy(offset: float, delta_t: float, e_max: float) -> float:
    if offset < delta_t:
        raise OffsetTooSmallError(f"offset {offset} < delta_t {delta_t} implies K < 1")
    return e_max * delta_t / offset


def is_filtered(rec: NeighborRecord | None, energy_threshold: float) -> bool:
    if rec is None:
        return False
    if rec.critical:
        return True
    return rec.est_energy is not None and rec.est_energy < energy_threshold


def elect_next_hop(candidates: Sequence[Candidate], records: Mapping[int, NeighborRecord],
                   energy_threshold: float) -> tuple[int, bool]:
    """Pick a next hop, skipping energy-critical neighbors.

    Returns ``(neighbor, forced_unsafe)``. Survivors are ranked exactly like
    classic AODV, so with no critical neighbor the result is the classic one.
    If every candidate is critical the classic choice is returned with
    ``forced_unsafe`` set.
    """
    if not candidates:
        raise NoCandidateError("no candidate next hops")
    safe = [c for c in candidates if not is_filtered(records.get(c[0]), energy_threshold)]
    if not safe:
        return classic_next_hop(candidates), True
    return classic_next_hop(safe), False


class PcAodvNode(AodvNode):
    protocol = "pc-aodv"

    def __init__(self, node_id: int, net: Network, battery: Battery,
                 cfg: AodvConfig = AodvConfig(), pc: PcConfig = PcConfig()):
        super().__init__(node_id, net, battery, cfg)
        self.pc = pc
        self.ack_schedules: deque[AckSchedule] = deque(maxlen=64)
        self._window_start: float | None = None
        self._window_open = False
        self._acked: set[int] = set()

    def current_interval(self) -> float:
        # The node counts itself in its neighbourhood: N neighbours acknowledging
        # plus its own HELLO make N+1 transmissions per interval.
        return pc_hello_interval(len(self.neighbors) + 1, self.cfg.hello_interval)

    def neighbor_timeout(self, rec: NeighborRecord) -> float:
        period = max(self.cfg.hello_interval, self.current_interval(), rec.hello_gap or 0.0)
        return self.cfg.allowed_hello_loss * period + self.pc.t_ack + 2 * self.net.control_latency

    # -- HELLO side -------------------------------------------------------

    def hello_tick(self) -> None:
        if self.dead:
            return
        self._window_start = self.now
        self._window_open = True
        self._acked = set()
        self.net.broadcast(self.id, Message(MsgKind.HELLO, src=self.id, orig_seq=self.seq))
        window = self.pc.t_ack * (1 + _REL_EPS) + 2 * self.net.control_latency
        self._timer("ack_window", window, self._close_window)

    def _close_window(self) -> None:
        if self.dead:
            return
        self._window_open = False
        newly_critical = set()
        for n, rec in self.neighbors.items():
            if n not in self._acked:
                if not rec.critical:
                    newly_critical.add(n)
                rec.critical = True
        if newly_critical:
            self.net.log(self.id, "critical", detail=",".join(map(str, sorted(newly_critical))))
            if self.pc.reroute_on_critical:
                self._break_links(newly_critical, keep_direct=True)
        nxt = max(self.now, self._window_start + self.current_interval())
        self._timer("hello", nxt - self.now, self.hello_tick)

    def on_hello_ack(self, m: Message) -> None:
        self._refresh_neighbor_route(m.src, m.orig_seq,
                                     self.hello_route_lifetime(self.neighbors[m.src]))
        if self._window_start is None or m.src in self._acked:
            self.metrics.unsolicited_acks += 1
            return
        rec = self.neighbors[m.src]
        rx_offset = self.now - self._window_start - 2 * self.net.control_latency
        if not self._window_open or rx_offset > self.pc.t_ack * (1 + _REL_EPS):
            self.metrics.late_acks += 1
            rec.critical = True
            rec.est_energy = None
            return
        dt = self.pc.delta_t
        if dt * (1 - _REL_EPS) <= rx_offset < dt:
            rx_offset = dt
        self._acked.add(m.src)
        rec.est_energy = decode_neighbor_energy(rx_offset, dt, self.pc.e_max)
        rec.critical = rec.est_energy < self.pc.energy_threshold

    # -- acknowledgment side ------------------------------------------------

    def on_hello(self, m: Message) -> None:
        super().on_hello(m)
        if self.dead:
            return
        rx_time = self.now
        offset = ack_send_offset(k_factor(self.battery.level, self.pc.e_max), self.pc.delta_t)
        if self.pc.withhold_late_acks and offset > self.pc.t_ack * (1 + _REL_EPS):
            self.metrics.acks_withheld += 1
            return
        sched = AckSchedule(m.src, rx_time, offset, rx_time + offset)
        self.ack_schedules.append(sched)
        self.net.scheduler.schedule(sched.fire_time, self.id, self._send_ack, m.src)

    def _send_ack(self, to: int) -> None:
        if self.dead:
            return
        self.net.unicast(self.id, to, Message(MsgKind.HELLO_ACK, src=self.id, orig_seq=self.seq))

    # -- election -----------------------------------------------------------

    def detour_hops(self) -> int:
        return self.pc.detour_hops

    def may_reply_from_cache(self) -> bool:
        return self.pc.critical_cache_replies or self.battery.level >= self.pc.energy_threshold

    def choose_next_hop(self, target: int, candidates: Sequence[Candidate]) -> int:
        # the target itself relays nothing, so its battery is irrelevant
        direct = [c for c in candidates if c[0] == target]
        if direct:
            return classic_next_hop(direct)
        choice, forced = elect_next_hop(candidates, self.neighbors, self.pc.energy_threshold)
        if forced:
            self.metrics.forced_unsafe += 1
        return choice
