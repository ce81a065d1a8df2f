"""Classic AODV: periodic HELLO, expanding-ring discovery, RREP/RERR, forwarding."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

from manetsim.energy import Battery
from manetsim.errors import NoCandidateError
from manetsim.kernel import Network, SimEvent
from manetsim.metrics import route_vs_oracle
from manetsim.model import Message, MsgKind, NeighborRecord, RoutingTableEntry, fresher_route

# (neighbor, hop count to the target via that neighbor, sequence number)
Candidate = tuple[int, int, int]


@dataclass(frozen=True)
class AodvConfig:
    hello_interval: float = 1.0
    active_route_timeout: float = 3.0
    allowed_hello_loss: int = 2
    ttl_start: int = 1
    ttl_increment: int = 2
    ttl_threshold: int = 7
    net_diameter: int = 35
    rreq_retries: int = 2
    # Fixed wait per attempt (multiplied by the 1-based attempt number).
    # None uses ring traversal time: 2 * node_traversal_time * (ttl + timeout_buffer).
    rreq_wait: float | None = None
    node_traversal_time: float = 0.04
    timeout_buffer: int = 2
    buffer_size: int = 64

    def __post_init__(self):
        for name in ("hello_interval", "active_route_timeout", "allowed_hello_loss",
                     "ttl_start", "ttl_increment", "ttl_threshold", "net_diameter",
                     "node_traversal_time", "buffer_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.rreq_retries < 0:
            raise ValueError("rreq_retries must be >= 0")
        if self.rreq_wait is not None and self.rreq_wait <= 0:
            raise ValueError("rreq_wait must be positive")
        if not self.ttl_start <= self.ttl_threshold <= self.net_diameter:
            raise ValueError("need ttl_start <= ttl_threshold <= net_diameter")

    def ttl_sequence(self) -> list[int]:
        """TTL of every RREQ attempt for one discovery, in order."""
        ttls = []
        ttl = self.ttl_start
        while ttl <= self.ttl_threshold:
            ttls.append(ttl)
            ttl += self.ttl_increment
        ttls.append(self.net_diameter)
        ttls.extend([self.net_diameter] * self.rreq_retries)
        return ttls

    def rreq_wait_for(self, attempt: int, ttl: int) -> float:
        if self.rreq_wait is not None:
            return self.rreq_wait * (attempt + 1)
        if ttl >= self.net_diameter:
            retries_at_full = attempt - (len(self.ttl_sequence()) - 1 - self.rreq_retries)
            return 2 * self.node_traversal_time * self.net_diameter * 2 ** max(0, retries_at_full)
        return 2 * self.node_traversal_time * (ttl + self.timeout_buffer)


def classic_next_hop(candidates: Sequence[Candidate]) -> int:
    """Freshest sequence number, then fewest hops, then lowest node id."""
    if not candidates:
        raise NoCandidateError("no candidate next hops")
    return min(candidates, key=lambda c: (-c[2], c[1], c[0]))[0]


@dataclass
class _Discovery:
    attempt: int = 0
    started: float = 0.0
    timer: SimEvent | None = None


@dataclass
class _RreqCandidates:
    rreq_id: int
    entries: list[Candidate] = field(default_factory=list)
    advertised: int | None = None  # hop count we rebroadcast with, if any


class AodvNode:
    protocol = "aodv"

    def __init__(self, node_id: int, net: Network, battery: Battery, cfg: AodvConfig = AodvConfig()):
        self.id = node_id
        self.net = net
        self.battery = battery
        self.cfg = cfg
        self.seq = 0
        self.rreq_id = 0
        self.routes: dict[int, RoutingTableEntry] = {}
        self.neighbors: dict[int, NeighborRecord] = {}
        self.seen_rreq: set[tuple[int, int]] = set()
        self.rreq_candidates: dict[int, _RreqCandidates] = {}
        self.discovery: dict[int, _Discovery] = {}
        self.buffer: deque[Message] = deque()
        self.timers: dict[str, SimEvent] = {}
        self.dead = not battery.alive

    # -- plumbing -------------------------------------------------------

    @property
    def alive(self) -> bool:
        return not self.dead

    @property
    def now(self) -> float:
        return self.net.scheduler.now

    @property
    def metrics(self):
        return self.net.metrics

    def _timer(self, name: str, delay: float, fn, *args) -> None:
        if self.dead:
            return
        sched = self.net.scheduler
        sched.cancel(self.timers.get(name))
        self.timers[name] = sched.schedule(sched.now + delay, self.id, fn, *args)

    def spend(self, cost: float) -> None:
        self.battery.drain(cost)
        if not self.dead and not self.battery.alive:
            self.die()

    def die(self) -> None:
        self.dead = True
        sched = self.net.scheduler
        for ev in self.timers.values():
            sched.cancel(ev)
        self.timers.clear()
        for d in self.discovery.values():
            sched.cancel(d.timer)
        self.discovery.clear()
        self.metrics.node_deaths += 1
        self.net.log(self.id, "die", detail=f"level={self.battery.level:.9f}")

    def start(self, phase: float) -> None:
        """Arm the periodic timers; the first HELLO goes out at ``phase``."""
        if self.dead:
            return
        self._timer("hello", phase, self.hello_tick)
        self._timer("nbr_check", phase + self.cfg.hello_interval / 2, self.neighbor_timeout_check)

    # -- route table helpers ---------------------------------------------

    def route(self, dest: int) -> RoutingTableEntry | None:
        """Valid, unexpired route to ``dest`` or None. Expired entries are invalidated."""
        e = self.routes.get(dest)
        if e is None or not e.valid:
            return None
        if e.lifetime_expiry <= self.now:
            e.valid = False
            return None
        return e

    def _update_route(self, dest: int, next_hop: int, hops: int, seq: int) -> bool:
        exp = self.now + self.cfg.active_route_timeout
        e = self.routes.get(dest)
        if e is None:
            self.routes[dest] = RoutingTableEntry(dest, next_hop, hops, seq, exp)
            return True
        usable = e.usable(self.now)
        if (not usable and seq >= e.dest_seq) or fresher_route((seq, hops), (e.dest_seq, e.hop_count)):
            e.next_hop, e.hop_count, e.dest_seq = next_hop, hops, seq
            e.valid = True
            e.lifetime_expiry = max(e.lifetime_expiry, exp) if usable else exp
            return True
        if usable and e.next_hop == next_hop and (seq, hops) == (e.dest_seq, e.hop_count):
            e.lifetime_expiry = max(e.lifetime_expiry, exp)
            return True
        return False

    def _refresh_neighbor_route(self, nbr: int, seq: int, lifetime: float | None = None) -> None:
        exp = self.now + (self.cfg.active_route_timeout if lifetime is None else lifetime)
        e = self.routes.get(nbr)
        if e is None:
            self.routes[nbr] = RoutingTableEntry(nbr, nbr, 1, seq, exp)
            return
        if not e.usable(self.now):
            e.lifetime_expiry = exp
        e.next_hop, e.hop_count, e.valid = nbr, 1, True
        e.dest_seq = max(e.dest_seq, seq)
        e.lifetime_expiry = max(e.lifetime_expiry, exp)

    def _known_seq(self, nbr: int) -> int:
        e = self.routes.get(nbr)
        return e.dest_seq if e is not None else 0

    def _heard(self, nbr: int) -> NeighborRecord:
        rec = self.neighbors.get(nbr)
        if rec is None:
            rec = self.neighbors[nbr] = NeighborRecord(nbr, self.now)
        else:
            rec.last_heard = self.now
        return rec

    # -- dispatch ---------------------------------------------------------

    def receive(self, m: Message) -> None:
        self._heard(m.src)
        kind = m.kind
        if kind is MsgKind.HELLO:
            self.on_hello(m)
        elif kind is MsgKind.HELLO_ACK:
            self.on_hello_ack(m)
        elif kind is MsgKind.RREQ:
            self._refresh_neighbor_route(m.src, self._known_seq(m.src))
            self.on_rreq(m)
        elif kind is MsgKind.RREP:
            self._refresh_neighbor_route(m.src, self._known_seq(m.src))
            self.on_rrep(m)
        elif kind is MsgKind.RERR:
            self._refresh_neighbor_route(m.src, self._known_seq(m.src))
            self.on_rerr(m)
        else:
            self.forward_data(m)

    # -- HELLO / neighbor maintenance ------------------------------------

    def hello_tick(self) -> None:
        if self.dead:
            return
        self.net.broadcast(self.id, Message(MsgKind.HELLO, src=self.id, orig_seq=self.seq))
        self._timer("hello", self.cfg.hello_interval, self.hello_tick)

    def on_hello(self, m: Message) -> None:
        rec = self.neighbors[m.src]
        if rec.last_hello is not None:
            rec.hello_gap = self.now - rec.last_hello
        rec.last_hello = self.now
        self._refresh_neighbor_route(m.src, m.orig_seq, self.hello_route_lifetime(rec))

    def hello_route_lifetime(self, rec: NeighborRecord) -> float:
        """A HELLO keeps the neighbour route alive until the neighbour would time out."""
        return max(self.cfg.active_route_timeout, self.neighbor_timeout(rec))

    def on_hello_ack(self, m: Message) -> None:
        # Classic AODV never solicits acknowledgments.
        self.metrics.unsolicited_acks += 1

    def neighbor_timeout(self, rec: NeighborRecord) -> float:
        return self.cfg.allowed_hello_loss * self.cfg.hello_interval

    def neighbor_timeout_check(self) -> list[int]:
        if self.dead:
            return []
        now = self.now
        expired = [n for n, rec in self.neighbors.items()
                   if now - rec.last_heard > self.neighbor_timeout(rec)]
        for n in expired:
            del self.neighbors[n]
        if expired:
            self.net.log(self.id, "expire", detail=",".join(map(str, expired)))
            self._break_links(set(expired))
        self._timer("nbr_check", self.cfg.hello_interval, self.neighbor_timeout_check)
        return expired

    def _break_links(self, lost: set[int], keep_direct: bool = False) -> None:
        """Invalidate routes through ``lost`` and tell their precursors."""
        unreachable = []
        precursors: set[int] = set()
        for dest, e in sorted(self.routes.items()):
            if e.valid and e.next_hop in lost and not (keep_direct and dest == e.next_hop):
                e.valid = False
                e.dest_seq += 1
                unreachable.append((dest, e.dest_seq))
                precursors |= e.precursors
        precursors -= lost
        if unreachable and precursors:
            self._send_rerr(unreachable, precursors)

    def link_failed(self, nbr: int, m: Message) -> None:
        """A unicast to ``nbr`` went unanswered: drop the link and salvage own DATA."""
        self.net.log(self.id, "link-fail", m.kind.name, self.id, nbr)
        self.neighbors.pop(nbr, None)
        self._break_links({nbr})
        if m.kind is not MsgKind.DATA:
            return
        if m.originator == self.id:
            self.forward_data(replace(m, src=self.id, ttl=m.ttl + 1, hop_count=m.hop_count - 1))
        else:
            self.metrics.data_dropped_link += 1

    def _send_rerr(self, unreachable: list[tuple[int, int]], targets: set[int]) -> None:
        m = Message(MsgKind.RERR, src=self.id, unreachable=tuple(unreachable))
        if len(targets) == 1:
            self.net.unicast(self.id, next(iter(targets)), m)
        else:
            self.net.broadcast(self.id, m)

    def on_rerr(self, m: Message) -> None:
        unreachable = []
        precursors: set[int] = set()
        for dest, seq in m.unreachable:
            e = self.routes.get(dest)
            if e is not None and e.valid and e.next_hop == m.src:
                e.valid = False
                e.dest_seq = max(e.dest_seq, seq)
                unreachable.append((dest, e.dest_seq))
                precursors |= e.precursors
        precursors.discard(m.src)
        if unreachable and precursors:
            self._send_rerr(unreachable, precursors)

    # -- discovery --------------------------------------------------------

    def originate_rreq(self, dest: int) -> None:
        if dest == self.id or dest in self.discovery or self.dead:
            return
        self.discovery[dest] = _Discovery(started=self.now)
        self._send_rreq(dest)

    def _send_rreq(self, dest: int) -> None:
        d = self.discovery[dest]
        ttl = self.cfg.ttl_sequence()[d.attempt]
        self.seq += 1
        self.rreq_id += 1
        known = self.routes.get(dest)
        m = Message(MsgKind.RREQ, src=self.id, originator=self.id, destination=dest,
                    rreq_id=self.rreq_id, orig_seq=self.seq,
                    dest_seq=known.dest_seq if known else 0, hop_count=0, ttl=ttl)
        self.seen_rreq.add((self.id, self.rreq_id))
        self.net.broadcast(self.id, m)
        if self.dead:
            return
        sched = self.net.scheduler
        d.timer = sched.schedule(self.now + self.cfg.rreq_wait_for(d.attempt, ttl),
                                 self.id, self._rreq_timeout, dest, d.attempt)

    def _rreq_timeout(self, dest: int, attempt: int) -> None:
        d = self.discovery.get(dest)
        if self.dead or d is None or d.attempt != attempt:
            return
        if self.route(dest) is not None:
            self._discovery_done(dest)
            return
        d.attempt += 1
        if d.attempt >= len(self.cfg.ttl_sequence()):
            del self.discovery[dest]
            self.metrics.discoveries_failed += 1
            dropped = [p for p in self.buffer if p.destination == dest]
            self.buffer = deque(p for p in self.buffer if p.destination != dest)
            self.metrics.data_dropped_no_route += len(dropped)
            self.net.log(self.id, "unreachable", dst=dest, detail=f"dropped={len(dropped)}")
            return
        self._send_rreq(dest)

    def _discovery_done(self, dest: int) -> None:
        d = self.discovery.pop(dest, None)
        if d is None:
            return
        self.net.scheduler.cancel(d.timer)
        e = self.routes[dest]
        self.metrics.route_checks.append(
            route_vs_oracle(e.hop_count, self.net.oracle_hops(self.id, dest))
        )
        pending = [p for p in self.buffer if p.destination == dest]
        self.buffer = deque(p for p in self.buffer if p.destination != dest)
        for p in pending:
            self.forward_data(p)

    def _record_candidate(self, orig: int, rreq_id: int, cand: Candidate) -> None:
        slot = self.rreq_candidates.get(orig)
        if slot is None or rreq_id > slot.rreq_id:
            slot = self.rreq_candidates[orig] = _RreqCandidates(rreq_id)
        elif rreq_id < slot.rreq_id:
            return
        slot.entries.append(cand)

    def on_rreq(self, m: Message) -> None:
        orig = m.originator
        if orig == self.id:
            return
        hops = m.hop_count + 1
        self._record_candidate(orig, m.rreq_id, (m.src, hops, m.orig_seq))
        key = (orig, m.rreq_id)
        if key in self.seen_rreq:
            self.metrics.rreq_duplicates += 1
            return
        self.seen_rreq.add(key)
        self._update_route(orig, m.src, hops, m.orig_seq)
        sched = self.net.scheduler
        if m.destination == self.id:
            self.seq = max(self.seq, m.dest_seq) + 1
            # zero-delay event: lets same-instant duplicate copies register as candidates
            sched.schedule(self.now, self.id, self._reply_rrep, orig, self.id, self.seq, 0, False)
            return
        e = self.route(m.destination)
        if (e is not None and e.dest_seq >= m.dest_seq and e.next_hop != m.src
                and self.may_reply_from_cache()):
            sched.schedule(self.now, self.id, self._reply_rrep,
                           orig, m.destination, e.dest_seq, e.hop_count, True)
            return
        if m.ttl - 1 > 0:
            slot = self.rreq_candidates[orig]
            if slot.rreq_id == m.rreq_id:
                slot.advertised = hops
            self.net.broadcast(self.id, replace(m, src=self.id, hop_count=hops, ttl=m.ttl - 1))

    def choose_next_hop(self, target: int, candidates: Sequence[Candidate]) -> int:
        return classic_next_hop(candidates)

    def _reverse_next_hop(self, orig: int) -> int | None:
        rev = self.route(orig)
        if rev is None:
            return None
        slot = self.rreq_candidates.get(orig)
        if slot is None or not slot.entries:
            return rev.next_hop
        best_seq = max(c[2] for c in slot.entries)
        fresh = [c for c in slot.entries if c[2] == best_seq]
        min_hops = min(c[1] for c in fresh)
        if rev.dest_seq > best_seq or rev.hop_count < min_hops:
            return rev.next_hop
        # Never exceed a hop count already advertised: upstream nodes may have
        # elected us on that basis, and counts must strictly shrink toward the
        # originator for the reverse chain to stay loop-free.
        limit = slot.advertised if slot.advertised is not None else min_hops + self.detour_hops()
        cands = [c for c in fresh if c[1] <= max(limit, min_hops)]
        choice = self.choose_next_hop(orig, cands)
        rev.next_hop = choice
        rev.hop_count = min(c[1] for c in cands if c[0] == choice)
        return choice

    def detour_hops(self) -> int:
        """Extra hops beyond the minimum a reverse-path candidate may have."""
        return 0

    def may_reply_from_cache(self) -> bool:
        return True

    def _reply_rrep(self, orig: int, dest: int, dest_seq: int, hops: int, intermediate: bool) -> None:
        if self.dead:
            return
        nh = self._reverse_next_hop(orig)
        if nh is None:
            self.metrics.rrep_dropped += 1
            return
        if intermediate:
            fwd = self.route(dest)
            if fwd is None:
                self.metrics.rrep_dropped += 1
                return
            fwd.precursors.add(nh)
            self.routes[orig].precursors.add(fwd.next_hop)
        self.metrics.rrep_originated += 1
        self.net.unicast(self.id, nh, Message(MsgKind.RREP, src=self.id, originator=orig,
                                              destination=dest, dest_seq=dest_seq, hop_count=hops))

    def on_rrep(self, m: Message) -> None:
        dest, orig = m.destination, m.originator
        hops = m.hop_count + 1
        updated = self._update_route(dest, m.src, hops, m.dest_seq)
        if orig == self.id:
            self.metrics.rrep_delivered += 1
            if updated and dest in self.discovery:
                self._discovery_done(dest)
            return
        if not updated:
            return
        nh = self._reverse_next_hop(orig)
        if nh is None:
            self.metrics.rrep_dropped += 1
            self.net.log(self.id, "drop", "RREP", m.src, orig, "broken-reverse-path")
            return
        self.routes[dest].precursors.add(nh)
        self.routes[orig].precursors.add(m.src)
        self.net.unicast(self.id, nh, replace(m, src=self.id, hop_count=hops))

    # -- data ---------------------------------------------------------------

    def send_data(self, dest: int, payload_bits: int, header_bits: int, uid: int) -> None:
        """Application hands a packet to routing at this (source) node."""
        if self.dead:
            return
        self.metrics.data_originated += 1
        m = Message(MsgKind.DATA, src=self.id, originator=self.id, destination=dest,
                    payload_bits=payload_bits, header_bits=header_bits,
                    ttl=self.cfg.net_diameter, uid=uid)
        self.forward_data(m)

    def forward_data(self, m: Message) -> None:
        if m.destination == self.id:
            self.metrics.data_delivered += 1
            return
        e = self.route(m.destination)
        if e is not None:
            if m.ttl <= 0:
                self.metrics.data_dropped_ttl += 1
                return
            e.lifetime_expiry = max(e.lifetime_expiry, self.now + self.cfg.active_route_timeout)
            self.net.unicast(self.id, e.next_hop,
                             replace(m, src=self.id, ttl=m.ttl - 1, hop_count=m.hop_count + 1))
            return
        if m.originator == self.id:
            if len(self.buffer) >= self.cfg.buffer_size:
                self.buffer.popleft()
                self.metrics.data_dropped_buffer += 1
            self.buffer.append(m)
            self.originate_rreq(m.destination)
            return
        self.metrics.data_dropped_no_route += 1
        stale = self.routes.get(m.destination)
        seq = stale.dest_seq + 1 if stale is not None else 0
        if stale is not None:
            stale.dest_seq = seq
        self._send_rerr([(m.destination, seq)], {m.src})
