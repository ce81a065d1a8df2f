"""Domain types shared by both protocol engines."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class MsgKind(enum.Enum):
    HELLO = "HELLO"
    HELLO_ACK = "HELLO_ACK"
    RREQ = "RREQ"
    RREP = "RREP"
    RERR = "RERR"
    DATA = "DATA"


CONTROL_KINDS = frozenset(
    {MsgKind.HELLO, MsgKind.HELLO_ACK, MsgKind.RREQ, MsgKind.RREP, MsgKind.RERR}
)


@dataclass(frozen=True, slots=True)
class Message:
    """One packet on the simulated air.

    HELLO and HELLO_ACK share a layout; the kind tag is bookkeeping only.
    ``src`` is the transmitting node of this hop, ``originator`` the node that
    created the packet (RREQ/RREP/DATA).
    """

    kind: MsgKind
    src: int
    originator: int = -1
    destination: int = -1
    rreq_id: int = 0
    orig_seq: int = 0
    dest_seq: int = 0
    hop_count: int = 0
    ttl: int = 0
    unreachable: tuple[tuple[int, int], ...] = ()
    payload_bits: int = 0
    header_bits: int = 0
    uid: int = -1


@dataclass(slots=True)
class RoutingTableEntry:
    dest: int
    next_hop: int
    hop_count: int
    dest_seq: int
    lifetime_expiry: float
    valid: bool = True
    precursors: set[int] = field(default_factory=set)

    def usable(self, now: float) -> bool:
        return self.valid and self.lifetime_expiry > now


@dataclass(slots=True)
class NeighborRecord:
    neighbor: int
    last_heard: float
    est_energy: float | None = None  # None means UNKNOWN
    critical: bool = False
    last_hello: float | None = None
    hello_gap: float | None = None


@dataclass(frozen=True)
class PayloadSpec:
    """Application payload size: multiplier * (data + udp + ip)."""

    data: int = 228
    udp: int = 8
    ip: int = 20
    multiplier: int = 256

    @property
    def bits(self) -> int:
        return payload_bits(self.data, self.udp, self.ip, self.multiplier)


@dataclass(frozen=True)
class SizeConfig:
    control_header_bits: int = 512
    data_header_bits: int = 192
    payload: PayloadSpec = PayloadSpec()


def payload_bits(data: int = 228, udp: int = 8, ip: int = 20, multiplier: int = 256) -> int:
    for name, v in (("data", data), ("udp", udp), ("ip", ip), ("multiplier", multiplier)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v}")
    return multiplier * (data + udp + ip)


def fresher_route(candidate: tuple[int, int], incumbent: tuple[int, int]) -> bool:
    """True if ``candidate`` (seq, hops) should replace ``incumbent``."""
    c_seq, c_hops = candidate
    i_seq, i_hops = incumbent
    if c_seq != i_seq:
        return c_seq > i_seq
    return c_hops < i_hops


def message_size_bits(m: Message, sizes: SizeConfig = SizeConfig()) -> int:
    if m.kind is MsgKind.DATA:
        return m.header_bits + m.payload_bits
    return sizes.control_header_bits


def header_payload_bits(m: Message, sizes: SizeConfig = SizeConfig()) -> tuple[int, int]:
    """Split a message into (header, payload) bits for airtime purposes.

    Control packets are all header.
    """
    if m.kind is MsgKind.DATA:
        return m.header_bits, m.payload_bits
    return sizes.control_header_bits, 0
