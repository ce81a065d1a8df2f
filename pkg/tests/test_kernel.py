import math

import networkx as nx
from hypothesis import given, settings, strategies as st
import pytest

from manetsim import rng
from manetsim.energy import packet_airtime
from manetsim.errors import ScheduleInPastError
from manetsim.kernel import Network, Scheduler, Topology, assign_initial_energy, place_nodes
from manetsim.metrics import MetricsReport
from manetsim.model import Message, MsgKind


def test_events_fire_in_time_then_insertion_order():
    s = Scheduler()
    fired = []
    s.schedule(2.0, 0, fired.append, "c")
    s.schedule(1.0, 0, fired.append, "a")
    s.schedule(1.0, 0, fired.append, "b")
    assert s.run_until(5.0) == 3
    assert fired == ["a", "b", "c"]
    assert s.now == 5.0


def test_cancelled_event_never_fires():
    s = Scheduler()
    fired = []
    ev = s.schedule(1.0, 0, fired.append, "x")
    s.schedule(1.0, 0, fired.append, "y")
    s.cancel(ev)
    s.cancel(None)
    s.run_until(2.0)
    assert fired == ["y"]


def test_schedule_in_past_rejected():
    s = Scheduler()
    s.run_until(3.0)
    with pytest.raises(ScheduleInPastError):
        s.schedule(2.5, 0, print)
    with pytest.raises(ScheduleInPastError):
        s.run_until(1.0)


def test_run_until_leaves_later_events_queued():
    s = Scheduler()
    s.schedule(1.0, 0, lambda: None)
    s.schedule(4.0, 0, lambda: None)
    assert s.run_until(2.0) == 1
    assert len(s) == 1
    assert s.run_until(4.0) == 1


def test_events_scheduled_during_run_are_processed():
    s = Scheduler()
    out = []

    def chain(k):
        out.append((s.now, k))
        if k < 3:
            s.schedule(s.now + 0.5, 0, chain, k + 1)

    s.schedule(0.0, 0, chain, 0)
    s.run_until(10.0)
    assert out == [(0.0, 0), (0.5, 1), (1.0, 2), (1.5, 3)]


def test_range_is_a_closed_ball():
    t = Topology([(0.0, 0.0), (250.0, 0.0), (250.0 + 1e-6, 500.0), (500.0 + 1e-6, 0.0)],
                 area=(1000.0, 1000.0))
    assert t.in_range(0, 1)
    assert t.neighbors(0) == [1]
    assert not t.in_range(1, 3)


def test_position_outside_area_rejected():
    with pytest.raises(ValueError):
        Topology([(1001.0, 0.0)])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32))
def test_adjacency_symmetric_and_matches_networkx(n, seed):
    t = Topology(place_nodes(n, (1000.0, 1000.0), seed))
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for a in range(n):
        for b in range(a + 1, n):
            if math.dist(t.positions[a], t.positions[b]) <= 250.0:
                g.add_edge(a, b)
    for a in range(n):
        assert sorted(t.neighbors(a)) == sorted(g.neighbors(a))
        for b in t.neighbors(a):
            assert a in t.neighbors(b)
    assert len(t.edges()) == g.number_of_edges()


def test_placement_and_energy_are_seeded():
    assert place_nodes(10, (1000.0, 1000.0), 7) == place_nodes(10, (1000.0, 1000.0), 7)
    assert place_nodes(10, (1000.0, 1000.0), 7) != place_nodes(10, (1000.0, 1000.0), 8)
    levels = assign_initial_energy(100, 3, 1.0, 15.0)
    assert all(1.0 <= e <= 15.0 for e in levels)
    assert levels == assign_initial_energy(100, 3, 1.0, 15.0)


def test_seed_streams_are_label_separated():
    assert rng.derive_seed(1, "placement") != rng.derive_seed(1, "flows")
    assert rng.derive_seed(1, "flows") != rng.derive_seed(2, "flows")
    assert rng.stream(5, "x").random() == rng.stream(5, "x").random()


class _Sink:
    def __init__(self, nid, alive=True):
        self.id = nid
        self.alive = alive
        self.got = []
        self.spent = 0.0
        self.failed = []

    @property
    def battery(self):
        from manetsim.energy import Battery
        return Battery(level=15.0)

    def receive(self, m):
        self.got.append(m)

    def spend(self, c):
        self.spent += c

    def link_failed(self, nbr, m):
        self.failed.append(nbr)


def _net(positions):
    topo = Topology(positions)
    net = Network(topo, MetricsReport(run_id="t", protocol="aodv", nodes=len(positions),
                                      seed=0, sim_time_s=1.0))
    sinks = [_Sink(i) for i in range(len(positions))]
    net.attach(sinks)
    return net, sinks


def test_broadcast_reaches_exactly_the_disk():
    net, sinks = _net([(500, 500), (700, 500), (500, 750), (500, 751), (100, 100)])
    got = net.broadcast(0, Message(MsgKind.HELLO, src=0))
    assert sorted(got) == [1, 2]
    net.scheduler.run_until(1.0)
    assert [len(s.got) for s in sinks] == [0, 1, 1, 0, 0]
    assert net.metrics.hello_sent == 1 and net.metrics.hello_recv == 2


def test_delivery_delay_is_airtime_plus_propagation():
    net, sinks = _net([(0, 0), (100, 0)])
    times = []
    sinks[1].receive = lambda m: times.append(net.now)
    net.unicast(0, 1, Message(MsgKind.DATA, src=0, payload_bits=65536, header_bits=192))
    net.scheduler.run_until(1.0)
    assert times == [pytest.approx(packet_airtime(192, 65536) + 1e-6, rel=1e-12)]
    assert sinks[0].spent == pytest.approx(packet_airtime(192, 65536), rel=1e-12)


def test_dead_receiver_drops_and_reports_link_failure():
    net, sinks = _net([(0, 0), (100, 0)])
    sinks[1].alive = False
    net.unicast(0, 1, Message(MsgKind.RREP, src=0))
    net.scheduler.run_until(1.0)
    assert sinks[1].got == []
    assert sinks[0].failed == [1]
    assert net.metrics.rrep_sent == 1 and net.metrics.rrep_recv == 0


def test_dead_sender_transmits_nothing():
    net, sinks = _net([(0, 0), (100, 0)])
    sinks[0].alive = False
    assert net.broadcast(0, Message(MsgKind.HELLO, src=0)) == []
    assert net.metrics.hello_sent == 0
    assert sinks[0].spent == 0.0


def test_ack_counters_named_ack():
    net, _ = _net([(0, 0), (100, 0)])
    net.unicast(0, 1, Message(MsgKind.HELLO_ACK, src=0))
    net.scheduler.run_until(1.0)
    assert (net.metrics.ack_sent, net.metrics.ack_recv) == (1, 1)
