import random

from hypothesis import given, strategies as st
import pytest

from manetsim.aodv import classic_next_hop
from manetsim.energy import k_factor
from manetsim.errors import NoCandidateError, OffsetTooSmallError
from manetsim.model import NeighborRecord
from manetsim.pcaodv import (
    PcConfig, ack_send_offset, decode_neighbor_energy, elect_next_hop, is_filtered,
    pc_hello_interval,
)
from manetsim.runner import build
from manetsim.scenario import FlowSpec

from conftest import line_config

DIAMOND = {0: (0.0, 500.0), 1: (200.0, 400.0), 2: (200.0, 600.0), 3: (400.0, 500.0)}


@pytest.mark.parametrize("n,interval", [(0, 1.0), (1, 1.0), (3, 3.0), (10, 10.0)])
def test_pc_hello_interval(n, interval):
    assert pc_hello_interval(n, 1.0) == interval


def test_pc_hello_interval_rejects_bad_base():
    with pytest.raises(ValueError):
        pc_hello_interval(3, 0.0)


def test_ack_offset_requires_k_at_least_one():
    assert ack_send_offset(1.0, 0.002) == 0.002
    with pytest.raises(ValueError):
        ack_send_offset(0.5, 0.002)


@given(st.floats(0.05, 15.0))
def test_offset_decode_round_trip(e):
    off = ack_send_offset(k_factor(e, 15.0), 0.002)
    assert decode_neighbor_energy(off, 0.002, 15.0) == pytest.approx(e, rel=1e-9)


@given(st.floats(0.05, 15.0), st.floats(0.05, 15.0))
def test_lower_energy_acks_later(a, b):
    if a < b:
        assert ack_send_offset(k_factor(a, 15), 0.002) > ack_send_offset(k_factor(b, 15), 0.002)


def test_decode_rejects_offset_below_quantum():
    with pytest.raises(OffsetTooSmallError):
        decode_neighbor_energy(0.001, 0.002, 15.0)


def test_default_ack_window_admits_exactly_the_threshold():
    pc = PcConfig()
    assert pc.t_ack == pytest.approx(0.002 * 15 / 1.5)
    assert ack_send_offset(k_factor(1.5, 15), pc.delta_t) == pytest.approx(pc.t_ack)
    with pytest.raises(ValueError):
        PcConfig(t_ack=0.01)


def test_is_filtered():
    assert not is_filtered(None, 1.5)
    assert not is_filtered(NeighborRecord(1, 0.0), 1.5)
    assert is_filtered(NeighborRecord(1, 0.0, est_energy=1.0), 1.5)
    assert is_filtered(NeighborRecord(1, 0.0, est_energy=9.0, critical=True), 1.5)
    assert not is_filtered(NeighborRecord(1, 0.0, est_energy=1.5), 1.5)


def test_elect_skips_critical_and_flags_forced():
    recs = {1: NeighborRecord(1, 0.0, critical=True), 2: NeighborRecord(2, 0.0, est_energy=9.0)}
    assert elect_next_hop([(1, 2, 5), (2, 2, 5)], recs, 1.5) == (2, False)
    assert elect_next_hop([(1, 2, 5)], recs, 1.5) == (1, True)
    with pytest.raises(NoCandidateError):
        elect_next_hop([], recs, 1.5)


candidate_lists = st.lists(
    st.tuples(st.integers(0, 30), st.integers(1, 10), st.integers(0, 20)),
    min_size=1, max_size=8, unique_by=lambda c: c[0],
)


@given(candidate_lists, st.data())
def test_elect_never_picks_critical_when_safe_exists(cands, data):
    crit = data.draw(st.sets(st.sampled_from([c[0] for c in cands])))
    recs = {c[0]: NeighborRecord(c[0], 0.0, critical=c[0] in crit) for c in cands}
    choice, forced = elect_next_hop(cands, recs, 1.5)
    if len(crit) < len(cands):
        assert choice not in crit and not forced
        safe = [c for c in cands if c[0] not in crit]
        assert choice == classic_next_hop(safe)
    else:
        assert forced and choice == classic_next_hop(cands)


def test_elect_ignores_energy_among_safe_candidates():
    recs = {1: NeighborRecord(1, 0.0, est_energy=2.0), 2: NeighborRecord(2, 0.0, est_energy=14.0)}
    assert elect_next_hop([(1, 3, 4), (2, 3, 4)], recs, 1.5) == (1, False)


def test_star_ack_offsets_and_order(star4):
    sim = build(star4, "pc-aodv", 1, trace=True)
    sim.run(1.5)
    centre_phase = sim.phases[0]
    offsets = {n: [s.my_offset for s in sim.nodes[n].ack_schedules if s.hello_origin == 0]
               for n in (1, 2, 3)}
    # B 5.0, C 2.5, D 3.75 -> K 3, 6, 4; own HELLOs have drained a few microunits
    assert offsets == {1: [pytest.approx(0.006, rel=1e-4)], 2: [pytest.approx(0.012, rel=1e-4)],
                       3: [pytest.approx(0.008, rel=1e-4)]}
    arrivals = [int(line.split("\t")[4]) for line in sim.net.trace
                if "\trx\tHELLO_ACK\t" in line and line.split("\t")[1] == "0"
                and float(line.split("\t")[0]) < centre_phase + 0.1]
    assert arrivals == [1, 3, 2]


def test_star_decoded_energies(star4):
    sim = build(star4, "pc-aodv", 1)
    sim.run(1.5)
    est = {n: sim.nodes[0].neighbors[n].est_energy for n in (1, 2, 3)}
    for n, e0 in ((1, 5.0), (2, 2.5), (3, 3.75)):
        # a leaf has spent a few HELLO/ACK transmissions at most
        assert e0 - 1e-3 < est[n] <= e0 + 1e-9
    assert all(not sim.nodes[0].neighbors[n].critical for n in (1, 2, 3))


def test_star_intervals(star4):
    sim = build(star4, "pc-aodv", 1)
    sim.run(5.0)
    assert sim.nodes[0].current_interval() == 4.0
    assert [sim.nodes[i].current_interval() for i in (1, 2, 3)] == [2.0, 2.0, 2.0]


def test_star_transmission_budget(star4):
    m = build(star4, "pc-aodv", 1).run()
    assert (m.hello_sent, m.ack_sent) == (105, 135)
    assert m.unsolicited_acks == m.late_acks == m.acks_withheld == 0


def test_low_node_withholds_and_is_marked_critical(star4):
    cfg = star4.replace(energies={0: 7.5, 1: 5.0, 2: 1.0, 3: 3.75})
    sim = build(cfg, "pc-aodv", 1)
    m = sim.run(10.0)
    rec = sim.nodes[0].neighbors[2]
    assert rec.critical and rec.est_energy is None
    assert m.acks_withheld > 0
    assert m.late_acks == 0


def test_aodv_ignores_acks_entirely(star4):
    m = build(star4, "aodv", 1).run()
    assert m.ack_sent == 0 and m.unsolicited_acks == 0


def test_critical_relay_avoided_when_alternative_exists():
    cfg = line_config(4, positions=DIAMOND, energies={1: 1.0}, flows=(FlowSpec(0, 3, 5.0, 1.0, 5),))
    pc = build(cfg, "pc-aodv", 1)
    pc.run(6.0)
    assert pc.nodes[0].route(3).next_hop == 2
    aodv = build(cfg, "aodv", 1)
    aodv.run(6.0)
    assert aodv.nodes[0].route(3).next_hop == 1


def test_route_moves_off_a_relay_that_turns_critical():
    cfg = line_config(4, positions=DIAMOND, energies={1: 1.6}, sim_time=40.0,
                      flows=(FlowSpec(0, 3, 5.0, 0.05, 400),))
    pc = build(cfg, "pc-aodv", 1)
    pc.run(6.0)
    assert pc.nodes[0].route(3).next_hop == 1
    pc.run(24.0)
    assert pc.nodes[0].route(3).next_hop == 2
    assert pc.nodes[0].neighbors[1].critical
    aodv = build(cfg, "aodv", 1)
    aodv.run(24.0)
    assert aodv.nodes[0].route(3).next_hop == 1
    assert aodv.nodes[1].battery.level < pc.nodes[1].battery.level


def test_forced_fallback_keeps_connectivity():
    cfg = line_config(3, energies={1: 1.0}, flows=(FlowSpec(0, 2, 5.0, 1.0, 3),))
    m = build(cfg, "pc-aodv", 1).run()
    assert m.forced_unsafe >= 1
    assert m.data_delivered == 3


def test_random_elect_matches_classic_without_critical():
    r = random.Random(99)
    for _ in range(200):
        cands = [(nid, r.randint(1, 9), r.randint(0, 9)) for nid in r.sample(range(40), r.randint(1, 6))]
        recs = {c[0]: NeighborRecord(c[0], 0.0, est_energy=r.uniform(1.5, 15.0)) for c in cands}
        assert elect_next_hop(cands, recs, 1.5) == (classic_next_hop(cands), False)
